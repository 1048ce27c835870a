//! Test functions `p(z − c)·e^{a + bz}` and pointwise evaluation of the
//! iterated weighted derivative `∂̄*^{(j)} f = (−1)^j e^{φ} ∂^j(f e^{−φ})`.

use crate::bell::{binomial, complete_bell, DerivativeJet};
use crate::error::{Error, Result};
use crate::potential::{potential_jet, DiskDecomposition};
use crate::series;
use crate::weights::WeightModel;
use crate::C64;

/// `f(z) = p(z − center)·e^{a + bz}` with `p` given by ascending coefficients.
///
/// The explicit `center` keeps Bargmann shifts exact: shifting moves the
/// center instead of re-expanding the polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct EntireFunction {
    pub poly: Vec<C64>,
    pub center: C64,
    pub exp_a: C64,
    pub exp_b: C64,
}

impl EntireFunction {
    pub fn polynomial(coeffs: Vec<C64>) -> Self {
        EntireFunction {
            poly: coeffs,
            center: C64::new(0.0, 0.0),
            exp_a: C64::new(0.0, 0.0),
            exp_b: C64::new(0.0, 0.0),
        }
    }

    /// `p(z)·e^{a + bz}`.
    pub fn new(poly: Vec<C64>, exp_a: C64, exp_b: C64) -> Self {
        EntireFunction {
            poly,
            center: C64::new(0.0, 0.0),
            exp_a,
            exp_b,
        }
    }

    pub fn constant(c: C64) -> Self {
        EntireFunction::polynomial(vec![c])
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut poly = vec![C64::new(0.0, 0.0); k + 1];
        poly[k] = C64::new(1.0, 0.0);
        EntireFunction::polynomial(poly)
    }

    pub fn eval(&self, z: C64) -> C64 {
        series::eval(&self.poly, z - self.center) * (self.exp_a + self.exp_b * z).exp()
    }

    pub fn scaled(&self, t: C64) -> Self {
        EntireFunction {
            poly: self.poly.iter().map(|c| c * t).collect(),
            ..self.clone()
        }
    }

    /// `∂^k f`, again of the form `q(z − c)·e^{a + bz}` with `q = p′ + b p`.
    pub fn holo_derivative(&self, k: usize) -> Self {
        let mut poly = self.poly.clone();
        for _ in 0..k {
            let mut next = series::derivative(&poly);
            if self.exp_b != C64::new(0.0, 0.0) {
                next.resize(poly.len(), C64::new(0.0, 0.0));
                for (n, p) in next.iter_mut().zip(&poly) {
                    *n += p * self.exp_b;
                }
            }
            poly = next;
        }
        EntireFunction { poly, ..self.clone() }
    }

    /// `(f(λ), ∂f(λ), …, ∂^n f(λ))` from the Taylor expansion about `λ`.
    pub fn derivatives_at(&self, lambda: C64, n: usize) -> Vec<C64> {
        let mut p = series::recenter(&self.poly, self.center, lambda);
        p.resize(p.len().max(n + 1), C64::new(0.0, 0.0));
        // e^{a + bλ}·e^{b(z − λ)}
        let mut e = Vec::with_capacity(n + 1);
        let mut term = (self.exp_a + self.exp_b * lambda).exp();
        for k in 0..=n {
            e.push(term);
            term = term * self.exp_b / (k + 1) as f64;
        }
        series::jet_at_center(&series::mul(&p, &e, n + 1), n)
    }
}

/// `(−1)^j Σ_l C(j,l) ∂^l f(λ) B_{j−l}(−∂φ(λ), …)` from precomputed values.
/// `f_derivs` holds `∂^l f(λ)` for `l ≤ j`; `neg_phi_jet` is `(−∂φ, …, −∂^jφ)`.
pub fn dbar_star_from_jet(f_derivs: &[C64], neg_phi_jet: &DerivativeJet, j: usize) -> Result<C64> {
    if f_derivs.len() <= j || neg_phi_jet.len() < j {
        return Err(Error::domain(format!("need {} derivatives for order {j}", j + 1)));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (l, d) in f_derivs.iter().enumerate().take(j + 1) {
        acc += d * complete_bell(j - l, neg_phi_jet)? * binomial(j, l);
    }
    Ok(if j % 2 == 1 { -acc } else { acc })
}

/// `∂̄*_φ^{(j)} f(λ)`.
pub fn dbar_star(f: &EntireFunction, weight: &WeightModel, lambda: C64, j: usize) -> Result<C64> {
    let jet = weight.jet(lambda, j)?.negated();
    dbar_star_from_jet(&f.derivatives_at(lambda, j), &jet, j)
}

/// `∂̄*^{(j)} f(λ)` for `j = 0..=n`.
pub fn dbar_star_all(f: &EntireFunction, weight: &WeightModel, lambda: C64, n: usize) -> Result<Vec<C64>> {
    let jet = weight.jet(lambda, n)?.negated();
    let derivs = f.derivatives_at(lambda, n);
    (0..=n).map(|j| dbar_star_from_jet(&derivs, &jet, j)).collect()
}

/// `∂̄*_{φ₂}^{(j)} f(λ)` computed from `∂̄*_{φ₁}` values:
/// `Σ_l C(j,l) ∂̄*_{φ₁}^{(l)} f · (−1)^{j−l} B_{j−l}(∂(φ₁ − φ₂), …)`.
/// The factors `∂^k e^{φ₁−φ₂}·e^{φ₂−φ₁}` reduce to Bell polynomials, so no
/// exponential of the weight gap is ever formed.
pub fn dbar_star_change_weight(
    f: &EntireFunction,
    w1: &WeightModel,
    w2: &WeightModel,
    lambda: C64,
    j: usize,
) -> Result<C64> {
    if j > w1.order() || j > w2.order() {
        return Err(Error::domain(format!(
            "order {j} exceeds a weight order ({}, {})",
            w1.order(),
            w2.order()
        )));
    }
    let from = dbar_star_all(f, w1, lambda, j)?;
    let gap = w1.jet(lambda, j)?.plus(&w2.jet(lambda, j)?.negated());
    let mut acc = C64::new(0.0, 0.0);
    for (l, v) in from.iter().enumerate() {
        let sign = if (j - l) % 2 == 1 { -1.0 } else { 1.0 };
        acc += v * complete_bell(j - l, &gap)? * binomial(j, l) * sign;
    }
    Ok(acc)
}

/// `W_w f(z) = e^{−(α/2)|w|² + α z w̄} f(z − w)`.
pub fn bargmann_shift(f: &EntireFunction, alpha: f64, w: C64) -> EntireFunction {
    EntireFunction {
        poly: f.poly.clone(),
        center: f.center + w,
        exp_a: f.exp_a - f.exp_b * w - 0.5 * alpha * w.norm_sqr(),
        exp_b: f.exp_b + w.conj() * alpha,
    }
}

/// `∂^k(f e^{−H_λ})(λ) = Σ_j (−1)^j C(k,j) ∂̄*^{(j)} f(λ) B_{k−j}^{G[Δφ]}(λ) e^{−H_λ(λ)}`
/// at the center of `dec`.
pub fn weighted_feh_derivatives(f: &EntireFunction, dec: &DiskDecomposition, k: usize) -> Result<C64> {
    if k > dec.order() {
        return Err(Error::domain(format!(
            "order {k} exceeds decomposition order {}",
            dec.order()
        )));
    }
    let lambda = dec.center();
    let stars = dbar_star_all(f, dec.weight(), lambda, k)?;
    let g_jet = potential_jet(dec, k)?;
    let mut acc = C64::new(0.0, 0.0);
    for (j, s) in stars.iter().enumerate() {
        let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
        acc += s * complete_bell(k - j, &g_jet)? * binomial(k, j) * sign;
    }
    Ok(acc * (-dec.holo(lambda)).exp())
}
