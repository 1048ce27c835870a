//! Local interpolants `f_λ = p_λ e^{G_λ}` and a least-squares global
//! interpolation solver over polynomials.

use nalgebra::DVector;
use serde::Serialize;

use crate::bell::{binomial, complete_bell, factorial, DerivativeJet};
use crate::error::{Error, Result};
use crate::geometry::MultiSet;
use crate::operator::{dbar_star_all, EntireFunction};
use crate::potential::{potential_jet, riesz_decompose, DiskDecomposition};
use crate::sampling::{evaluation_matrix, gram_matrix, whiten};
use crate::series;
use crate::weights::WeightModel;
use crate::C64;

/// Targets `c_{(λ,j)}` for `0 ≤ j < m_Λ(λ)`, stored per point.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationData {
    set: MultiSet,
    values: Vec<Vec<C64>>,
}

impl InterpolationData {
    /// All-zero data on `set`.
    pub fn zeros(set: MultiSet) -> Self {
        let values = set.mult().iter().map(|&m| vec![C64::new(0.0, 0.0); m as usize]).collect();
        InterpolationData { set, values }
    }

    /// Data from `values[i][j]`; row lengths must equal the multiplicities.
    pub fn new(set: MultiSet, values: Vec<Vec<C64>>) -> Result<Self> {
        if values.len() != set.len() {
            return Err(Error::domain(format!("{} value rows for {} points", values.len(), set.len())));
        }
        for (i, (row, m)) in values.iter().zip(set.mult()).enumerate() {
            if row.len() != *m as usize {
                return Err(Error::domain(format!(
                    "point {i} has multiplicity {m} but {} values",
                    row.len()
                )));
            }
        }
        Ok(InterpolationData { set, values })
    }

    /// Data from `(point, j, value)` triples; unspecified slots are zero.
    pub fn from_entries(set: MultiSet, entries: &[(C64, usize, C64)]) -> Result<Self> {
        let mut data = InterpolationData::zeros(set);
        for &(z, j, v) in entries {
            let i = data
                .set
                .index_of(z)
                .ok_or_else(|| Error::domain(format!("data point {z} is not in the set")))?;
            data.set_value(i, j, v)?;
        }
        Ok(data)
    }

    pub fn set(&self) -> &MultiSet {
        &self.set
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn at(&self, index: usize) -> &[C64] {
        &self.values[index]
    }

    pub fn get(&self, index: usize, j: usize) -> Option<C64> {
        self.values.get(index)?.get(j).copied()
    }

    pub fn set_value(&mut self, index: usize, j: usize, v: C64) -> Result<()> {
        let slot = self
            .values
            .get_mut(index)
            .and_then(|row| row.get_mut(j))
            .ok_or_else(|| Error::domain(format!("slot ({index}, {j}) is outside the multiplicity range")))?;
        *slot = v;
        Ok(())
    }

    /// `Σ_λ Σ_j |c_{(λ,j)}|² e^{−φ(λ)}`.
    pub fn weighted_norm_sq(&self, weight: &WeightModel) -> f64 {
        self.set
            .points()
            .iter()
            .zip(&self.values)
            .map(|(z, row)| row.iter().map(|v| v.norm_sqr()).sum::<f64>() * (-weight.value(*z)).exp())
            .sum()
    }

    /// Flattened values in evaluation-matrix row order.
    pub fn flat(&self) -> Vec<C64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// `k_j = Σ_l (−1)^l C(j,l) c_l B_{j−l}(jet)` with `jet` the jet of `φ − G_λ` at `λ`.
pub fn coeffs_closed_from_jet(values: &[C64], phi_minus_g: &DerivativeJet) -> Result<Vec<C64>> {
    (0..values.len())
        .map(|j| {
            let mut acc = C64::new(0.0, 0.0);
            for (l, c) in values.iter().enumerate().take(j + 1) {
                let sign = if l % 2 == 1 { -1.0 } else { 1.0 };
                acc += c * complete_bell(j - l, phi_minus_g)? * binomial(j, l) * sign;
            }
            Ok(acc)
        })
        .collect()
}

/// `k_j = (−1)^j c_j − Σ_{l<j} C(j,l) k_l B_{j−l}(−jet)`.
pub fn coeffs_recursive_from_jet(values: &[C64], phi_minus_g: &DerivativeJet) -> Result<Vec<C64>> {
    let g_minus_phi = phi_minus_g.negated();
    let mut k: Vec<C64> = Vec::with_capacity(values.len());
    for (j, c) in values.iter().enumerate() {
        let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
        let mut v = c * sign;
        for (l, kl) in k.iter().enumerate() {
            v -= kl * complete_bell(j - l, &g_minus_phi)? * binomial(j, l);
        }
        k.push(v);
    }
    Ok(k)
}

fn jet_for(values: &[C64], dec: &DiskDecomposition) -> Result<DerivativeJet> {
    let need = values.len().saturating_sub(1);
    if need > dec.order() {
        return Err(Error::domain(format!(
            "{} values need decomposition order {need}, have {}",
            values.len(),
            dec.order()
        )));
    }
    potential_jet(dec, need)
}

pub fn local_coeffs_closed(values: &[C64], dec: &DiskDecomposition) -> Result<Vec<C64>> {
    coeffs_closed_from_jet(values, &jet_for(values, dec)?)
}

pub fn local_coeffs_recursive(values: &[C64], dec: &DiskDecomposition) -> Result<Vec<C64>> {
    coeffs_recursive_from_jet(values, &jet_for(values, dec)?)
}

/// `f_λ(z) = p_λ(z) e^{G_λ(z)}` with `p_λ(z) = Σ_j (k_j/j!)(z − λ)^j`.
#[derive(Debug, Clone)]
pub struct LocalInterpolant {
    pub center: C64,
    pub radius: f64,
    pub k_coeffs: Vec<C64>,
    pub targets: Vec<C64>,
    pub decomposition: DiskDecomposition,
    /// `max |f_λ(z)|² e^{−φ(z)} / (Σ|c_l|² e^{−φ(λ)})` over a polar grid in `B(λ, ε)`.
    pub bound_ratio: f64,
}

impl LocalInterpolant {
    /// Taylor coefficients of `p_λ` about `λ`.
    pub fn p_coeffs(&self) -> Vec<C64> {
        self.k_coeffs
            .iter()
            .enumerate()
            .map(|(j, k)| k / factorial(j))
            .collect()
    }

    pub fn eval(&self, z: C64) -> C64 {
        series::eval(&self.p_coeffs(), z - self.center) * self.decomposition.g_lambda(z).exp()
    }
}

pub fn build_local_interpolant(
    center: C64,
    radius: f64,
    values: &[C64],
    weight: &WeightModel,
) -> Result<LocalInterpolant> {
    if values.is_empty() {
        return Err(Error::domain("at least one target value is required"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("interpolant radius must be positive, got {radius}")));
    }
    let dec = riesz_decompose(weight, center, radius, values.len() - 1)?;
    let k_coeffs = local_coeffs_closed(values, &dec)?;
    let mut f = LocalInterpolant {
        center,
        radius,
        k_coeffs,
        targets: values.to_vec(),
        decomposition: dec,
        bound_ratio: 0.0,
    };
    f.bound_ratio = bound_ratio(&f, weight);
    Ok(f)
}

fn bound_ratio(f: &LocalInterpolant, weight: &WeightModel) -> f64 {
    let data: f64 = f.targets.iter().map(|c| c.norm_sqr()).sum();
    if data == 0.0 {
        return 0.0;
    }
    let p = f.p_coeffs();
    let phi0 = weight.value(f.center);
    let mut worst = 0.0f64;
    for frac in [0.0, 0.25, 0.5, 0.75, 0.95] {
        for a in 0..16 {
            let z = f.center + C64::from_polar(frac * f.radius, std::f64::consts::PI * a as f64 / 8.0);
            let log = 2.0 * f.decomposition.g_lambda(z).re - weight.value(z) + phi0;
            worst = worst.max(series::eval(&p, z - f.center).norm_sqr() * log.exp() / data);
            if frac == 0.0 {
                break;
            }
        }
    }
    worst
}

/// Per-order residuals `|∂̄*^{(j)} f_λ(λ) − c_j|`.
#[derive(Debug, Clone, Serialize)]
pub struct InterpolantCheck {
    pub residuals: Vec<f64>,
    /// `max|p_λ|·g^{T+1}/(T+1)!·e^{g}` with `g = max|G_λ|` on the circle of
    /// radius `ε`: a bound on the exponential-series tail dropped at order `T`.
    pub truncation_bound: f64,
    pub truncation_order: usize,
    pub inconclusive: bool,
}

pub const DEFAULT_TRUNCATION_ORDER: usize = 20;

/// Evaluates `f_λ` through the exact test-function calculus, with `e^{G_λ}`
/// replaced by its Taylor polynomial of degree `truncation_order`. Derivatives
/// at `λ` up to that order are unaffected by the truncation.
pub fn verify_interpolant(
    f: &LocalInterpolant,
    weight: &WeightModel,
    truncation_order: usize,
    tolerance: f64,
) -> Result<InterpolantCheck> {
    let m = f.k_coeffs.len();
    let t = truncation_order.max(m.saturating_sub(1));
    let mut g = f.decomposition.g_lambda_coeffs();
    g.resize(t + 1, C64::new(0.0, 0.0));
    let exp_g = series::exp(&g[..=t], t + 1);
    let poly = series::mul(&f.p_coeffs(), &exp_g, t + 1);
    let entire = EntireFunction {
        poly,
        center: f.center,
        exp_a: C64::new(0.0, 0.0),
        exp_b: C64::new(0.0, 0.0),
    };
    let stars = dbar_star_all(&entire, weight, f.center, m - 1)?;
    let residuals: Vec<f64> = stars.iter().zip(&f.targets).map(|(s, c)| (s - c).norm()).collect();

    let p = f.p_coeffs();
    let mut g_max = 0.0f64;
    let mut p_max = 0.0f64;
    for a in 0..64 {
        let z = f.center + C64::from_polar(f.radius, std::f64::consts::PI * a as f64 / 32.0);
        g_max = g_max.max(f.decomposition.g_lambda(z).norm());
        p_max = p_max.max(series::eval(&p, z - f.center).norm());
    }
    // log space: g^{T+1}/(T+1)! overflows long before it becomes small
    let log_fact: f64 = (2..=t + 1).map(|k| (k as f64).ln()).sum();
    let truncation_bound = if p_max == 0.0 || g_max == 0.0 {
        0.0
    } else {
        (p_max.ln() + (t + 1) as f64 * g_max.ln() - log_fact + g_max).exp()
    };
    Ok(InterpolantCheck {
        residuals,
        truncation_bound,
        truncation_order: t,
        inconclusive: !(truncation_bound <= tolerance),
    })
}

/// Largest truncation order tried by [`verify_interpolant_auto`].
pub const MAX_TRUNCATION_ORDER: usize = 320;

/// [`verify_interpolant`] starting at [`DEFAULT_TRUNCATION_ORDER`] and doubling
/// the order until the truncation bound certifies the residuals or
/// [`MAX_TRUNCATION_ORDER`] is reached.
pub fn verify_interpolant_auto(f: &LocalInterpolant, weight: &WeightModel, tolerance: f64) -> Result<InterpolantCheck> {
    let mut t = DEFAULT_TRUNCATION_ORDER;
    loop {
        let check = verify_interpolant(f, weight, t, tolerance)?;
        if !check.inconclusive || t >= MAX_TRUNCATION_ORDER {
            return Ok(check);
        }
        t = (2 * t).min(MAX_TRUNCATION_ORDER);
    }
}

/// Result of [`global_interpolate_ls`].
#[derive(Debug, Clone, Serialize)]
pub struct LsSolution {
    pub degree: usize,
    pub radius: f64,
    /// Monomial coefficients of `p`.
    pub coeffs: Vec<C64>,
    /// `|∂̄*^{(j)} p(λ) − c_{(λ,j)}| e^{−φ(λ)/2}` per constraint, in row order.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `‖p‖_{φ, B(0,R)}`.
    pub weighted_norm: f64,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained singular value.
    pub condition: f64,
    pub overdetermined: bool,
    pub feasible: bool,
}

/// Default relative spectral cutoff of the least-squares solver.
pub const DEFAULT_TAU: f64 = 1e-10;

/// Minimal-norm least-squares interpolation by polynomials of degree `≤ N`.
///
/// Minimizes `Σ |∂̄*^{(j)}p(λ) − c_{(λ,j)}|² e^{−φ(λ)}` and, among
/// minimizers, `‖p‖_{φ,B(0,R)}`. Regularization is spectral: in the basis
/// orthonormal for the disk norm, singular directions below `τ·σ_max` are
/// discarded, which removes the ill-conditioned part without biasing the
/// well-determined constraints.
pub fn global_interpolate_ls(
    data: &InterpolationData,
    weight: &WeightModel,
    degree: usize,
    radius: Option<f64>,
    tau: f64,
) -> Result<LsSolution> {
    let set = data.set();
    let radius = radius.unwrap_or_else(|| set.points().iter().map(|z| z.norm()).fold(0.0, f64::max) + 4.0);
    let e = evaluation_matrix(set, weight, degree)?;
    let scales: Vec<f64> = set
        .iter()
        .flat_map(|(z, m)| std::iter::repeat((-0.5 * weight.value(z)).exp()).take(m as usize))
        .collect();
    let rhs = DVector::from_iterator(
        scales.len(),
        data.flat().iter().zip(&scales).map(|(c, s)| c * *s),
    );
    let gram = gram_matrix(degree, weight, radius)?;
    let w = whiten(&gram)?;
    let rows = e.nrows();
    let overdetermined = rows > degree + 1;
    if rows == 0 {
        return Ok(LsSolution {
            degree,
            radius,
            coeffs: vec![C64::new(0.0, 0.0); degree + 1],
            residuals: Vec::new(),
            max_residual: 0.0,
            weighted_norm: 0.0,
            rank: 0,
            condition: 1.0,
            overdetermined,
            feasible: true,
        });
    }
    let c = w.apply(&e)?;
    let svd = c.svd(true, true);
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::numeric("singular value decomposition failed")),
    };
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = tau * s_max;
    let mut q = DVector::<C64>::zeros(degree + 1);
    let mut rank = 0;
    let mut s_min = f64::INFINITY;
    for (i, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            s_min = s_min.min(s);
            let coef = u.column(i).dotc(&rhs) / s;
            q += vt.row(i).adjoint() * coef;
        }
    }
    let rhs_norm = rhs.norm();
    if rank == 0 && rhs_norm > 0.0 {
        return Err(Error::Solver {
            message: "evaluation operator vanishes on the polynomial space".into(),
            condition: f64::INFINITY,
        });
    }
    let p = w.unwhiten(&q)?;
    let fitted = &e * &p;
    let residuals: Vec<f64> = fitted.iter().zip(rhs.iter()).map(|(a, b)| (a - b).norm()).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    if p.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Solver {
            message: "non-finite solution".into(),
            condition: s_max / s_min,
        });
    }
    Ok(LsSolution {
        degree,
        radius,
        coeffs: p.iter().copied().collect(),
        residuals,
        max_residual,
        weighted_norm: q.norm(),
        rank,
        condition: if rank > 0 { s_max / s_min } else { 1.0 },
        overdetermined,
        feasible: max_residual <= 1e-6 * rhs_norm.max(1e-300),
    })
}
