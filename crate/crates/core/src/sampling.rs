//! Finite-section sampling bounds over polynomials of degree `≤ N`.
//!
//! With `E` the weighted evaluation matrix (rows `(λ, j)`, columns `z^k`)
//! and `G` the Gram matrix of the monomials on `B(0, R)`, the sampling sum
//! and the norm of `p = Σ p_k z^k` are `‖Ep‖²` and `pᴴGp`. The estimates
//! `A_N`, `B_N` are the extreme generalized eigenvalues of `(EᴴE, G)`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{binomial, factorial};
use crate::error::{Error, Result};
use crate::geometry::{density_profile, MultiSet, ScanGrid};
use crate::operator::dbar_star_from_jet;
use crate::quad::GaussLegendre;
use crate::weights::{classical_weight, WeightModel};
use crate::C64;

/// Rows `e^{−φ(λ)/2}·∂̄*^{(j)}(z^k)(λ)` for every `(λ, j)`, `k = 0..=degree`.
pub fn evaluation_matrix(set: &MultiSet, weight: &WeightModel, degree: usize) -> Result<DMatrix<C64>> {
    check_degree(degree)?;
    let n_rows = set.total_mass() as usize;
    let mut e = DMatrix::zeros(n_rows, degree + 1);
    let top = set.n_max().saturating_sub(1) as usize;
    if top > weight.order() {
        return Err(Error::domain(format!(
            "multiplicity {} needs weight order {top}, have {}",
            set.n_max(),
            weight.order()
        )));
    }
    let mut row = 0;
    for (lambda, m) in set.iter() {
        let jmax = m as usize - 1;
        let jet = weight.jet(lambda, jmax)?.negated();
        let scale = (-0.5 * weight.value(lambda)).exp();
        let mut pw = vec![C64::new(1.0, 0.0); degree + 1];
        for k in 1..=degree {
            pw[k] = pw[k - 1] * lambda;
        }
        for k in 0..=degree {
            // ∂^l z^k = l!·C(k,l)·z^{k−l}
            let derivs: Vec<C64> = (0..=jmax)
                .map(|l| {
                    if l > k {
                        C64::new(0.0, 0.0)
                    } else {
                        pw[k - l] * factorial(l) * binomial(k, l)
                    }
                })
                .collect();
            for j in 0..=jmax {
                e[(row + j, k)] = dbar_star_from_jet(&derivs, &jet, j)? * scale;
            }
        }
        row += jmax + 1;
    }
    if e.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::numeric("evaluation matrix has non-finite entries"));
    }
    Ok(e)
}

/// Largest polynomial degree the Gram quadrature supports. Its node count
/// grows like `(2N + 64)²`, and beyond this degree the monomial basis has
/// lost all accuracy in double precision anyway.
pub const MAX_DEGREE: usize = 120;

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::Solver {
            message: format!(
                "degree N = {degree} exceeds the supported maximum {MAX_DEGREE}; lower N, \
                 since the monomial basis cannot be resolved in double precision"
            ),
            condition: f64::INFINITY,
        });
    }
    Ok(())
}

/// `G_{ij} = ∫_{B(0,R)} z̄^i z^j e^{−φ} dA`, so that `pᴴGp = ‖p‖²` on the disk.
pub fn gram_matrix(degree: usize, weight: &WeightModel, radius: f64) -> Result<DMatrix<C64>> {
    check_degree(degree)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("Gram radius must be positive, got {radius}")));
    }
    // On a polar rule z̄^i z^j = ρ^{i+j} e^{i(j−i)θ}, so each ring only needs
    // the angular Fourier sums of e^{−φ} at frequencies −N..=N.
    let n = 2 * degree + 64;
    let gl = GaussLegendre::get(n);
    let dtheta = 2.0 * PI / n as f64;
    let phase: Vec<C64> = (0..n).map(|b| C64::from_polar(1.0, dtheta * b as f64)).collect();
    let dim = degree + 1;
    let rings: Vec<DMatrix<C64>> = gl
        .nodes
        .par_iter()
        .zip(&gl.weights)
        .map(|(x, w)| {
            let rho = 0.5 * (x + 1.0) * radius;
            let ring_weight = 0.5 * w * rho * radius * dtheta;
            let vals: Vec<f64> = phase.iter().map(|u| (-weight.value(u * rho)).exp()).collect();
            let fourier: Vec<C64> = (0..2 * dim - 1)
                .map(|idx| {
                    let k = idx as i64 - degree as i64;
                    vals.iter()
                        .enumerate()
                        .map(|(b, v)| phase[(k * b as i64).rem_euclid(n as i64) as usize] * *v)
                        .sum::<C64>()
                        * ring_weight
                })
                .collect();
            let mut pw = vec![1.0; 2 * dim - 1];
            for k in 1..pw.len() {
                pw[k] = pw[k - 1] * rho;
            }
            DMatrix::from_fn(dim, dim, |i, j| fourier[j + degree - i] * pw[i + j])
        })
        .collect();
    let mut g = DMatrix::<C64>::zeros(dim, dim);
    for ring in &rings {
        g += ring;
    }
    if g.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::numeric("Gram matrix has non-finite entries; lower N or the truncation radius R"));
    }
    Ok(g)
}

/// Jacobi-scaled Cholesky factor `G = D L Lᴴ D` with `D = diag(√G_kk)`.
pub(crate) struct Whitening {
    pub(crate) diag: Vec<f64>,
    pub(crate) chol: Cholesky<C64, Dyn>,
}

pub(crate) fn whiten(gram: &DMatrix<C64>) -> Result<Whitening> {
    let n = gram.nrows();
    let diag: Vec<f64> = (0..n).map(|k| gram[(k, k)].re.max(0.0).sqrt()).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::numeric(
            "Gram matrix is not positive definite; lower N or raise the quadrature resolution",
        ));
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| gram[(i, j)] / (diag[i] * diag[j]));
    let chol = Cholesky::new(scaled).ok_or_else(|| {
        Error::numeric("Gram matrix is not positive definite; lower N or raise the quadrature resolution")
    })?;
    Ok(Whitening { diag, chol })
}

impl Whitening {
    /// `E D^{-1} L^{-H}`, whose squared singular values are the generalized
    /// eigenvalues of `(EᴴE, G)`.
    pub(crate) fn apply(&self, e: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let scaled = DMatrix::from_fn(e.nrows(), e.ncols(), |i, k| e[(i, k)] / self.diag[k]);
        // C Lᴴ = scaled  ⇔  L Cᴴ = scaledᴴ
        let ch = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&scaled.adjoint())
            .ok_or_else(|| Error::numeric("triangular solve failed"))?;
        Ok(ch.adjoint())
    }

    /// `p = D^{-1} L^{-H} q`.
    pub(crate) fn unwhiten(&self, q: &nalgebra::DVector<C64>) -> Result<nalgebra::DVector<C64>> {
        let l = self.chol.l();
        let y = l
            .adjoint()
            .solve_upper_triangular(q)
            .ok_or_else(|| Error::numeric("triangular solve failed"))?;
        Ok(nalgebra::DVector::from_fn(y.len(), |k, _| y[k] / self.diag[k]))
    }
}

/// Summary of the generalized spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// `(A, B, spectrum)` for an evaluation matrix and Gram matrix.
pub fn bounds_from_matrices(e: &DMatrix<C64>, gram: &DMatrix<C64>) -> Result<(f64, f64, SpectrumSummary)> {
    let dim = gram.nrows();
    let w = whiten(gram)?;
    if e.nrows() == 0 {
        let zero = SpectrumSummary {
            count: dim,
            min: 0.0,
            median: 0.0,
            max: 0.0,
        };
        return Ok((0.0, 0.0, zero));
    }
    let c = w.apply(e)?;
    let svd = c.svd(false, false);
    let mut mu: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    // rank-deficient directions beyond the row count
    mu.resize(dim, 0.0);
    mu.sort_by(f64::total_cmp);
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("generalized eigenvalues are not finite"));
    }
    let summary = SpectrumSummary {
        count: mu.len(),
        min: mu[0],
        median: mu[mu.len() / 2],
        max: mu[mu.len() - 1],
    };
    Ok((summary.min, summary.max, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingReport {
    pub degree: usize,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub spectrum: SpectrumSummary,
    /// Second degree used for the consistency check.
    pub check_degree: usize,
    pub check_a: f64,
    pub check_b: f64,
    /// `A` and `B` at the two degrees agree within a factor 2.
    pub stable: bool,
}

/// Default truncation radius `sqrt((N + 20)/m)` with `m` the lower Laplacian bound.
pub fn default_radius(weight: &WeightModel, degree: usize) -> f64 {
    ((degree as f64 + 20.0) / weight.bounds().0).sqrt()
}

pub(crate) fn bounds_at(set: &MultiSet, weight: &WeightModel, degree: usize, radius: f64) -> Result<(f64, f64, SpectrumSummary)> {
    let e = evaluation_matrix(set, weight, degree)?;
    let g = gram_matrix(degree, weight, radius)?;
    bounds_from_matrices(&e, &g)
}

pub fn frame_bounds(set: &MultiSet, weight: &WeightModel, degree: usize, radius: Option<f64>) -> Result<SamplingReport> {
    let radius = radius.unwrap_or_else(|| default_radius(weight, degree));
    let (a, b, spectrum) = bounds_at(set, weight, degree, radius)?;
    let check_degree = degree + 5;
    let (check_a, check_b, _) = bounds_at(set, weight, check_degree, radius)?;
    let within = |x: f64, y: f64| (x == 0.0 && y == 0.0) || (x <= 2.0 * y && y <= 2.0 * x);
    Ok(SamplingReport {
        degree,
        radius,
        a,
        b,
        spectrum,
        check_degree,
        check_a,
        check_b,
        stable: within(a, check_a) && within(b, check_b),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub s: f64,
    pub density: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl PhaseRow {
    pub fn ratio(&self) -> f64 {
        if self.b > 0.0 {
            self.a / self.b
        } else {
            0.0
        }
    }
}

/// Interval of consecutive spacings over which `A/B` first drops below the
/// threshold, with a linearly interpolated crossing.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollapseInterval {
    pub degree: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub s_cross: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseTable {
    pub multiplicity: u32,
    pub alpha: f64,
    pub rows: Vec<PhaseRow>,
}

/// Collapse threshold on `A_N/B_N`.
pub const COLLAPSE_THRESHOLD: f64 = 0.05;

impl PhaseTable {
    pub fn rows_for(&self, degree: usize) -> Vec<&PhaseRow> {
        self.rows.iter().filter(|r| r.degree == degree).collect()
    }

    pub fn collapse(&self, degree: usize, threshold: f64) -> Option<CollapseInterval> {
        let rows = self.rows_for(degree);
        rows.windows(2).find_map(|w| {
            let (r0, r1) = (w[0].ratio(), w[1].ratio());
            if r0 >= threshold && r1 < threshold {
                let t = (r0 - threshold) / (r0 - r1);
                Some(CollapseInterval {
                    degree,
                    s_lo: w[0].s,
                    s_hi: w[1].s,
                    s_cross: w[0].s + t * (w[1].s - w[0].s),
                })
            } else {
                None
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,density,A,B,N,R\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
                r.s, r.density, r.a, r.b, r.degree, r.radius
            ));
        }
        out
    }
}

/// Measured density of the infinite lattice `sZ²` with multiplicity `m`
/// under `α|z|²`: headline of a radius-50 truncation at radii 20 and 40.
pub fn lattice_density(spacing: f64, mult: u32, alpha: f64) -> Result<f64> {
    let weight = classical_weight(alpha)?;
    let lat = MultiSet::square_lattice(spacing, 50.0, mult)?;
    let rep = density_profile(&lat, &weight, &[20.0, 40.0], &ScanGrid::Auto)?;
    rep.headline
        .ok_or_else(|| Error::numeric("no interior scan centers for the lattice density"))
}

/// Frame bounds of square-lattice patches `sZ² ∩ B(0, R − 2)` with uniform
/// multiplicity, for every spacing and degree. The default `R` is
/// `sqrt((N + 20)/α) + 2`, so the patch covers the disk where degree-`N`
/// polynomials carry their weighted mass and the edge margin of 2 lies
/// outside it.
pub fn phase_scan(
    spacings: &[f64],
    mult: u32,
    alpha: f64,
    degrees: &[usize],
    radius: Option<f64>,
) -> Result<PhaseTable> {
    if spacings.is_empty() || spacings.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::domain("spacings must be positive and nonempty"));
    }
    if spacings.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("spacings must be sorted"));
    }
    if degrees.is_empty() {
        return Err(Error::domain("no degrees given"));
    }
    let weight = classical_weight(alpha)?;
    let densities: Vec<f64> = spacings
        .par_iter()
        .map(|&s| lattice_density(s, mult, alpha))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64, f64)> = degrees
        .iter()
        .flat_map(|&n| spacings.iter().zip(&densities).map(move |(&s, &d)| (n, s, d)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(degree, s, density)| {
            let r = radius.unwrap_or_else(|| ((degree as f64 + 20.0) / alpha).sqrt() + 2.0);
            if r <= 2.0 {
                return Err(Error::domain(format!("scan radius {r} leaves no room for the patch")));
            }
            let patch = MultiSet::square_lattice(s, r - 2.0, mult)?;
            let (a, b, _) = bounds_at(&patch, &weight, degree, r)?;
            Ok(PhaseRow {
                s,
                density,
                a,
                b,
                degree,
                radius: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseTable {
        multiplicity: mult,
        alpha,
        rows,
    })
}

/// Count density `m/s²` of the lattice over the Laplacian mass density `α`.
pub fn lattice_density_oracle(spacing: f64, mult: u32, alpha: f64) -> f64 {
    mult as f64 / (spacing * spacing * alpha)
}
