//! Logarithmic potentials and Riesz decompositions on disks.
//!
//! On `B(λ, ρ)` the weight splits as `φ = h_λ + G[Δφ]` with
//! `G[Δφ](z) = (2/π) ∫_{B(λ,ρ)} log|w − z| Δφ(w) dA(w)` and `h_λ` harmonic.
//! The harmonic part is written `h_λ = 2 Re H_λ` with `H_λ` holomorphic, and
//! `G_λ = H_λ − H_λ(λ)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bell::{factorial, DerivativeJet};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::series;
use crate::weights::WeightModel;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialConfig {
    /// Radial nodes of the remainder quadrature.
    pub radial: usize,
    /// Angular nodes of the remainder quadrature.
    pub angular: usize,
    /// Samples on the Fourier circle.
    pub fourier_samples: usize,
    /// Largest accepted `|2 Re H − h|` on the check circle, relative to
    /// `max(1, max|h|)`.
    pub tolerance: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            radial: 64,
            angular: 64,
            fourier_samples: 64,
            tolerance: 1e-6,
        }
    }
}

/// `(2/π) ∫_{B(c,ρ)} log|w − z| dA(w)` for `|z − c| ≤ ρ`.
pub fn uniform_disk_potential(radius: f64, dist: f64) -> f64 {
    2.0 * radius * radius * radius.ln() - radius * radius + dist * dist
}

/// `G[Δφ](z)` over `B(center, radius)`, with `Δφ(z)` subtracted so the
/// remaining integrand is bounded.
pub fn log_potential(weight: &WeightModel, center: C64, radius: f64, z: C64) -> Result<f64> {
    log_potential_with(weight, center, radius, z, &PotentialConfig::default())
}

pub fn log_potential_with(
    weight: &WeightModel,
    center: C64,
    radius: f64,
    z: C64,
    config: &PotentialConfig,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("disk radius must be positive, got {radius}")));
    }
    let d = z - center;
    if d.norm() > radius * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "point {z} lies outside B({center}, {radius})"
        )));
    }
    let lap_z = weight.laplacian(z);
    let mut value = lap_z * uniform_disk_potential(radius, d.norm().min(radius));
    if weight.constant_laplacian().is_none() {
        value += remainder(weight, d, z, radius, lap_z, config);
    }
    if !value.is_finite() {
        return Err(Error::numeric(format!("log potential at {z} is not finite")));
    }
    Ok(value)
}

/// `(2/π) ∫ log t (Δφ(z + t e^{iθ}) − Δφ(z)) t dt dθ` in polar coordinates
/// about `z`, with `t = T(θ) s²` to smooth the origin.
fn remainder(weight: &WeightModel, d: C64, z: C64, radius: f64, lap_z: f64, config: &PotentialConfig) -> f64 {
    let gl = GaussLegendre::get(config.radial.max(1));
    let n_theta = config.angular.max(1);
    let dtheta = 2.0 * PI / n_theta as f64;
    let room = (radius * radius - d.norm_sqr()).max(0.0);
    let mut total = 0.0;
    for m in 0..n_theta {
        let dir = C64::from_polar(1.0, dtheta * m as f64);
        let b = (d.conj() * dir).re;
        let t_max = -b + (b * b + room).sqrt();
        if t_max <= 0.0 {
            continue;
        }
        let ray = gl.integrate(0.0, 1.0, |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = t_max * s * s;
            t.ln() * (weight.laplacian(z + dir * t) - lap_z) * t * 2.0 * t_max * s
        });
        total += ray * dtheta;
    }
    total * 2.0 / PI
}

/// Riesz decomposition of the weight on `B(λ, radius)`.
#[derive(Debug, Clone)]
pub struct DiskDecomposition {
    center: C64,
    radius: f64,
    order: usize,
    holo_coeffs: Vec<C64>,
    weight: WeightModel,
    residual: f64,
    config: PotentialConfig,
}

impl DiskDecomposition {
    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest derivative order served by this decomposition.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weight(&self) -> &WeightModel {
        &self.weight
    }

    /// Taylor coefficients of `H_λ` about `λ`.
    pub fn holo_coeffs(&self) -> &[C64] {
        &self.holo_coeffs
    }

    /// Largest `|2 Re H_λ − h_λ|` observed on the check circle.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `G[Δφ](z)`.
    pub fn potential(&self, z: C64) -> Result<f64> {
        log_potential_with(&self.weight, self.center, self.radius, z, &self.config)
    }

    /// `h_λ(z) = φ(z) − G[Δφ](z)`.
    pub fn harmonic(&self, z: C64) -> Result<f64> {
        Ok(self.weight.value(z) - self.potential(z)?)
    }

    /// `H_λ(z)`.
    pub fn holo(&self, z: C64) -> C64 {
        series::eval(&self.holo_coeffs, z - self.center)
    }

    /// `G_λ(z) = H_λ(z) − H_λ(λ)`; vanishes at `λ` identically.
    pub fn g_lambda(&self, z: C64) -> C64 {
        let w = z - self.center;
        series::eval(&self.holo_coeffs[1..], w) * w
    }

    /// Taylor coefficients of `G_λ` about `λ`.
    pub fn g_lambda_coeffs(&self) -> Vec<C64> {
        let mut c = self.holo_coeffs.clone();
        c[0] = C64::new(0.0, 0.0);
        c
    }
}

pub fn riesz_decompose(weight: &WeightModel, center: C64, radius: f64, order: usize) -> Result<DiskDecomposition> {
    riesz_decompose_with(weight, center, radius, order, &PotentialConfig::default())
}

pub fn riesz_decompose_with(
    weight: &WeightModel,
    center: C64,
    radius: f64,
    order: usize,
    config: &PotentialConfig,
) -> Result<DiskDecomposition> {
    if order > weight.order() {
        return Err(Error::domain(format!(
            "decomposition order {order} exceeds weight order {}",
            weight.order()
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("disk radius must be positive, got {radius}")));
    }
    let samples = config.fourier_samples.max(2 * order + 8);
    let r = radius / 2.0;
    let dtheta = 2.0 * PI / samples as f64;
    let h_at = |theta: f64| -> Result<f64> {
        let z = center + C64::from_polar(r, theta);
        Ok(weight.value(z) - log_potential_with(weight, center, radius, z, config)?)
    };
    let h: Vec<f64> = (0..samples)
        .map(|m| h_at(dtheta * m as f64))
        .collect::<Result<_>>()?;
    let n_coeffs = samples / 2;
    let mut coeffs = Vec::with_capacity(n_coeffs);
    for n in 0..n_coeffs {
        let a: C64 = h
            .iter()
            .enumerate()
            .map(|(m, v)| C64::from_polar(*v, -(n as f64) * dtheta * m as f64))
            .sum::<C64>()
            / samples as f64;
        // gauge: Im H(λ) = 0
        let c = if n == 0 { C64::new(a.re / 2.0, 0.0) } else { a / r.powi(n as i32) };
        coeffs.push(c);
    }
    let mut dec = DiskDecomposition {
        center,
        radius,
        order,
        holo_coeffs: coeffs,
        weight: weight.clone(),
        residual: 0.0,
        config: *config,
    };
    let mut scale = 1.0f64;
    let mut residual = 0.0f64;
    for m in 0..samples {
        let theta = dtheta * (m as f64 + 0.5);
        let hv = h_at(theta)?;
        scale = scale.max(hv.abs());
        let z = center + C64::from_polar(r, theta);
        residual = residual.max((2.0 * dec.holo(z).re - hv).abs());
    }
    dec.residual = residual;
    if !residual.is_finite() || residual > config.tolerance * scale {
        return Err(Error::Decomposition {
            residual,
            tolerance: config.tolerance * scale,
        });
    }
    Ok(dec)
}

/// `∂^k G_λ(λ) = k!·[H_λ]_k`, zero for `k = 0`.
pub fn g_lambda_derivs(dec: &DiskDecomposition, k: usize) -> Result<C64> {
    if k > dec.order {
        return Err(Error::domain(format!(
            "derivative order {k} exceeds decomposition order {}",
            dec.order
        )));
    }
    if k == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(dec.holo_coeffs[k] * factorial(k))
}

/// `∂^k G[Δφ](λ) = ∂^kφ(λ) − ∂^k G_λ(λ)` for `k ≥ 1`, and `G[Δφ](λ)` for `k = 0`.
pub fn potential_derivs(dec: &DiskDecomposition, k: usize) -> Result<C64> {
    if k == 0 {
        return Ok(C64::new(dec.potential(dec.center)?, 0.0));
    }
    Ok(dec.weight.holo_deriv(dec.center, k)? - g_lambda_derivs(dec, k)?)
}

/// `(∂G[Δφ](λ), …, ∂^n G[Δφ](λ))`, which is also the jet of `φ − G_λ` at `λ`.
pub fn potential_jet(dec: &DiskDecomposition, n: usize) -> Result<DerivativeJet> {
    Ok(DerivativeJet::from(
        (1..=n).map(|k| potential_derivs(dec, k)).collect::<Result<Vec<_>>>()?,
    ))
}

/// Empirical derivative bounds of the local potential over a set of probes.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialBoundReport {
    /// `max_probes |∂^k G[Δφ](λ)|` for `k = 0..=order`.
    pub max_by_order: Vec<f64>,
    /// `min_probes |∂^k G[Δφ](λ)|`.
    pub min_by_order: Vec<f64>,
    /// Per probe, per order.
    pub values: Vec<Vec<f64>>,
    /// Non-finite values, or a max/min spread beyond the growth factor on
    /// an order whose values are not negligibly small.
    pub blow_up: bool,
}

/// Bounds on `|∂^k G[Δφ]|` at each probe `(λ, ε)`, with the potential taken
/// over `B(λ, ε)`.
pub fn potential_bound_report(
    weight: &WeightModel,
    probes: &[(C64, f64)],
    order: usize,
    growth_factor: f64,
) -> Result<PotentialBoundReport> {
    if probes.is_empty() {
        return Err(Error::domain("no probes given"));
    }
    let values: Vec<Vec<f64>> = probes
        .iter()
        .map(|&(lambda, eps)| {
            let dec = riesz_decompose(weight, lambda, eps, order)?;
            (0..=order)
                .map(|k| potential_derivs(&dec, k).map(|v| v.norm()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let max_by_order: Vec<f64> = (0..=order)
        .map(|k| values.iter().map(|v| v[k]).fold(0.0, f64::max))
        .collect();
    let min_by_order: Vec<f64> = (0..=order)
        .map(|k| values.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let blow_up = values.iter().flatten().any(|v| !v.is_finite())
        || max_by_order
            .iter()
            .zip(&min_by_order)
            .any(|(hi, lo)| *hi > 1e-8 && *hi > growth_factor * lo.max(1e-8));
    Ok(PotentialBoundReport {
        max_by_order,
        min_by_order,
        values,
        blow_up,
    })
}

/// `(2/π)·M·∫_{B(0,2ε)} |log|w|| dA`.
pub fn log_bound(sup_laplacian: f64, eps: f64) -> f64 {
    let a = 2.0 * eps;
    // ∫_0^a t |log t| dt
    let radial = if a <= 1.0 {
        a * a / 4.0 - a * a / 2.0 * a.ln()
    } else {
        0.5 + a * a / 2.0 * a.ln() - a * a / 4.0
    };
    2.0 / PI * sup_laplacian * 2.0 * PI * radial
}
