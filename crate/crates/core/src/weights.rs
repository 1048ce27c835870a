//! Weight models `φ` with closed-form pointwise data.
//!
//! Every model exposes `φ(z)`, the holomorphic derivatives `∂^k φ(z)`, the
//! Laplacian `Δφ = ∂∂̄φ = (1/4)(∂_x² + ∂_y²)φ` and bounds `m ≤ Δφ ≤ M`.
//! Derivatives are exact; finite differences appear only in tests.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bell::DerivativeJet;
use crate::error::{Error, Result};
use crate::quad::DiskRule;
use crate::C64;

/// Default maximum derivative order carried by a weight.
pub const DEFAULT_ORDER: usize = 16;

#[derive(Debug, Clone)]
pub struct WeightModel {
    kind: WeightKind,
    order: usize,
}

#[derive(Debug, Clone)]
enum WeightKind {
    Classical { alpha: f64 },
    Perturbed { alpha: f64, beta: f64 },
    Mollified(Arc<MollifiedWeight>),
}

/// `φ̃ = φ ⋆ χ_R` with `χ_R = (πR²)^{-1} 1_{B(0,R)}`, evaluated by disk
/// averages of the base data.
#[derive(Debug, Clone)]
pub struct MollifiedWeight {
    base: WeightModel,
    radius: f64,
    rule: DiskRule,
}

/// `φ(z) = α|z|²`.
pub fn classical_weight(alpha: f64) -> Result<WeightModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("classical weight needs alpha > 0, got {alpha}")));
    }
    Ok(WeightModel {
        kind: WeightKind::Classical { alpha },
        order: DEFAULT_ORDER,
    })
}

/// `φ(z) = α|z|² + β cos(Re z)`, with `Δφ = α − (β/4) cos(Re z)`.
pub fn perturbed_weight(alpha: f64, beta: f64) -> Result<WeightModel> {
    if !(alpha.is_finite() && beta.is_finite()) || beta.abs() / 4.0 >= alpha {
        return Err(Error::domain(format!(
            "perturbed weight needs |beta|/4 < alpha, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(WeightModel {
        kind: WeightKind::Perturbed { alpha, beta },
        order: DEFAULT_ORDER,
    })
}

pub fn mollify(base: &WeightModel, radius: f64) -> Result<MollifiedWeight> {
    mollify_with(base, radius, DiskRule::default())
}

pub fn mollify_with(base: &WeightModel, radius: f64, rule: DiskRule) -> Result<MollifiedWeight> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::domain(format!("mollifier radius must be positive, got {radius}")));
    }
    let m = MollifiedWeight {
        base: base.clone(),
        radius,
        rule,
    };
    let probe = m.value(C64::new(0.0, 0.0));
    if !probe.is_finite() {
        return Err(Error::numeric("mollified weight quadrature is not finite"));
    }
    Ok(m)
}

impl WeightModel {
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Largest `k` for which `∂^k φ` may be requested.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self, z: C64) -> f64 {
        match &self.kind {
            WeightKind::Classical { alpha } => alpha * z.norm_sqr(),
            WeightKind::Perturbed { alpha, beta } => alpha * z.norm_sqr() + beta * z.re.cos(),
            WeightKind::Mollified(m) => m.value(z),
        }
    }

    /// `∂^k φ(z)`; `k = 0` returns `φ(z)`.
    pub fn holo_deriv(&self, z: C64, k: usize) -> Result<C64> {
        if k > self.order {
            return Err(Error::domain(format!(
                "derivative order {k} exceeds weight order {}",
                self.order
            )));
        }
        Ok(self.holo_deriv_unchecked(z, k))
    }

    fn holo_deriv_unchecked(&self, z: C64, k: usize) -> C64 {
        match &self.kind {
            WeightKind::Classical { alpha } => match k {
                0 => C64::new(alpha * z.norm_sqr(), 0.0),
                1 => z.conj() * *alpha,
                _ => C64::new(0.0, 0.0),
            },
            WeightKind::Perturbed { alpha, beta } => {
                // ∂ acts on cos((z + z̄)/2) as (1/2) d/dx
                let wave = beta * 0.5f64.powi(k as i32) * (z.re + k as f64 * PI / 2.0).cos();
                match k {
                    0 => C64::new(alpha * z.norm_sqr() + beta * z.re.cos(), 0.0),
                    1 => z.conj() * *alpha + wave,
                    _ => C64::new(wave, 0.0),
                }
            }
            WeightKind::Mollified(m) => m.holo_deriv_unchecked(z, k),
        }
    }

    pub fn laplacian(&self, z: C64) -> f64 {
        match &self.kind {
            WeightKind::Classical { alpha } => *alpha,
            WeightKind::Perturbed { alpha, beta } => alpha - 0.25 * beta * z.re.cos(),
            WeightKind::Mollified(m) => m.laplacian(z),
        }
    }

    /// `Some(c)` when `Δφ ≡ c`.
    pub fn constant_laplacian(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Classical { alpha } => Some(*alpha),
            WeightKind::Perturbed { alpha, beta } if *beta == 0.0 => Some(*alpha),
            WeightKind::Perturbed { .. } => None,
            WeightKind::Mollified(m) => m.base.constant_laplacian(),
        }
    }

    /// `(m, M)` with `m ≤ Δφ ≤ M`.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.kind {
            WeightKind::Classical { alpha } => (*alpha, *alpha),
            WeightKind::Perturbed { alpha, beta } => {
                (alpha - beta.abs() / 4.0, alpha + beta.abs() / 4.0)
            }
            WeightKind::Mollified(m) => m.base.bounds(),
        }
    }

    /// `(∂φ(z), …, ∂^n φ(z))`.
    pub fn jet(&self, z: C64, n: usize) -> Result<DerivativeJet> {
        if n > self.order {
            return Err(Error::domain(format!(
                "jet of order {n} exceeds weight order {}",
                self.order
            )));
        }
        Ok(DerivativeJet::from(
            (1..=n).map(|k| self.holo_deriv_unchecked(z, k)).collect::<Vec<_>>(),
        ))
    }

    pub fn label(&self) -> String {
        match &self.kind {
            WeightKind::Classical { alpha } => format!("classical(alpha={alpha})"),
            WeightKind::Perturbed { alpha, beta } => format!("perturbed(alpha={alpha}, beta={beta})"),
            WeightKind::Mollified(m) => format!("mollified({}, R={})", m.base.label(), m.radius),
        }
    }

    /// The `α` of a classical weight.
    pub fn classical_alpha(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Classical { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

impl MollifiedWeight {
    pub fn base(&self) -> &WeightModel {
        &self.base
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, z: C64) -> f64 {
        self.rule.average(z, self.radius, |w| self.base.value(w))
    }

    fn holo_deriv_unchecked(&self, z: C64, k: usize) -> C64 {
        if k == 0 {
            return C64::new(self.value(z), 0.0);
        }
        self.rule
            .average_complex(z, self.radius, |w| self.base.holo_deriv_unchecked(w, k))
    }

    pub fn laplacian(&self, z: C64) -> f64 {
        if let Some(c) = self.base.constant_laplacian() {
            return c;
        }
        self.rule.average(z, self.radius, |w| self.base.laplacian(w))
    }

    /// The mollified weight as a [`WeightModel`] sharing the base order.
    pub fn model(&self) -> WeightModel {
        WeightModel {
            kind: WeightKind::Mollified(Arc::new(self.clone())),
            order: self.base.order,
        }
    }
}

impl From<MollifiedWeight> for WeightModel {
    fn from(m: MollifiedWeight) -> Self {
        let order = m.base.order;
        WeightModel {
            kind: WeightKind::Mollified(Arc::new(m)),
            order,
        }
    }
}

/// Per-order maxima over `grid` of `|∂^j(φ − φ̃)|`, `j = 0..=order`.
pub fn weight_gap_check(
    base: &WeightModel,
    tilde: &WeightModel,
    order: usize,
    grid: &[C64],
) -> Result<Vec<f64>> {
    if order > base.order() || order > tilde.order() {
        return Err(Error::domain("gap order exceeds weight smoothness"));
    }
    (0..=order)
        .map(|j| {
            let mut worst = 0.0f64;
            for &z in grid {
                let d = if j == 0 {
                    (base.value(z) - tilde.value(z)).abs()
                } else {
                    (base.holo_deriv(z, j)? - tilde.holo_deriv(z, j)?).norm()
                };
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect()
}
