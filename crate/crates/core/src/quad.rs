//! Gauss-Legendre nodes and polar tensor rules on disks.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::C64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Cached rule with `n` nodes.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    fn compute(n: usize) -> GaussLegendre {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Polar tensor rule on the unit disk: Gauss-Legendre in the radius
/// (with the `r dr` Jacobian folded into the weights) and the uniform
/// trapezoid rule in the angle. Weights sum to `π`.
#[derive(Debug, Clone)]
pub struct DiskRule {
    pub radial: usize,
    pub angular: usize,
    points: Vec<C64>,
    weights: Vec<f64>,
}

impl DiskRule {
    pub const DEFAULT_RADIAL: usize = 64;
    pub const DEFAULT_ANGULAR: usize = 64;

    pub fn new(radial: usize, angular: usize) -> Self {
        let gl = GaussLegendre::get(radial.max(1));
        let angular = angular.max(1);
        let dtheta = 2.0 * PI / angular as f64;
        let mut points = Vec::with_capacity(radial * angular);
        let mut weights = Vec::with_capacity(radial * angular);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let r = 0.5 * (x + 1.0);
            let wr = 0.5 * w * r;
            for j in 0..angular {
                let theta = dtheta * j as f64;
                points.push(C64::from_polar(r, theta));
                weights.push(wr * dtheta);
            }
        }
        DiskRule {
            radial,
            angular,
            points,
            weights,
        }
    }

    /// Shared rule for a given resolution.
    pub fn cached(radial: usize, angular: usize) -> Arc<DiskRule> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<DiskRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("disk rule cache poisoned");
        guard
            .entry((radial, angular))
            .or_insert_with(|| Arc::new(DiskRule::new(radial, angular)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodes and weights mapped onto `B(center, radius)`.
    pub fn nodes(&self, center: C64, radius: f64) -> impl Iterator<Item = (C64, f64)> + '_ {
        let area = radius * radius;
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (center + p * radius, w * area))
    }

    /// `∫_{B(center, radius)} f dA`.
    pub fn integrate(&self, center: C64, radius: f64, mut f: impl FnMut(C64) -> f64) -> f64 {
        self.nodes(center, radius).map(|(z, w)| w * f(z)).sum()
    }

    pub fn integrate_complex(
        &self,
        center: C64,
        radius: f64,
        mut f: impl FnMut(C64) -> C64,
    ) -> C64 {
        self.nodes(center, radius).map(|(z, w)| f(z) * w).sum()
    }

    /// Mean of `f` over `B(center, radius)`.
    pub fn average(&self, center: C64, radius: f64, f: impl FnMut(C64) -> f64) -> f64 {
        self.integrate(center, radius, f) / (PI * radius * radius)
    }

    pub fn average_complex(&self, center: C64, radius: f64, f: impl FnMut(C64) -> C64) -> C64 {
        self.integrate_complex(center, radius, f) / (PI * radius * radius)
    }
}

impl Default for DiskRule {
    fn default() -> Self {
        DiskRule::new(Self::DEFAULT_RADIAL, Self::DEFAULT_ANGULAR)
    }
}
