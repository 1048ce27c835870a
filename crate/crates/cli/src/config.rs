use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fockmult::geometry::MultiSet;
use fockmult::transform::DirectionRule;
use fockmult::weights::{classical_weight, mollify, perturbed_weight, WeightModel};
use fockmult::{io, C64};
use serde::Deserialize;

use crate::error::CliError;

/// Flat run configuration. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `classical`, `perturbed` or `mollified`.
    pub weight: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Base weight of a mollified weight: `classical` or `perturbed`.
    pub mollify_base: Option<String>,
    pub mollify_radius: Option<f64>,

    /// Point-set CSV; `--set` takes precedence.
    pub set: Option<PathBuf>,
    pub lattice_spacing: Option<f64>,
    pub lattice_radius: Option<f64>,
    pub lattice_mult: Option<u32>,

    /// Polynomial degree `N` of the finite sections.
    pub degree: Option<usize>,
    /// Truncation radius `R`.
    pub radius: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub seed: Option<u64>,

    pub local_radius: Option<f64>,
    pub truncation_order: Option<usize>,
    pub tolerance: Option<f64>,
    pub global: Option<bool>,
    pub tau: Option<f64>,

    pub epsilon: Option<f64>,
    /// `fixed`, `radial` or `random`.
    pub direction: Option<String>,
    /// Angle of the fixed direction in radians.
    pub direction_angle: Option<f64>,
    pub preservation: Option<bool>,

    pub spacings: Option<Vec<f64>>,
    pub spacing_min: Option<f64>,
    pub spacing_max: Option<f64>,
    pub spacing_steps: Option<usize>,
    pub multiplicity: Option<u32>,
    pub degrees: Option<Vec<usize>>,
    pub threshold: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(format!("`{name}` must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("mollify_radius", self.mollify_radius),
            ("lattice_spacing", self.lattice_spacing),
            ("lattice_radius", self.lattice_radius),
            ("radius", self.radius),
            ("local_radius", self.local_radius),
            ("tolerance", self.tolerance),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
            ("spacing_min", self.spacing_min),
            ("spacing_max", self.spacing_max),
            ("threshold", self.threshold),
        ] {
            positive(name, v)?;
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return Err(invalid("`beta` must be finite"));
            }
        }
        if let Some(t) = self.tau {
            if t >= 1.0 {
                return Err(invalid("`tau` must be below 1"));
            }
        }
        if let Some(t) = self.threshold {
            if t >= 1.0 {
                return Err(invalid("`threshold` must be below 1"));
            }
        }
        if let Some(r) = &self.radii {
            if r.is_empty() || r.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid("`radii` must be a nonempty list of positive numbers"));
            }
        }
        if let Some(s) = &self.spacings {
            if s.is_empty() || s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid("`spacings` must be a nonempty list of positive numbers"));
            }
        }
        if self.lattice_mult == Some(0) || self.multiplicity == Some(0) {
            return Err(invalid("multiplicities must be at least 1"));
        }
        if let Some(d) = &self.degrees {
            if d.is_empty() {
                return Err(invalid("`degrees` must not be empty"));
            }
        }
        if self.spacing_steps == Some(0) {
            return Err(invalid("`spacing_steps` must be at least 1"));
        }
        if let Some(angle) = self.direction_angle {
            if !angle.is_finite() {
                return Err(invalid("`direction_angle` must be finite"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(PI)
    }

    pub fn weight_model(&self) -> Result<WeightModel, CliError> {
        let kind = self.weight.as_deref().unwrap_or("classical");
        let simple = |kind: &str| -> Result<WeightModel, CliError> {
            match kind {
                "classical" => Ok(classical_weight(self.alpha())?),
                "perturbed" => Ok(perturbed_weight(self.alpha(), self.beta.unwrap_or(0.0))?),
                other => Err(invalid(format!(
                    "unknown weight `{other}`; expected classical, perturbed or mollified"
                ))),
            }
        };
        match kind {
            "mollified" => {
                let base = simple(self.mollify_base.as_deref().unwrap_or("classical"))?;
                Ok(mollify(&base, self.mollify_radius.unwrap_or(1.0))?.into())
            }
            other => simple(other),
        }
    }

    /// Point set from `--set`, the `set` key, or the lattice keys, in that order.
    pub fn point_set(&self, flag: Option<&Path>) -> Result<MultiSet, CliError> {
        if let Some(path) = flag.or(self.set.as_deref()) {
            return Ok(io::read_point_set_file(path)?);
        }
        match self.lattice_spacing {
            Some(s) => Ok(MultiSet::square_lattice(
                s,
                self.lattice_radius.unwrap_or(10.0),
                self.lattice_mult.unwrap_or(1),
            )?),
            None => Err(invalid(
                "no point set: pass --set FILE or give `set` or `lattice_spacing` in the config",
            )),
        }
    }

    pub fn direction(&self, seed: u64) -> Result<DirectionRule, CliError> {
        match self.direction.as_deref().unwrap_or("fixed") {
            "fixed" => Ok(DirectionRule::Fixed(C64::from_polar(1.0, self.direction_angle.unwrap_or(0.0)))),
            "radial" => Ok(DirectionRule::Radial),
            "random" => Ok(DirectionRule::Random { seed }),
            other => Err(invalid(format!(
                "unknown direction `{other}`; expected fixed, radial or random"
            ))),
        }
    }

    /// Explicit `spacings`, or `spacing_steps` evenly spaced values in
    /// `[spacing_min, spacing_max]`, defaulting to `[0.8, 1.3]·√m`.
    pub fn spacing_list(&self, mult: u32) -> Result<Vec<f64>, CliError> {
        if let Some(s) = &self.spacings {
            let mut s = s.clone();
            s.sort_by(f64::total_cmp);
            return Ok(s);
        }
        let root = (mult as f64).sqrt();
        let lo = self.spacing_min.unwrap_or(0.8 * root);
        let hi = self.spacing_max.unwrap_or(1.3 * root);
        if hi < lo {
            return Err(invalid("`spacing_max` is below `spacing_min`"));
        }
        let steps = self.spacing_steps.unwrap_or(11);
        if steps == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect())
    }
}
