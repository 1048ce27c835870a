use std::path::Path;

use fockmult::geometry::{density_profile, MultiSet, ScanGrid};
use fockmult::interp::{
    build_local_interpolant, global_interpolate_ls, verify_interpolant, verify_interpolant_auto, InterpolationData,
    LsSolution, DEFAULT_TAU,
};
use fockmult::sampling::{frame_bounds, phase_scan, CollapseInterval, PhaseRow, COLLAPSE_THRESHOLD};
use fockmult::transform::{
    default_epsilon, density_match, reduce_set, sampling_preservation, PreservationReport,
};
use fockmult::{io, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Files produced by a command, written together once it has finished.
pub struct Output {
    pub files: Vec<(String, String)>,
    pub summary: String,
    pub warnings: Vec<String>,
}

impl Output {
    fn new(summary: String) -> Self {
        Output {
            files: Vec::new(),
            summary,
            warnings: Vec::new(),
        }
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        self.files.push((name.into(), serde_json::to_string_pretty(value)? + "\n"));
        Ok(())
    }
}

pub struct Context<'a> {
    pub config: RunConfig,
    pub set_path: Option<&'a Path>,
    pub data_path: Option<&'a Path>,
    pub seed: u64,
}

const DEFAULT_DEGREE: usize = 20;

fn extent(set: &MultiSet) -> f64 {
    set.points().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn density(ctx: &Context) -> Result<Output, CliError> {
    let set = ctx.config.point_set(ctx.set_path)?;
    let weight = ctx.config.weight_model()?;
    let r = extent(&set);
    let radii = match &ctx.config.radii {
        Some(r) => r.clone(),
        None if r > 0.0 => vec![0.4 * r, 0.8 * r],
        None => vec![1.0],
    };
    let report = density_profile(&set, &weight, &radii, &ScanGrid::Auto)?;
    let mut csv = String::from("r,lower,upper\n");
    for ((r, lo), hi) in report.radii.iter().zip(&report.lower).zip(&report.upper) {
        csv.push_str(&format!("{r:.16e},{lo:.16e},{hi:.16e}\n"));
    }
    let summary = match report.headline {
        Some(h) => format!("density headline {h:.6} over {} points", set.len()),
        None => format!("no interior scan centers over {} points; see the lower/upper profile", set.len()),
    };
    let mut out = Output::new(summary);
    if set.is_empty() {
        out.warnings.push("point set is empty; the density report is zero".into());
    }
    out.files.push(("density.csv".into(), csv));
    out.json("density.json", &report)?;
    Ok(out)
}

#[derive(Serialize)]
struct PointResidual {
    re: f64,
    im: f64,
    mult: u32,
    residuals: Vec<f64>,
    bound_ratio: f64,
    truncation_bound: f64,
    truncation_order: usize,
    inconclusive: bool,
}

#[derive(Serialize)]
struct InterpReport {
    weight: String,
    local_radius: f64,
    data_norm: f64,
    max_residual: f64,
    /// `max_residual / data_norm`, zero for zero data.
    relative_residual: f64,
    points: Vec<PointResidual>,
    global: Option<LsSolution>,
}

fn random_data(set: &MultiSet, seed: u64) -> Result<InterpolationData, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = set
        .mult()
        .iter()
        .map(|&m| {
            (0..m)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    Ok(InterpolationData::new(set.clone(), rows)?)
}

pub fn interp(ctx: &Context) -> Result<Output, CliError> {
    let cfg = &ctx.config;
    let set = ctx.config.point_set(ctx.set_path)?;
    let weight = cfg.weight_model()?;
    let (data, generated) = match ctx.data_path {
        Some(p) => (io::read_data_file(p, &set)?, false),
        None => (random_data(&set, ctx.seed)?, true),
    };
    let local_radius = cfg.local_radius.unwrap_or(1.0);
    let tolerance = cfg.tolerance.unwrap_or(1e-8);
    let mut points = Vec::with_capacity(set.len());
    for (i, (z, m)) in set.iter().enumerate() {
        let f = build_local_interpolant(z, local_radius, data.at(i), &weight)?;
        let check = match cfg.truncation_order {
            Some(t) => verify_interpolant(&f, &weight, t, tolerance)?,
            None => verify_interpolant_auto(&f, &weight, tolerance)?,
        };
        points.push(PointResidual {
            re: z.re,
            im: z.im,
            mult: m,
            residuals: check.residuals,
            bound_ratio: f.bound_ratio,
            truncation_bound: check.truncation_bound,
            truncation_order: check.truncation_order,
            inconclusive: check.inconclusive,
        });
    }
    let data_norm = data.flat().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let max_residual = points
        .iter()
        .flat_map(|p| p.residuals.iter().copied())
        .fold(0.0, f64::max);
    let global = if cfg.global.unwrap_or(false) {
        Some(global_interpolate_ls(
            &data,
            &weight,
            cfg.degree.unwrap_or(DEFAULT_DEGREE),
            cfg.radius,
            cfg.tau.unwrap_or(DEFAULT_TAU),
        )?)
    } else {
        None
    };
    let report = InterpReport {
        weight: weight.label(),
        local_radius,
        data_norm,
        max_residual,
        relative_residual: if data_norm > 0.0 { max_residual / data_norm } else { 0.0 },
        points,
        global,
    };
    let mut summary = format!(
        "local interpolants at {} points: max residual {:.3e}",
        set.len(),
        report.max_residual
    );
    if let Some(g) = &report.global {
        summary.push_str(&format!(
            "; global N={} max residual {:.3e}, rank {}, feasible {}",
            g.degree, g.max_residual, g.rank, g.feasible
        ));
    }
    let mut out = Output::new(summary);
    if generated {
        out.warnings
            .push(format!("no --data given; using random targets from seed {}", ctx.seed));
    }
    if report.points.iter().any(|p| p.inconclusive) {
        out.warnings
            .push("some truncation bounds exceed the tolerance; raise truncation_order".into());
    }
    out.json("interp.json", &report)?;
    Ok(out)
}

pub fn sample(ctx: &Context) -> Result<Output, CliError> {
    let set = ctx.config.point_set(ctx.set_path)?;
    let weight = ctx.config.weight_model()?;
    let degree = ctx.config.degree.unwrap_or(DEFAULT_DEGREE);
    let report = frame_bounds(&set, &weight, degree, ctx.config.radius)?;
    let mut out = Output::new(format!(
        "N={} R={:.3}: A={:.6e} B={:.6e} (N+5: A={:.6e} B={:.6e}) stable={}",
        report.degree, report.radius, report.a, report.b, report.check_a, report.check_b, report.stable
    ));
    if set.is_empty() {
        out.warnings.push("point set is empty; A = B = 0".into());
    }
    out.json("sample.json", &report)?;
    Ok(out)
}

#[derive(Serialize)]
struct DensitySummary {
    radii: Vec<f64>,
    tolerance: Vec<f64>,
    relative_gap: Vec<f64>,
    sandwich_violations: usize,
    centers_checked: usize,
    within_tolerance: bool,
    headline_original: Option<f64>,
    headline_reduced: Option<f64>,
}

#[derive(Serialize)]
struct ReduceReport {
    epsilon: f64,
    direction: String,
    separation: f64,
    original_points: usize,
    reduced_points: usize,
    satellites: usize,
    original_mass: u64,
    reduced_mass: u64,
    mass_conserved: bool,
    max_mult_before: u32,
    max_mult_after: u32,
    density_match: Option<DensitySummary>,
    preservation: Option<PreservationReport>,
}

pub fn reduce(ctx: &Context) -> Result<Output, CliError> {
    let cfg = &ctx.config;
    let set = cfg.point_set(ctx.set_path)?;
    let weight = cfg.weight_model()?;
    let epsilon = cfg.epsilon.unwrap_or_else(|| default_epsilon(&set));
    let rule = cfg.direction(ctx.seed)?;
    let plan = reduce_set(&set, epsilon, rule)?;
    let r = extent(&set);
    let radii: Vec<f64> = match &cfg.radii {
        Some(r) => r.clone(),
        None => vec![0.3 * r, 0.6 * r],
    }
    .into_iter()
    .filter(|x| *x > epsilon)
    .collect();
    let density = if radii.is_empty() {
        None
    } else {
        let m = density_match(&plan, &weight, &radii, &ScanGrid::Auto)?;
        Some(DensitySummary {
            radii: m.radii,
            tolerance: m.tolerance,
            relative_gap: m.relative_gap,
            sandwich_violations: m.sandwich_violations,
            centers_checked: m.centers_checked,
            within_tolerance: m.within_tolerance,
            headline_original: m.original.headline,
            headline_reduced: m.reduced.headline,
        })
    };
    let preservation = if cfg.preservation.unwrap_or(true) {
        Some(sampling_preservation(
            &plan,
            &weight,
            cfg.degree.unwrap_or(DEFAULT_DEGREE),
            cfg.radius,
        )?)
    } else {
        None
    };
    let report = ReduceReport {
        epsilon,
        direction: format!("{:?}", plan.rule),
        separation: plan.separation,
        original_points: set.len(),
        reduced_points: plan.reduced.len(),
        satellites: plan.pairing.len(),
        original_mass: set.total_mass(),
        reduced_mass: plan.reduced.total_mass(),
        mass_conserved: set.total_mass() == plan.reduced.total_mass(),
        max_mult_before: set.n_max(),
        max_mult_after: plan.reduced.n_max(),
        density_match: density,
        preservation,
    };
    let mut summary = format!(
        "{} satellites at eps={epsilon}; mass {} -> {}",
        report.satellites, report.original_mass, report.reduced_mass
    );
    if let Some(p) = &report.preservation {
        summary.push_str(&format!("; A ratio {:.4}", p.ratio));
    }
    let mut out = Output::new(summary);
    if report.preservation.is_some_and(|p| p.a_original == 0.0) {
        out.warnings
            .push("the original set has A_N = 0 at this degree, so the A ratio is not informative".into());
    }
    let mut csv = Vec::new();
    io::write_point_set(&plan.reduced, &mut csv)?;
    out.files
        .push(("reduced.csv".into(), String::from_utf8(csv).expect("ascii output")));
    out.json("reduce.json", &report)?;
    Ok(out)
}

#[derive(Serialize)]
struct ScanReport {
    multiplicity: u32,
    alpha: f64,
    threshold: f64,
    /// Spacing `sqrt(mπ/α)` at which the lattice density equals `1/π`.
    critical_spacing: f64,
    collapse: Vec<CollapseEntry>,
    rows: Vec<PhaseRow>,
}

#[derive(Serialize)]
struct CollapseEntry {
    degree: usize,
    interval: Option<CollapseInterval>,
}

pub fn scan(ctx: &Context) -> Result<Output, CliError> {
    let cfg = &ctx.config;
    let mult = cfg.multiplicity.or(cfg.lattice_mult).unwrap_or(1);
    let alpha = cfg.alpha();
    let spacings = cfg.spacing_list(mult)?;
    let degrees = cfg.degrees.clone().unwrap_or_else(|| vec![15, 25]);
    let threshold = cfg.threshold.unwrap_or(COLLAPSE_THRESHOLD);
    let table = phase_scan(&spacings, mult, alpha, &degrees, cfg.radius)?;
    let collapse: Vec<CollapseEntry> = degrees
        .iter()
        .map(|&d| CollapseEntry {
            degree: d,
            interval: table.collapse(d, threshold),
        })
        .collect();
    let summary = collapse
        .iter()
        .map(|c| match c.interval {
            Some(i) => format!("N={}: collapse in [{:.4}, {:.4}] at s={:.4}", c.degree, i.s_lo, i.s_hi, i.s_cross),
            None => format!("N={}: no collapse in the scanned range", c.degree),
        })
        .collect::<Vec<_>>()
        .join("; ");
    let report = ScanReport {
        multiplicity: mult,
        alpha,
        threshold,
        critical_spacing: (mult as f64 * std::f64::consts::PI / alpha).sqrt(),
        collapse,
        rows: table.rows.clone(),
    };
    let mut out = Output::new(summary);
    out.files.push(("scan.csv".into(), table.to_csv()));
    out.json("scan.json", &report)?;
    Ok(out)
}
