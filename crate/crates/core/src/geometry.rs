//! Point sets with multiplicities, separation diagnostics and finite-radius
//! weighted density profiles.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::DiskRule;
use crate::weights::WeightModel;
use crate::C64;

/// A finite set `Λ` with multiplicity function `m_Λ ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSet {
    points: Vec<C64>,
    mult: Vec<u32>,
}

fn key(z: C64) -> (u64, u64) {
    // +0.0 folds the two signed zeros together
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

impl MultiSet {
    pub fn new(points: Vec<C64>, mult: Vec<u32>) -> Result<Self> {
        if points.len() != mult.len() {
            return Err(Error::domain(format!(
                "{} points but {} multiplicities",
                points.len(),
                mult.len()
            )));
        }
        if let Some(i) = mult.iter().position(|&m| m == 0) {
            return Err(Error::domain(format!("multiplicity of point {i} is zero")));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (i, z) in points.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::domain(format!("point {i} is not finite")));
            }
            if !seen.insert(key(*z)) {
                return Err(Error::domain(format!("point {i} ({z}) is repeated")));
            }
        }
        Ok(MultiSet { points, mult })
    }

    /// Every point with multiplicity one.
    pub fn simple(points: Vec<C64>) -> Result<Self> {
        let mult = vec![1; points.len()];
        MultiSet::new(points, mult)
    }

    pub fn empty() -> Self {
        MultiSet {
            points: Vec::new(),
            mult: Vec::new(),
        }
    }

    /// `sZ²` restricted to the open disk `|z| < radius`, uniform multiplicity.
    pub fn square_lattice(spacing: f64, radius: f64, mult: u32) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("lattice spacing and radius must be positive"));
        }
        if mult == 0 {
            return Err(Error::domain("lattice multiplicity must be at least 1"));
        }
        let k = (radius / spacing).ceil() as i64;
        let mut points = Vec::new();
        for i in -k..=k {
            for j in -k..=k {
                let z = C64::new(i as f64 * spacing, j as f64 * spacing);
                if z.norm() < radius {
                    points.push(z);
                }
            }
        }
        let n = points.len();
        Ok(MultiSet {
            points,
            mult: vec![mult; n],
        })
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn mult(&self) -> &[u32] {
        &self.mult
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (C64, u32)> + '_ {
        self.points.iter().copied().zip(self.mult.iter().copied())
    }

    /// `sup m_Λ`, zero for the empty set.
    pub fn n_max(&self) -> u32 {
        self.mult.iter().copied().max().unwrap_or(0)
    }

    /// `Σ m_Λ(λ)`.
    pub fn total_mass(&self) -> u64 {
        self.mult.iter().map(|&m| m as u64).sum()
    }

    pub fn with_uniform_mult(&self, m: u32) -> Result<Self> {
        MultiSet::new(self.points.clone(), vec![m; self.len()])
    }

    pub fn set_mult(&mut self, index: usize, m: u32) -> Result<()> {
        if m == 0 {
            return Err(Error::domain("multiplicity must be at least 1"));
        }
        let slot = self
            .mult
            .get_mut(index)
            .ok_or_else(|| Error::domain(format!("point index {index} out of range")))?;
        *slot = m;
        Ok(())
    }

    /// Index of the point equal to `z`, if any.
    pub fn index_of(&self, z: C64) -> Option<usize> {
        let k = key(z);
        self.points.iter().position(|p| key(*p) == k)
    }
}

/// `inf |λ − λ′|` over distinct pairs; `+∞` below two points.
pub fn separation(set: &MultiSet) -> f64 {
    let mut pts = set.points.clone();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    pts.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j].re - pts[i].re >= best {
                break;
            }
            best = best.min((pts[j] - pts[i]).norm());
        }
    }
    best
}

/// `max #(Λ ∩ B(z,1))` over candidate centers: every point and every
/// midpoint of two points closer than 2. Exact whenever `ρ(Λ) > 1`.
pub fn relative_separation(set: &MultiSet) -> usize {
    if set.is_empty() {
        return 0;
    }
    let index = PointIndex::new(&set.points, &set.mult, 1.0);
    let mut best = 0;
    for (i, &a) in set.points.iter().enumerate() {
        best = best.max(index.count_points(a, 1.0));
        index.for_each_within(a, 2.0, |j, b| {
            if j > i {
                best = best.max(index.count_points((a + b) * 0.5, 1.0));
            }
        });
    }
    best
}

/// `Σ_{|λ−z|<r} m_Λ(λ)` over the open disk.
pub fn count_with_mult(set: &MultiSet, z: C64, r: f64) -> u64 {
    set.iter()
        .filter(|(p, _)| (p - z).norm() < r)
        .map(|(_, m)| m as u64)
        .sum()
}

/// Uniform bucket grid over the points, used for repeated disk counts.
pub struct PointIndex<'a> {
    points: &'a [C64],
    mult: &'a [u32],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    bucket_mass: HashMap<(i64, i64), u64>,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [C64], mult: &'a [u32], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut bucket_mass: HashMap<(i64, i64), u64> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let k = ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
            buckets.entry(k).or_default().push(i);
            *bucket_mass.entry(k).or_default() += mult[i] as u64;
        }
        PointIndex {
            points,
            mult,
            cell,
            buckets,
            bucket_mass,
        }
    }

    /// Index for a set, with a cell size matched to its point density.
    pub fn for_set(set: &'a MultiSet) -> Self {
        let cell = if set.len() < 2 {
            1.0
        } else {
            let (lo, hi) = bounding_box(&set.points);
            let area = ((hi.re - lo.re) * (hi.im - lo.im)).max(1e-12);
            (4.0 * area / set.len() as f64).sqrt().max(1e-6)
        };
        PointIndex::new(&set.points, &set.mult, cell)
    }

    fn cell_range(&self, z: C64, r: f64) -> (i64, i64, i64, i64) {
        (
            ((z.re - r) / self.cell).floor() as i64,
            ((z.re + r) / self.cell).floor() as i64,
            ((z.im - r) / self.cell).floor() as i64,
            ((z.im + r) / self.cell).floor() as i64,
        )
    }

    fn for_each_within(&self, z: C64, r: f64, mut f: impl FnMut(usize, C64)) {
        let (x0, x1, y0, y1) = self.cell_range(z, r);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                if let Some(ids) = self.buckets.get(&(cx, cy)) {
                    for &i in ids {
                        if (self.points[i] - z).norm() < r {
                            f(i, self.points[i]);
                        }
                    }
                }
            }
        }
    }

    fn count_points(&self, z: C64, r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(z, r, |_, _| n += 1);
        n
    }

    /// Multiplicity-weighted count over the open disk `B(z, r)`. Cells lying
    /// strictly inside the disk contribute their precomputed mass.
    pub fn count(&self, z: C64, r: f64) -> u64 {
        let (x0, x1, y0, y1) = self.cell_range(z, r);
        let cells = ((x1 - x0 + 1) * (y1 - y0 + 1)) as usize;
        if cells > 4 * self.buckets.len() {
            return self
                .points
                .iter()
                .zip(self.mult)
                .filter(|(p, _)| (*p - z).norm() < r)
                .map(|(_, m)| *m as u64)
                .sum();
        }
        let mut total = 0;
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                let Some(mass) = self.bucket_mass.get(&(cx, cy)) else {
                    continue;
                };
                let lo = C64::new(cx as f64 * self.cell, cy as f64 * self.cell);
                let far = [
                    lo,
                    lo + self.cell,
                    lo + C64::new(0.0, self.cell),
                    lo + C64::new(self.cell, self.cell),
                ]
                .iter()
                .map(|c| (c - z).norm())
                .fold(0.0, f64::max);
                if far < r {
                    total += mass;
                } else {
                    for &i in &self.buckets[&(cx, cy)] {
                        if (self.points[i] - z).norm() < r {
                            total += self.mult[i] as u64;
                        }
                    }
                }
            }
        }
        total
    }
}

fn bounding_box(points: &[C64]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (lo, hi)
}

fn mass_rule(r: f64) -> std::sync::Arc<DiskRule> {
    // resolve oscillations of bounded-frequency weights on large disks
    let n = 64usize.max((2.0 * r).ceil() as usize + 16);
    DiskRule::cached(n, n)
}

/// `∫_{B(z,r)} Δφ dA`.
pub fn laplacian_mass(weight: &WeightModel, z: C64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("disk radius must be positive, got {r}")));
    }
    let mass = match weight.constant_laplacian() {
        Some(c) => c * PI * r * r,
        None => mass_rule(r).integrate(z, r, |w| weight.laplacian(w)),
    };
    if !mass.is_finite() {
        return Err(Error::numeric(format!("Laplacian mass at {z}, r={r} is not finite")));
    }
    Ok(mass)
}

/// Centers at which density ratios are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanGrid {
    /// Step `r/4` over the bounding box of the set inflated by `r`.
    Auto,
    /// Lattice of the given step over `[lo, hi]`.
    Box { lo: C64, hi: C64, step: f64 },
    Explicit(Vec<C64>),
}

impl ScanGrid {
    fn centers(&self, set: &MultiSet, r: f64) -> Vec<C64> {
        match self {
            ScanGrid::Auto => {
                if set.is_empty() {
                    return vec![C64::new(0.0, 0.0)];
                }
                let (lo, hi) = bounding_box(&set.points);
                let pad = C64::new(r, r);
                box_lattice(lo - pad, hi + pad, r / 4.0)
            }
            ScanGrid::Box { lo, hi, step } => box_lattice(*lo, *hi, *step),
            ScanGrid::Explicit(c) => c.clone(),
        }
    }

    fn describe(&self) -> String {
        match self {
            ScanGrid::Auto => "auto: step r/4 over the bounding box of the set inflated by r".into(),
            ScanGrid::Box { lo, hi, step } => format!("box [{lo}, {hi}] with step {step}"),
            ScanGrid::Explicit(c) => format!("{} explicit centers", c.len()),
        }
    }
}

fn box_lattice(lo: C64, hi: C64, step: f64) -> Vec<C64> {
    if !(step > 0.0) || hi.re < lo.re || hi.im < lo.im {
        return Vec::new();
    }
    let nx = ((hi.re - lo.re) / step).floor() as usize;
    let ny = ((hi.im - lo.im) / step).floor() as usize;
    let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            out.push(lo + C64::new(i as f64 * step, j as f64 * step));
        }
    }
    out
}

/// Finite-radius density profiles. `lower`/`upper` are the inf/sup of
/// `N(z,r)/∫_{B(z,r)}Δφ` over the finite scan grid, not over the plane.
/// The `interior_*` profiles restrict to centers whose disk lies inside the
/// convex hull of the set, which removes the truncation edge.
#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub radii: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub interior_lower: Vec<Option<f64>>,
    pub interior_upper: Vec<Option<f64>>,
    pub centers_scanned: Vec<usize>,
    pub interior_centers: Vec<usize>,
    /// Extrapolated density estimate; see [`DensityReport::headline`].
    pub headline: Option<f64>,
    pub scan: String,
}

impl DensityReport {
    /// Midpoint of the interior profile, Richardson-extrapolated in `1/r`
    /// from the two largest usable radii when they differ by at least 1.5×.
    fn compute_headline(&self) -> Option<f64> {
        let mut usable: Vec<(f64, f64)> = self
            .radii
            .iter()
            .zip(self.interior_lower.iter().zip(&self.interior_upper))
            .filter_map(|(r, (lo, hi))| Some((*r, 0.5 * ((*lo)? + (*hi)?))))
            .collect();
        usable.sort_by(|a, b| a.0.total_cmp(&b.0));
        let &(r2, d2) = usable.last()?;
        if usable.len() >= 2 {
            let (r1, d1) = usable[usable.len() - 2];
            if r2 >= 1.5 * r1 {
                return Some(((r2 * d2 - r1 * d1) / (r2 - r1)).max(0.0));
            }
        }
        Some(d2)
    }
}

/// Convex hull in counter-clockwise order (monotone chain).
fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: C64, a: C64, b: C64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut hull: Vec<C64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &C64>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// True when `B(z, r)` lies in the convex polygon `hull` (ccw).
fn disk_in_hull(hull: &[C64], z: C64, r: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let e = b - a;
        let inward = (e.re * (z - a).im - e.im * (z - a).re) / e.norm();
        inward >= r
    })
}

pub fn density_profile(
    set: &MultiSet,
    weight: &WeightModel,
    radii: &[f64],
    scan: &ScanGrid,
) -> Result<DensityReport> {
    if radii.is_empty() {
        return Err(Error::domain("no radii given"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::domain(format!("radius {r} is not positive")));
    }
    let index = PointIndex::for_set(set);
    let hull = convex_hull(&set.points);
    let mut report = DensityReport {
        radii: radii.to_vec(),
        lower: Vec::new(),
        upper: Vec::new(),
        interior_lower: Vec::new(),
        interior_upper: Vec::new(),
        centers_scanned: Vec::new(),
        interior_centers: Vec::new(),
        headline: None,
        scan: scan.describe(),
    };
    for &r in radii {
        let centers = scan.centers(set, r);
        if centers.is_empty() {
            return Err(Error::domain(format!("scan grid is empty at radius {r}")));
        }
        let values: Vec<(f64, bool)> = centers
            .par_iter()
            .map(|&z| {
                let mass = laplacian_mass(weight, z, r)?;
                Ok((index.count(z, r) as f64 / mass, disk_in_hull(&hull, z, r)))
            })
            .collect::<Result<_>>()?;
        let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        let inner: Vec<f64> = values.iter().filter(|v| v.1).map(|v| v.0).collect();
        report.lower.push(lo);
        report.upper.push(hi);
        report
            .interior_lower
            .push(inner.iter().copied().reduce(f64::min));
        report
            .interior_upper
            .push(inner.iter().copied().reduce(f64::max));
        report.centers_scanned.push(centers.len());
        report.interior_centers.push(inner.len());
    }
    report.headline = report.compute_headline();
    Ok(report)
}

/// `∫_{B(z,r+ε)}Δφ / ∫_{B(z,r)}Δφ − 1`.
pub fn window_delta(weight: &WeightModel, z: C64, r: f64, eps: f64) -> Result<f64> {
    Ok(laplacian_mass(weight, z, r + eps)? / laplacian_mass(weight, z, r)? - 1.0)
}

/// Upper bound `(M/m)((r+ε)² − r²)/r²` for [`window_delta`].
pub fn window_delta_bound(weight: &WeightModel, r: f64, eps: f64) -> f64 {
    let (m, big_m) = weight.bounds();
    big_m / m * ((r + eps).powi(2) - r * r) / (r * r)
}
