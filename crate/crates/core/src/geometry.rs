//! Index spaces, their sampled copies, and finite-overlap covers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    /// The time-frequency plane with coordinates `(x, ξ)`.
    Euclidean2D,
    /// The `ax+b` group with coordinates `(a, b)`, `a > 0`.
    AffineGroup,
    /// The unit disc with coordinates `(Re z, Im z)`.
    BergmanDisc,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Euclidean2D => "euclidean-2d",
            SpaceKind::AffineGroup => "affine-group",
            SpaceKind::BergmanDisc => "bergman-disc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub space: SpaceKind,
    pub coords: [f64; 2],
}

impl Point {
    pub fn euclidean(x: f64, xi: f64) -> Self {
        Point { space: SpaceKind::Euclidean2D, coords: [x, xi] }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Point { space: SpaceKind::AffineGroup, coords: [a, b] }
    }

    pub fn disc(re: f64, im: f64) -> Self {
        Point { space: SpaceKind::BergmanDisc, coords: [re, im] }
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn validate(&self) -> Result<()> {
        let [u, v] = self.coords;
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {:?}", self.coords)));
        }
        match self.space {
            SpaceKind::Euclidean2D => Ok(()),
            SpaceKind::AffineGroup if u > 0.0 => Ok(()),
            SpaceKind::AffineGroup => Err(Error::InvalidPoint(format!("affine scale a = {u} must be positive"))),
            SpaceKind::BergmanDisc if u * u + v * v < 1.0 => Ok(()),
            SpaceKind::BergmanDisc => Err(Error::InvalidPoint(format!("|z| = {} is not inside the disc", u.hypot(v)))),
        }
    }
}

/// One of the three concrete metric measure spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricMeasureSpace {
    pub kind: SpaceKind,
}

impl MetricMeasureSpace {
    pub fn new(kind: SpaceKind) -> Self {
        MetricMeasureSpace { kind }
    }

    pub fn euclidean() -> Self {
        Self::new(SpaceKind::Euclidean2D)
    }

    pub fn affine() -> Self {
        Self::new(SpaceKind::AffineGroup)
    }

    pub fn disc() -> Self {
        Self::new(SpaceKind::BergmanDisc)
    }

    /// The distinguished point `e`: the origin, the group identity `(1, 0)`, or `z = 0`.
    pub fn basepoint(&self) -> Point {
        match self.kind {
            SpaceKind::Euclidean2D => Point::euclidean(0.0, 0.0),
            SpaceKind::AffineGroup => Point::affine(1.0, 0.0),
            SpaceKind::BergmanDisc => Point::disc(0.0, 0.0),
        }
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.space != self.kind {
            return Err(Error::SpaceMismatch { expected: self.kind.name().into(), found: p.space.name().into() });
        }
        p.validate()
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist(x, y))
    }

    /// Distance without validation; callers guarantee valid points of this space.
    #[inline]
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        let [x1, y1] = x.coords;
        let [x2, y2] = y.coords;
        match self.kind {
            SpaceKind::Euclidean2D => (x1 - x2).hypot(y1 - y2),
            SpaceKind::AffineGroup => {
                // arccosh(1 + t) = 2 asinh(sqrt(t / 2)), stable for small t.
                let t = ((x1 - x2).powi(2) + (y1 - y2).powi(2)) / (2.0 * x1 * x2);
                2.0 * (0.5 * t).sqrt().asinh()
            }
            SpaceKind::BergmanDisc => {
                let num = (x1 - x2).hypot(y1 - y2);
                // 1 - conj(z) w
                let re = 1.0 - (x1 * x2 + y1 * y2);
                let im = -(x1 * y2 - y1 * x2);
                let rho = (num / re.hypot(im)).min(1.0);
                rho.atanh()
            }
        }
    }

    pub fn measure_weight(&self, x: &Point) -> Result<f64> {
        self.check(x)?;
        Ok(self.density(x))
    }

    #[inline]
    pub fn density(&self, x: &Point) -> f64 {
        let [u, v] = x.coords;
        match self.kind {
            SpaceKind::Euclidean2D => 1.0,
            SpaceKind::AffineGroup => 1.0 / (u * u),
            SpaceKind::BergmanDisc => {
                let s = 1.0 - u * u - v * v;
                1.0 / (PI * s * s)
            }
        }
    }

    /// Group law where one exists: translation in the plane, `(a₁,b₁)(a₂,b₂) = (a₁a₂, a₁b₂ + b₁)`.
    pub fn group_mul(&self, y: &Point, x: &Point) -> Result<Point> {
        self.check(x)?;
        self.check(y)?;
        match self.kind {
            SpaceKind::Euclidean2D => Ok(Point::euclidean(y.x() + x.x(), y.y() + x.y())),
            SpaceKind::AffineGroup => Ok(Point::affine(y.x() * x.x(), y.x() * x.y() + y.y())),
            SpaceKind::BergmanDisc => Err(Error::InvalidParameter("the disc is not given a group structure".into())),
        }
    }

    pub fn group_inv(&self, y: &Point) -> Result<Point> {
        self.check(y)?;
        match self.kind {
            SpaceKind::Euclidean2D => Ok(Point::euclidean(-y.x(), -y.y())),
            SpaceKind::AffineGroup => Ok(Point::affine(1.0 / y.x(), -y.y() / y.x())),
            SpaceKind::BergmanDisc => Err(Error::InvalidParameter("the disc is not given a group structure".into())),
        }
    }

    /// λ of the closed ball of radius `r` (independent of the center).
    pub fn ball_volume(&self, r: f64) -> f64 {
        match self.kind {
            SpaceKind::Euclidean2D => PI * r * r,
            SpaceKind::AffineGroup => 2.0 * PI * (r.cosh() - 1.0),
            SpaceKind::BergmanDisc => r.sinh().powi(2),
        }
    }
}

pub fn distance(space: &MetricMeasureSpace, x: &Point, y: &Point) -> Result<f64> {
    space.distance(x, y)
}

pub fn measure_weight(space: &MetricMeasureSpace, x: &Point) -> Result<f64> {
    space.measure_weight(x)
}

/// How the nodes of a domain were laid out; drives cover construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridLayout {
    /// Square lattice of spacing `step`.
    Lattice { step: f64 },
    /// Nodes `(log a, b/a) = (k·log_step, j·shift_step)`.
    AffineLog { log_step: f64, shift_step: f64 },
    /// Rings uniform in Bergman distance, angles uniform per ring.
    Polar { radial_step: f64, ring_sizes: Vec<usize> },
    /// Anything supplied by the caller.
    Custom,
}

/// Finite quadrature copy of a truncated ball around the basepoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledDomain {
    pub space: MetricMeasureSpace,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub truncation_radius: f64,
    pub resolution: f64,
    /// Upper bound for the diameter of the quadrature cell around any node.
    pub cell_diameter: f64,
    pub layout: GridLayout,
    base_dist: Vec<f64>,
}

impl SampledDomain {
    /// Builds a domain from explicit nodes and weights after validating them.
    pub fn from_parts(
        space: MetricMeasureSpace,
        nodes: Vec<Point>,
        weights: Vec<f64>,
        truncation_radius: f64,
        resolution: f64,
        cell_diameter: f64,
        layout: GridLayout,
    ) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), found: weights.len() });
        }
        if nodes.is_empty() {
            return Err(Error::DegenerateGrid("no nodes".into()));
        }
        let base = space.basepoint();
        let mut base_dist = Vec::with_capacity(nodes.len());
        for (p, &w) in nodes.iter().zip(&weights) {
            let d = space.distance(&base, p)?;
            if d > truncation_radius * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "node {:?} lies at distance {d} beyond truncation radius {truncation_radius}",
                    p.coords
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("weight {w} must be positive")));
            }
            base_dist.push(d);
        }
        Ok(SampledDomain { space, nodes, weights, truncation_radius, resolution, cell_diameter, layout, base_dist })
    }

    /// Uniform grid on a segment of the `x` axis (the one-dimensional sub-case).
    pub fn line(step: f64, half_length: f64) -> Result<Self> {
        positive("step", step)?;
        positive("half_length", half_length)?;
        let k = (half_length / step + 1e-9).floor() as i64;
        let nodes: Vec<Point> = (-k..=k).map(|i| Point::euclidean(i as f64 * step, 0.0)).collect();
        let weights = vec![step; nodes.len()];
        Self::from_parts(MetricMeasureSpace::euclidean(), nodes, weights, half_length, step, step, GridLayout::Lattice { step })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `d(x_i, e)` for every node.
    pub fn base_distances(&self) -> &[f64] {
        &self.base_dist
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(&self.nodes[i], &self.nodes[j])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nodes with `d(x, e) ≥ truncation_radius − band`.
    pub fn boundary_band(&self, band: f64) -> Result<Vec<usize>> {
        if !(band > 0.0 && band < self.truncation_radius) {
            return Err(Error::EmptyBand(format!(
                "band width {band} must lie in (0, {})",
                self.truncation_radius
            )));
        }
        let inner = self.truncation_radius - band;
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.base_dist[i] >= inner).collect();
        if idx.is_empty() {
            return Err(Error::EmptyBand(format!("no node at distance ≥ {inner}")));
        }
        Ok(idx)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Step of the `b/a` coordinate on the affine grid: a multiple of 1/2 or a unit fraction of it,
/// so that Haar breakpoints `a(b/a ± 1/2)` coincide within a scale level.
pub fn affine_shift_step(resolution: f64) -> f64 {
    if resolution >= 0.5 {
        ((2.0 * resolution).round() / 2.0).max(0.5)
    } else {
        0.5 / (0.5 / resolution).ceil()
    }
}

pub fn sample_grid(space: &MetricMeasureSpace, resolution: f64, truncation_radius: f64) -> Result<SampledDomain> {
    positive("resolution", resolution)?;
    positive("truncation_radius", truncation_radius)?;
    let (h, r) = (resolution, truncation_radius);
    match space.kind {
        SpaceKind::Euclidean2D => {
            let k = (r / h + 1e-9).floor() as i64;
            let mut nodes = Vec::new();
            for i in -k..=k {
                for j in -k..=k {
                    let (x, xi) = (i as f64 * h, j as f64 * h);
                    if x.hypot(xi) <= r * (1.0 + 1e-12) {
                        nodes.push(Point::euclidean(x, xi));
                    }
                }
            }
            let weights = vec![h * h; nodes.len()];
            if nodes.is_empty() {
                return Err(Error::DegenerateGrid("lattice has no node inside the radius".into()));
            }
            SampledDomain::from_parts(*space, nodes, weights, r, h, h * 2f64.sqrt(), GridLayout::Lattice { step: h })
        }
        SpaceKind::AffineGroup => affine_grid(space, h, affine_shift_step(h), r),
        SpaceKind::BergmanDisc => {
            let rings = (r / h + 1e-9).floor() as usize;
            if rings == 0 {
                return Err(Error::DegenerateGrid(format!("radial step {h} exceeds truncation radius {r}")));
            }
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            let mut sizes = Vec::with_capacity(rings);
            let mut cell_diam: f64 = 0.0;
            for i in 0..rings {
                let s = (i as f64 + 0.5) * h;
                let count = ((PI * (2.0 * s).sinh() / h).ceil() as usize).max(4);
                let annulus = ((i + 1) as f64 * h).sinh().powi(2) - (i as f64 * h).sinh().powi(2);
                let rho = s.tanh();
                for j in 0..count {
                    let theta = 2.0 * PI * (j as f64 + 0.5) / count as f64;
                    nodes.push(Point::disc(rho * theta.cos(), rho * theta.sin()));
                    weights.push(annulus / count as f64);
                }
                sizes.push(count);
                cell_diam = cell_diam.max(polar_cell_diameter(space, s, h, count));
            }
            SampledDomain::from_parts(*space, nodes, weights, r, h, cell_diam, GridLayout::Polar { radial_step: h, ring_sizes: sizes })
        }
    }
}

/// Affine grid with independent steps in `log a` and `b/a`.
pub fn affine_grid(space: &MetricMeasureSpace, log_step: f64, shift_step: f64, truncation_radius: f64) -> Result<SampledDomain> {
    positive("log_step", log_step)?;
    positive("shift_step", shift_step)?;
    positive("truncation_radius", truncation_radius)?;
    if space.kind != SpaceKind::AffineGroup {
        return Err(Error::SpaceMismatch { expected: SpaceKind::AffineGroup.name().into(), found: space.kind.name().into() });
    }
    let (h, hb, r) = (log_step, shift_step, truncation_radius);
    let base = space.basepoint();
    let kmax = (r / h + 1e-9).floor() as i64;
    let mut nodes = Vec::new();
    let mut cell_diam: f64 = 0.0;
    for k in -kmax..=kmax {
        let s = k as f64 * h;
        let a = s.exp();
        let t2 = (2.0 * a * (r.cosh() - 1.0) - (a - 1.0).powi(2)) / (a * a);
        if t2 < 0.0 {
            continue;
        }
        // Midpoints of the cells [j·hb, (j+1)·hb]; no column sits at b = 0, so nodes on
        // different scale levels are never exactly aligned.
        let jmax = (t2.sqrt() / hb + 0.5 + 1e-9).floor() as i64;
        for j in -jmax - 1..=jmax {
            let t = (j as f64 + 0.5) * hb;
            let p = Point::affine(a, a * t);
            if space.dist(&base, &p) <= r * (1.0 + 1e-12) {
                nodes.push(p);
                cell_diam = cell_diam.max(affine_cell_diameter(space, s, t, h, hb));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateGrid("affine grid has no node inside the radius".into()));
    }
    // λ is uniform in (log a, b/a): da db / a² = d(log a) d(b/a).
    let weights = vec![h * hb; nodes.len()];
    SampledDomain::from_parts(*space, nodes, weights, r, h, cell_diam, GridLayout::AffineLog { log_step: h, shift_step: hb })
}

fn max_pairwise(space: &MetricMeasureSpace, pts: &[Point]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.max(space.dist(&pts[i], &pts[j]));
        }
    }
    m
}

fn affine_cell_diameter(space: &MetricMeasureSpace, s: f64, t: f64, h: f64, hb: f64) -> f64 {
    let mut pts = Vec::with_capacity(9);
    for ds in [-0.5, 0.0, 0.5] {
        for dt in [-0.5, 0.0, 0.5] {
            let a = (s + ds * h).exp();
            pts.push(Point::affine(a, a * (t + dt * hb)));
        }
    }
    max_pairwise(space, &pts)
}

fn polar_cell_diameter(space: &MetricMeasureSpace, s: f64, h: f64, count: usize) -> f64 {
    let dtheta = 2.0 * PI / count as f64;
    let mut pts = Vec::with_capacity(9);
    for ds in [-0.5, 0.0, 0.5] {
        for dt in [-0.5, 0.0, 0.5] {
            let rho = (s + ds * h).max(0.0).tanh();
            let th = dt * dtheta;
            pts.push(Point::disc(rho * th.cos(), rho * th.sin()));
        }
    }
    max_pairwise(space, &pts)
}

/// Disjoint cells `F_j` with expansions `G_j = {x : d(x, F_j) ≤ r}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cover {
    pub r: f64,
    pub cells: Vec<Vec<usize>>,
    pub expansions: Vec<Vec<usize>>,
    pub overlap_n: usize,
    pub diameter_k: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub max_overlap: usize,
    pub max_cell_diameter: f64,
    pub is_partition: bool,
}

fn grid_key(domain: &SampledDomain, i: usize, r: f64, anchor: (f64, f64)) -> (i64, i64) {
    let p = &domain.nodes[i];
    let fl = |v: f64| (v + 1e-9).floor() as i64;
    match domain.space.kind {
        SpaceKind::Euclidean2D => (fl((p.x() - anchor.0) / r), fl((p.y() - anchor.1) / r)),
        SpaceKind::AffineGroup => {
            let k = fl((p.x().ln() - anchor.0) / r);
            let scale = (anchor.0 + k as f64 * r).exp();
            (k, fl(p.y() / (r * scale)))
        }
        SpaceKind::BergmanDisc => {
            let s = domain.base_distances()[i];
            let k = fl(s / r);
            if k == 0 {
                return (0, 0);
            }
            let sectors = (PI * (2.0 * (k + 1) as f64 * r).sinh() / r).ceil().max(1.0);
            let theta = p.y().atan2(p.x()).rem_euclid(2.0 * PI);
            (k, ((theta / (2.0 * PI) * sectors).floor() as i64).min(sectors as i64 - 1))
        }
    }
}

/// Diameter of the union of the quadrature cells of `cell`.
pub fn cell_diameter(domain: &SampledDomain, cell: &[usize]) -> f64 {
    let mut m: f64 = 0.0;
    for (a, &i) in cell.iter().enumerate() {
        for &j in &cell[a + 1..] {
            m = m.max(domain.dist(i, j));
        }
    }
    m + domain.cell_diameter
}

/// `G_j` for every cell, by exhaustive distance checks with a center-radius prefilter.
pub fn expansions(domain: &SampledDomain, cells: &[Vec<usize>], r: f64) -> Vec<Vec<usize>> {
    let tol = r * (1.0 + 1e-12);
    cells
        .iter()
        .map(|cell| {
            let c = cell[0];
            let spread = cell.iter().map(|&y| domain.dist(c, y)).fold(0.0, f64::max);
            (0..domain.len())
                .filter(|&x| {
                    if domain.dist(x, c) > tol + spread + 1e-12 {
                        return false;
                    }
                    cell.iter().any(|&y| domain.dist(x, y) <= tol)
                })
                .collect()
        })
        .collect()
}

fn max_overlap(n: usize, expansions: &[Vec<usize>]) -> usize {
    let mut count = vec![0usize; n];
    for g in expansions {
        for &x in g {
            if x < n {
                count[x] += 1;
            }
        }
    }
    count.into_iter().max().unwrap_or(0)
}

pub fn build_cover(domain: &SampledDomain, r: f64) -> Result<Cover> {
    positive("r", r)?;
    let cells: Vec<Vec<usize>> = if r >= 2.0 * domain.truncation_radius {
        vec![(0..domain.len()).collect()]
    } else {
        let anchor = match domain.space.kind {
            SpaceKind::Euclidean2D => (
                domain.nodes.iter().map(|p| p.x()).fold(f64::INFINITY, f64::min),
                domain.nodes.iter().map(|p| p.y()).fold(f64::INFINITY, f64::min),
            ),
            SpaceKind::AffineGroup => (domain.nodes.iter().map(|p| p.x().ln()).fold(f64::INFINITY, f64::min), 0.0),
            SpaceKind::BergmanDisc => (0.0, 0.0),
        };
        let mut blocks: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for i in 0..domain.len() {
            blocks.entry(grid_key(domain, i, r, anchor)).or_default().push(i);
        }
        blocks.into_values().collect()
    };
    let expansions = expansions(domain, &cells, r);
    let overlap_n = max_overlap(domain.len(), &expansions);
    let diameter_k = cells.iter().map(|c| cell_diameter(domain, c)).fold(0.0, f64::max) / r;
    let warning = (r < domain.resolution).then(|| {
        format!("cover radius {r} is below the grid resolution {}; cells are single nodes", domain.resolution)
    });
    Ok(Cover { r, cells, expansions, overlap_n, diameter_k, warning })
}

pub fn verify_cover(cover: &Cover, domain: &SampledDomain) -> CoverCheck {
    let n = domain.len();
    let mut seen = vec![0usize; n];
    let mut in_range = true;
    for cell in &cover.cells {
        for &i in cell {
            if i < n {
                seen[i] += 1;
            } else {
                in_range = false;
            }
        }
    }
    let is_partition = in_range && seen.iter().all(|&c| c == 1) && cover.cells.iter().all(|c| !c.is_empty());
    let valid: Vec<Vec<usize>> = cover
        .cells
        .iter()
        .map(|c| c.iter().copied().filter(|&i| i < n).collect::<Vec<_>>())
        .filter(|c: &Vec<usize>| !c.is_empty())
        .collect();
    let exp = expansions(domain, &valid, cover.r);
    CoverCheck {
        max_overlap: max_overlap(n, &exp),
        max_cell_diameter: valid.iter().map(|c| cell_diameter(domain, c)).fold(0.0, f64::max),
        is_partition,
    }
}

/// `D_r = max_x Σ_{d(x,y) ≤ r} w_y`.
pub fn ball_measure_sup(domain: &SampledDomain, r: f64) -> f64 {
    let tol = r * (1.0 + 1e-12);
    (0..domain.len())
        .map(|x| (0..domain.len()).filter(|&y| domain.dist(x, y) <= tol).map(|y| domain.weights[y]).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_step_is_half_compatible() {
        assert_eq!(affine_shift_step(0.25), 0.25);
        assert_eq!(affine_shift_step(0.35), 0.25);
        assert_eq!(affine_shift_step(0.7), 0.5);
        assert_eq!(affine_shift_step(1.0), 1.0);
    }

    #[test]
    fn polar_grid_stays_inside() {
        let d = sample_grid(&MetricMeasureSpace::disc(), 0.5, 2.0).unwrap();
        assert!(d.base_distances().iter().all(|&s| s <= 2.0));
        assert!(d.total_weight() <= 2f64.sinh().powi(2) * (1.0 + 1e-12));
    }
}
