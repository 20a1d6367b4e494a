//! Schur margins, tail profiles and the localization function ρ(ε).

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::frames::{DualFrame, SampledFrame};
use crate::geometry::{Point, SampledDomain, SpaceKind};
use crate::linalg::{adjoint, CMat};
use crate::{Error, Result};

/// Positive weight `p` of the localization conditions.
#[derive(Clone)]
pub enum Weight {
    Constant,
    /// `p(a, b) = a^{1/2 − δ}` on the affine group.
    PowerAffine(f64),
    /// `p(z) = (1 − |z|²)^β` on the disc.
    PowerDisc(f64),
    Custom(String, Arc<dyn Fn(&Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Constant => write!(f, "Constant"),
            Weight::PowerAffine(d) => write!(f, "PowerAffine({d})"),
            Weight::PowerDisc(b) => write!(f, "PowerDisc({b})"),
            Weight::Custom(name, _) => write!(f, "Custom({name})"),
        }
    }
}

impl Weight {
    pub fn custom(name: &str, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Weight::Custom(name.to_string(), Arc::new(f))
    }

    pub fn label(&self) -> String {
        match self {
            Weight::Constant => "constant".into(),
            Weight::PowerAffine(d) => format!("affine-power(delta={d})"),
            Weight::PowerDisc(b) => format!("disc-power(beta={b})"),
            Weight::Custom(name, _) => name.clone(),
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Weight::Constant => 1.0,
            Weight::PowerAffine(delta) => p.x().powf(0.5 - delta),
            Weight::PowerDisc(beta) => (1.0 - p.x() * p.x() - p.y() * p.y()).powf(*beta),
            Weight::Custom(_, f) => f(p),
        }
    }

    /// Values on every node, rejecting nonpositive or non-finite values.
    pub fn values(&self, domain: &SampledDomain) -> Result<Vec<f64>> {
        if let Weight::PowerAffine(_) = self {
            if domain.space.kind != SpaceKind::AffineGroup {
                return Err(Error::InvalidParameter("affine power weight on a non-affine domain".into()));
            }
        }
        domain
            .nodes
            .iter()
            .map(|p| {
                let v = self.eval(p);
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidParameter(format!("weight {} is {v} at {:?}", self.label(), p.coords)))
                }
            })
            .collect()
    }
}

/// `K[x, y] = |⟨F_x, G_y⟩|` over the nodes of one domain.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub values: Array2<f64>,
    pub provenance: String,
}

impl KernelMatrix {
    pub fn from_fn(n: usize, provenance: &str, f: impl Fn(usize, usize) -> f64) -> Self {
        KernelMatrix { values: Array2::from_shape_fn((n, n), |(x, y)| f(x, y)), provenance: provenance.into() }
    }

    /// `|⟨F_x, G_y⟩|` for realized families given as columns.
    pub fn from_vectors(f: &CMat, g: &CMat, provenance: &str) -> Result<Self> {
        if f.nrows() != g.nrows() || f.ncols() != g.ncols() {
            return Err(Error::DimensionMismatch { expected: g.ncols(), found: f.ncols() });
        }
        // P[y, x] = G_yᴴ F_x = ⟨F_x, G_y⟩
        let p = crate::linalg::matmul(&adjoint(&g.view()), f);
        Ok(KernelMatrix { values: p.t().mapv(|z| z.norm()), provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|x| (0..x).all(|y| (self.values[[x, y]] - self.values[[y, x]]).abs() <= tol))
    }
}

/// `|⟨f̃_x, f_y⟩|`: closed form when the dual is analytic, through the realization otherwise.
pub fn kernel_matrix(frame: &SampledFrame, dual: &DualFrame) -> Result<KernelMatrix> {
    match dual.analytic_bound() {
        Some(a) => {
            let g = frame.gram();
            Ok(KernelMatrix::from_fn(frame.len(), frame.family.name(), |x, y| g[[y, x]].norm() / a))
        }
        None => KernelMatrix::from_vectors(&dual.vectors, frame.atoms(), frame.family.name()),
    }
}

/// Frame kernel `|⟨f_x, f_y⟩|` from the closed form.
pub fn frame_self_kernel(frame: &SampledFrame) -> KernelMatrix {
    let g = frame.gram();
    KernelMatrix::from_fn(frame.len(), frame.family.name(), |x, y| g[[y, x]].norm())
}

/// Majorant `∫ K₁(y, x) K₂(x, z) dλ(x)` of the kernel of a product.
pub fn compose_kernels(k1: &KernelMatrix, k2: &KernelMatrix, weights: &[f64]) -> Result<KernelMatrix> {
    if k1.len() != k2.len() || weights.len() != k1.len() {
        return Err(Error::DimensionMismatch { expected: k1.len(), found: k2.len() });
    }
    let mut scaled = k1.values.clone();
    for (mut col, &w) in scaled.columns_mut().into_iter().zip(weights) {
        col *= w;
    }
    Ok(KernelMatrix { values: scaled.dot(&k2.values), provenance: format!("({})*({})", k1.provenance, k2.provenance) })
}

/// `(sup_x (1/p(x)) Σ_y w_y K(x,y) p(y), sup_y (1/p(y)) Σ_x w_x K(x,y) p(x))`.
pub fn schur_margins(k: &KernelMatrix, weights: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    let n = k.len();
    if weights.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.len().min(p.len()) });
    }
    let wp: Vec<f64> = weights.iter().zip(p).map(|(w, q)| w * q).collect();
    let mut row: f64 = 0.0;
    let mut col_sums = vec![0.0; n];
    for x in 0..n {
        let r = k.values.row(x);
        let mut s = 0.0;
        for y in 0..n {
            s += r[y] * wp[y];
            col_sums[y] += r[y] * wp[x];
        }
        row = row.max(s / p[x]);
    }
    let col = (0..n).map(|y| col_sums[y] / p[y]).fold(0.0, f64::max);
    Ok((row, col))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub radius: f64,
    /// `sup_x (1/p(x)) Σ_{d(x,y) > R} w_y K(x,y) p(y)` over interior `x`; `None` if no interior node.
    pub row: Option<f64>,
    pub col: Option<f64>,
    pub interior_fraction: f64,
}

impl TailEntry {
    pub fn worst(&self) -> Option<f64> {
        Some(self.row?.max(self.col?))
    }
}

/// Radii `0, h, 2h, …` up to the truncation radius.
pub fn default_radii(domain: &SampledDomain) -> Vec<f64> {
    let h = domain.resolution;
    let k = (domain.truncation_radius / h + 1e-9).floor() as usize;
    (0..=k).map(|i| i as f64 * h).collect()
}

/// Tail masses outside `D(x, R)` for each `R`, with sups over nodes at distance ≥ R from the boundary.
pub fn tail_profile(k: &KernelMatrix, domain: &SampledDomain, p: &[f64], radii: &[f64]) -> Result<Vec<TailEntry>> {
    let n = domain.len();
    if k.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: k.len() });
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| r < 0.0) {
        return Err(Error::InvalidParameter("radii must be nonnegative and increasing".into()));
    }
    let nr = radii.len();
    let trunc = domain.truncation_radius;
    let base = domain.base_distances();
    let wp: Vec<f64> = domain.weights.iter().zip(p).map(|(w, q)| w * q).collect();
    // Per node, tail mass per radius bucket; suffix sums turn buckets into tails.
    let mut row_tail = vec![0.0; nr];
    let mut col_tail = vec![0.0; nr];
    let mut row_sup = vec![None::<f64>; nr];
    let mut col_sup = vec![None::<f64>; nr];
    let mut counts = vec![0usize; nr];
    for x in 0..n {
        let margin = trunc - base[x];
        // Interior for radius R iff margin ≥ R (up to rounding).
        let avail = radii.partition_point(|&r| r <= margin + 1e-9);
        if avail == 0 {
            continue;
        }
        row_tail.iter_mut().for_each(|v| *v = 0.0);
        col_tail.iter_mut().for_each(|v| *v = 0.0);
        for y in 0..n {
            let d = domain.dist(x, y);
            // number of radii strictly below d: y lies outside D(x, R) for those R
            let b = radii.partition_point(|&r| r < d - 1e-12 * d.max(1.0));
            if b == 0 {
                continue;
            }
            row_tail[b - 1] += k.values[[x, y]] * wp[y];
            col_tail[b - 1] += k.values[[y, x]] * wp[y];
        }
        let mut acc_r = 0.0;
        let mut acc_c = 0.0;
        for i in (0..nr).rev() {
            acc_r += row_tail[i];
            acc_c += col_tail[i];
            if i < avail {
                let r = acc_r / p[x];
                let c = acc_c / p[x];
                row_sup[i] = Some(row_sup[i].map_or(r, |v: f64| v.max(r)));
                col_sup[i] = Some(col_sup[i].map_or(c, |v: f64| v.max(c)));
                counts[i] += 1;
            }
        }
    }
    Ok(radii
        .iter()
        .enumerate()
        .map(|(i, &r)| TailEntry { radius: r, row: row_sup[i], col: col_sup[i], interior_fraction: counts[i] as f64 / n as f64 })
        .collect())
}

/// ρ(ε) bracketed by consecutive table radii; `high = None` marks "not reached within truncation".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoValue {
    pub epsilon: f64,
    pub low: f64,
    pub high: Option<f64>,
}

impl RhoValue {
    pub fn is_finite(&self) -> bool {
        self.high.is_some()
    }

    /// True when `r` strictly exceeds the bracket's upper end.
    pub fn admits(&self, r: f64) -> bool {
        self.high.is_some_and(|h| r > h)
    }
}

/// Smallest tabulated radius with both tails ≤ ε, by bisection over the monotone table.
pub fn rho(profile: &[TailEntry], epsilon: f64) -> Result<RhoValue> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let avail: Vec<&TailEntry> = profile.iter().filter(|e| e.worst().is_some()).collect();
    let ok = |e: &TailEntry| e.worst().is_some_and(|w| w <= epsilon);
    // Tables are nonincreasing, so the predicate is monotone in the index.
    let (mut lo, mut hi) = (0usize, avail.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(avail[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo == avail.len() {
        let last = avail.last().map_or(0.0, |e| e.radius);
        return Ok(RhoValue { epsilon, low: last, high: None });
    }
    let high = avail[lo].radius;
    let low = if lo == 0 { high } else { avail[lo - 1].radius };
    Ok(RhoValue { epsilon, low, high: Some(high) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub weight: String,
    pub schur_row_margin: f64,
    pub schur_col_margin: f64,
    pub tail_profile: Vec<TailEntry>,
    pub rho_table: Vec<RhoValue>,
}

impl LocalizationReport {
    pub fn rho(&self, epsilon: f64) -> Result<RhoValue> {
        rho(&self.tail_profile, epsilon)
    }

    /// Tail at the largest radius with a nonempty interior.
    pub fn last_tail(&self) -> Option<&TailEntry> {
        self.tail_profile.iter().rev().find(|e| e.worst().is_some())
    }
}

pub fn localization_report(
    k: &KernelMatrix,
    domain: &SampledDomain,
    weight: &Weight,
    radii: &[f64],
    epsilons: &[f64],
) -> Result<LocalizationReport> {
    let p = weight.values(domain)?;
    let (row, col) = schur_margins(k, &domain.weights, &p)?;
    let profile = tail_profile(k, domain, &p, radii)?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let rho_table = eps.iter().map(|&e| rho(&profile, e)).collect::<Result<Vec<_>>>()?;
    Ok(LocalizationReport { weight: weight.label(), schur_row_margin: row, schur_col_margin: col, tail_profile: profile, rho_table })
}

pub const DEFAULT_MARGIN_CAP: f64 = 10.0;
pub const DEFAULT_TAIL_FLOOR: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationVerdict {
    pub localized: bool,
    pub reasons: Vec<String>,
}

pub fn check_weak_localization(report: &LocalizationReport, margin_cap: f64, tail_floor: f64) -> LocalizationVerdict {
    let mut reasons = Vec::new();
    for (name, m) in [("row", report.schur_row_margin), ("column", report.schur_col_margin)] {
        if !(m <= margin_cap) {
            reasons.push(format!("{name} Schur margin {m:.6} exceeds cap {margin_cap}"));
        }
    }
    match report.last_tail() {
        Some(e) => {
            let t = e.worst().unwrap_or(f64::INFINITY);
            if !(t <= tail_floor) {
                reasons.push(format!("tail {t:.6} at radius {} exceeds floor {tail_floor}", e.radius));
            }
        }
        None => reasons.push("no tail radius has a nonempty interior".into()),
    }
    LocalizationVerdict { localized: reasons.is_empty(), reasons }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub m: f64,
    pub c: f64,
    /// `max (|⟨f_x, f_y⟩| − C e^{−M d(x,y)})` over the sampled pairs.
    pub max_violation: f64,
    /// `max (ln|⟨f_x, f_y⟩| − ln C + M d(x,y))`; positive iff some pair violates the bound.
    pub max_log_excess: f64,
    pub worst_pair: (Point, Point),
    pub worst_distance: f64,
    pub pairs_checked: usize,
}

impl PointwiseReport {
    pub fn violated(&self) -> bool {
        self.max_log_excess > 0.0
    }
}

/// Sweep of `(distance, |inner|)` samples against `C e^{−M d}`.
pub fn pointwise_sweep(samples: impl IntoIterator<Item = (Point, Point, f64, f64)>, m: f64, c: f64) -> PointwiseReport {
    let mut rep = PointwiseReport {
        m,
        c,
        max_violation: f64::NEG_INFINITY,
        max_log_excess: f64::NEG_INFINITY,
        worst_pair: (Point::euclidean(0.0, 0.0), Point::euclidean(0.0, 0.0)),
        worst_distance: 0.0,
        pairs_checked: 0,
    };
    for (p, q, d, mag) in samples {
        rep.pairs_checked += 1;
        rep.max_violation = rep.max_violation.max(mag - c * (-m * d).exp());
        if mag > 0.0 {
            let ex = mag.ln() - c.ln() + m * d;
            if ex > rep.max_log_excess {
                rep.max_log_excess = ex;
                rep.worst_pair = (p, q);
                rep.worst_distance = d;
            }
        }
    }
    rep
}

/// Checks `|⟨f_x, f_y⟩| ≤ C e^{−M d(x,y)}` on all node pairs and on a scale ladder
/// `(1, 0)` vs `(e^{−k}, 0)`, `k = 1 … ladder`.
pub fn pointwise_localization_check(frame: &SampledFrame, m: f64, c: f64, ladder: usize) -> Result<PointwiseReport> {
    let space = frame.domain.space;
    if space.kind != SpaceKind::AffineGroup {
        return Err(Error::SpaceMismatch { expected: SpaceKind::AffineGroup.name().into(), found: space.kind.name().into() });
    }
    let nodes = &frame.domain.nodes;
    let n = nodes.len();
    let pairs = (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| {
        let (p, q) = (nodes[i], nodes[j]);
        (p, q, space.dist(&p, &q), frame.pair_inner(&p, &q).norm())
    });
    let e = space.basepoint();
    let lad = (1..=ladder).map(|k| {
        let q = Point::affine((-(k as f64)).exp(), 0.0);
        (e, q, space.dist(&e, &q), frame.pair_inner(&e, &q).norm())
    });
    Ok(pointwise_sweep(pairs.chain(lad), m, c))
}
