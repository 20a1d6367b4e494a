//! Frame families, their finite realizations, and frame-operator machinery.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, SampledDomain, SpaceKind};
use crate::linalg::{self, adjoint, CMat, CVec};
use crate::{Error, Result, C64};

/// Midpoint samples `t_k = t0 + (k + ½)·dt`, `k < len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn t(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.dt
    }

    /// Grid resolving Gaussian atoms with `|x| ≤ x_max`, `|ξ| ≤ xi_max` to near machine precision.
    pub fn for_gabor(x_max: f64, xi_max: f64) -> Self {
        let half = x_max + 6.5;
        let rate = (2.0 * xi_max + 3.0).ceil();
        let dt = 1.0 / rate;
        let len = (2.0 * half / dt).ceil() as usize;
        TimeGrid { t0: -0.5 * len as f64 * dt, dt, len }
    }
}

/// Piecewise-constant realization space: orthonormal indicators of the intervals between breaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub breaks: Vec<f64>,
}

impl Partition {
    pub fn from_breaks(mut breaks: Vec<f64>) -> Self {
        breaks.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(breaks.len());
        for b in breaks {
            match out.last() {
                Some(&l) if (b - l).abs() <= 1e-13 * l.abs().max(b.abs()).max(1e-300) => {}
                _ => out.push(b),
            }
        }
        Partition { breaks: out }
    }

    pub fn dim(&self) -> usize {
        self.breaks.len().saturating_sub(1)
    }

    /// Coefficients of a piecewise-constant function given as `(lo, hi, value)` pieces.
    fn project(&self, pieces: &[(f64, f64, f64)]) -> CVec {
        let mut v = CVec::zeros(self.dim());
        for &(lo, hi, val) in pieces {
            let start = self.breaks.partition_point(|&b| b <= lo).saturating_sub(1);
            for k in start..self.dim() {
                let (a, b) = (self.breaks[k], self.breaks[k + 1]);
                if a >= hi {
                    break;
                }
                let ov = overlap(lo, hi, a, b);
                if ov > 0.0 {
                    v[k] += C64::new(val * ov / (b - a).sqrt(), 0.0);
                }
            }
        }
        v
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Centered Haar atom `a^{-1/2} h((t − b)/a)`: `+a^{-1/2}` on `[b − a/2, b)`, `−a^{-1/2}` on `[b, b + a/2)`.
fn haar_pieces(p: &Point) -> [(f64, f64, f64); 2] {
    let (a, b) = (p.x(), p.y());
    let amp = 1.0 / a.sqrt();
    [(b - 0.5 * a, b, amp), (b, b + 0.5 * a, -amp)]
}

pub fn haar_inner(p: &Point, q: &Point) -> f64 {
    let (fp, fq) = (haar_pieces(p), haar_pieces(q));
    let mut s = 0.0;
    for &(a0, a1, u) in &fp {
        for &(b0, b1, v) in &fq {
            let ov = overlap(a0, a1, b0, b1);
            if ov > 0.0 {
                s += u * v * ov;
            }
        }
    }
    s
}

pub fn gaussian_window(t: f64) -> f64 {
    PI.powf(-0.25) * (-0.5 * t * t).exp()
}

/// `⟨M_{ξ₁}T_{x₁}ψ, M_{ξ₂}T_{x₂}ψ⟩` for the unit-norm Gaussian window.
pub fn gabor_inner(p: &Point, q: &Point) -> C64 {
    let (x1, s1) = (p.x(), p.y());
    let (x2, s2) = (q.x(), q.y());
    let mag = (-(x1 - x2).powi(2) / 4.0 - PI * PI * (s1 - s2).powi(2)).exp();
    C64::from_polar(mag, PI * (s1 - s2) * (x1 + x2))
}

/// Normalized reproducing kernel inner product `⟨k_z, k_w⟩ = (1−|z|²)(1−|w|²)/(1−z̄w)²`.
pub fn bergman_inner(p: &Point, q: &Point) -> C64 {
    let z = C64::new(p.x(), p.y());
    let w = C64::new(q.x(), q.y());
    let d = C64::new(1.0, 0.0) - z.conj() * w;
    C64::new((1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()), 0.0) / (d * d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FrameFamily {
    GaborGaussian { grid: TimeGrid },
    HaarWavelet { partition: Partition },
    BergmanKernel { degree_cap: usize },
    /// Standard basis vectors indexed by the integer part of the first coordinate.
    OrthonormalTest { dim: usize },
}

impl FrameFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FrameFamily::GaborGaussian { .. } => "gabor-gaussian",
            FrameFamily::HaarWavelet { .. } => "haar-wavelet",
            FrameFamily::BergmanKernel { .. } => "bergman-kernel",
            FrameFamily::OrthonormalTest { .. } => "orthonormal-test",
        }
    }

    pub fn space(&self) -> SpaceKind {
        match self {
            FrameFamily::GaborGaussian { .. } | FrameFamily::OrthonormalTest { .. } => SpaceKind::Euclidean2D,
            FrameFamily::HaarWavelet { .. } => SpaceKind::AffineGroup,
            FrameFamily::BergmanKernel { .. } => SpaceKind::BergmanDisc,
        }
    }

    pub fn realization_dim(&self) -> usize {
        match self {
            FrameFamily::GaborGaussian { grid } => grid.len,
            FrameFamily::HaarWavelet { partition } => partition.dim(),
            FrameFamily::BergmanKernel { degree_cap } => degree_cap + 1,
            FrameFamily::OrthonormalTest { dim } => *dim,
        }
    }

    /// `⟨f_p, f_q⟩` in closed form.
    pub fn pair_inner(&self, p: &Point, q: &Point) -> C64 {
        match self {
            FrameFamily::GaborGaussian { .. } => gabor_inner(p, q),
            FrameFamily::HaarWavelet { .. } => C64::new(haar_inner(p, q), 0.0),
            FrameFamily::BergmanKernel { .. } => bergman_inner(p, q),
            FrameFamily::OrthonormalTest { .. } => {
                let same = p.x().round() == q.x().round();
                C64::new(if same { 1.0 } else { 0.0 }, 0.0)
            }
        }
    }

    /// Coordinates of `f_p` in the realization space.
    pub fn realize(&self, p: &Point) -> CVec {
        match self {
            FrameFamily::GaborGaussian { grid } => {
                let sq = grid.dt.sqrt();
                (0..grid.len)
                    .map(|k| {
                        let t = grid.t(k);
                        C64::from_polar(sq * gaussian_window(t - p.x()), 2.0 * PI * p.y() * t)
                    })
                    .collect()
            }
            FrameFamily::HaarWavelet { partition } => partition.project(&haar_pieces(p)),
            FrameFamily::BergmanKernel { degree_cap } => {
                let zbar = C64::new(p.x(), -p.y());
                let scale = 1.0 - zbar.norm_sqr();
                let mut pow = C64::new(1.0, 0.0);
                let mut v = CVec::zeros(degree_cap + 1);
                for n in 0..=*degree_cap {
                    v[n] = pow * ((n as f64 + 1.0).sqrt() * scale);
                    pow *= zbar;
                }
                v
            }
            FrameFamily::OrthonormalTest { dim } => {
                let mut v = CVec::zeros(*dim);
                let k = p.x().round();
                if k >= 0.0 && (k as usize) < *dim {
                    v[k as usize] = C64::new(1.0, 0.0);
                }
                v
            }
        }
    }
}

/// A sampled frame: nodes with quadrature weights plus realized atoms (one column per node).
#[derive(Clone, Debug)]
pub struct SampledFrame {
    pub domain: SampledDomain,
    pub family: FrameFamily,
    /// Global scalar multiplying every atom.
    pub scale: f64,
    atoms: CMat,
    gram: OnceLock<CMat>,
    /// Orthonormal basis `Q` of the atom span when the realization has been compressed.
    span: Option<Arc<CMat>>,
}

impl SampledFrame {
    pub fn new(domain: SampledDomain, family: FrameFamily) -> Result<Self> {
        if domain.space.kind != family.space() {
            return Err(Error::SpaceMismatch { expected: family.space().name().into(), found: domain.space.kind.name().into() });
        }
        let m = family.realization_dim();
        let mut atoms = CMat::zeros((m, domain.len()));
        for (i, p) in domain.nodes.iter().enumerate() {
            atoms.column_mut(i).assign(&family.realize(p));
        }
        Ok(SampledFrame { domain, family, scale: 1.0, atoms, gram: OnceLock::new(), span: None })
    }

    /// The same frame with every atom multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        SampledFrame {
            domain: self.domain.clone(),
            family: self.family.clone(),
            scale: self.scale * factor,
            atoms: self.atoms.mapv(|z| z * factor),
            gram: OnceLock::new(),
            span: self.span.clone(),
        }
    }

    /// Re-expresses the realization in an orthonormal basis of the atom span.
    ///
    /// Inner products between atoms are preserved; the dimension drops to the numerical
    /// rank of the atom matrix. Independent atoms go through a QR factorization, otherwise
    /// eigenvalues of `ΦᴴΦ` below `1e-12` of the largest are dropped.
    pub fn compressed(&self) -> Result<Self> {
        let q_local = match self.independent_span()? {
            Some(q) => q,
            None => {
                let g = linalg::matmul(&adjoint(&self.atoms.view()), &self.atoms);
                let (vals, vecs) = linalg::hermitian_eig(&g)?;
                let top = vals.iter().copied().fold(0.0, f64::max);
                let keep: Vec<usize> = (0..vals.len()).rev().filter(|&i| vals[i] > 1e-12 * top).collect();
                let v = vecs.select(Axis(1), &keep);
                let inv_sqrt: Vec<f64> = keep.iter().map(|&i| 1.0 / vals[i].sqrt()).collect();
                // Q = Φ V Λ^{-1/2}
                linalg::scale_columns(&linalg::matmul(&self.atoms, &v), &inv_sqrt)
            }
        };
        let q = match &self.span {
            Some(outer) => linalg::matmul(outer, &q_local),
            None => q_local.clone(),
        };
        let atoms = linalg::matmul(&adjoint(&q_local.view()), &self.atoms);
        Ok(SampledFrame {
            domain: self.domain.clone(),
            family: self.family.clone(),
            scale: self.scale,
            atoms,
            gram: OnceLock::new(),
            span: Some(Arc::new(q)),
        })
    }

    /// Householder `Q` of the atom matrix when the atoms are clearly independent.
    fn independent_span(&self) -> Result<Option<CMat>> {
        if self.atoms.nrows() < self.atoms.ncols() {
            return Ok(None);
        }
        let (q, diag) = linalg::thin_qr(&self.atoms)?;
        let top = diag.iter().copied().fold(0.0, f64::max);
        let low = diag.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((low > 1e-6 * top).then_some(q))
    }

    pub fn is_compressed(&self) -> bool {
        self.span.is_some()
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Dimension of the family's own realization space, before any compression.
    pub fn native_dim(&self) -> usize {
        self.family.realization_dim()
    }

    /// Realized atoms, one column per node.
    pub fn atoms(&self) -> &CMat {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.domain.weights
    }

    pub fn pair_inner(&self, p: &Point, q: &Point) -> C64 {
        self.family.pair_inner(p, q) * (self.scale * self.scale)
    }

    pub fn pair_inner_nodes(&self, i: usize, j: usize) -> C64 {
        self.pair_inner(&self.domain.nodes[i], &self.domain.nodes[j])
    }

    /// `f_p` in this frame's realization coordinates (orthogonally projected when compressed).
    pub fn realize(&self, p: &Point) -> CVec {
        let v = self.family.realize(p).mapv(|z| z * self.scale);
        match &self.span {
            Some(q) => adjoint(&q.view()).dot(&v),
            None => v,
        }
    }

    /// `G[x, y] = ⟨f_y, f_x⟩` from the closed form, computed once.
    pub fn gram(&self) -> &CMat {
        self.gram.get_or_init(|| {
            let n = self.len();
            let mut g = CMat::zeros((n, n));
            for x in 0..n {
                for y in 0..=x {
                    let v = self.pair_inner_nodes(y, x);
                    g[[x, y]] = v;
                    g[[y, x]] = v.conj();
                }
            }
            g
        })
    }

    /// `(⟨f, f_x⟩)_x`.
    pub fn analysis(&self, f: &CVec) -> Result<CVec> {
        self.check_dim(f.len())?;
        Ok(adjoint(&self.atoms.view()).dot(f))
    }

    /// `Σ_x w_x a(x) f_x`.
    pub fn synthesis(&self, a: &CVec) -> Result<CVec> {
        if a.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: a.len() });
        }
        let wa: CVec = a.iter().zip(self.weights()).map(|(z, w)| z * *w).collect();
        Ok(self.atoms.dot(&wa))
    }

    /// `S = Σ_x w_x f_x ⟨·, f_x⟩`.
    pub fn frame_operator(&self) -> CMat {
        let phi_w = linalg::scale_columns(&self.atoms, self.weights());
        linalg::matmul(&phi_w, &adjoint(&self.atoms.view()))
    }

    /// Largest deviation between realized and closed-form inner products over the given node pairs.
    pub fn consistency_error(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs
            .iter()
            .map(|&(i, j)| {
                let r = linalg::inner(&self.atoms.column(i).to_owned(), &self.atoms.column(j).to_owned());
                (r - self.pair_inner_nodes(i, j)).norm()
            })
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }
}

fn require_space(domain: &SampledDomain, kind: SpaceKind) -> Result<()> {
    if domain.space.kind != kind {
        return Err(Error::SpaceMismatch { expected: kind.name().into(), found: domain.space.kind.name().into() });
    }
    Ok(())
}

pub fn gabor_gaussian_frame(domain: SampledDomain) -> Result<SampledFrame> {
    require_space(&domain, SpaceKind::Euclidean2D)?;
    let x_max = domain.nodes.iter().map(|p| p.x().abs()).fold(0.0, f64::max);
    let xi_max = domain.nodes.iter().map(|p| p.y().abs()).fold(0.0, f64::max);
    gabor_gaussian_frame_on(domain, TimeGrid::for_gabor(x_max, xi_max))
}

pub fn gabor_gaussian_frame_on(domain: SampledDomain, grid: TimeGrid) -> Result<SampledFrame> {
    require_space(&domain, SpaceKind::Euclidean2D)?;
    SampledFrame::new(domain, FrameFamily::GaborGaussian { grid })
}

/// Haar frame realized exactly on the partition generated by all node breakpoints.
pub fn haar_wavelet_frame(domain: SampledDomain) -> Result<SampledFrame> {
    require_space(&domain, SpaceKind::AffineGroup)?;
    let mut breaks = Vec::with_capacity(3 * domain.len());
    for p in &domain.nodes {
        let (a, b) = (p.x(), p.y());
        breaks.extend([b - 0.5 * a, b, b + 0.5 * a]);
    }
    SampledFrame::new(domain, FrameFamily::HaarWavelet { partition: Partition::from_breaks(breaks) })
}

/// Energy of `k_z` beyond degree `cap`: `q^{N+1}((N+2) − (N+1)q)` with `q = |z|²`, `N = cap`.
pub fn bergman_tail(q: f64, cap: usize) -> f64 {
    let n = cap as f64;
    q.powf(n + 1.0) * ((n + 2.0) - (n + 1.0) * q)
}

/// Smallest degree cap whose realization error stays below `tol` on the ball of Bergman radius `radius`.
pub fn bergman_degree_for(radius: f64, tol: f64) -> usize {
    let q = radius.tanh().powi(2);
    let mut cap = 1;
    while bergman_tail(q, cap) > tol {
        cap += 1;
    }
    cap
}

pub const BERGMAN_TOLERANCE: f64 = 1e-6;

pub fn bergman_disc_frame(domain: SampledDomain, degree_cap: usize) -> Result<SampledFrame> {
    require_space(&domain, SpaceKind::BergmanDisc)?;
    if degree_cap < 1 {
        return Err(Error::InvalidParameter("degree_cap must be at least 1".into()));
    }
    let q = domain.nodes.iter().map(|p| p.x() * p.x() + p.y() * p.y()).fold(0.0, f64::max);
    let frame = SampledFrame::new(domain, FrameFamily::BergmanKernel { degree_cap })?;
    let realized = frame.atoms.column(frame.argmax_radius()).iter().map(|z| z.norm_sqr()).sum::<f64>();
    let error = (1.0 - realized).abs().max(bergman_tail(q, degree_cap));
    if error > BERGMAN_TOLERANCE {
        return Err(Error::DegreeCapTooSmall { cap: degree_cap, error, tolerance: BERGMAN_TOLERANCE });
    }
    Ok(frame)
}

impl SampledFrame {
    fn argmax_radius(&self) -> usize {
        let d = self.domain.base_distances();
        (0..d.len()).max_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap_or(0)
    }
}

/// `dim` orthonormal vectors indexed by the nodes `(k, 0)` with unit weights.
pub fn orthonormal_test_frame(dim: usize) -> Result<SampledFrame> {
    use crate::geometry::{GridLayout, MetricMeasureSpace};
    let nodes: Vec<Point> = (0..dim).map(|k| Point::euclidean(k as f64, 0.0)).collect();
    let domain = SampledDomain::from_parts(
        MetricMeasureSpace::euclidean(),
        nodes,
        vec![1.0; dim],
        dim.max(1) as f64,
        1.0,
        1.0,
        GridLayout::Custom,
    )?;
    SampledFrame::new(domain, FrameFamily::OrthonormalTest { dim })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub resolved_rank: usize,
}

/// Relative eigenvalue cutoff defining the numerically resolved span.
pub const RANK_CUTOFF: f64 = 1e-8;

fn bounds_from(vals: &[f64]) -> Result<FrameBounds> {
    let upper = vals.iter().copied().fold(0.0, f64::max);
    if upper <= 0.0 {
        return Err(Error::DegenerateFrame(upper));
    }
    let resolved: Vec<f64> = vals.iter().copied().filter(|&v| v >= RANK_CUTOFF * upper).collect();
    let lower = resolved.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FrameBounds { lower, upper, resolved_rank: resolved.len() })
}

/// Extreme eigenvalues of `S` on its resolved span.
pub fn frame_bounds(frame: &SampledFrame) -> Result<FrameBounds> {
    bounds_from(&linalg::hermitian_eigvals(&frame.frame_operator())?)
}

/// Extreme eigenvalues of `S` compressed to the span of the orthonormal columns of `basis`.
pub fn frame_bounds_on(frame: &SampledFrame, basis: &CMat) -> Result<FrameBounds> {
    if basis.nrows() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: basis.nrows() });
    }
    let b = linalg::matmul(&adjoint(&frame.atoms.view()), basis);
    let bw = linalg::scale_columns(&adjoint(&b.view()), frame.weights());
    bounds_from(&linalg::hermitian_eigvals(&linalg::matmul(&bw, &b))?)
}

/// Orthonormal Hermite functions `h_0 … h_{count−1}` sampled on a time grid.
pub fn hermite_basis(grid: &TimeGrid, count: usize) -> CMat {
    let mut out = CMat::zeros((grid.len, count));
    let sq = grid.dt.sqrt();
    for k in 0..grid.len {
        let t = grid.t(k);
        let (mut prev, mut cur) = (0.0, PI.powf(-0.25) * (-0.5 * t * t).exp());
        for n in 0..count {
            out[[k, n]] = C64::new(sq * cur, 0.0);
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * t * cur - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    out
}

/// Orthonormal test vectors well inside the truncated domain.
///
/// Gabor: low Hermite functions. Bergman: low monomials. Haar and the test family: the
/// span of atoms within `radius` of the basepoint.
pub fn interior_test_subspace(frame: &SampledFrame, count: usize, radius: f64) -> Result<CMat> {
    match &frame.family {
        FrameFamily::GaborGaussian { grid } => linalg::orthonormal_span(&hermite_basis(grid, count), 1e-12),
        FrameFamily::BergmanKernel { degree_cap } => {
            let k = count.min(degree_cap + 1);
            let mut m = CMat::zeros((degree_cap + 1, k));
            for i in 0..k {
                m[[i, i]] = C64::new(1.0, 0.0);
            }
            Ok(m)
        }
        _ => {
            let d = frame.domain.base_distances();
            let idx: Vec<usize> = (0..frame.len()).filter(|&i| d[i] <= radius).collect();
            if idx.is_empty() {
                return Err(Error::InvalidParameter(format!("no node within {radius} of the basepoint")));
            }
            let sel = frame.atoms.select(Axis(1), &idx);
            let span = linalg::orthonormal_span(&sel, 1e-10)?;
            let k = count.min(span.ncols());
            Ok(span.slice(ndarray::s![.., ..k]).to_owned())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DualProvenance {
    /// `f̃_x = f_x / A` for a family that is tight with bound `A` in the continuum.
    Analytic { frame_bound: f64 },
    /// `f̃_x = S⁺ f_x` with eigenvalues below `cutoff·C` dropped.
    Regularized { cutoff: f64, bounds: FrameBounds },
}

#[derive(Clone, Debug)]
pub struct DualFrame {
    pub vectors: CMat,
    pub provenance: DualProvenance,
}

impl DualFrame {
    pub fn analytic(frame: &SampledFrame, frame_bound: f64) -> Result<Self> {
        if !(frame_bound > 0.0) {
            return Err(Error::InvalidParameter(format!("frame bound {frame_bound} must be positive")));
        }
        Ok(DualFrame {
            vectors: frame.atoms.mapv(|z| z / frame_bound),
            provenance: DualProvenance::Analytic { frame_bound },
        })
    }

    /// The continuum frame bound of the family: 1 for Gabor/Bergman/test, `ln 2` for the unit-norm Haar wavelet.
    pub fn natural(frame: &SampledFrame) -> Result<Self> {
        let bound = match frame.family {
            FrameFamily::HaarWavelet { .. } => std::f64::consts::LN_2,
            _ => 1.0,
        } * frame.scale
            * frame.scale;
        Self::analytic(frame, bound)
    }

    pub fn analytic_bound(&self) -> Option<f64> {
        match self.provenance {
            DualProvenance::Analytic { frame_bound } => Some(frame_bound),
            DualProvenance::Regularized { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualOptions {
    pub cutoff: f64,
    /// Refuse when `c/C` falls below this ratio.
    pub min_condition: Option<f64>,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { cutoff: RANK_CUTOFF, min_condition: None }
    }
}

/// `f̃_x = S⁺ f_x` with a spectrally regularized pseudo-inverse.
pub fn canonical_dual(frame: &SampledFrame, opts: DualOptions) -> Result<DualFrame> {
    let (vals, vecs) = linalg::hermitian_eig(&frame.frame_operator())?;
    let bounds = bounds_from(&vals)?;
    if let Some(t) = opts.min_condition {
        if bounds.lower / bounds.upper < t {
            return Err(Error::IllConditioned { lower: bounds.lower, upper: bounds.upper, threshold: t });
        }
    }
    let inv: Vec<f64> = vals.iter().map(|&v| if v >= opts.cutoff * bounds.upper { 1.0 / v } else { 0.0 }).collect();
    // S⁺ Φ = V diag(inv) Vᴴ Φ
    let vh_phi = linalg::matmul(&adjoint(&vecs.view()), &frame.atoms);
    let mut scaled = vh_phi;
    for (mut row, &s) in scaled.axis_iter_mut(Axis(0)).zip(&inv) {
        row.mapv_inplace(|z| z * s);
    }
    Ok(DualFrame {
        vectors: linalg::matmul(&vecs, &scaled),
        provenance: DualProvenance::Regularized { cutoff: opts.cutoff, bounds },
    })
}

/// `Σ_x w_x ⟨f, f_x⟩ f̃_x`.
pub fn reconstruct(frame: &SampledFrame, dual: &DualFrame, f: &CVec) -> Result<CVec> {
    let coeff = frame.analysis(f)?;
    let wa: Array1<C64> = coeff.iter().zip(frame.weights()).map(|(z, w)| z * *w).collect();
    Ok(dual.vectors.dot(&wa))
}

/// Projector onto the resolved span of `S`.
pub fn resolved_projector(frame: &SampledFrame) -> Result<CMat> {
    let (vals, vecs) = linalg::hermitian_eig(&frame.frame_operator())?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= RANK_CUTOFF * top).collect();
    let v: Array2<C64> = vecs.select(Axis(1), &keep);
    Ok(linalg::matmul(&v, &adjoint(&v.view())))
}
