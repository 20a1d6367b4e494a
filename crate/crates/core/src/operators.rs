//! Localized operators on a frame's realization space.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::disc;
use crate::frames::{DualFrame, FrameFamily, SampledFrame};
use crate::geometry::{ball_measure_sup, Cover, MetricMeasureSpace, Point, SampledDomain, SpaceKind};
use crate::linalg::{self, adjoint, CMat, CVec};
use crate::localization::{KernelMatrix, LocalizationVerdict, RhoValue};
use crate::{Error, Result, C64};

/// A sampled frame together with the dual used for analysis.
#[derive(Clone, Debug)]
pub struct FrameContext {
    pub frame: SampledFrame,
    pub dual: DualFrame,
}

impl FrameContext {
    pub fn new(frame: SampledFrame, dual: DualFrame) -> Result<Arc<Self>> {
        if dual.vectors.dim() != frame.atoms().dim() {
            return Err(Error::DimensionMismatch { expected: frame.len(), found: dual.vectors.ncols() });
        }
        Ok(Arc::new(FrameContext { frame, dual }))
    }

    /// Context with the family's continuum dual (`f̃ = f/A`).
    pub fn natural(frame: SampledFrame) -> Result<Arc<Self>> {
        let dual = DualFrame::natural(&frame)?;
        Self::new(frame, dual)
    }

    pub fn domain(&self) -> &SampledDomain {
        &self.frame.domain
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// True when the dual is the frame itself (Parseval in the continuum).
    pub fn is_parseval(&self) -> bool {
        self.dual.analytic_bound().is_some_and(|a| (a - 1.0).abs() < 1e-15)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolClass {
    BoundedOnly,
    CompactSupport,
    Lp { p: f64 },
    Radial,
}

/// Bounded function on the index space.
#[derive(Clone)]
pub struct Symbol {
    pub name: String,
    pub class: SymbolClass,
    eval: Arc<dyn Fn(&Point) -> C64 + Send + Sync>,
    /// Profile `u(|z|)` for radial disc symbols.
    radial: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    /// Radii in `[0, 1]` where the symbol may jump (used to split radial quadrature panels).
    pub breaks: Vec<f64>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({}, {:?})", self.name, self.class)
    }
}

impl Symbol {
    pub fn custom(name: &str, class: SymbolClass, f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> Self {
        Symbol { name: name.into(), class, eval: Arc::new(f), radial: None, breaks: Vec::new() }
    }

    pub fn real(name: &str, class: SymbolClass, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::custom(name, class, move |p| C64::new(f(p), 0.0))
    }

    /// Radial disc symbol `u(z) = profile(|z|)` with jumps at `breaks`.
    pub fn radial(name: &str, profile: impl Fn(f64) -> f64 + Send + Sync + 'static, breaks: Vec<f64>) -> Self {
        let profile = Arc::new(profile);
        let p2 = profile.clone();
        Symbol {
            name: name.into(),
            class: SymbolClass::Radial,
            eval: Arc::new(move |p: &Point| C64::new(p2(p.x().hypot(p.y())), 0.0)),
            radial: Some(profile),
            breaks,
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Self::real(&format!("constant({c})"), SymbolClass::BoundedOnly, move |_| c);
        s.radial = Some(Arc::new(move |_| c));
        s
    }

    /// `1` on `[−w, w]²` in the time-frequency plane.
    pub fn indicator_box(half_width: f64) -> Self {
        Self::real(&format!("indicator-box({half_width})"), SymbolClass::CompactSupport, move |p| {
            if p.x().abs() <= half_width && p.y().abs() <= half_width {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Indicator of the closed metric ball `D(center, radius)`.
    pub fn indicator_ball(center: Point, radius: f64) -> Self {
        let space = MetricMeasureSpace::new(center.space);
        Self::real(&format!("indicator-ball({:?},{radius})", center.coords), SymbolClass::CompactSupport, move |p| {
            if space.dist(&center, p) <= radius {
                1.0
            } else {
                0.0
            }
        })
    }

    /// `(1 + a² + b²)^{-1}`, in `L^p` for every `p > 1`.
    pub fn lp_decay() -> Self {
        Self::real("lp-decay", SymbolClass::Lp { p: 2.0 }, |p| 1.0 / (1.0 + p.x() * p.x() + p.y() * p.y()))
    }

    /// `cos(k·x)`: bounded, not decaying.
    pub fn oscillatory(k: f64) -> Self {
        Self::real(&format!("oscillatory({k})"), SymbolClass::BoundedOnly, move |p| (k * p.x()).cos())
    }

    /// `1_{a ≥ 1}` on the affine group.
    pub fn upper_half() -> Self {
        Self::real("scale-at-least-one", SymbolClass::BoundedOnly, |p| if p.x() >= 1.0 { 1.0 } else { 0.0 })
    }

    /// `|z|^k` on the disc.
    pub fn radial_power(k: i32) -> Self {
        Self::radial(&format!("radial:r{k}"), move |r| r.powi(k), Vec::new())
    }

    /// `1_{|z| ≤ ρ}` on the disc.
    pub fn disc_indicator(rho: f64) -> Self {
        let mut s = Self::radial(&format!("disc-indicator({rho})"), move |r| if r <= rho { 1.0 } else { 0.0 }, vec![rho]);
        s.class = SymbolClass::CompactSupport;
        s
    }

    /// `u(z) = z̄`.
    pub fn zbar() -> Self {
        Self::custom("zbar", SymbolClass::BoundedOnly, |p| C64::new(p.x(), -p.y()))
    }

    pub fn eval(&self, p: &Point) -> C64 {
        (self.eval)(p)
    }

    pub fn radial_profile(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.radial.as_deref()
    }

    pub fn conj(&self) -> Self {
        let f = self.eval.clone();
        Symbol {
            name: format!("conj({})", self.name),
            class: self.class,
            eval: Arc::new(move |p| f(p).conj()),
            radial: self.radial.clone(),
            breaks: self.breaks.clone(),
        }
    }

    /// `|u|²`.
    pub fn abs_sqr(&self) -> Self {
        let f = self.eval.clone();
        let radial = self.radial.clone().map(|g| Arc::new(move |r: f64| g(r) * g(r)) as Arc<dyn Fn(f64) -> f64 + Send + Sync>);
        Symbol {
            name: format!("abs2({})", self.name),
            class: self.class,
            eval: Arc::new(move |p| C64::new(f(p).norm_sqr(), 0.0)),
            radial,
            breaks: self.breaks.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Multiplier { symbol: String },
    Block { index: usize, r: f64 },
    Approximant { r: f64 },
    Reconstruction,
    Composition { left: String, right: String },
    Adjoint { of: String },
    Translation { by: [f64; 2] },
    Custom { label: String },
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Multiplier { symbol } => format!("T[{symbol}]"),
            Provenance::Block { index, r } => format!("T_{index}(r={r})"),
            Provenance::Approximant { r } => format!("A(r={r})"),
            Provenance::Reconstruction => "reconstruction".into(),
            Provenance::Composition { left, right } => format!("{left}*{right}"),
            Provenance::Adjoint { of } => format!("({of})^*"),
            Provenance::Translation { by } => format!("U{by:?}"),
            Provenance::Custom { label } => label.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalizedOperator {
    pub action: CMat,
    pub ctx: Arc<FrameContext>,
    pub provenance: Provenance,
}

impl LocalizedOperator {
    pub fn new(action: CMat, ctx: Arc<FrameContext>, provenance: Provenance) -> Result<Self> {
        let m = ctx.dim();
        if action.nrows() != m || action.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: action.nrows() });
        }
        Ok(LocalizedOperator { action, ctx, provenance })
    }

    pub fn identity(ctx: Arc<FrameContext>) -> Self {
        let m = ctx.dim();
        LocalizedOperator { action: linalg::identity(m), ctx, provenance: Provenance::Custom { label: "identity".into() } }
    }

    pub fn zero(ctx: Arc<FrameContext>) -> Self {
        let m = ctx.dim();
        LocalizedOperator { action: CMat::zeros((m, m)), ctx, provenance: Provenance::Custom { label: "zero".into() } }
    }

    pub fn label(&self) -> String {
        self.provenance.label()
    }

    /// Columns `T f̃_x`.
    pub fn on_dual(&self) -> CMat {
        linalg::matmul(&self.action, &self.ctx.dual.vectors)
    }
}

/// `T_u = Σ_x w_x u(x) f_x ⟨·, f̃_x⟩`; on the disc the compressed Toeplitz operator `P M_u`.
pub fn multiplier(ctx: &Arc<FrameContext>, u: &Symbol) -> Result<LocalizedOperator> {
    let domain = ctx.domain();
    let vals: Vec<C64> = domain.nodes.iter().map(|p| u.eval(p)).collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("symbol {} is not bounded on the domain", u.name)));
    }
    let action = match ctx.frame.family {
        FrameFamily::BergmanKernel { degree_cap } => {
            if ctx.frame.is_compressed() {
                return Err(Error::InvalidParameter("Bergman multipliers need the monomial realization".into()));
            }
            disc::toeplitz_matrix(u, degree_cap)?
        }
        _ => {
            let wu: Vec<C64> = vals.iter().zip(&domain.weights).map(|(z, w)| z * *w).collect();
            let phi = linalg::scale_columns_complex(ctx.frame.atoms(), &wu);
            linalg::matmul(&phi, &adjoint(&ctx.dual.vectors.view()))
        }
    };
    LocalizedOperator::new(action, ctx.clone(), Provenance::Multiplier { symbol: u.name.clone() })
}

/// `|⟨T f̃_x, f_y⟩|` through the realization.
pub fn frame_kernel(t: &LocalizedOperator) -> Result<KernelMatrix> {
    KernelMatrix::from_vectors(&t.on_dual(), t.ctx.frame.atoms(), &t.label())
}

/// [`frame_kernel`] read off a precomputed [`interaction_matrix`].
pub fn kernel_from_interactions(p: &CMat, provenance: &str) -> KernelMatrix {
    KernelMatrix { values: p.t().mapv(|z| z.norm()), provenance: provenance.into() }
}

/// [`berezin`] read off a precomputed [`interaction_matrix`]: its diagonal.
pub fn berezin_from_interactions(p: &CMat) -> Vec<C64> {
    p.diag().to_vec()
}

/// `B(T)(x) = ⟨T f̃_x, f_x⟩` on every node.
pub fn berezin(t: &LocalizedOperator) -> Vec<C64> {
    let td = t.on_dual();
    let phi = t.ctx.frame.atoms();
    (0..phi.ncols())
        .map(|x| phi.column(x).iter().zip(td.column(x).iter()).map(|(f, g)| f.conj() * g).sum())
        .collect()
}

/// `P[y, x] = ⟨T f̃_x, f_y⟩` on all node pairs.
fn interactions(t: &LocalizedOperator) -> CMat {
    linalg::matmul(&adjoint(&t.ctx.frame.atoms().view()), &t.on_dual())
}

/// `Σ_{x,y} w_x w_y C[y, x] ⟨·, f_x⟩ f̃_y = Φ̃ W C W Φᴴ`.
fn synthesize(ctx: &FrameContext, c: &CMat) -> CMat {
    let w = &ctx.domain().weights;
    let left = linalg::scale_columns(&ctx.dual.vectors, w);
    let right = adjoint(&linalg::scale_columns(ctx.frame.atoms(), w).view());
    linalg::matmul(&linalg::matmul(&left, c), &right)
}

/// Interactions restricted to `y ∈ F_j`, `x ∈ G_j` for every listed cell.
fn masked(p: &CMat, cover: &Cover, cells: impl IntoIterator<Item = usize>) -> CMat {
    let mut c = CMat::zeros(p.raw_dim());
    for j in cells {
        for &y in &cover.cells[j] {
            for &x in &cover.expansions[j] {
                c[[y, x]] = p[[y, x]];
            }
        }
    }
    c
}

/// `T_j = Σ_{y∈F_j} Σ_{x∈G_j} w_x w_y ⟨·, f_x⟩ ⟨T f̃_x, f_y⟩ f̃_y`.
pub fn block_component(t: &LocalizedOperator, cover: &Cover, j: usize) -> Result<LocalizedOperator> {
    check_cover(t.ctx.domain(), cover)?;
    if j >= cover.cells.len() {
        return Err(Error::IndexOutOfRange { index: j, len: cover.cells.len() });
    }
    let c = masked(&interactions(t), cover, [j]);
    LocalizedOperator::new(synthesize(&t.ctx, &c), t.ctx.clone(), Provenance::Block { index: j, r: cover.r })
}

/// `A = Σ_j T_j`.
pub fn approximant(t: &LocalizedOperator, cover: &Cover) -> Result<LocalizedOperator> {
    check_cover(t.ctx.domain(), cover)?;
    let c = masked(&interactions(t), cover, 0..cover.cells.len());
    LocalizedOperator::new(synthesize(&t.ctx, &c), t.ctx.clone(), Provenance::Approximant { r: cover.r })
}

/// `P[y, x] = ⟨T f̃_x, f_y⟩`, the input of [`approximant_from`] and [`reconstruction_from`].
pub fn interaction_matrix(t: &LocalizedOperator) -> CMat {
    interactions(t)
}

/// [`approximant`] from a precomputed [`interaction_matrix`].
pub fn approximant_from(t: &LocalizedOperator, p: &CMat, cover: &Cover) -> Result<LocalizedOperator> {
    check_cover(t.ctx.domain(), cover)?;
    check_interactions(t, p)?;
    let c = masked(p, cover, 0..cover.cells.len());
    LocalizedOperator::new(synthesize(&t.ctx, &c), t.ctx.clone(), Provenance::Approximant { r: cover.r })
}

/// The discrete double-sum reconstruction of `T` (every `G_j` equal to the whole domain).
pub fn reconstruction(t: &LocalizedOperator) -> Result<LocalizedOperator> {
    reconstruction_from(t, &interactions(t))
}

pub fn reconstruction_from(t: &LocalizedOperator, p: &CMat) -> Result<LocalizedOperator> {
    check_interactions(t, p)?;
    LocalizedOperator::new(synthesize(&t.ctx, p), t.ctx.clone(), Provenance::Reconstruction)
}

fn check_interactions(t: &LocalizedOperator, p: &CMat) -> Result<()> {
    let n = t.ctx.domain().len();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.nrows() });
    }
    Ok(())
}

fn check_cover(domain: &SampledDomain, cover: &Cover) -> Result<()> {
    let n = domain.len();
    if cover.expansions.len() != cover.cells.len() {
        return Err(Error::DimensionMismatch { expected: cover.cells.len(), found: cover.expansions.len() });
    }
    let bad = cover.cells.iter().chain(&cover.expansions).flatten().find(|&&i| i >= n);
    match bad {
        Some(&i) => Err(Error::IndexOutOfRange { index: i, len: n }),
        None => Ok(()),
    }
}

pub fn operator_norm(t: &LocalizedOperator) -> Result<f64> {
    linalg::spectral_norm(&t.action)
}

pub fn singular_value_profile(t: &LocalizedOperator, count: usize) -> Result<Vec<f64>> {
    if count > t.ctx.dim() {
        return Err(Error::InvalidParameter(format!("count {count} exceeds dimension {}", t.ctx.dim())));
    }
    let mut s = linalg::singular_values(&t.action)?;
    s.truncate(count);
    Ok(s)
}

/// Local energies `Σ_{d(x,y) ≤ radius} w_x K(x,y)²` for each `y` in `ys`.
pub fn local_energies(kernel: &KernelMatrix, domain: &SampledDomain, radius: f64, ys: &[usize]) -> Vec<f64> {
    let tol = radius * (1.0 + 1e-12);
    ys.iter()
        .map(|&y| {
            (0..domain.len())
                .filter(|&x| domain.dist(x, y) <= tol)
                .map(|x| domain.weights[x] * kernel.values[[x, y]].powi(2))
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub r: f64,
    pub epsilon: f64,
    pub overlap_n: usize,
    pub diameter_k: f64,
    pub d_kr: f64,
    /// `sup_y (Σ_{d(x,y) ≤ (K+1)r} w_x |⟨T f̃_x, f_y⟩|²)^{1/2}` over the selected `y`.
    pub local_sup: f64,
    pub bound: f64,
    /// `√(N·D_{Kr})/(1−ε) · sup_x ‖T* f_x‖`.
    pub adjoint_bound: f64,
    /// ρ(ε‖T‖) when supplied, and whether the cover radius exceeds it.
    pub rho: Option<RhoValue>,
    pub admissible: Option<bool>,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

/// `‖T* f_x‖` for every node.
pub fn adjoint_atom_norms(t: &LocalizedOperator) -> Vec<f64> {
    let adj = linalg::matmul(&adjoint(&t.action.view()), t.ctx.frame.atoms());
    adj.axis_iter(Axis(1)).map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
}

fn bound_over(
    t: &LocalizedOperator,
    kernel: &KernelMatrix,
    adjoint_norms: &[f64],
    cover: &Cover,
    eps: f64,
    ys: &[usize],
    rho: Option<RhoValue>,
) -> Result<NormBound> {
    check_epsilon(eps)?;
    let domain = t.ctx.domain();
    let kr = cover.diameter_k * cover.r;
    let d_kr = ball_measure_sup(domain, kr);
    let local = local_energies(kernel, domain, (cover.diameter_k + 1.0) * cover.r, ys);
    let local_sup = local.iter().copied().fold(0.0, f64::max).sqrt();
    let scale = (cover.overlap_n as f64 * d_kr).sqrt() / (1.0 - eps);
    if adjoint_norms.len() != domain.len() {
        return Err(Error::DimensionMismatch { expected: domain.len(), found: adjoint_norms.len() });
    }
    let adj_sup = ys.iter().map(|&x| adjoint_norms[x]).fold(0.0, f64::max);
    Ok(NormBound {
        r: cover.r,
        epsilon: eps,
        overlap_n: cover.overlap_n,
        diameter_k: cover.diameter_k,
        d_kr,
        local_sup,
        bound: scale * local_sup,
        adjoint_bound: scale * adj_sup,
        rho,
        admissible: rho.map(|r| r.admits(cover.r)),
    })
}

/// Right-hand side of the covering norm estimate from a precomputed kernel and
/// [`adjoint_atom_norms`]; `rho` is ρ(ε‖T‖) when known.
pub fn norm_bound_with(
    t: &LocalizedOperator,
    kernel: &KernelMatrix,
    adjoint_norms: &[f64],
    cover: &Cover,
    eps: f64,
    rho: Option<RhoValue>,
) -> Result<NormBound> {
    let all: Vec<usize> = (0..t.ctx.domain().len()).collect();
    bound_over(t, kernel, adjoint_norms, cover, eps, &all, rho)
}

pub fn norm_bound(t: &LocalizedOperator, cover: &Cover, eps: f64) -> Result<NormBound> {
    let k = frame_kernel(t)?;
    norm_bound_with(t, &k, &adjoint_atom_norms(t), cover, eps, None)
}

/// Same estimate with the sup restricted to the boundary band `d(y, e) ≥ R − band`.
pub fn essential_norm_bound_with(
    t: &LocalizedOperator,
    kernel: &KernelMatrix,
    adjoint_norms: &[f64],
    cover: &Cover,
    eps: f64,
    band: f64,
    rho: Option<RhoValue>,
) -> Result<NormBound> {
    let ys = t.ctx.domain().boundary_band(band)?;
    bound_over(t, kernel, adjoint_norms, cover, eps, &ys, rho)
}

pub fn essential_norm_bound(t: &LocalizedOperator, cover: &Cover, eps: f64, band: f64) -> Result<NormBound> {
    let k = frame_kernel(t)?;
    essential_norm_bound_with(t, &k, &adjoint_atom_norms(t), cover, eps, band, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessMargin {
    /// `max ‖T* f_x‖` over the band.
    pub adjoint_max: f64,
    /// `max ‖T f_x‖` over the band (reported for Parseval contexts).
    pub direct_max: Option<f64>,
    pub margin: f64,
}

pub fn compactness_margin(t: &LocalizedOperator, band: f64) -> Result<CompactnessMargin> {
    compactness_margin_with(t, band, &adjoint_atom_norms(t))
}

/// [`compactness_margin`] from precomputed [`adjoint_atom_norms`].
pub fn compactness_margin_with(t: &LocalizedOperator, band: f64, adjoint_norms: &[f64]) -> Result<CompactnessMargin> {
    let ys = t.ctx.domain().boundary_band(band)?;
    if adjoint_norms.len() != t.ctx.domain().len() {
        return Err(Error::DimensionMismatch { expected: t.ctx.domain().len(), found: adjoint_norms.len() });
    }
    let adjoint_max = ys.iter().map(|&y| adjoint_norms[y]).fold(0.0, f64::max);
    let direct_max = t.ctx.is_parseval().then(|| {
        let phi = t.ctx.frame.atoms().select(Axis(1), &ys);
        t.action
            .dot(&phi)
            .axis_iter(Axis(1))
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    });
    Ok(CompactnessMargin { adjoint_max, direct_max, margin: adjoint_max.max(direct_max.unwrap_or(0.0)) })
}

pub const DEFAULT_BAND_FRACTION: f64 = 0.2;
pub const DEFAULT_BEREZIN_THRESHOLD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compactness {
    Compact,
    NotCompact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinVerdict {
    pub verdict: Compactness,
    /// `max |B(T)|` over the boundary band.
    pub boundary_max: f64,
    pub norm: f64,
    /// Absolute threshold `threshold · ‖T‖`.
    pub threshold: f64,
    /// Set when injectivity of the Berezin transform is not established for the family.
    pub heuristic: bool,
}

/// Compactness verdict from the boundary decay of the Berezin transform.
pub fn berezin_compactness_test(
    t: &LocalizedOperator,
    band: f64,
    threshold: f64,
    localization: &LocalizationVerdict,
) -> Result<BerezinVerdict> {
    berezin_compactness_test_with(t, band, threshold, localization, None)
}

/// [`berezin_compactness_test`] with `‖T‖` supplied when already known.
pub fn berezin_compactness_test_with(
    t: &LocalizedOperator,
    band: f64,
    threshold: f64,
    localization: &LocalizationVerdict,
    norm: Option<f64>,
) -> Result<BerezinVerdict> {
    if !localization.localized {
        return Err(Error::NotLocalized(localization.reasons.clone()));
    }
    let norm = match norm {
        Some(v) => v,
        None => operator_norm(t)?,
    };
    berezin_verdict(t, &berezin(t), band, threshold, localization, norm)
}

/// The verdict from Berezin values already computed on every node.
pub fn berezin_verdict(
    t: &LocalizedOperator,
    values: &[C64],
    band: f64,
    threshold: f64,
    localization: &LocalizationVerdict,
    norm: f64,
) -> Result<BerezinVerdict> {
    if !localization.localized {
        return Err(Error::NotLocalized(localization.reasons.clone()));
    }
    if values.len() != t.ctx.domain().len() {
        return Err(Error::DimensionMismatch { expected: t.ctx.domain().len(), found: values.len() });
    }
    let ys = t.ctx.domain().boundary_band(band)?;
    let boundary_max = ys.iter().map(|&i| values[i].norm()).fold(0.0, f64::max);
    let abs = threshold * norm;
    Ok(BerezinVerdict {
        verdict: if boundary_max <= abs { Compactness::Compact } else { Compactness::NotCompact },
        boundary_max,
        norm,
        threshold: abs,
        heuristic: matches!(t.ctx.frame.family, FrameFamily::HaarWavelet { .. }),
    })
}

pub const DEFAULT_SV_RATIO: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueProxy {
    pub k0: usize,
    pub sigma_1: f64,
    pub sigma_k0: f64,
    pub ratio: f64,
    pub verdict: Compactness,
}

/// `σ_{k₀}/σ₁ ≤ ratio` ⇒ compact (1-based `k₀`).
pub fn singular_value_proxy(sv: &[f64], k0: usize, ratio: f64) -> SingularValueProxy {
    let s1 = sv.first().copied().unwrap_or(0.0);
    let sk = if k0 == 0 { s1 } else { sv.get(k0 - 1).copied().unwrap_or(0.0) };
    let r = if s1 > 0.0 { sk / s1 } else { 0.0 };
    SingularValueProxy {
        k0,
        sigma_1: s1,
        sigma_k0: sk,
        ratio: r,
        verdict: if r <= ratio { Compactness::Compact } else { Compactness::NotCompact },
    }
}

pub fn compose(t1: &LocalizedOperator, t2: &LocalizedOperator) -> Result<LocalizedOperator> {
    if !Arc::ptr_eq(&t1.ctx, &t2.ctx) {
        return Err(Error::ContextMismatch);
    }
    LocalizedOperator::new(
        linalg::matmul(&t1.action, &t2.action),
        t1.ctx.clone(),
        Provenance::Composition { left: t1.label(), right: t2.label() },
    )
}

pub fn adjoint_op(t: &LocalizedOperator) -> LocalizedOperator {
    LocalizedOperator {
        action: adjoint(&t.action.view()),
        ctx: t.ctx.clone(),
        provenance: Provenance::Adjoint { of: t.label() },
    }
}

/// `π(y) f_x = c · f_{y·x}`: returns `(y·x, c)`.
pub fn group_action(space: &MetricMeasureSpace, y: &Point, x: &Point) -> Result<(Point, C64)> {
    let yx = space.group_mul(y, x)?;
    let phase = match space.kind {
        // M_η T_u M_ξ T_x = e^{−2πiξu} M_{ξ+η} T_{x+u}
        SpaceKind::Euclidean2D => C64::from_polar(1.0, -2.0 * PI * x.y() * y.x()),
        _ => C64::new(1.0, 0.0),
    };
    Ok((yx, phase))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationInfo {
    /// Nodes whose translate leaves the truncated domain.
    pub outside: Vec<usize>,
}

/// `U_y h = Σ_x w_x ⟨h, f̃_x⟩ π(y) f_x`.
pub fn translation_operator(ctx: &Arc<FrameContext>, y: &Point) -> Result<(LocalizedOperator, TranslationInfo)> {
    let domain = ctx.domain();
    let space = domain.space;
    let base = space.basepoint();
    let mut phi_y = CMat::zeros((ctx.dim(), domain.len()));
    let mut outside = Vec::new();
    for (i, x) in domain.nodes.iter().enumerate() {
        let (yx, c) = group_action(&space, y, x)?;
        if space.dist(&base, &yx) > domain.truncation_radius * (1.0 + 1e-12) {
            outside.push(i);
        }
        let v: CVec = ctx.frame.realize(&yx).mapv(|z| z * c);
        phi_y.column_mut(i).assign(&v);
    }
    let phi_y = linalg::scale_columns(&phi_y, &domain.weights);
    let action = linalg::matmul(&phi_y, &adjoint(&ctx.dual.vectors.view()));
    let op = LocalizedOperator::new(action, ctx.clone(), Provenance::Translation { by: y.coords })?;
    Ok((op, TranslationInfo { outside }))
}
