//! End-to-end runs in the three model settings: anti-Wick operators on the time-frequency
//! plane, Calderón–Toeplitz operators on the affine group, and Toeplitz/Hankel operators on
//! the Bergman space.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disc::{self, HankelCheck};
use crate::frames::{self, SampledFrame};
use crate::geometry::{affine_grid, build_cover, sample_grid, MetricMeasureSpace, SampledDomain, SpaceKind};
use crate::linalg;
use crate::localization::{
    self, check_weak_localization, default_radii, localization_report, KernelMatrix, LocalizationReport, LocalizationVerdict, PointwiseReport,
    Weight,
};
use crate::operators::{
    self, BerezinVerdict, Compactness, CompactnessMargin, FrameContext, LocalizedOperator, SingularValueProxy, Symbol,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AntiWick,
    CalderonToeplitz,
    Bergman,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] =
        [ExperimentKind::AntiWick, ExperimentKind::CalderonToeplitz, ExperimentKind::Bergman];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AntiWick => "anti-wick",
            ExperimentKind::CalderonToeplitz => "calderon-toeplitz",
            ExperimentKind::Bergman => "bergman",
        }
    }

    pub fn space(self) -> SpaceKind {
        match self {
            ExperimentKind::AntiWick => SpaceKind::Euclidean2D,
            ExperimentKind::CalderonToeplitz => SpaceKind::AffineGroup,
            ExperimentKind::Bergman => SpaceKind::BergmanDisc,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment '{s}' (expected anti-wick, calderon-toeplitz or bergman)")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symbol descriptor, written as a short string such as `indicator:1`, `radial:r2` or
/// `oscillatory:2*indicator:1` (operator product of two multipliers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SymbolSpec {
    Constant(f64),
    /// `1` on `[−w, w]²`.
    Indicator(f64),
    LpDecay,
    Oscillatory(f64),
    /// Indicator of the metric ball of the given radius around the basepoint.
    Ball(f64),
    UpperHalf,
    RadialPower(i32),
    DiscIndicator(f64),
    Zbar,
    Product(Box<SymbolSpec>, Box<SymbolSpec>),
}

impl SymbolSpec {
    /// Spaces on which the descriptor is meaningful.
    fn supports(&self, space: SpaceKind) -> bool {
        use SymbolSpec::*;
        match self {
            Constant(_) | Ball(_) => true,
            Indicator(_) | LpDecay | Oscillatory(_) => space == SpaceKind::Euclidean2D,
            UpperHalf => space == SpaceKind::AffineGroup,
            RadialPower(_) | DiscIndicator(_) | Zbar => space == SpaceKind::BergmanDisc,
            Product(a, b) => a.supports(space) && b.supports(space),
        }
    }

    fn validate(&self, space: SpaceKind) -> Result<()> {
        use SymbolSpec::*;
        if !self.supports(space) {
            return Err(Error::InvalidParameter(format!("symbol '{self}' is not defined on {}", space.name())));
        }
        let ok = match self {
            Constant(c) | Oscillatory(c) => c.is_finite(),
            Indicator(w) | Ball(w) => *w > 0.0 && w.is_finite(),
            DiscIndicator(r) => *r > 0.0 && *r < 1.0,
            RadialPower(k) => *k >= 0,
            Product(a, b) => {
                a.validate(space)?;
                b.validate(space)?;
                true
            }
            LpDecay | UpperHalf | Zbar => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("symbol '{self}' has an out-of-range parameter")))
        }
    }

    /// True for descriptors whose symbol has compact support in the index space.
    pub fn is_compactly_supported(&self) -> bool {
        use SymbolSpec::*;
        match self {
            Indicator(_) | Ball(_) | DiscIndicator(_) => true,
            Product(a, b) => a.is_compactly_supported() || b.is_compactly_supported(),
            _ => false,
        }
    }

    fn factors(&self) -> Vec<&SymbolSpec> {
        match self {
            SymbolSpec::Product(a, b) => {
                let mut v = a.factors();
                v.extend(b.factors());
                v
            }
            s => vec![s],
        }
    }

    pub fn symbol(&self, space: &MetricMeasureSpace) -> Result<Symbol> {
        use SymbolSpec::*;
        Ok(match self {
            Constant(c) => Symbol::constant(*c),
            Indicator(w) => Symbol::indicator_box(*w),
            LpDecay => Symbol::lp_decay(),
            Oscillatory(k) => Symbol::oscillatory(*k),
            Ball(r) => Symbol::indicator_ball(space.basepoint(), *r),
            UpperHalf => Symbol::upper_half(),
            RadialPower(k) => Symbol::radial_power(*k),
            DiscIndicator(r) => Symbol::disc_indicator(*r),
            Zbar => Symbol::zbar(),
            Product(..) => return Err(Error::InvalidParameter(format!("'{self}' is an operator product, not a symbol"))),
        })
    }

    /// The multiplier, or the product of multipliers for `a*b`.
    pub fn operator(&self, ctx: &Arc<FrameContext>) -> Result<LocalizedOperator> {
        let space = ctx.domain().space;
        let mut ops = self.factors().into_iter().map(|s| operators::multiplier(ctx, &s.symbol(&space)?));
        let first = ops.next().expect("at least one factor")?;
        ops.try_fold(first, |acc, t| operators::compose(&acc, &t?))
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SymbolSpec::*;
        match self {
            Constant(c) => write!(f, "constant:{c}"),
            Indicator(w) => write!(f, "indicator:{w}"),
            LpDecay => write!(f, "lp-decay"),
            Oscillatory(k) => write!(f, "oscillatory:{k}"),
            Ball(r) => write!(f, "ball:{r}"),
            UpperHalf => write!(f, "upper-half"),
            RadialPower(k) => write!(f, "radial:r{k}"),
            DiscIndicator(r) => write!(f, "disc-indicator:{r}"),
            Zbar => write!(f, "zbar"),
            Product(a, b) => write!(f, "{a}*{b}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse '{s}' as {what}")))
}

impl FromStr for SymbolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use SymbolSpec::*;
        if let Some((a, b)) = s.split_once('*') {
            return Ok(Product(Box::new(a.parse()?), Box::new(b.parse()?)));
        }
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<f64> {
            match (arg, default) {
                (Some(a), _) => parse_num(a, "a number"),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::InvalidParameter(format!("symbol '{head}' needs a parameter, e.g. '{head}:0.5'"))),
            }
        };
        Ok(match head {
            "constant" => Constant(num(Some(1.0))?),
            "indicator" => Indicator(num(Some(1.0))?),
            "lp-decay" => LpDecay,
            "oscillatory" => Oscillatory(num(Some(2.0))?),
            "ball" => Ball(num(None)?),
            "upper-half" => UpperHalf,
            "radial" => {
                let a = arg.ok_or_else(|| Error::InvalidParameter("radial symbols are written 'radial:r<k>'".into()))?;
                let k = a.strip_prefix('r').ok_or_else(|| Error::InvalidParameter(format!("bad radial symbol '{s}'")))?;
                RadialPower(parse_num(k, "an integer power")?)
            }
            "disc-indicator" => DiscIndicator(num(Some(0.5))?),
            "zbar" => Zbar,
            _ => return Err(Error::InvalidParameter(format!("unknown symbol '{s}'"))),
        })
    }
}

impl TryFrom<String> for SymbolSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SymbolSpec> for String {
    fn from(s: SymbolSpec) -> String {
        s.to_string()
    }
}

/// Weight descriptor: `const`, `affine:<δ>` for `a^{1/2−δ}`, `disc:<β>` for `(1−|z|²)^β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSpec {
    Constant,
    Affine(f64),
    Disc(f64),
}

impl WeightSpec {
    pub fn weight(self) -> Weight {
        match self {
            WeightSpec::Constant => Weight::Constant,
            WeightSpec::Affine(d) => Weight::PowerAffine(d),
            WeightSpec::Disc(b) => Weight::PowerDisc(b),
        }
    }

    pub fn validate(self, space: SpaceKind) -> Result<()> {
        match self {
            WeightSpec::Constant => Ok(()),
            WeightSpec::Affine(d) if space != SpaceKind::AffineGroup => {
                Err(Error::InvalidParameter(format!("weight affine:{d} needs the affine group")))
            }
            WeightSpec::Affine(d) if !(d > 0.0 && d < 0.5) => {
                Err(Error::InvalidParameter(format!("weight exponent delta must lie in (0, 1/2), got {d}")))
            }
            WeightSpec::Disc(b) if space != SpaceKind::BergmanDisc => {
                Err(Error::InvalidParameter(format!("weight disc:{b} needs the disc")))
            }
            WeightSpec::Disc(b) if !b.is_finite() => Err(Error::InvalidParameter(format!("weight exponent {b}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant => write!(f, "const"),
            WeightSpec::Affine(d) => write!(f, "affine:{d}"),
            WeightSpec::Disc(b) => write!(f, "disc:{b}"),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "const" || s == "constant" => Ok(WeightSpec::Constant),
            Some(("affine", d)) => Ok(WeightSpec::Affine(parse_num(d, "a weight exponent")?)),
            Some(("disc", b)) => Ok(WeightSpec::Disc(parse_num(b, "a weight exponent")?)),
            _ => Err(Error::InvalidParameter(format!("unknown weight '{s}' (expected const, affine:<delta> or disc:<beta>)"))),
        }
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightSpec> for String {
    fn from(w: WeightSpec) -> String {
        w.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub margin_cap: f64,
    pub tail_floor: f64,
    /// Boundary band width as a fraction of the truncation radius.
    pub band_fraction: f64,
    /// Berezin threshold relative to `‖T‖`.
    pub berezin: f64,
    /// `σ_{k₀}/σ₁` threshold of the singular-value proxy.
    pub sv_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            margin_cap: localization::DEFAULT_MARGIN_CAP,
            tail_floor: localization::DEFAULT_TAIL_FLOOR,
            band_fraction: operators::DEFAULT_BAND_FRACTION,
            berezin: operators::DEFAULT_BEREZIN_THRESHOLD,
            sv_ratio: operators::DEFAULT_SV_RATIO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub resolution: f64,
    pub truncation: f64,
    pub symbol: SymbolSpec,
    pub weight: WeightSpec,
    pub cover_radii: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// 1-based index of the singular value compared against `σ₁`.
    pub k0: usize,
    #[serde(default)]
    pub seed: u64,
    /// Bergman only: degree cap of the monomial realization (derived from the truncation when absent).
    #[serde(default)]
    pub degree_cap: Option<usize>,
    /// Bergman only: symbol and degree cap of the Hankel identity check.
    #[serde(default)]
    pub hankel_symbol: Option<SymbolSpec>,
    #[serde(default)]
    pub hankel_degree: Option<usize>,
    /// Affine only: exponents `M` and constants `C` of the pointwise sweep, and the scale-ladder length.
    #[serde(default)]
    pub pointwise_m: Option<Vec<f64>>,
    #[serde(default)]
    pub pointwise_c: Option<Vec<f64>>,
    #[serde(default)]
    pub ladder: Option<usize>,
    /// Affine only: translation step `Δb/a` of the operator grid (derived from the resolution when absent).
    #[serde(default)]
    pub shift_resolution: Option<f64>,
    /// Affine only: grid step and the two truncation radii of the frame-margin stability comparison.
    #[serde(default)]
    pub stability_resolution: Option<f64>,
    #[serde(default)]
    pub stability_truncations: Option<[f64; 2]>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

const DEFAULT_POINTWISE_M: [f64; 4] = [0.55, 0.75, 1.0, 2.0];
const DEFAULT_POINTWISE_C: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
const DEFAULT_LADDER: usize = 200;
const DEFAULT_STABILITY_RESOLUTION: f64 = 0.25;
const DEFAULT_STABILITY_TRUNCATIONS: [f64; 2] = [3.0, 4.0];
const DEFAULT_HANKEL_DEGREE: usize = 48;
const DIAGONAL_ROWS: usize = 41;
const CONSISTENCY_PAIRS: usize = 64;
/// Relative change of the Schur margins tolerated between two truncation radii.
pub const STABILITY_TOLERANCE: f64 = 0.1;

impl ExperimentConfig {
    /// The calibrated default configuration of each setting.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            resolution: 0.25,
            truncation: 5.0,
            symbol: SymbolSpec::Indicator(1.0),
            weight: WeightSpec::Constant,
            cover_radii: vec![1.0, 2.0, 4.0],
            epsilons: vec![0.1, 0.25, 0.5],
            thresholds: Thresholds::default(),
            k0: 30,
            seed: 0,
            degree_cap: None,
            hankel_symbol: None,
            hankel_degree: None,
            pointwise_m: None,
            pointwise_c: None,
            ladder: None,
            shift_resolution: None,
            stability_resolution: None,
            stability_truncations: None,
            out: None,
        };
        match kind {
            ExperimentKind::AntiWick => base,
            ExperimentKind::CalderonToeplitz => ExperimentConfig {
                resolution: std::f64::consts::LN_2,
                shift_resolution: Some(0.25),
                truncation: 5.0,
                symbol: SymbolSpec::Ball(0.6),
                weight: WeightSpec::Affine(0.1),
                cover_radii: vec![2.0, 3.0, 5.0],
                ..base
            },
            ExperimentKind::Bergman => ExperimentConfig {
                resolution: 0.25,
                truncation: 2.5,
                symbol: SymbolSpec::DiscIndicator(0.5),
                weight: WeightSpec::Disc(0.75),
                cover_radii: vec![0.5, 1.0, 2.0],
                ..base
            },
        }
    }

    pub fn space(&self) -> SpaceKind {
        self.experiment.space()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let space = self.space();
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if !(self.truncation > self.resolution && self.truncation.is_finite()) {
            return bad(format!("truncation {} must exceed the resolution {}", self.truncation, self.resolution));
        }
        self.symbol.validate(space)?;
        self.weight.validate(space)?;
        if self.experiment == ExperimentKind::CalderonToeplitz && !matches!(self.weight, WeightSpec::Affine(_)) {
            return bad("calderon-toeplitz needs a weight affine:<delta> with delta in (0, 1/2)".into());
        }
        if self.cover_radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("cover radii must be positive".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("epsilons must be nonempty and lie in (0, 1)".into());
        }
        let t = &self.thresholds;
        if !(t.margin_cap > 0.0 && t.tail_floor > 0.0 && t.berezin > 0.0 && t.sv_ratio > 0.0) {
            return bad("thresholds must be positive".into());
        }
        if !(t.band_fraction > 0.0 && t.band_fraction < 1.0) {
            return bad(format!("band fraction must lie in (0, 1), got {}", t.band_fraction));
        }
        if self.k0 < 2 {
            return bad("k0 must be at least 2".into());
        }
        let disc_only = self.degree_cap.is_some() || self.hankel_symbol.is_some() || self.hankel_degree.is_some();
        if disc_only && space != SpaceKind::BergmanDisc {
            return bad("degree_cap and hankel settings apply to the bergman experiment only".into());
        }
        if let Some(h) = &self.hankel_symbol {
            h.validate(space)?;
        }
        if self.hankel_degree == Some(0) {
            return bad("hankel_degree must be positive".into());
        }
        let affine_only = self.pointwise_m.is_some()
            || self.pointwise_c.is_some()
            || self.ladder.is_some()
            || self.shift_resolution.is_some()
            || self.stability_resolution.is_some()
            || self.stability_truncations.is_some();
        if affine_only && space != SpaceKind::AffineGroup {
            return bad("pointwise and stability settings apply to the calderon-toeplitz experiment only".into());
        }
        if self.pointwise_m.iter().flatten().chain(self.pointwise_c.iter().flatten()).any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("pointwise exponents and constants must be positive".into());
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.shift_resolution.is_some_and(|s| !positive(s)) || self.stability_resolution.is_some_and(|s| !positive(s)) {
            return bad("shift and stability resolutions must be positive".into());
        }
        if let Some([a, b]) = self.stability_truncations {
            let h = self.stability_resolution.unwrap_or(DEFAULT_STABILITY_RESOLUTION);
            if !(positive(a) && positive(b) && a > h && b > h && a != b) {
                return bad(format!("stability truncations {a}, {b} must be distinct and exceed the grid step {h}"));
            }
        }
        Ok(())
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn band(&self) -> f64 {
        self.thresholds.band_fraction * self.truncation
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub family: String,
    pub nodes: usize,
    pub realization_dim: usize,
    pub native_dim: usize,
    pub cell_diameter: f64,
    /// Largest `|⟨f_x, f_y⟩_realized − ⟨f_x, f_y⟩_closed|` over seeded random node pairs.
    pub consistency_error: f64,
    pub consistency_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub label: String,
    pub norm: f64,
    pub compactly_supported_symbol: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub r: f64,
    pub epsilon: f64,
    pub overlap_n: usize,
    pub diameter_k: f64,
    pub norm: f64,
    pub bound: f64,
    pub adjoint_bound: f64,
    pub essential_bound: f64,
    /// Bracket of ρ(ε‖T‖); `rho_high = None` when not reached within the truncation.
    pub rho_low: f64,
    pub rho_high: Option<f64>,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationRow {
    pub r: f64,
    pub cells: usize,
    pub overlap_n: usize,
    pub diameter_k: f64,
    /// `‖T_rec − A‖/‖T‖` against the discrete reconstruction `T_rec` of `T`.
    pub relative_error: f64,
    /// `‖T − A‖/‖T‖`, including the truncation defect `T − T_rec`.
    pub relative_error_to_t: f64,
    pub cover_warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinSample {
    pub d_to_basepoint: f64,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessSummary {
    pub band: f64,
    /// Berezin verdict, or `None` with `berezin_refusal` when the operator kernel is not localized.
    pub berezin: Option<BerezinVerdict>,
    pub berezin_refusal: Option<Vec<String>>,
    pub proxy: SingularValueProxy,
    pub margin: CompactnessMargin,
    pub concordant: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginStability {
    pub resolution: f64,
    pub truncations: [f64; 2],
    pub row_margins: [f64; 2],
    pub col_margins: [f64; 2],
    pub relative_change: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineExtras {
    pub pointwise: Vec<PointwiseReport>,
    /// True when every tested `(M, C)` pair is violated.
    pub pointwise_fails_everywhere: bool,
    pub stability: MarginStability,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalEntry {
    pub n: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscExtras {
    pub degree_cap: usize,
    pub diagonal: Vec<DiagonalEntry>,
    /// Off-diagonal over diagonal squared Frobenius mass of the Toeplitz matrix.
    pub off_diagonal_ratio: f64,
    pub hankel_symbol: String,
    pub hankel: HankelCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub frame: FrameSummary,
    pub frame_localization: LocalizationReport,
    pub operator: OperatorSummary,
    pub operator_localization: LocalizationReport,
    pub localization_verdict: LocalizationVerdict,
    pub bounds: Vec<BoundRow>,
    pub approximation: Vec<ApproximationRow>,
    /// `max (‖T_rec − A‖/‖T‖ − ε)⁺` over admissible `(r, ε)`; `None` when nothing is admissible.
    pub approximation_slack: Option<f64>,
    pub berezin_profile: Vec<BerezinSample>,
    pub singular_values: Vec<f64>,
    pub compactness: CompactnessSummary,
    pub affine: Option<AffineExtras>,
    pub disc: Option<DiscExtras>,
}

impl ExperimentReport {
    pub fn verdict(&self) -> Option<Compactness> {
        self.compactness.berezin.as_ref().map(|b| b.verdict)
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let c = &self.compactness;
        let verdict = match &c.berezin {
            Some(b) => format!(
                "{} (boundary Berezin {:.3e} vs {:.3e}{})",
                verdict_name(b.verdict),
                b.boundary_max,
                b.threshold,
                if b.heuristic { ", heuristic" } else { "" }
            ),
            None => "no verdict (kernel not localized)".into(),
        };
        let ratio = self
            .bounds
            .iter()
            .filter(|b| b.admissible)
            .map(|b| b.bound / b.norm)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
        let ratio = ratio.map_or("none admissible".into(), |r| format!("{r:.2}"));
        format!(
            "{} {}: {verdict}; sv proxy {} (sigma_{}/sigma_1 = {:.3e}); norm {:.6}; best bound/norm {ratio}",
            self.config.experiment,
            self.operator.label,
            verdict_name(c.proxy.verdict),
            c.proxy.k0,
            c.proxy.ratio,
            self.operator.norm,
        )
    }
}

pub fn verdict_name(v: Compactness) -> &'static str {
    match v {
        Compactness::Compact => "compact",
        Compactness::NotCompact => "not_compact",
    }
}

fn build_frame(config: &ExperimentConfig, domain: SampledDomain) -> Result<(SampledFrame, usize)> {
    match config.experiment {
        ExperimentKind::AntiWick => Ok((frames::gabor_gaussian_frame(domain)?, 0)),
        // The breakpoint partition is about twice the node count; the atom span is all that matters.
        ExperimentKind::CalderonToeplitz => {
            let f = frames::haar_wavelet_frame(domain)?;
            let native = f.dim();
            Ok((f.compressed()?, native))
        }
        ExperimentKind::Bergman => {
            let cap = config
                .degree_cap
                .unwrap_or_else(|| frames::bergman_degree_for(config.truncation, frames::BERGMAN_TOLERANCE));
            Ok((frames::bergman_disc_frame(domain, cap)?, 0))
        }
    }
}

fn consistency(frame: &SampledFrame, seed: u64) -> (f64, usize) {
    let n = frame.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = CONSISTENCY_PAIRS.min(n);
    let xs = sample(&mut rng, n, k);
    let ys = sample(&mut rng, n, k);
    let pairs: Vec<(usize, usize)> = xs.iter().zip(ys.iter()).collect();
    (frame.consistency_error(&pairs), pairs.len())
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Frame contexts already built, keyed by the grid settings of a configuration.
#[derive(Default)]
pub struct FrameCache {
    entries: Vec<(String, Arc<FrameContext>, FrameSummary)>,
}

impl FrameCache {
    fn key(config: &ExperimentConfig) -> String {
        format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{}",
            config.experiment, config.resolution, config.shift_resolution, config.truncation, config.degree_cap, config.seed
        )
    }

    fn context(&mut self, config: &ExperimentConfig) -> Result<(Arc<FrameContext>, FrameSummary)> {
        let key = Self::key(config);
        if let Some((_, ctx, summary)) = self.entries.iter().find(|(k, _, _)| *k == key) {
            return Ok((ctx.clone(), summary.clone()));
        }
        let space = MetricMeasureSpace::new(config.space());
        let domain = match (config.space(), config.shift_resolution) {
            (SpaceKind::AffineGroup, Some(hb)) => affine_grid(&space, config.resolution, hb, config.truncation)?,
            _ => sample_grid(&space, config.resolution, config.truncation)?,
        };
        let (frame, native) = build_frame(config, domain)?;
        let (consistency_error, consistency_pairs) = consistency(&frame, config.seed);
        let summary = FrameSummary {
            family: frame.family.name().into(),
            nodes: frame.len(),
            realization_dim: frame.dim(),
            native_dim: if native > 0 { native } else { frame.dim() },
            cell_diameter: frame.domain.cell_diameter,
            consistency_error,
            consistency_pairs,
        };
        let ctx = FrameContext::natural(frame)?;
        self.entries.push((key, ctx.clone(), summary.clone()));
        Ok((ctx, summary))
    }
}

/// Runs the configured experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_cached(config, &mut FrameCache::default())
}

/// Runs several configurations, building each distinct frame once.
pub fn run_all(configs: &[ExperimentConfig]) -> Result<Vec<ExperimentReport>> {
    let mut cache = FrameCache::default();
    configs.iter().map(|c| run_experiment_cached(c, &mut cache)).collect()
}

/// [`run_experiment`] reusing frames from `cache`.
pub fn run_experiment_cached(config: &ExperimentConfig, cache: &mut FrameCache) -> Result<ExperimentReport> {
    config.validate()?;
    let (ctx, frame_summary) = cache.context(config)?;
    let domain = ctx.domain().clone();
    let weight = config.weight.weight();
    let radii = localization::default_radii(&domain);
    let epsilons = ExperimentConfig::sorted(&config.epsilons);
    let cover_radii = ExperimentConfig::sorted(&config.cover_radii);

    let frame_kernel = localization::kernel_matrix(&ctx.frame, &ctx.dual)?;
    let frame_localization = localization_report(&frame_kernel, &domain, &weight, &radii, &epsilons)?;
    drop(frame_kernel);

    let t = config.symbol.operator(&ctx)?;
    let singular_values = linalg::singular_values(&t.action)?;
    let norm = singular_values.first().copied().unwrap_or(0.0);
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter(format!("operator {} vanishes on the realization", t.label())));
    }
    let interactions = operators::interaction_matrix(&t);
    let kernel = operators::kernel_from_interactions(&interactions, &t.label());
    // ρ is taken at ε‖T‖, so the table is tabulated at the scaled levels.
    let scaled: Vec<f64> = epsilons.iter().map(|e| e * norm).collect();
    let operator_localization = localization_report(&kernel, &domain, &weight, &radii, &scaled)?;
    let verdict =
        check_weak_localization(&operator_localization, config.thresholds.margin_cap, config.thresholds.tail_floor);

    let band = config.band();
    let rec = operators::reconstruction_from(&t, &interactions)?;
    let mut bounds = Vec::new();
    let mut approximation = Vec::new();
    let mut slack: Option<f64> = None;
    let adjoint_norms = operators::adjoint_atom_norms(&t);
    for &r in &cover_radii {
        let cover = &build_cover(&domain, r)?;
        let a = operators::approximant_from(&t, &interactions, cover)?;
        let relative_error = linalg::spectral_norm(&(&rec.action - &a.action))? / norm;
        let relative_error_to_t = linalg::spectral_norm(&(&t.action - &a.action))? / norm;
        approximation.push(ApproximationRow {
            r,
            cells: cover.cells.len(),
            overlap_n: cover.overlap_n,
            diameter_k: cover.diameter_k,
            relative_error,
            relative_error_to_t,
            cover_warning: cover.warning.clone(),
        });
        for (&eps, rho) in epsilons.iter().zip(&operator_localization.rho_table) {
            let nb = operators::norm_bound_with(&t, &kernel, &adjoint_norms, cover, eps, Some(*rho))?;
            let eb = operators::essential_norm_bound_with(&t, &kernel, &adjoint_norms, cover, eps, band, Some(*rho))?;
            let admissible = rho.admits(r);
            if admissible {
                let s = (relative_error - eps).max(0.0);
                slack = Some(slack.map_or(s, |v| v.max(s)));
            }
            bounds.push(BoundRow {
                r,
                epsilon: eps,
                overlap_n: cover.overlap_n,
                diameter_k: cover.diameter_k,
                norm,
                bound: nb.bound,
                adjoint_bound: nb.adjoint_bound,
                essential_bound: eb.bound,
                rho_low: rho.low,
                rho_high: rho.high,
                admissible,
            });
        }
    }
    drop(kernel);

    let b = operators::berezin_from_interactions(&interactions);
    drop(interactions);
    let base = domain.base_distances();
    let mut berezin_profile: Vec<BerezinSample> =
        b.iter().zip(base).map(|(z, &d)| BerezinSample { d_to_basepoint: d, magnitude: z.norm() }).collect();
    berezin_profile.sort_by(|p, q| p.d_to_basepoint.total_cmp(&q.d_to_basepoint).then(p.magnitude.total_cmp(&q.magnitude)));

    let proxy = operators::singular_value_proxy(&singular_values, config.k0, config.thresholds.sv_ratio);
    let margin = operators::compactness_margin_with(&t, band, &adjoint_norms)?;
    let (berezin, berezin_refusal) =
        match operators::berezin_verdict(&t, &b, band, config.thresholds.berezin, &verdict, norm) {
            Ok(v) => (Some(v), None),
            Err(Error::NotLocalized(reasons)) => (None, Some(reasons)),
            Err(e) => return Err(e),
        };
    let concordant = berezin.as_ref().map(|v| v.verdict == proxy.verdict);
    let compactness = CompactnessSummary { band, berezin, berezin_refusal, proxy, margin, concordant };

    let affine = match config.experiment {
        ExperimentKind::CalderonToeplitz => Some(affine_extras(config, &ctx, &weight)?),
        _ => None,
    };
    let disc = match config.experiment {
        ExperimentKind::Bergman => Some(disc_extras(config, &ctx, &t)?),
        _ => None,
    };

    Ok(ExperimentReport {
        config: config.clone(),
        frame: frame_summary,
        frame_localization,
        operator: OperatorSummary {
            label: t.label(),
            norm,
            compactly_supported_symbol: config.symbol.is_compactly_supported(),
        },
        operator_localization,
        localization_verdict: verdict,
        bounds,
        approximation,
        approximation_slack: slack,
        berezin_profile,
        singular_values,
        compactness,
        affine,
        disc,
    })
}

fn affine_extras(
    config: &ExperimentConfig,
    ctx: &Arc<FrameContext>,
    weight: &Weight,
) -> Result<AffineExtras> {
    let ms = config.pointwise_m.clone().unwrap_or_else(|| DEFAULT_POINTWISE_M.to_vec());
    let cs = config.pointwise_c.clone().unwrap_or_else(|| DEFAULT_POINTWISE_C.to_vec());
    let ladder = config.ladder.unwrap_or(DEFAULT_LADDER);
    let mut pointwise = Vec::with_capacity(ms.len() * cs.len());
    for &m in &ms {
        for &c in &cs {
            pointwise.push(localization::pointwise_localization_check(&ctx.frame, m, c, ladder)?);
        }
    }
    let pointwise_fails_everywhere = pointwise.iter().all(PointwiseReport::violated);

    let h = config.stability_resolution.unwrap_or(DEFAULT_STABILITY_RESOLUTION);
    let truncations = config.stability_truncations.unwrap_or(DEFAULT_STABILITY_TRUNCATIONS);
    let space = ctx.domain().space;
    let mut row_margins = [0.0; 2];
    let mut col_margins = [0.0; 2];
    for (k, &r) in truncations.iter().enumerate() {
        let domain = affine_grid(&space, h, h, r)?;
        let nodes = &domain.nodes;
        let kernel = KernelMatrix::from_fn(nodes.len(), "haar", |x, y| {
            frames::haar_inner(&nodes[y], &nodes[x]).abs() / std::f64::consts::LN_2
        });
        let rep = localization_report(&kernel, &domain, weight, &default_radii(&domain), &[])?;
        row_margins[k] = rep.schur_row_margin;
        col_margins[k] = rep.schur_col_margin;
    }
    let change = relative_change(row_margins[0], row_margins[1]).max(relative_change(col_margins[0], col_margins[1]));
    Ok(AffineExtras {
        pointwise,
        pointwise_fails_everywhere,
        stability: MarginStability {
            resolution: h,
            truncations,
            row_margins,
            col_margins,
            relative_change: change,
            stable: change <= STABILITY_TOLERANCE,
        },
    })
}

fn disc_extras(config: &ExperimentConfig, ctx: &Arc<FrameContext>, t: &LocalizedOperator) -> Result<DiscExtras> {
    let degree_cap = ctx.frame.dim() - 1;
    let rows = DIAGONAL_ROWS.min(degree_cap + 1);
    let diagonal = (0..rows).map(|n| DiagonalEntry { n, value: t.action[[n, n]].re }).collect();
    let (mut diag, mut off) = (0.0, 0.0);
    for ((i, j), z) in t.action.indexed_iter() {
        if i == j {
            diag += z.norm_sqr();
        } else {
            off += z.norm_sqr();
        }
    }
    let hankel_symbol = config.hankel_symbol.clone().unwrap_or(SymbolSpec::Zbar);
    let hankel_degree = config.hankel_degree.unwrap_or(DEFAULT_HANKEL_DEGREE);
    let hankel = disc::hankel_identity_residual(&hankel_symbol.symbol(&ctx.domain().space)?, hankel_degree)?;
    Ok(DiscExtras {
        degree_cap,
        diagonal,
        off_diagonal_ratio: if diag > 0.0 { off / diag } else { 0.0 },
        hankel_symbol: hankel_symbol.to_string(),
        hankel,
    })
}

fn require(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::InvalidParameter(format!("expected a {kind} configuration, got {}", config.experiment)));
    }
    Ok(())
}

pub fn run_anti_wick(config: &ExperimentConfig) -> Result<ExperimentReport> {
    require(config, ExperimentKind::AntiWick)?;
    run_experiment(config)
}

pub fn run_calderon_toeplitz(config: &ExperimentConfig) -> Result<ExperimentReport> {
    require(config, ExperimentKind::CalderonToeplitz)?;
    run_experiment(config)
}

pub fn run_bergman(config: &ExperimentConfig) -> Result<ExperimentReport> {
    require(config, ExperimentKind::Bergman)?;
    run_experiment(config)
}

/// The operator suite: symbols per setting at the default grids.
pub fn suite() -> Vec<ExperimentConfig> {
    use SymbolSpec::*;
    let mut out = Vec::new();
    let gabor = [
        Constant(1.0),
        Indicator(1.0),
        Ball(1.5),
        Oscillatory(2.0),
        Product(Box::new(Oscillatory(2.0)), Box::new(Indicator(1.0))),
    ];
    let haar = [Constant(1.0), Ball(0.6), UpperHalf];
    let bergman = [
        Constant(1.0),
        DiscIndicator(0.5),
        RadialPower(2),
        Product(Box::new(RadialPower(2)), Box::new(DiscIndicator(0.5))),
    ];
    for (kind, symbols) in [
        (ExperimentKind::AntiWick, &gabor[..]),
        (ExperimentKind::CalderonToeplitz, &haar[..]),
        (ExperimentKind::Bergman, &bergman[..]),
    ] {
        for s in symbols {
            out.push(ExperimentConfig { symbol: s.clone(), ..ExperimentConfig::default_for(kind) });
        }
    }
    out
}
