//! Frame-level localization study behind the `localize` command.
//!
//! The frame kernel `|⟨f_x, f_y⟩|/A` is taken from the closed-form inner products on the
//! sampled grid, so no realization of the atoms is built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::experiments::{ExperimentKind, WeightSpec};
use crate::frames::{bergman_inner, gabor_inner, haar_inner};
use crate::geometry::{affine_grid, sample_grid, MetricMeasureSpace, SampledDomain, SpaceKind};
use crate::localization::{
    check_weak_localization, default_radii, localization_report, KernelMatrix, LocalizationReport,
    LocalizationVerdict, DEFAULT_MARGIN_CAP, DEFAULT_TAIL_FLOOR,
};
use crate::{Error, Result};

/// The three frame settings, named after their spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameSetting {
    Gabor,
    Affine,
    Disc,
}

impl FrameSetting {
    pub fn name(self) -> &'static str {
        match self {
            FrameSetting::Gabor => "gabor",
            FrameSetting::Affine => "affine",
            FrameSetting::Disc => "disc",
        }
    }

    pub fn space(self) -> SpaceKind {
        self.experiment().space()
    }

    /// The experiment sharing this setting's grid defaults.
    pub fn experiment(self) -> ExperimentKind {
        match self {
            FrameSetting::Gabor => ExperimentKind::AntiWick,
            FrameSetting::Affine => ExperimentKind::CalderonToeplitz,
            FrameSetting::Disc => ExperimentKind::Bergman,
        }
    }
}

impl fmt::Display for FrameSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gabor" | "euclidean" | "anti-wick" => Ok(FrameSetting::Gabor),
            "affine" | "haar" | "calderon-toeplitz" => Ok(FrameSetting::Affine),
            "disc" | "bergman" => Ok(FrameSetting::Disc),
            _ => Err(Error::InvalidParameter(format!("unknown space '{s}' (expected gabor, affine or disc)"))),
        }
    }
}

/// Which kernel the study inspects. `constant-one` is a deliberately non-localized control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSource {
    Frame,
    ConstantOne,
}

impl FromStr for KernelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(KernelSource::Frame),
            "constant-one" => Ok(KernelSource::ConstantOne),
            _ => Err(Error::InvalidParameter(format!("unknown kernel '{s}' (expected frame or constant-one)"))),
        }
    }
}

impl fmt::Display for KernelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelSource::Frame => "frame",
            KernelSource::ConstantOne => "constant-one",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    pub space: FrameSetting,
    pub resolution: f64,
    pub truncation: f64,
    /// Affine only: translation step `Δb/a`.
    #[serde(default)]
    pub shift_resolution: Option<f64>,
    pub weight: WeightSpec,
    pub kernel: KernelSource,
    pub epsilons: Vec<f64>,
    pub margin_cap: f64,
    pub tail_floor: f64,
    #[serde(default)]
    pub seed: u64,
}

impl LocalizeConfig {
    /// Grid and weight of the matching experiment's default configuration.
    pub fn default_for(space: FrameSetting) -> Self {
        let e = crate::experiments::ExperimentConfig::default_for(space.experiment());
        LocalizeConfig {
            space,
            resolution: e.resolution,
            truncation: e.truncation,
            shift_resolution: e.shift_resolution,
            weight: e.weight,
            kernel: KernelSource::Frame,
            epsilons: e.epsilons,
            margin_cap: DEFAULT_MARGIN_CAP,
            tail_floor: DEFAULT_TAIL_FLOOR,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if !(self.truncation > self.resolution && self.truncation.is_finite()) {
            return bad(format!("truncation {} must exceed the resolution {}", self.truncation, self.resolution));
        }
        if let Some(hb) = self.shift_resolution {
            if self.space != FrameSetting::Affine {
                return bad("shift_resolution applies to the affine space only".into());
            }
            if !(hb > 0.0 && hb.is_finite()) {
                return bad(format!("shift resolution must be positive, got {hb}"));
            }
        }
        self.weight.validate(self.space.space())?;
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("epsilons must be positive".into());
        }
        if !(self.margin_cap > 0.0 && self.tail_floor > 0.0) {
            return bad("margin cap and tail floor must be positive".into());
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<SampledDomain> {
        let space = MetricMeasureSpace::new(self.space.space());
        match (self.space, self.shift_resolution) {
            (FrameSetting::Affine, Some(hb)) => affine_grid(&space, self.resolution, hb, self.truncation),
            _ => sample_grid(&space, self.resolution, self.truncation),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStudy {
    pub config: LocalizeConfig,
    pub nodes: usize,
    pub kernel: String,
    pub report: LocalizationReport,
    pub verdict: LocalizationVerdict,
}

/// `|⟨f_y, f_x⟩|/A` on all node pairs, with `A` the continuum frame bound.
pub fn closed_form_kernel(space: FrameSetting, domain: &SampledDomain) -> KernelMatrix {
    let nodes = &domain.nodes;
    let n = nodes.len();
    match space {
        FrameSetting::Gabor => KernelMatrix::from_fn(n, "gabor-gaussian", |x, y| gabor_inner(&nodes[y], &nodes[x]).norm()),
        FrameSetting::Affine => KernelMatrix::from_fn(n, "haar-wavelet", |x, y| {
            haar_inner(&nodes[y], &nodes[x]).abs() / std::f64::consts::LN_2
        }),
        FrameSetting::Disc => KernelMatrix::from_fn(n, "bergman-kernel", |x, y| bergman_inner(&nodes[y], &nodes[x]).norm()),
    }
}

pub fn run_localization(config: &LocalizeConfig) -> Result<LocalizationStudy> {
    config.validate()?;
    let domain = config.domain()?;
    let kernel = match config.kernel {
        KernelSource::Frame => closed_form_kernel(config.space, &domain),
        KernelSource::ConstantOne => KernelMatrix::from_fn(domain.len(), "constant-one", |_, _| 1.0),
    };
    let report =
        localization_report(&kernel, &domain, &config.weight.weight(), &default_radii(&domain), &config.epsilons)?;
    let verdict = check_weak_localization(&report, config.margin_cap, config.tail_floor);
    Ok(LocalizationStudy { config: config.clone(), nodes: domain.len(), kernel: kernel.provenance, report, verdict })
}
