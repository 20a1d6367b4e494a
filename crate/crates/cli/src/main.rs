//! `wloc`: weak-localization diagnostics and operator experiments from the command line.
//!
//! Exit codes: 0 success, 1 error, 2 negative verdict (kernel not localized, or no
//! compactness verdict could be issued).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use wloc::diagnostics::{run_localization, FrameSetting, KernelSource, LocalizeConfig};
use wloc::experiments::{run_experiment, ExperimentConfig, ExperimentKind, SymbolSpec, WeightSpec};
use wloc::{export, linalg, Error};

#[derive(Parser, Debug)]
#[command(name = "wloc", version, about = "Weak localization of continuous frames and localized operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check p-weak localization of a frame kernel.
    Localize(LocalizeArgs),
    /// Run an operator experiment: anti-wick, calderon-toeplitz or bergman.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    truncation: Option<f64>,
    /// Affine grids only: translation step b/a.
    #[arg(long)]
    shift_resolution: Option<f64>,
    /// const, affine:<delta> or disc:<beta>.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long = "epsilon")]
    epsilons: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Thread cap for the BLAS backend.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for the report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit without computing.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    /// gabor, affine or disc.
    #[arg(long)]
    space: Option<String>,
    /// frame, or constant-one for a non-localized control kernel.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    margin_cap: Option<f64>,
    #[arg(long)]
    tail_floor: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct RunArgs {
    experiment: String,
    /// Must agree with the experiment when given.
    #[arg(long)]
    space: Option<String>,
    /// Symbol such as constant, indicator, ball:0.6, radial:r2 or a product a*b.
    #[arg(long)]
    symbol: Option<String>,
    /// Parameter of indicator, ball and disc-indicator symbols.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long = "cover-r")]
    cover_radii: Vec<f64>,
    #[arg(long)]
    k0: Option<usize>,
    /// Bergman only: degree cap of the monomial realization.
    #[arg(long)]
    degree_cap: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &Option<String>) -> Result<Option<T>, Error> {
    s.as_deref().map(str::parse).transpose()
}

fn with_half_width(symbol: SymbolSpec, explicit: bool, hw: f64) -> Result<SymbolSpec, Error> {
    match symbol {
        SymbolSpec::Indicator(_) => Ok(SymbolSpec::Indicator(hw)),
        SymbolSpec::Ball(_) => Ok(SymbolSpec::Ball(hw)),
        SymbolSpec::DiscIndicator(_) => Ok(SymbolSpec::DiscIndicator(hw)),
        s if explicit => Err(Error::InvalidParameter(format!("--half-width does not apply to symbol {s}"))),
        s => Ok(s),
    }
}

fn resolve_symbol(args: &RunArgs, current: SymbolSpec) -> Result<SymbolSpec, Error> {
    let (symbol, explicit) = match &args.symbol {
        // `--symbol indicator --half-width 1`: the flag supplies the missing parameter.
        Some(s) if args.half_width.is_some() && !s.contains(':') && !s.contains('*') => (s.parse()?, true),
        Some(s) if args.half_width.is_some() => {
            return Err(Error::InvalidParameter(format!("--half-width conflicts with the parameter in '{s}'")))
        }
        Some(s) => return s.parse(),
        None => (current, false),
    };
    match args.half_width {
        Some(hw) => with_half_width(symbol, explicit, hw),
        None => Ok(symbol),
    }
}

fn apply_common_run(c: &Common, cfg: &mut ExperimentConfig) -> Result<(), Error> {
    if let Some(v) = c.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = c.truncation {
        cfg.truncation = v;
    }
    if c.shift_resolution.is_some() {
        cfg.shift_resolution = c.shift_resolution;
    }
    if let Some(w) = parse::<WeightSpec>(&c.weight)? {
        cfg.weight = w;
    }
    if !c.epsilons.is_empty() {
        cfg.epsilons = c.epsilons.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    Ok(())
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let kind: ExperimentKind = args.experiment.parse()?;
    if let Some(space) = parse::<FrameSetting>(&args.space)? {
        if space.experiment() != kind {
            return Err(Error::InvalidParameter(format!("space {space} does not match experiment {kind}")));
        }
    }
    let mut cfg = match &args.common.config {
        Some(path) => {
            let cfg: ExperimentConfig = read_config(path)?;
            if cfg.experiment != kind {
                return Err(Error::InvalidParameter(format!(
                    "config file describes {} but the command asks for {kind}",
                    cfg.experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::default_for(kind),
    };
    apply_common_run(&args.common, &mut cfg)?;
    cfg.symbol = resolve_symbol(args, cfg.symbol.clone())?;
    if !args.cover_radii.is_empty() {
        cfg.cover_radii = args.cover_radii.clone();
    }
    if let Some(k) = args.k0 {
        cfg.k0 = k;
    }
    if args.degree_cap.is_some() {
        cfg.degree_cap = args.degree_cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn localize_config(args: &LocalizeArgs) -> Result<LocalizeConfig, Error> {
    let c = &args.common;
    let mut cfg = match (&c.config, parse::<FrameSetting>(&args.space)?) {
        (Some(path), space) => {
            let cfg: LocalizeConfig = read_config(path)?;
            match space {
                Some(s) if s != cfg.space => LocalizeConfig { space: s, ..LocalizeConfig::default_for(s) },
                _ => cfg,
            }
        }
        (None, Some(space)) => LocalizeConfig::default_for(space),
        (None, None) => return Err(Error::InvalidParameter("localize needs --space or --config".into())),
    };
    if let Some(v) = c.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = c.truncation {
        cfg.truncation = v;
    }
    if c.shift_resolution.is_some() {
        cfg.shift_resolution = c.shift_resolution;
    }
    if let Some(w) = parse::<WeightSpec>(&c.weight)? {
        cfg.weight = w;
    }
    if let Some(k) = parse::<KernelSource>(&args.kernel)? {
        cfg.kernel = k;
    }
    if !c.epsilons.is_empty() {
        cfg.epsilons = c.epsilons.clone();
    }
    if let Some(v) = args.margin_cap {
        cfg.margin_cap = v;
    }
    if let Some(v) = args.tail_floor {
        cfg.tail_floor = v;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_localize(args: &LocalizeArgs) -> Result<u8, Error> {
    let cfg = localize_config(args)?;
    if args.common.print_config {
        print!("{}", export::to_json(&cfg)?);
        return Ok(0);
    }
    let study = run_localization(&cfg)?;
    let out = args.common.out.clone().unwrap_or_else(|| PathBuf::from("wloc-out").join("localize"));
    export::write_localization_bundle(&out, &study, &study.report)?;
    let r = &study.report;
    let tail = r.last_tail().and_then(|e| e.worst().map(|t| (e.radius, t)));
    let tail = tail.map_or("no tail radius".into(), |(rad, t)| format!("tail {t:.4e} at radius {rad:.3}"));
    println!(
        "localize {} ({} kernel, weight {}): {}; margins {:.4}/{:.4}; {tail}",
        cfg.space,
        cfg.kernel,
        cfg.weight,
        if study.verdict.localized { "localized" } else { "not localized" },
        r.schur_row_margin,
        r.schur_col_margin,
    );
    for reason in &study.verdict.reasons {
        println!("  {reason}");
    }
    Ok(if study.verdict.localized { 0 } else { 2 })
}

fn cmd_run(args: &RunArgs) -> Result<u8, Error> {
    let cfg = run_config(args)?;
    if args.common.print_config {
        print!("{}", export::to_json(&cfg)?);
        return Ok(0);
    }
    let report = run_experiment(&cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("wloc-out").join(cfg.experiment.name()));
    export::write_report_bundle(&out, &report)?;
    println!("{}", report.summary());
    Ok(if report.verdict().is_some() { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = match &cli.command {
        Command::Localize(a) => a.common.threads,
        Command::Run(a) => a.common.threads,
    };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        linalg::set_blas_threads(n);
    }
    let result = match &cli.command {
        Command::Localize(a) => cmd_localize(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
