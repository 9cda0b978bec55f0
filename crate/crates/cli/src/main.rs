use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use recovery_risk::allocation::allocation_property_check;
use recovery_risk::balance::{sample_scenarios, BalanceSheetModel};
use recovery_risk::calibration::{
    calibrate_gamma, discretize_gamma, verify_calibration, CalibrationInput, DEFAULT_PIECES,
};
use recovery_risk::frontier::{efficient_frontier, LpFormulation, PortfolioProblem};
use recovery_risk::io::{self as rio, fmt, parse_fraction, parse_grid};
use recovery_risk::measures::{self, MeasureKind, DEFAULT_GRID_POINTS};
use recovery_risk::recadj::{case_study_sweep, rec_adj, regulatory_capital, AggRecAdjConfig, RegulatoryRegime};
use recovery_risk::stress::{
    extremal_construction, peaked_rec_adj, peaked_regulatory, peaked_revar, ExtremalSearchConfig, PeakedLiabilityModel,
    PeakedRegime, TwoStateCase,
};
use recovery_risk::{Error, RecoveryFunction, WeightedSample};

mod selftest;

#[derive(Parser)]
#[command(
    name = "recrisk",
    version,
    about = "Recovery risk measures: simulation, evaluation, calibration, allocation and frontiers"
)]
struct Cli {
    /// Log informational messages to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate balance-sheet scenarios.
    Simulate(SimulateArgs),
    /// Evaluate a measure on a scenario file.
    Measure(MeasureArgs),
    /// Recovery adjustments of regulatory capital.
    Recadj {
        #[command(subcommand)]
        command: RecadjCommand,
    },
    /// Closed-form stress cases.
    Stress {
        #[command(subcommand)]
        command: StressCommand,
    },
    /// Calibrate a level function to a V@R regime under normal ΔE and L.
    Calibrate(CalibrateArgs),
    /// Euler allocation of ReAV@R capital to divisions.
    Allocate(AllocateArgs),
    /// ReAV@R efficient frontier.
    Frontier(FrontierArgs),
    /// Run the embedded oracle checks.
    Selftest,
}

/// Fraction in decimal or percent form.
fn fraction(s: &str) -> Result<f64, String> {
    parse_fraction(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON; defaults are used for missing fields.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "M", default_value_t = 100_000)]
    m: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the copula correlation.
    #[arg(long, value_parser = fraction)]
    rho: Option<f64>,
    /// Override the tail shape.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureName {
    Var,
    Avar,
    Revar,
    Reavar,
    RevarGrid,
    ReavarGrid,
    Lrevar,
    Lreavar,
    Solvency,
    RecoveryCurve,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Recovery function JSON (required except for var and avar).
    #[arg(long)]
    gamma: Option<PathBuf>,
    #[arg(long, value_enum)]
    measure: MeasureName,
    /// Level for var and avar.
    #[arg(long, value_parser = fraction)]
    alpha: Option<f64>,
    /// Available capital for the solvency test.
    #[arg(long = "E0")]
    e0: Option<f64>,
    /// Test measure for the solvency verdict.
    #[arg(long = "test-measure", default_value = "var")]
    test_measure: String,
    /// λ-grid points for the grid and liability-side variants.
    #[arg(long = "grid", default_value_t = DEFAULT_GRID_POINTS)]
    n_lambda: usize,
    /// λ values for the recovery curve.
    #[arg(long, default_value = "0:1:11")]
    lambdas: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Subcommand)]
enum RecadjCommand {
    /// Case-study sweep over correlation, tail shape and regime.
    Sweep(SweepArgs),
    /// RecAdj of one scenario file.
    Single(SingleArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "0.1:0.9:9")]
    rho: String,
    #[arg(long, default_value = "1:5:5")]
    tau: String,
    #[arg(long, default_value = "sii,sst")]
    regime: String,
    #[arg(long = "M", default_value_t = 100_000)]
    m: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// AggRecAdj rectangle and grid as JSON.
    #[arg(long = "agg-config")]
    agg_config: Option<PathBuf>,
    #[arg(long = "n-beta")]
    n_beta: Option<usize>,
    #[arg(long = "n-r")]
    n_r: Option<usize>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct SingleArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    gamma: PathBuf,
    #[arg(long, default_value = "sii")]
    regime: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Subcommand)]
enum StressCommand {
    /// Closed forms of the peaked liability model.
    Peaked(PeakedArgs),
    /// Model attaining the largest recovery adjustment.
    Extremal(ExtremalArgs),
    /// Closed forms of the two-state contract.
    TwoState(TwoStateArgs),
}

#[derive(Args)]
struct PeakedArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    k: f64,
    #[arg(long = "E0")]
    e0: f64,
    #[arg(long, value_parser = fraction)]
    beta: f64,
    #[arg(long, value_parser = fraction)]
    r: f64,
    #[arg(long, value_parser = fraction, default_value = "0.005")]
    alpha: f64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Var,
    Avar,
}

#[derive(Args)]
struct ExtremalArgs {
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[arg(long)]
    smin: f64,
    #[arg(long)]
    smax: f64,
    #[arg(long, value_parser = fraction)]
    beta: f64,
    #[arg(long, value_parser = fraction)]
    r: f64,
    #[arg(long = "E0")]
    e0: f64,
    #[arg(long, value_parser = fraction, default_value = "0.005")]
    alpha: f64,
    /// Width of the body peak; defaults to 10·E0.
    #[arg(long)]
    anchor: Option<f64>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct TwoStateArgs {
    #[arg(long)]
    k: f64,
    #[arg(long, value_parser = fraction)]
    alpha: f64,
    #[arg(long, value_parser = fraction)]
    beta: f64,
    #[arg(long, value_parser = fraction)]
    r: f64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long = "mu-de", allow_hyphen_values = true)]
    mu_de: f64,
    #[arg(long = "sd-de")]
    sd_de: f64,
    #[arg(long = "mu-l")]
    mu_l: f64,
    #[arg(long = "sd-l")]
    sd_l: f64,
    #[arg(long, value_parser = fraction)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_PIECES)]
    pieces: usize,
    /// Warning threshold for P(L < 0).
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Also run the analytic and Monte Carlo checks; the report goes to stderr.
    #[arg(long)]
    verify: bool,
    #[arg(long = "M", default_value_t = 200_000)]
    m: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct AllocateArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    gamma: PathBuf,
    /// Step sizes for the RoRaC check.
    #[arg(long, default_value = "0.001,0.01")]
    h: String,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct FrontierArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    formulation: Option<FormulationArg>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Shared,
    PerPiece,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrontierConfig {
    budget: f64,
    gamma: RecoveryFunction,
    c_grid: GridSpec,
    #[serde(default)]
    formulation: LpFormulation,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

fn open_in(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let mut text = String::new();
    open_in(path)?.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())).into())
}

fn open_out(target: &str) -> anyhow::Result<Box<dyn Write>> {
    if target == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(target).with_context(|| format!("cannot create {target}"))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn write_json<T: Serialize>(target: &str, value: &T) -> anyhow::Result<()> {
    let mut w = open_out(target)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_model(path: &Option<PathBuf>) -> anyhow::Result<BalanceSheetModel> {
    let model: BalanceSheetModel = match path {
        Some(p) => read_json(p)?,
        None => BalanceSheetModel::default(),
    };
    model.validate()?;
    Ok(model)
}

fn load_gamma(path: &Path) -> anyhow::Result<RecoveryFunction> {
    read_json(path)
}

fn run_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let mut model = load_model(&args.model)?;
    if let Some(rho) = args.rho {
        model = model.with_correlation(rho);
    }
    if let Some(tau) = args.tau {
        model = model.with_tail_shape(tau);
    }
    model.validate()?;
    let scen = sample_scenarios(&model, args.m, args.seed)?;
    let mut w = open_out(&args.out)?;
    rio::write_simulated(&mut w, &scen, &model, args.seed)?;
    w.flush()?;
    Ok(())
}

/// Scenario file as (A, L): simulator files supply A, other files use x as A.
fn read_asset_side(path: &Path) -> anyhow::Result<WeightedSample> {
    match rio::read_asset_scenarios(open_in(path)?) {
        Ok(s) => Ok(s),
        Err(Error::Parse(_)) => Ok(rio::read_scenarios(open_in(path)?)?),
        Err(e) => Err(e.into()),
    }
}

fn run_measure(args: &MeasureArgs) -> anyhow::Result<()> {
    let gamma = || -> anyhow::Result<RecoveryFunction> {
        match &args.gamma {
            Some(p) => load_gamma(p),
            None => bail!(Error::InvalidParameter { name: "gamma", reason: "this measure needs --gamma".into() }),
        }
    };
    let alpha = || -> anyhow::Result<f64> {
        args.alpha.ok_or_else(|| {
            Error::InvalidParameter { name: "alpha", reason: "this measure needs --alpha".into() }.into()
        })
    };
    let out = match args.measure {
        MeasureName::Var | MeasureName::Avar => {
            let s = rio::read_scenarios(open_in(&args.scenarios)?)?;
            let kind = if matches!(args.measure, MeasureName::Var) {
                MeasureKind::ValueAtRisk
            } else {
                MeasureKind::AverageValueAtRisk
            };
            let level = alpha()?;
            json!({ "measure": kind, "level": level, "value": kind.apply(s.x(), s.weights(), level)? })
        }
        MeasureName::Revar | MeasureName::Reavar => {
            let s = rio::read_scenarios(open_in(&args.scenarios)?)?;
            let g = gamma()?;
            let eval = if matches!(args.measure, MeasureName::Revar) {
                measures::revar(&s, &g)?
            } else {
                measures::reavar(&s, &g)?
            };
            json!({ "measure": if matches!(args.measure, MeasureName::Revar) { "revar" } else { "reavar" }, "value": eval.value, "evaluation": eval })
        }
        MeasureName::RevarGrid | MeasureName::ReavarGrid => {
            let s = rio::read_scenarios(open_in(&args.scenarios)?)?;
            let g = gamma()?;
            let (name, eval) = if matches!(args.measure, MeasureName::RevarGrid) {
                ("revar-grid", measures::revar_grid(&s, &g, args.n_lambda)?)
            } else {
                ("reavar-grid", measures::reavar_grid(&s, &g, args.n_lambda)?)
            };
            json!({ "measure": name, "value": eval.value, "evaluation": eval })
        }
        MeasureName::Lrevar | MeasureName::Lreavar => {
            let s = read_asset_side(&args.scenarios)?;
            let g = gamma()?;
            let (name, eval) = if matches!(args.measure, MeasureName::Lrevar) {
                ("lrevar", measures::l_revar(&s, &g, args.n_lambda)?)
            } else {
                ("lreavar", measures::l_reavar(&s, &g, args.n_lambda)?)
            };
            json!({ "measure": name, "value": eval.value, "evaluation": eval })
        }
        MeasureName::Solvency => {
            let s = rio::read_scenarios(open_in(&args.scenarios)?)?;
            let g = gamma()?;
            let e0 =
                args.e0.ok_or(Error::InvalidParameter { name: "E0", reason: "the solvency test needs --E0".into() })?;
            let kind: MeasureKind = match args.test_measure.to_ascii_lowercase().as_str() {
                "var" | "revar" => MeasureKind::ValueAtRisk,
                "avar" | "reavar" => MeasureKind::AverageValueAtRisk,
                other => bail!(Error::InvalidTestMeasure(other.to_string())),
            };
            json!({ "measure": "solvency", "verdict": measures::solvency_test(&s, &g, e0, kind)? })
        }
        MeasureName::RecoveryCurve => {
            let s = read_asset_side(&args.scenarios)?;
            let lambdas = parse_grid(&args.lambdas)?;
            let conditional = s.x().iter().zip(s.y()).any(|(a, l)| a < l);
            json!({ "measure": "recovery-curve", "points": measures::recovery_probability_curve(&s, &lambdas, conditional)? })
        }
    };
    write_json(&args.out, &out)
}

fn run_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let rho = parse_grid(&args.rho)?;
    let tau = parse_grid(&args.tau)?;
    let regimes = args.regime.split(',').map(str::parse).collect::<Result<Vec<RegulatoryRegime>, Error>>()?;
    let mut config: AggRecAdjConfig = match &args.agg_config {
        Some(p) => read_json(p)?,
        None => AggRecAdjConfig::default(),
    };
    if let Some(n) = args.n_beta {
        config.n_beta = n;
    }
    if let Some(n) = args.n_r {
        config.n_r = n;
    }
    let rows = case_study_sweep(&model, &rho, &tau, &regimes, args.m, args.seed, &config)?;
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    w.write_record([
        "rho",
        "tau",
        "regime",
        "loss_prob",
        "reg_capital",
        "reg_measure_E1",
        "solvency_ratio",
        "agg_rec_adj_integral",
        "agg_rec_adj_mean",
    ])?;
    for r in rows {
        w.write_record([
            fmt(r.rho),
            fmt(r.tau),
            r.regime.clone(),
            fmt(r.loss_prob),
            fmt(r.reg_capital),
            fmt(r.reg_measure_e1),
            fmt(r.solvency_ratio),
            fmt(r.agg_rec_adj_integral),
            fmt(r.agg_rec_adj_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_single(args: &SingleArgs) -> anyhow::Result<()> {
    let s = rio::read_scenarios(open_in(&args.scenarios)?)?;
    let g = load_gamma(&args.gamma)?;
    let regime: RegulatoryRegime = args.regime.parse()?;
    let capital = regulatory_capital(&s, &regime)?;
    let revar = measures::revar(&s, &g)?;
    let adj = rec_adj(&s, &g, &regime)?;
    write_json(
        &args.out,
        &json!({ "regime": regime.label(), "reg_capital": capital, "revar": revar.value, "rec_adj": adj }),
    )
}

fn optional<T>(r: recovery_risk::Result<T>) -> Option<T> {
    r.ok()
}

fn run_peaked(args: &PeakedArgs) -> anyhow::Result<()> {
    let model = PeakedLiabilityModel::with_alpha(args.a, args.b, args.c, args.alpha, args.k, args.e0)?;
    let reg = peaked_regulatory(&model)?;
    let revar = peaked_revar(&model, args.beta, args.r)?;
    let q = model.tail_quantile(args.beta)?;
    write_json(
        &args.out,
        &json!({
            "model": model,
            "xi": model.xi(),
            "var_alpha": reg.var,
            "avar_2alpha": reg.avar,
            "q_beta": q,
            "revar": revar,
            "rec_adj_var": optional(peaked_rec_adj(&model, args.beta, args.r, PeakedRegime::Var)),
            "rec_adj_avar": optional(peaked_rec_adj(&model, args.beta, args.r, PeakedRegime::Avar)),
        }),
    )
}

fn run_extremal(args: &ExtremalArgs) -> anyhow::Result<()> {
    let regime = match args.regime {
        RegimeArg::Var => PeakedRegime::Var,
        RegimeArg::Avar => PeakedRegime::Avar,
    };
    let cfg = ExtremalSearchConfig {
        s_min: args.smin,
        s_max: args.smax,
        regime,
        beta: args.beta,
        r: args.r,
        alpha: args.alpha,
        anchor_a: args.anchor,
    };
    write_json(&args.out, &extremal_construction(&cfg, args.e0)?)
}

fn run_two_state(args: &TwoStateArgs) -> anyhow::Result<()> {
    let case = TwoStateCase::new(args.k, args.alpha, args.beta, args.r)?;
    write_json(&args.out, &json!({ "case": case, "measures": case.measures()? }))
}

fn run_calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    let input = CalibrationInput {
        mu_delta_e: args.mu_de,
        sd_delta_e: args.sd_de,
        mu_l: args.mu_l,
        sd_l: args.sd_l,
        alpha: args.alpha,
        epsilon: args.epsilon,
    };
    let g = calibrate_gamma(&input)?;
    let discrete = discretize_gamma(&g, args.pieces)?;
    if args.verify {
        let rep = verify_calibration(&input, &g, args.m, args.seed)?;
        eprintln!(
            "lambda*={} analytic={} mc_revar={} target={} rel_err={:.3e} mc={}",
            rep.lambda_star,
            if rep.analytic_pass { "pass" } else { "FAIL" },
            rep.mc_revar,
            rep.target,
            rep.mc_relative_error,
            if rep.mc_pass { "pass" } else { "FAIL" }
        );
    }
    write_json(&args.out, &discrete)
}

fn run_allocate(args: &AllocateArgs) -> anyhow::Result<()> {
    let d = rio::read_divisional(open_in(&args.scenarios)?)?;
    let g = load_gamma(&args.gamma)?;
    let h = parse_grid(&args.h)?;
    let rep = allocation_property_check(&d, &g, &h)?;
    write_json(&args.out, &rep)
}

fn run_frontier(args: &FrontierArgs) -> anyhow::Result<()> {
    let data = rio::read_portfolio(open_in(&args.problem)?)?;
    let cfg: FrontierConfig = read_json(&args.config)?;
    let c_grid = match cfg.c_grid {
        GridSpec::List(v) => v,
        GridSpec::Text(s) => parse_grid(&s)?,
    };
    let formulation = match args.formulation {
        Some(FormulationArg::Shared) => LpFormulation::SharedThreshold,
        Some(FormulationArg::PerPiece) => LpFormulation::PerPieceThreshold,
        None => cfg.formulation,
    };
    let k = data.returns.len();
    let problem = PortfolioProblem::new(data.weights, data.returns, data.liability, cfg.budget, None, cfg.gamma)?;
    let frontier = efficient_frontier(&problem, &c_grid, formulation)?;
    if !frontier.convex {
        log::warn!("frontier risk is not convex in c beyond tolerance");
    }
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header = vec!["c".to_string(), "risk".to_string()];
    header.extend((1..=k).map(|i| format!("x_{i}")));
    header.push("status".into());
    header.push("upsilon".into());
    w.write_record(&header)?;
    for p in &frontier.points {
        let mut rec = vec![fmt(p.c), p.risk.map(fmt).unwrap_or_default()];
        match &p.x {
            Some(x) => rec.extend(x.iter().map(|v| fmt(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), k)),
        }
        rec.push(p.status.as_str().into());
        rec.push(p.upsilon.map(fmt).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a)?,
        Command::Measure(a) => run_measure(a)?,
        Command::Recadj { command: RecadjCommand::Sweep(a) } => run_sweep(a)?,
        Command::Recadj { command: RecadjCommand::Single(a) } => run_single(a)?,
        Command::Stress { command: StressCommand::Peaked(a) } => run_peaked(a)?,
        Command::Stress { command: StressCommand::Extremal(a) } => run_extremal(a)?,
        Command::Stress { command: StressCommand::TwoState(a) } => run_two_state(a)?,
        Command::Calibrate(a) => run_calibrate(a)?,
        Command::Allocate(a) => run_allocate(a)?,
        Command::Frontier(a) => run_frontier(a)?,
        Command::Selftest => return Ok(selftest::run()),
    }
    Ok(true)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("RECRISK_THREADS") {
        let n: usize =
            v.trim().parse().map_err(|_| Error::Parse(format!("RECRISK_THREADS must be a count, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    let result = configure_threads().and_then(|_| dispatch(&cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
