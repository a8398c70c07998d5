//! Command-line front end: dataset generation, margin solving, single GD
//! runs, transition-time sweeps, worst-case verifiers, and the inequality
//! suite.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};

use bigstep::dataset::{
    generate_random, load_csv, max_margin_2d, max_margin_grid, save_csv, CertificateKind, Dataset,
    MarginCertificate,
};
use bigstep::diagnostics::{
    default_horizon, detect_oscillations, detect_oscillations_general, oscillations_to_csv,
    transition_time, DerivedConstants,
};
use bigstep::engine::{run, RunConfig, StopRule, Trajectory};
use bigstep::experiments::svg::{emit_svg, AxesSpec};
use bigstep::experiments::{sweep_tau_vs_eta, sweep_to_csv, NRule, SweepConfig, ThresholdKind};
use bigstep::lowerbound::{verify_classify_bound, verify_stable_bound};
use bigstep::theory::{reports_to_json, verify_all, verify_lemma, CheckContext, LemmaId};

#[derive(Parser)]
#[command(
    name = "bigstep",
    about = "Gradient descent with large step sizes on separable logistic regression: \
             simulate, diagnose oscillations, verify inequalities, and sweep."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    /// 1/(8 eta)
    Eighth,
    /// 2/eta
    Two,
}

impl From<ThresholdArg> for ThresholdKind {
    fn from(v: ThresholdArg) -> Self {
        match v {
            ThresholdArg::Eighth => ThresholdKind::Eighth,
            ThresholdArg::Two => ThresholdKind::Two,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HardKind {
    Classify,
    Stable,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV (header x1,...,xd,y).
    #[arg(long)]
    data: PathBuf,
    /// Fold labels and rescale to unit max norm on load.
    #[arg(long)]
    normalize: bool,
    /// Declare the margin along e1 instead of solving for it (required for
    /// d > 2; generated datasets satisfy it by construction).
    #[arg(long)]
    nominal_gamma: Option<f64>,
}

impl DataArgs {
    fn load(&self) -> Result<(Dataset, MarginCertificate), Box<dyn std::error::Error>> {
        let data = load_csv(&self.data, self.normalize)?;
        let cert = match self.nominal_gamma {
            Some(gamma) => {
                let d = data.dim();
                let mut w_star = vec![0.0; d];
                w_star[0] = 1.0;
                let v_star = (d == 2).then(|| vec![-0.0, 1.0]);
                let cert = MarginCertificate {
                    gamma,
                    w_star,
                    v_star,
                    kind: CertificateKind::Nominal,
                    support: Vec::new(),
                };
                let worst = data.min_margin(&cert.w_star);
                if worst < gamma - 1e-9 {
                    return Err(format!(
                        "declared margin {gamma} not met: min margin along e1 is {worst}"
                    )
                    .into());
                }
                cert
            }
            None => max_margin_2d(&data)?,
        };
        Ok((data, cert))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random dataset with a guaranteed margin along e1.
    Gen {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the max margin of a 2-D dataset (exact, plus optional grid
    /// oracle cross-check).
    Margin {
        #[command(flatten)]
        data: DataArgs,
        /// Also run the angle-grid oracle at this resolution.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run GD and write the instrumented trajectory.
    Run(RunArgs),
    /// Transition-time sweep over (d, eta) cells of random datasets.
    Sweep(SweepArgs),
    /// Build a worst-case dataset and verify its transition-time floor.
    Lowerbound {
        #[arg(long, value_enum)]
        kind: HardKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        /// Step size; defaults to the lower-bound regime threshold exactly.
        #[arg(long)]
        eta: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run GD and evaluate the inequality suite on the trajectory.
    Verify {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        t_max: Option<usize>,
        #[arg(long, default_value_t = 200)]
        grace: usize,
        /// Check a single inequality by name instead of the whole suite.
        #[arg(long)]
        lemma: Option<String>,
        /// Output directory (trajectory.csv and lemmas.json).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    eta: f64,
    /// Step budget; defaults to four times the closed-form transition
    /// bound for (n, gamma).
    #[arg(long)]
    t_max: Option<usize>,
    /// Stop threshold selection.
    #[arg(long, value_enum, default_value_t = ThresholdArg::Eighth)]
    threshold: ThresholdArg,
    /// Extra steps after the threshold is reached.
    #[arg(long, default_value_t = 200)]
    grace: usize,
    /// Record per-example margins (needed by the margin-dependent
    /// checkers).
    #[arg(long)]
    margins: bool,
    /// Start point override, comma-separated (default: origin).
    #[arg(long)]
    w0: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "d")]
    dims: Vec<usize>,
    #[arg(long = "eta")]
    etas: Vec<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Fixed dataset size for every cell (default: n = d).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    threshold: Option<ThresholdArg>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    per_cell: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory (sweep.csv and sweep.svg).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    eta: f64,
    d: usize,
    n: usize,
    gamma: f64,
    certificate_kind: &'a CertificateKind,
    tau_eighth: Option<usize>,
    tau_two: Option<usize>,
    steps_recorded: usize,
    final_loss: f64,
    oscillations: usize,
    lambda: f64,
    lambda_tilde: f64,
    eta0: f64,
    eta1: f64,
    notes: &'a [String],
}

fn write_trajectory_outputs(
    out_dir: &Path,
    traj: &Trajectory,
    cert: &MarginCertificate,
) -> Result<usize, Box<dyn std::error::Error>> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trajectory.csv"), traj.to_csv())?;
    let constants = &traj.constants;
    let events = if traj.d == 2 {
        detect_oscillations(traj, constants)
    } else {
        detect_oscillations_general(traj, cert, constants)
    };
    std::fs::write(out_dir.join("oscillations.csv"), oscillations_to_csv(&events))?;
    Ok(events.len())
}

fn cmd_run(args: &RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let (data, cert) = args.data.load()?;
    let eta = args.eta;
    let constants = DerivedConstants::new(eta, cert.gamma, data.len());
    let stop_threshold = ThresholdKind::from(args.threshold).value(eta);
    let t_max = args
        .t_max
        .unwrap_or_else(|| default_horizon(data.len(), cert.gamma));
    let w0 = match &args.w0 {
        Some(spec) => Some(
            spec.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()?,
        ),
        None => None,
    };
    let cfg = RunConfig {
        eta,
        t_max,
        record_margins: args.margins,
        stop: StopRule::AfterTransition {
            threshold: stop_threshold,
            grace: args.grace,
        },
        w0,
    };
    let traj = run(&data, &cert, &cfg)?;
    let oscillations = write_trajectory_outputs(&args.out, &traj, &cert)?;
    let summary = RunSummary {
        eta,
        d: traj.d,
        n: traj.n,
        gamma: cert.gamma,
        certificate_kind: &cert.kind,
        tau_eighth: transition_time(&traj, constants.tau_threshold),
        tau_two: transition_time(&traj, constants.loose_threshold),
        steps_recorded: traj.num_records(),
        final_loss: traj.records.last().expect("nonempty").loss,
        oscillations,
        lambda: constants.lambda,
        lambda_tilde: constants.lambda_tilde,
        eta0: constants.eta0,
        eta1: constants.eta1,
        notes: &traj.notes,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(args.out.join("summary.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut config: SweepConfig = match &args.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => SweepConfig::default(),
    };
    if !args.dims.is_empty() {
        config.dims = args.dims.clone();
    }
    if !args.etas.is_empty() {
        config.etas = args.etas.clone();
    }
    if let Some(g) = args.gamma {
        config.gamma = g;
    }
    if let Some(n) = args.n {
        config.n_rule = NRule::Fixed(n);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.threshold {
        config.threshold = t.into();
    }
    if let Some(t) = args.t_max {
        config.t_max = t;
    }
    if let Some(p) = args.per_cell {
        config.datasets_per_cell = p;
    }

    let rows = sweep_tau_vs_eta(&config, args.workers)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("sweep.csv"), sweep_to_csv(&rows))?;
    std::fs::write(
        args.out.join("sweep.svg"),
        emit_svg(&rows, &AxesSpec::default())?,
    )?;
    for r in &rows {
        let worst = r
            .worst_tau
            .map(|t| t.to_string())
            .unwrap_or_else(|| "-".into());
        println!(
            "d={:<4} eta={:<10} worst_tau={:<8} mean_tau={:<10.3} not_transitioned={} ({:.2}s)",
            r.d, r.eta, worst, r.mean_tau, r.not_transitioned, r.wall_time
        );
    }
    Ok(())
}

fn cmd_verify(
    data_args: &DataArgs,
    eta: f64,
    t_max: Option<usize>,
    grace: usize,
    lemma: &Option<String>,
    out: &Path,
) -> Result<(), Box<dyn std::error::Error>> {
    let (data, cert) = data_args.load()?;
    let t_max = t_max.unwrap_or_else(|| default_horizon(data.len(), cert.gamma));
    let threshold = 1.0 / (8.0 * eta);
    let cfg = RunConfig {
        eta,
        t_max,
        record_margins: true,
        stop: StopRule::AfterTransition { threshold, grace },
        w0: None,
    };
    let traj = run(&data, &cert, &cfg)?;
    write_trajectory_outputs(out, &traj, &cert)?;
    let ctx = CheckContext::from_run(&data, &traj, &cert)?;
    let reports = match lemma {
        Some(name) => {
            let id = LemmaId::from_name(name)
                .ok_or_else(|| format!("unknown inequality name: {name}"))?;
            vec![verify_lemma(id, &ctx)?]
        }
        None => verify_all(&ctx),
    };
    std::fs::write(out.join("lemmas.json"), reports_to_json(&reports))?;
    let mut failed = 0usize;
    for r in &reports {
        let status = serde_json::to_value(r.status)?;
        println!(
            "{:<28} {:<8} worst_slack={:<14} worst_t={:<8} checked={}",
            r.id.name(),
            status.as_str().unwrap_or("?"),
            r.worst_slack.map(|s| format!("{s:.3e}")).unwrap_or_else(|| "-".into()),
            r.worst_t.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            r.checked_count
        );
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(format!("{failed} inequality check(s) failed").into());
    }
    Ok(())
}

fn cmd_lowerbound(
    kind: HardKind,
    n: usize,
    gamma: f64,
    eta: Option<f64>,
    out: &Path,
) -> Result<(), Box<dyn std::error::Error>> {
    let eta = eta.unwrap_or_else(|| bigstep::diagnostics::eta1(gamma, n));
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("trajectory.csv");
    let json = match kind {
        HardKind::Classify => {
            let (report, traj) = verify_classify_bound(n, gamma, eta)?;
            std::fs::write(&csv_path, traj.to_csv())?;
            serde_json::json!({
                "kind": "classify",
                "report": report,
                "trajectory_csv_path": csv_path,
            })
        }
        HardKind::Stable => {
            let (report, traj) = verify_stable_bound(n, gamma, eta)?;
            std::fs::write(&csv_path, traj.to_csv())?;
            serde_json::json!({
                "kind": "stable",
                "report": report,
                "trajectory_csv_path": csv_path,
            })
        }
    };
    let text = serde_json::to_string_pretty(&json)?;
    std::fs::write(out.join("report.json"), &text)?;
    println!("{text}");
    let passed = json["report"]["passed"].as_bool().unwrap_or(false);
    if !passed {
        return Err("lower-bound verification failed".into());
    }
    Ok(())
}

fn real_main() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Gen {
            d,
            n,
            gamma,
            seed,
            out,
        } => {
            let (data, cert) = generate_random(*d, *n, *gamma, *seed)?;
            save_csv(&data, out)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
        }
        Cmd::Margin { data, grid } => {
            let loaded = load_csv(&data.data, data.normalize)?;
            let exact = max_margin_2d(&loaded)?;
            let mut doc = serde_json::json!({ "exact": exact });
            if let Some(resolution) = grid {
                let oracle = max_margin_grid(&loaded, *resolution)?;
                doc["grid"] = serde_json::to_value(&oracle)?;
                doc["gamma_difference"] =
                    serde_json::json!((exact.gamma - oracle.gamma).abs());
            }
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Cmd::Run(args) => cmd_run(args)?,
        Cmd::Sweep(args) => cmd_sweep(args)?,
        Cmd::Lowerbound {
            kind,
            n,
            gamma,
            eta,
            out,
        } => cmd_lowerbound(*kind, *n, *gamma, *eta, out)?,
        Cmd::Verify {
            data,
            eta,
            t_max,
            grace,
            lemma,
            out,
        } => cmd_verify(data, *eta, *t_max, *grace, lemma, out)?,
    }
    Ok(())
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
