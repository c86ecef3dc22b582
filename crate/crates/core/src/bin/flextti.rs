use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flextti::scenario::{Overrides, Scenario, SuccessSource};
use flextti::study::{
    self, analyze_verdict, Axis, Engine, Grid, SimOptions, Solver, StudyError, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "flextti",
    version,
    about = "Delay analysis of one- and two-slot transmissions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form metrics under both service approximations.
    Analyze(ScenarioArgs),
    /// Evaluate engines over a parameter grid and write CSV.
    Sweep(SweepArgs),
    /// Deviation of the analytic engines from simulation.
    Compare(SweepArgs),
    /// Delay-minimizing q1.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Minimize the transmission delay only.
        #[arg(long)]
        dt_only: bool,
    },
    /// Stationary distribution of the exact chain as CSV.
    QbdDist {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// mg (matrix-geometric) or truncated.
        #[arg(long, default_value = "mg")]
        solver: Solver,
        /// Highest level written.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario file; flags below override its values.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    q1: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    /// SNR in dB for channel scenarios.
    #[arg(long, allow_hyphen_values = true)]
    gamma_db: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, StudyError> {
        let base = match &self.scenario {
            Some(path) => Scenario::load(path)?,
            None => Scenario::default(),
        };
        Ok(base.apply(&Overrides {
            lambda: self.lambda,
            q1: self.q1,
            p1: self.p1,
            p2: self.p2,
            gamma_db: self.gamma_db,
        })?)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Swept parameter: q1, lambda, p1 or p2.
    #[arg(long, default_value = "q1")]
    axis: Axis,
    /// Inclusive grid start:stop:step of the swept parameter.
    #[arg(long = "q1-grid", visible_alias = "grid", default_value = "0:1:0.05")]
    grid: Grid,
    /// Comma-separated engines.
    #[arg(long, default_value = "analytic-simple,analytic-refined,qbd,sim")]
    engines: String,
    #[arg(long, default_value_t = flextti::sim::DEFAULT_HORIZON)]
    slots: u64,
    #[arg(long, default_value_t = flextti::sim::DEFAULT_WARMUP)]
    warmup: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent replicates per grid point; 2 or more adds 95% intervals.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec, StudyError> {
        let mut scenario = self.scenario.load()?;
        // The swept value itself need not be given.
        let start = Some(self.grid.start);
        match (self.axis, &mut scenario.success) {
            (Axis::Q1, _) => scenario.q1 = scenario.q1.or(start),
            (Axis::Lambda, _) => scenario.lambda = scenario.lambda.or(start),
            (Axis::P1, SuccessSource::Explicit { p1, .. }) => *p1 = p1.or(start),
            (Axis::P2, SuccessSource::Explicit { p2, .. }) => *p2 = p2.or(start),
            _ => {}
        }
        let base = scenario.resolve()?;
        Ok(SweepSpec {
            base,
            axis: self.axis,
            grid: self.grid,
            engines: Engine::parse_list(&self.engines)?,
            sim: SimOptions {
                slots: self.slots,
                warmup: self.warmup,
                seed: self.seed,
                reps: self.reps,
            },
        })
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, StudyError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), StudyError> {
    match cli.command {
        Command::Analyze(args) => {
            let params = args.load()?.resolve()?;
            let report = study::cmd_analyze(&params)?;
            print!("{}", report.render());
            analyze_verdict(&report)
        }
        Command::Sweep(args) => {
            let spec = args.spec()?;
            let mut out = output(&args.out)?;
            study::cmd_sweep(&spec, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Compare(args) => {
            let spec = args.spec()?;
            let (rows, report) = study::cmd_compare(&spec)?;
            if let Some(path) = &args.out {
                study::write_sweep_csv(&rows, BufWriter::new(File::create(path)?))?;
            }
            print!("{}", report.render());
            Ok(())
        }
        Command::Optimize { scenario, dt_only } => {
            let scenario = scenario.load()?;
            let (p1, p2) = scenario.success_probs()?;
            let lambda = if dt_only {
                None
            } else {
                Some(scenario.lambda.ok_or_else(|| {
                    StudyError::Input("optimize needs --lambda (or --dt-only)".into())
                })?)
            };
            print!("{}", study::cmd_optimize(lambda, p1, p2)?.render());
            Ok(())
        }
        Command::QbdDist {
            scenario,
            solver,
            levels,
            out,
        } => {
            let params = scenario.load()?.resolve()?;
            let mut w = output(&out)?;
            study::cmd_qbd_dist(&params, solver, levels, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
