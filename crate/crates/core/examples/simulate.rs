// Slot-level Monte Carlo runs: one long run, then independent replicates
// with 95% confidence intervals.

use flextti::analytic::mu_refined;
use flextti::sim::{replicate, run_slots};
use flextti::{ModelParams, SimConfig};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::new(0.1, 0.5, 0.3, 1.0)?;
    let config = SimConfig::new(params, 7)
        .with_horizon(200_000)
        .with_warmup(5_000);

    let r = run_slots(&config)?;
    println!(
        "mu_hat {:.5} (refined {:.5}), Q {:.4} +- {:.4}, D_Q {:.4}, D_T {:.4}",
        r.mu_hat,
        mu_refined(&params),
        r.qbar_hat,
        r.qbar_se,
        r.dq_hat,
        r.dt_hat
    );
    println!(
        "arrived {} = served {} + backlog {}",
        r.arrived, r.served, r.backlog
    );

    let reps = replicate(&config, 8)?;
    let d = reps.total_delay_hat;
    println!(
        "total delay over {} replicates: {:.4} [{:.4}, {:.4}]",
        reps.runs.len(),
        d.mean,
        d.ci_low,
        d.ci_high
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
