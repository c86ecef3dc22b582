// Total delay versus q1 from every engine, written as CSV to stdout.

use flextti::study::{cmd_sweep, Axis, Engine, Grid, SimOptions, SweepSpec};
use flextti::ModelParams;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec {
        base: ModelParams::new(0.25, 0.0, 0.3, 1.0)?,
        axis: Axis::Q1,
        grid: Grid::new(0.0, 1.0, 0.25)?,
        engines: Engine::ALL.to_vec(),
        sim: SimOptions {
            slots: 100_000,
            warmup: 5_000,
            seed: 1,
            reps: 4,
        },
    };
    let rows = cmd_sweep(&spec, std::io::stdout().lock())?;

    // At q1 = 1 the only attempt succeeds with 0.3 > 0.25, still stable.
    let last = rows.iter().rfind(|r| r.engine == Engine::Qbd).unwrap();
    assert!(last.stable);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
