// How far each analytic engine is from simulation over a q1 grid.

use flextti::study::{cmd_compare, Axis, Engine, Grid, SimOptions, SweepSpec};
use flextti::ModelParams;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec {
        base: ModelParams::new(0.1, 0.0, 0.6, 1.0)?,
        axis: Axis::Q1,
        grid: Grid::new(0.0, 1.0, 0.1)?,
        engines: Engine::ALL.to_vec(),
        sim: SimOptions {
            slots: 200_000,
            warmup: 5_000,
            seed: 11,
            reps: 8,
        },
    };
    let (_, report) = cmd_compare(&spec)?;
    print!("{}", report.render());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
