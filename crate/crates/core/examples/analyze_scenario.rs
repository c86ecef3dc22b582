// Closed-form metrics of one scenario under both service approximations.

use flextti::study::{analyze_verdict, cmd_analyze};
use flextti::ModelParams;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::new(0.1, 0.5, 0.3, 1.0)?;
    let report = cmd_analyze(&params)?;
    print!("{}", report.render());
    analyze_verdict(&report)?;

    // The refined service probability is the reciprocal of the mean
    // transmission time.
    let refined = report.refined;
    assert!((refined.mu * refined.d_t - 1.0).abs() < 1e-12);

    // Raising lambda above mu makes the verdict fail with exit code 2.
    let overloaded = cmd_analyze(&params.with_lambda(0.45)?)?;
    let err = analyze_verdict(&overloaded).unwrap_err();
    println!("lambda = 0.45: {err} (exit code {})", err.exit_code());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
