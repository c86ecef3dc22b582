// The q1 that minimizes total delay, next to the q1 that minimizes the
// transmission delay alone.

use flextti::study::cmd_optimize;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (lambda, p1) in [(0.1, 0.3), (0.1, 0.6), (0.25, 0.45)] {
        print!("{}", cmd_optimize(Some(lambda), p1, 1.0)?.render());
    }
    // With p1 = p2 / 2 both durations deliver at the same rate.
    print!("{}", cmd_optimize(None, 0.5, 1.0)?.render());

    let err = cmd_optimize(Some(0.6), 0.3, 1.0).unwrap_err();
    println!("lambda = 0.6: {err}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
