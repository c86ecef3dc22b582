// Stationary distribution of the exact level-phase chain, solved twice:
// matrix-geometrically and by truncating the level space.

use flextti::analytic::{geo_metrics, MuVariant};
use flextti::qbd::{
    build_blocks, metrics_from_stationary, solve_rate_matrix, stationary_matrix_geometric,
    stationary_truncated_auto, DEFAULT_TOL,
};
use flextti::ModelParams;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::new(0.25, 0.4, 0.3, 1.0)?;
    let blocks = build_blocks(&params);

    let rate = solve_rate_matrix(&blocks, DEFAULT_TOL)?;
    println!("R = {:.6}", rate.r);
    println!(
        "spectral radius {:.6} after {} iterations",
        rate.spectral_radius, rate.iterations
    );

    let mg = stationary_matrix_geometric(&blocks, DEFAULT_TOL)?;
    let truncated = stationary_truncated_auto(&blocks)?;
    println!(
        "total variation between solvers: {:.3e} (truncated at level {})",
        mg.total_variation(&truncated),
        truncated.truncation_level()
    );

    let exact = metrics_from_stationary(&mg, &params);
    let approx = geo_metrics(&params, MuVariant::Refined)?;
    println!("                exact chain   Geo/Geo/1 with refined mu");
    println!(
        "P(empty)      {:>12.6} {:>12.6}",
        exact.empty_prob,
        approx.empty_prob.unwrap()
    );
    println!(
        "mean queue    {:>12.6} {:>12.6}",
        exact.mean_level,
        approx.mean_queue.unwrap()
    );
    println!(
        "D_Q           {:>12.6} {:>12.6}",
        exact.little_delay,
        approx.d_q.unwrap()
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
