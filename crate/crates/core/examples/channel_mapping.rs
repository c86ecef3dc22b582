// Success probabilities from a short-packet AWGN link.
//
// A one-slot attempt uses `n` channel uses, a two-slot attempt `2n`, so the
// longer transmission has a lower rate and a much smaller error probability.

use flextti::model::{derive_success_probs, finite_blocklength_error, ChannelSpec};
use flextti::ModelParams;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>8} {:>14} {:>14} {:>8} {:>8}",
        "SNR dB", "eps(n)", "eps(2n)", "p1", "p2"
    );
    for snr_db in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let spec = ChannelSpec::from_db(200, 100, snr_db)?;
        let (p1, p2) = derive_success_probs(&spec);
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>8.4} {:>8.4}",
            snr_db,
            finite_blocklength_error(&spec),
            finite_blocklength_error(&spec.stretched(2)),
            p1,
            p2
        );
    }

    let spec = ChannelSpec::from_db(200, 100, -3.0)?;
    let (p1, p2) = derive_success_probs(&spec);
    let params = ModelParams::new(0.1, 0.5, p1, p2)?;
    println!("derived scenario: {params}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
