//! Per-step cost of full AHC vs checkpointed clustering vs the graph
//! variant, on one synthetic stream. Checkpointing keeps step time flat;
//! full AHC grows with stream position.
//!
//! ```bash
//! cargo run --release --example bench_modes
//! ```

use diarstream::synth::{generate, SynthConfig};
use diarstream::{run_baseline3, run_stream, ClusteringMode, Config, ReclusterMode};

fn main() -> diarstream::Result<()> {
    let synth = generate(&SynthConfig {
        speakers: 4,
        segments: 800,
        dim: 128,
        seed: 11,
        ..SynthConfig::default()
    })?;

    let base = Config::default();
    let variants = [
        ("full ahc", Some((ClusteringMode::Ahc, ReclusterMode::Naive))),
        ("chkpt", Some((ClusteringMode::Chkpt, ReclusterMode::Naive))),
        ("chkpt+graph", Some((ClusteringMode::Chkpt, ReclusterMode::Graph))),
        ("baseline3", None),
    ];

    println!("{:<12} {:>9} {:>12} {:>14} {:>13}", "variant", "total s", "mean ms", "first 10% ms", "last 10% ms");
    let mut totals = Vec::new();
    for (name, modes) in variants {
        let out = match modes {
            Some((clustering, recluster)) => {
                let config = Config {
                    clustering_mode: clustering,
                    recluster_mode: recluster,
                    ..base.clone()
                };
                run_stream(&synth.embeddings, &config)?
            }
            None => run_baseline3(&synth.embeddings, &base)?,
        };
        println!(
            "{:<12} {:>9.3} {:>12.4} {:>14.4} {:>13.4}",
            name,
            out.total_secs(),
            out.mean_step_secs() * 1e3,
            out.first_decile_mean_secs() * 1e3,
            out.last_decile_mean_secs() * 1e3
        );
        totals.push((name, out.total_secs()));
    }
    println!(
        "\ncheckpointing cut total clustering time {:.1}x on this stream",
        totals[0].1 / totals[1].1
    );
    Ok(())
}
