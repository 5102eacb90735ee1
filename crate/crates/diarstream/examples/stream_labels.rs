//! Feed segments through the pipeline one at a time and watch labels get
//! emitted online.
//!
//! ```bash
//! cargo run --example stream_labels
//! ```

use diarstream::{Config, Embedding, PipelineState};

fn main() -> diarstream::Result<()> {
    // two speakers taking alternating turns, as unit vectors around two
    // directions with a little jitter
    let mut segments = Vec::new();
    for i in 0..16usize {
        let speaker = (i / 4) % 2;
        let angle = speaker as f64 * std::f64::consts::FRAC_PI_2 + 0.04 * ((i % 4) as f64 - 1.5);
        let start = 0.5 * i as f64;
        segments.push(Embedding::new(
            i,
            vec![angle.cos(), angle.sin()],
            start,
            start + 1.0,
        )?);
    }

    let mut pipeline = PipelineState::new(Config::default())?;
    println!("segment  span            label");
    for e in segments {
        let span = format!("{:.1}s..{:.1}s", e.start, e.end);
        let label = pipeline.step(e.clone())?;
        println!("{:>7}  {:<14}  spk{label}", e.segment_id, span);
    }

    // labels, once printed, never changed: that is the online contract
    println!("\nfinal ledger: {:?}", pipeline.labels());
    Ok(())
}
