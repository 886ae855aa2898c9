//! Desk-scale training on the synthetic sphere family with held-out
//! evaluation, using the same data and settings as the acceptance run.
//!
//! `cargo run --release --example desk_train -- [key=value ...] [out=DIR]`
//!
//! Keys are the training config keys, e.g. `steps=500 rec_reduction=mean`.

use platonic::data::{sphere_family, synth_dataset};
use platonic::training::{train, HeldOut, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> platonic::Result<()> {
    let mut config = TrainConfig {
        initial_occupancy: 1.0 - 0.5f64.powf(1.0 / 32.0),
        checkpoint_every: 0,
        ..TrainConfig::default()
    };
    let mut out = None;
    for arg in std::env::args().skip(1) {
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| platonic::Error::Config(format!("expected key=value, got `{arg}`")))?;
        match key {
            "out" => out = Some(std::path::PathBuf::from(value)),
            _ => config.set(key, value)?,
        }
    }
    let (n, f) = (config.resolution, config.formation);
    let train_set = synth_dataset(&sphere_family(20, &mut ChaCha8Rng::seed_from_u64(1)), 50, f, n, &mut ChaCha8Rng::seed_from_u64(2))?;
    let test_set = synth_dataset(&sphere_family(5, &mut ChaCha8Rng::seed_from_u64(3)), 4, f, n, &mut ChaCha8Rng::seed_from_u64(4))?;
    let held: Vec<HeldOut> = (0..test_set.samples.len())
        .map(|i| HeldOut { image: test_set.samples[i].image.clone(), truth: test_set.truth_in_view(i) })
        .collect();
    let start = std::time::Instant::now();
    let outcome = train(&train_set.images(), &held, &config, out.as_deref(), |r| {
        if r.step % 100 == 0 {
            eprintln!(
                "step {:5} c_dis {:8.4} c_gen {:8.4} c_rec {:9.3} {:6.0}s",
                r.step, r.c_dis, r.c_gen, r.c_rec, start.elapsed().as_secs_f64()
            );
        }
    })?;
    println!("probe c_rec {:.3} -> {:.3}", outcome.probe_c_rec_initial, outcome.probe_c_rec_final);
    if let Some(report) = outcome.held_out {
        print!("{}", report.summary());
    }
    Ok(())
}
