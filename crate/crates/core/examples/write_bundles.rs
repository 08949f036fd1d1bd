// Writes seeded reference networks as .twb bundles and reads them back.
//
// cargo run -p tinysv --example write_bundles -- [out_dir] [seed]

use std::path::{Path, PathBuf};

use tinysv::dsp::StreamConfig;
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};
use tinysv::nn::WeightBundle;

pub fn run_example(dir: &Path, seed: u64) -> tinysv::Result<Vec<PathBuf>> {
    let cfg = StreamConfig::default();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (file, bundle) in [
        ("keyword_spotter.twb", keyword_spotter_bundle(&cfg, seed)?),
        ("dvector.twb", dvector_bundle(&cfg, seed.wrapping_add(1))?),
    ] {
        let path = dir.join(file);
        bundle.save(&path)?;
        let back = WeightBundle::load(&path)?;
        let counts = back.count_params()?;
        println!(
            "{}: {} layers, alpha {}, omega {}",
            path.display(),
            back.layers.len(),
            counts.total_alpha,
            counts.total_omega
        );
        written.push(path);
    }
    Ok(written)
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "bundles".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    run_example(&dir, seed)?;
    Ok(())
}
