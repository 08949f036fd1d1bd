// Prints the per-layer activation (alpha) and weight (omega) counts of the
// two reference networks.
//
// cargo run -p tinysv --example inspect_networks

use tinysv::dsp::StreamConfig;
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};
use tinysv::nn::ParamCounts;

pub fn run_example() -> tinysv::Result<(ParamCounts, ParamCounts)> {
    let cfg = StreamConfig::default();
    let ks = keyword_spotter_bundle(&cfg, 0)?.count_params()?;
    let fx = dvector_bundle(&cfg, 0)?.count_params()?;
    Ok((ks, fx))
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let (ks, fx) = run_example()?;
    println!("{}", ks.table("keyword spotter"));
    println!("{}", fx.table("d-vector extractor"));
    Ok(())
}
