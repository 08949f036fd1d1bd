// Breaks down the memory a pipeline needs for a given enrollment size and
// shows what happens when the limit is too small.
//
// cargo run -p tinysv --example memory_budget -- [enrollment_size]

use tinysv::dsp::StreamConfig;
use tinysv::memory::{estimate_memory, MemoryBudget, DEFAULT_LIMIT_BYTES};
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};

pub fn run_example(n: usize, limit: usize) -> tinysv::Result<MemoryBudget> {
    let cfg = StreamConfig::default();
    let ks = keyword_spotter_bundle(&cfg, 0)?;
    let fx = dvector_bundle(&cfg, 0)?;
    estimate_memory(&cfg, &ks, &fx, n, limit)
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    print!("{}", run_example(n, DEFAULT_LIMIT_BYTES)?.table());
    match run_example(n, 256 * 1024) {
        Ok(_) => println!("fits in 256 KiB too"),
        Err(e) => println!("with a 256 KiB limit: {e}"),
    }
    Ok(())
}
