// Runs the enrollment-size sweep on Gaussian d-vector speakers and prints
// the averaged metrics table.
//
// cargo run -p tinysv --example synthetic_eval -- [seed]

use tinysv::eval::{run_protocol, EvalReport, GaussianSpeakers, ProtocolConfig};

pub fn run_example(seed: u64) -> tinysv::Result<EvalReport> {
    let data = GaussianSpeakers::default().generate(seed);
    run_protocol(
        &data,
        &ProtocolConfig {
            seed,
            ..ProtocolConfig::default()
        },
    )
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let report = run_example(seed)?;
    print!("{}", report.table());
    Ok(())
}
