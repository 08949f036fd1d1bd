// Turns one second of audio into a 40 x 49 MFCC spectrogram.
//
// cargo run -p tinysv --example mfcc_frontend -- [input.wav] [out.csv]
//
// Without an input file a 440 Hz tone with a 880 Hz overtone is used.

use tinysv::dsp::{read_wav, AudioWindow, MfccExtractor, Spectrogram, StreamConfig};

pub fn tone(cfg: &StreamConfig) -> Vec<i16> {
    let rate = f64::from(cfg.sample_rate_hz);
    (0..cfg.window_samples())
        .map(|n| {
            let t = n as f64 / rate;
            let v = 0.4 * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
                + 0.2 * (2.0 * std::f64::consts::PI * 880.0 * t).sin();
            (v * 32767.0) as i16
        })
        .collect()
}

pub fn run_example(samples: Option<Vec<i16>>) -> tinysv::Result<Spectrogram> {
    let cfg = StreamConfig::default();
    let samples = samples.unwrap_or_else(|| tone(&cfg));
    let window = AudioWindow::new(samples, 0, cfg.sample_rate_hz);
    MfccExtractor::new(&cfg)?.extract(&window)
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    let mut args = std::env::args().skip(1);
    let samples = match args.next() {
        Some(path) => Some(read_wav(path, StreamConfig::default().sample_rate_hz)?),
        None => None,
    };
    let spec = run_example(samples)?;
    println!("{} bins x {} frames = {} values", spec.bins(), spec.frames(), spec.len());
    let first: Vec<String> = spec.column(0).iter().take(8).map(|c| format!("{c:.2}")).collect();
    println!("frame 0, first coefficients: {}", first.join(" "));
    if let Some(out) = args.next() {
        std::fs::write(&out, spec.to_csv())?;
        println!("wrote {out}");
    }
    Ok(())
}
