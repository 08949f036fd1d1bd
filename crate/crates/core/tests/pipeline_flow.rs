mod common;

use common::*;
use tinysv::asv::{DVector, EnrollmentSet};
use tinysv::dsp::{AudioWindow, SampleStream, StreamConfig};
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle};
use tinysv::pipeline::{Command, Mode, Pipeline, PipelineConfig, PipelineEvent};
use tinysv::Error;

fn stub_pipeline(cfg: PipelineConfig) -> Pipeline {
    let (embedder, _) = CepstrumEmbedder::new(6);
    Pipeline::with_models(cfg, Box::new(LevelSpotter(-20.0)), Box::new(embedder)).unwrap()
}

fn noisy_windows(count: u64, seed: u64) -> Vec<AudioWindow> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let amp: i16 = if k % 3 == 0 { 9000 } else { 0 };
            let s = (0..16_000).map(|_| if amp == 0 { 0 } else { rng.random_range(-amp..amp) }).collect();
            AudioWindow::new(s, k * 4000, 16_000)
        })
        .collect()
}

fn run(p: &mut Pipeline, ws: &[AudioWindow]) -> Vec<PipelineEvent> {
    ws.iter().map(|w| p.process_window(w).unwrap()).collect()
}

#[test]
fn replay_after_reset_reproduces_the_events() {
    let cfg = PipelineConfig {
        enrollment_size: 3,
        threshold: 0.9,
        ..PipelineConfig::default()
    };
    let ws = noisy_windows(40, 9);
    let mut p = stub_pipeline(cfg);
    let first = run(&mut p, &ws);
    p.reset_enrollment();
    assert_eq!(p.mode(), Mode::Enrolling);
    let second = run(&mut p, &ws);
    assert_eq!(first, second);
}

#[test]
fn enrollment_windows_report_progress_and_emit_zero() {
    let cfg = PipelineConfig {
        enrollment_size: 2,
        refractory_hops: 0,
        ..PipelineConfig::default()
    };
    let mut p = stub_pipeline(cfg);
    let ws = noisy_windows(4, 1);
    let e = p.process_window(&ws[0]).unwrap();
    assert_eq!((e.x, e.detail.y), (0, 1));
    assert_eq!(e.detail.progress.unwrap().filled, 1);
    assert!(e.detail.z.is_none());
}

#[test]
fn commands_apply_between_windows() {
    let mut p = stub_pipeline(PipelineConfig::default());
    p.submit(Command::SetThreshold(0.25));
    assert_eq!(p.threshold(), 0.8);
    p.process_window(&noisy_windows(1, 2)[0]).unwrap();
    assert_eq!(p.threshold(), 0.25);
    p.submit(Command::SetThreshold(3.0));
    assert!(p.process_window(&noisy_windows(1, 2)[0]).is_err());
}

#[test]
fn restored_full_set_starts_in_inference() {
    let mut p = stub_pipeline(PipelineConfig {
        enrollment_size: 1,
        ..PipelineConfig::default()
    });
    let mut set = EnrollmentSet::new(6, 1, 0.5).unwrap();
    set.enroll(DVector::new(vec![1.0; 6]).unwrap()).unwrap();
    p.restore_enrollment(set).unwrap();
    assert_eq!(p.mode(), Mode::Inferring);
    let wrong = EnrollmentSet::new(4, 1, 0.5).unwrap();
    assert!(matches!(p.restore_enrollment(wrong), Err(Error::Dimension { .. })));
}

#[test]
fn event_times_advance_by_one_hop() {
    let cfg = PipelineConfig::default();
    let mut stream = SampleStream::new(&cfg.stream).unwrap();
    let mut p = stub_pipeline(cfg);
    let ws = stream.push_samples(&vec![0i16; 16_000 + 4 * 4000]).unwrap();
    let ts: Vec<f64> = run(&mut p, &ws).iter().map(|e| e.t).collect();
    assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
}

#[test]
fn reference_bundles_build_a_budgeted_pipeline() {
    let cfg = PipelineConfig::default();
    let ks = keyword_spotter_bundle(&cfg.stream, 1).unwrap();
    let fx = dvector_bundle(&cfg.stream, 2).unwrap();
    let p = Pipeline::from_bundles(cfg.clone(), ks.clone(), fx.clone()).unwrap();
    assert!(p.budget().unwrap().total() < cfg.memory_limit_bytes);

    let tight = PipelineConfig {
        memory_limit_bytes: 100_000,
        ..cfg.clone()
    };
    assert!(matches!(
        Pipeline::from_bundles(tight, ks.clone(), fx.clone()),
        Err(Error::BudgetExceeded { .. })
    ));

    let other_rate = PipelineConfig {
        stream: StreamConfig {
            sample_rate_hz: 8000,
            ..StreamConfig::default()
        },
        ..cfg
    };
    assert!(matches!(
        Pipeline::from_bundles(other_rate, ks, fx),
        Err(Error::FingerprintMismatch(_))
    ));
}

#[test]
fn event_json_has_t_x_detail() {
    let mut p = stub_pipeline(PipelineConfig::default());
    let e = p.process_window(&noisy_windows(1, 3)[0]).unwrap();
    let v: serde_json::Value = serde_json::to_value(&e).unwrap();
    assert!(v.get("t").is_some() && v.get("x").is_some() && v.get("detail").is_some());
}
