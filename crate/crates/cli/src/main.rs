use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tinysv::asv::{DVector, DVectorExtractor, EnrollmentSet};
use tinysv::config::AppConfig;
use tinysv::dsp::{read_wav, MfccExtractor, SampleStream, StreamConfig};
use tinysv::eval::{embed_dataset, load_dataset, run_protocol, GaussianSpeakers, Method, ProtocolConfig};
use tinysv::ks::ks_classify;
use tinysv::memory::estimate_from_counts;
use tinysv::nn::reference::{dvector_bundle, keyword_spotter_bundle, DVECTOR_EXTRACTOR, KEYWORD_SPOTTER};
use tinysv::nn::WeightBundle;
use tinysv::pipeline::Pipeline;

#[derive(Parser)]
#[command(name = "tinysv", version, about = "Keyword-gated speaker verification")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print layer tables (alpha/omega counts) and the memory budget.
    Inspect {
        /// Bundles to inspect; the reference architectures when omitted.
        bundles: Vec<PathBuf>,
        /// Enrollment size used for the memory budget.
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
    /// Keyword spotting.
    Ks {
        #[command(subcommand)]
        command: KsCmd,
    },
    /// Enrollment-set files.
    Asv {
        #[command(subcommand)]
        command: AsvCmd,
    },
    /// Stream audio through the pipeline, one JSON event per line.
    Run {
        /// A WAV file, or `mic` / `-` for raw 16-bit little-endian mono PCM on stdin.
        #[arg(long)]
        input: String,
        #[arg(long, default_value = "tinysv.toml")]
        config: PathBuf,
        /// Override the verification threshold.
        #[arg(long)]
        threshold: Option<f32>,
    },
    /// Evaluation harness.
    Eval {
        #[command(subcommand)]
        command: EvalCmd,
    },
    /// Serve the streaming demo API on localhost.
    Serve {
        #[arg(long, default_value = "tinysv.toml")]
        config: PathBuf,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Write seeded reference bundles and a matching config file.
    InitBundles {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum KsCmd {
    /// Classify the first second of a WAV file.
    Classify {
        wav: PathBuf,
        /// Keyword-spotter bundle; taken from the config file when omitted.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, default_value = "tinysv.toml")]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum AsvCmd {
    /// Convert a binary enrollment file to JSON.
    Export {
        enrollment: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Convert JSON back into a binary enrollment file.
    Import { json: PathBuf, enrollment: PathBuf },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Score best-match and mean-vector verification over enrollment sizes.
    Run {
        #[arg(long, value_delimiter = ',', default_value = "asv,mcs")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "1,8,16,64")]
        n: Vec<usize>,
        /// CSV manifest `path,speaker,keyword,split`; synthetic speakers when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Directory the manifest paths are relative to (default: its own).
        #[arg(long)]
        root: Option<PathBuf>,
        /// d-vector bundle for manifest data; taken from the config file when omitted.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, default_value = "tinysv.toml")]
        config: PathBuf,
        /// Only keyword utterances enter the protocol unless set.
        #[arg(long)]
        all_utterances: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write per-speaker results as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// JSON form of an enrollment set.
#[derive(Serialize, Deserialize)]
struct EnrollmentJson {
    dim: usize,
    capacity: usize,
    threshold: f32,
    vectors: Vec<Vec<f32>>,
}

fn load_config(path: &Path) -> Result<AppConfig> {
    AppConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn load_bundle(path: &Path) -> Result<WeightBundle> {
    WeightBundle::load(path).with_context(|| format!("loading bundle {}", path.display()))
}

fn inspect(bundles: &[PathBuf], n: usize) -> Result<()> {
    let cfg = StreamConfig::default();
    let loaded: Vec<WeightBundle> = if bundles.is_empty() {
        vec![keyword_spotter_bundle(&cfg, 0)?, dvector_bundle(&cfg, 0)?]
    } else {
        bundles.iter().map(|p| load_bundle(p)).collect::<Result<_>>()?
    };
    let mut counts = Vec::new();
    for b in &loaded {
        let c = b.count_params()?;
        println!("{}", c.table(&b.name));
        counts.push((b.name.clone(), c, b.output_len()?));
    }
    let find = |name: &str| counts.iter().find(|(n, _, _)| n == name);
    if let (Some(ks), Some(fx)) = (find(KEYWORD_SPOTTER), find(DVECTOR_EXTRACTOR)) {
        let budget = estimate_from_counts(
            &cfg,
            (ks.1.total_alpha, ks.1.total_omega),
            (fx.1.total_alpha, fx.1.total_omega),
            fx.2,
            n,
            tinysv::memory::DEFAULT_LIMIT_BYTES,
        )?;
        println!("memory budget, n = {n}");
        print!("{}", budget.table());
        if let Err(e) = budget.check() {
            println!("{e}");
        }
    }
    Ok(())
}

fn ks_classify_wav(wav: &Path, bundle: Option<PathBuf>, config: &Path) -> Result<()> {
    let path = match bundle {
        Some(p) => p,
        None => load_config(config)?.keyword_bundle,
    };
    let bundle = load_bundle(&path)?;
    let cfg = StreamConfig::default();
    let mut samples = read_wav(wav, cfg.sample_rate_hz)?;
    if samples.len() < cfg.window_samples() {
        bail!("{} holds {} samples, a window needs {}", wav.display(), samples.len(), cfg.window_samples());
    }
    samples.truncate(cfg.window_samples());
    let spec = MfccExtractor::new(&cfg)?.extract_samples(&samples)?;
    let d = ks_classify(&bundle, &spec)?;
    println!("{}", serde_json::to_string(&d)?);
    Ok(())
}

fn asv_export(enrollment: &Path, out: Option<PathBuf>) -> Result<()> {
    let set = EnrollmentSet::load(enrollment).with_context(|| format!("reading {}", enrollment.display()))?;
    let json = EnrollmentJson {
        dim: set.dim(),
        capacity: set.capacity(),
        threshold: set.threshold(),
        vectors: set.vectors().iter().map(|v| v.as_slice().to_vec()).collect(),
    };
    let text = serde_json::to_string_pretty(&json)?;
    match out {
        Some(p) => std::fs::write(&p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn asv_import(json: &Path, enrollment: &Path) -> Result<()> {
    let parsed: EnrollmentJson = serde_json::from_str(&std::fs::read_to_string(json)?)
        .with_context(|| format!("parsing {}", json.display()))?;
    let mut set = EnrollmentSet::new(parsed.dim, parsed.capacity, parsed.threshold)?;
    for v in parsed.vectors {
        set.enroll(DVector::new(v)?)?;
    }
    set.save(enrollment)?;
    eprintln!("wrote {} ({}/{} vectors)", enrollment.display(), set.len(), set.capacity());
    Ok(())
}

fn run(input: &str, config: &Path, threshold: Option<f32>) -> Result<()> {
    let mut app = load_config(config)?;
    if let Some(t) = threshold {
        app.pipeline.threshold = t;
    }
    let ks = load_bundle(&app.keyword_bundle)?;
    let fx = load_bundle(&app.dvector_bundle)?;
    let mut pipeline = Pipeline::from_bundles(app.pipeline.clone(), ks, fx)?;
    if let Some(path) = app.enrollment_file.as_ref().filter(|p| p.exists()) {
        let mut set = EnrollmentSet::load(path)?;
        if let Some(t) = threshold {
            set.set_threshold(t)?;
        }
        pipeline.restore_enrollment(set)?;
    }
    let stream_cfg = app.pipeline.stream.clone();
    let mut stream = SampleStream::new(&stream_cfg)?;
    let out = std::io::stdout();
    let mut out = BufWriter::new(out.lock());
    let mut emit = |samples: &[i16], pipeline: &mut Pipeline| -> Result<()> {
        for chunk in samples.chunks(stream_cfg.hop_samples()) {
            for w in stream.push_samples(chunk)? {
                let e = pipeline.process_window(&w)?;
                writeln!(out, "{}", serde_json::to_string(&e)?)?;
            }
        }
        out.flush()?;
        Ok(())
    };
    if input == "mic" || input == "-" {
        let mut stdin = std::io::stdin().lock();
        let mut buf = vec![0u8; stream_cfg.hop_samples() * 2];
        let mut carry: Option<u8> = None;
        loop {
            let got = stdin.read(&mut buf)?;
            if got == 0 {
                break;
            }
            let mut bytes: Vec<u8> = carry.take().into_iter().collect();
            bytes.extend_from_slice(&buf[..got]);
            if bytes.len() % 2 == 1 {
                carry = bytes.pop();
            }
            let samples: Vec<i16> = bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
            emit(&samples, &mut pipeline)?;
        }
    } else {
        let samples = read_wav(input, stream_cfg.sample_rate_hz)?;
        emit(&samples, &mut pipeline)?;
    }
    if let Some(path) = &app.enrollment_file {
        if pipeline.enrollment().is_full() {
            pipeline.enrollment().save(path)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval_run(
    methods: Vec<Method>,
    n: Vec<usize>,
    manifest: Option<PathBuf>,
    root: Option<PathBuf>,
    bundle: Option<PathBuf>,
    config: &Path,
    all_utterances: bool,
    seed: u64,
    csv: Option<PathBuf>,
) -> Result<()> {
    let data = match manifest {
        None => GaussianSpeakers::default().generate(seed),
        Some(manifest) => {
            let stream = StreamConfig::default();
            let root = root.unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default());
            let loaded = load_dataset(&root, &manifest, &stream)?;
            for r in &loaded.rejected {
                eprintln!("rejected {}: {}", r.path.display(), r.reason);
            }
            for w in &loaded.split_warnings {
                eprintln!("warning: {w}");
            }
            let utterances: Vec<_> = loaded
                .utterances
                .into_iter()
                .filter(|u| all_utterances || u.keyword)
                .collect();
            let path = match bundle {
                Some(p) => p,
                None => load_config(config)?.dvector_bundle,
            };
            let extractor = DVectorExtractor::new(load_bundle(&path)?)?;
            embed_dataset(&utterances, &stream, &extractor)?
        }
    };
    let report = run_protocol(
        &data,
        &ProtocolConfig {
            methods,
            n_values: n,
            seed,
        },
    )?;
    print!("{}", report.table());
    if let Some(p) = csv {
        std::fs::write(&p, report.to_csv())?;
    }
    Ok(())
}

fn init_bundles(dir: &Path, seed: u64) -> Result<()> {
    let cfg = StreamConfig::default();
    let models = dir.join("models");
    std::fs::create_dir_all(&models)?;
    let app = AppConfig {
        keyword_bundle: PathBuf::from("models/keyword-spotter.twb"),
        dvector_bundle: PathBuf::from("models/dvector-extractor.twb"),
        enrollment_file: Some(PathBuf::from("enrollment.bin")),
        ..AppConfig::default()
    };
    keyword_spotter_bundle(&cfg, seed)?.save(dir.join(&app.keyword_bundle))?;
    dvector_bundle(&cfg, seed.wrapping_add(1))?.save(dir.join(&app.dvector_bundle))?;
    let config = dir.join("tinysv.toml");
    std::fs::write(&config, app.to_toml())?;
    println!("wrote {}", config.display());
    Ok(())
}

fn main() -> Result<()> {
    match dispatch(Cli::parse().command) {
        // A closed stdout (e.g. `| head`) ends the stream normally.
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => Ok(()),
        other => other,
    }
}

fn dispatch(command: Cmd) -> Result<()> {
    match command {
        Cmd::Inspect { bundles, n } => inspect(&bundles, n),
        Cmd::Ks {
            command: KsCmd::Classify { wav, bundle, config },
        } => ks_classify_wav(&wav, bundle, &config),
        Cmd::Asv { command } => match command {
            AsvCmd::Export { enrollment, out } => asv_export(&enrollment, out),
            AsvCmd::Import { json, enrollment } => asv_import(&json, &enrollment),
        },
        Cmd::Run {
            input,
            config,
            threshold,
        } => run(&input, &config, threshold),
        Cmd::Eval {
            command:
                EvalCmd::Run {
                    methods,
                    n,
                    manifest,
                    root,
                    bundle,
                    config,
                    all_utterances,
                    seed,
                    csv,
                },
        } => eval_run(methods, n, manifest, root, bundle, &config, all_utterances, seed, csv),
        Cmd::Serve { config, port } => {
            let mut app = load_config(&config)?;
            if let Some(p) = port {
                app.port = p;
            }
            eprintln!("listening on 127.0.0.1:{}", app.port);
            tokio::runtime::Runtime::new()?
                .block_on(tinysv_service::server::serve(&app))
                .map_err(|e| anyhow::anyhow!(e))
        }
        Cmd::InitBundles { dir, seed } => init_bundles(&dir, seed),
    }
}
