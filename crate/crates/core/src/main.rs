use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;

use milpgen::analytics::{
    instance_stats, js_similarity, mean_profile, predict_objective, rel_mse, train_objective_predictor,
    tuning_correlation, ObjectivePredictor, PredictorConfig, StatProfile, METRICS,
};
use milpgen::baselines::{bowly_sample, random_decoder_sample, BowlyConfig};
use milpgen::dataset::{
    gen_comb_auction, gen_set_cover, load_instances, load_records, store_instances, store_records_file, CaConfig,
    Record, ScConfig,
};
use milpgen::graph::FeatureScaler;
use milpgen::instance::{instance_from_json, FTuple, MilpInstance, Status};
use milpgen::nn::{decode_checkpoint, MAGIC};
use milpgen::pipeline::{run_pipeline, Family, PipelineConfig};
use milpgen::solver::{classify, extract_labels, solve_milp, LabelOptions, SolverParams, XSource};
use milpgen::vae::{sample_instances, train, InferConfig, TrainConfig, Vae};
use milpgen::{Error, Result};

#[derive(Parser)]
#[command(name = "milpgen", version, about = "Feasible-bounded MILP instance generation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sc,
    Ca,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Sc => Family::Sc,
            FamilyArg::Ca => Family::Ca,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Bowly,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum XSourceArg {
    Optimal,
    FirstIncumbent,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic set-cover or combinatorial-auction corpus.
    GenerateDataset {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// Instance k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n_cons: usize,
        #[arg(long, default_value_t = 400)]
        n_vars: usize,
        #[arg(long, default_value_t = 0.25)]
        density: f64,
        #[arg(long, default_value_t = 100)]
        n_items: usize,
        #[arg(long, default_value_t = 500)]
        n_bids: usize,
        #[arg(long, default_value_t = 5)]
        max_bundle: usize,
    },
    /// Solve instances and print status, value, nodes and pivots.
    Solve {
        input: PathBuf,
        /// TOML file with solver parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Attach (x, y, s, r) labels and write one JSON array file.
    Label {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "optimal")]
        x_source: XSourceArg,
    },
    /// Train the generator on a labels file.
    Train {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sets the default alpha (5 for sc, 150 for ca).
        #[arg(long, value_enum, default_value = "sc")]
        family: FamilyArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 4)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 123)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        latent: usize,
        #[arg(long, default_value_t = 32)]
        hidden: usize,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Rewrite constraints of labeled instances with a trained model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a comparison corpus.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineKind,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Matrix preset for the from-scratch generator.
        #[arg(long, value_enum, default_value = "sc")]
        family: FamilyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every instance and report how many are feasible and bounded.
    Verify { input: PathBuf },
    /// Mean structural statistics of one or more corpora.
    Stats {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Histogram similarity of candidate corpora to an original corpus.
    Similarity {
        #[arg(long)]
        original: PathBuf,
        #[arg(long = "candidate", required = true)]
        candidates: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Correlate solver effort on two corpora across sampled configurations.
    Correlate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 45)]
        configs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Train the optimal-value regressor on solved instances.
    PredictTrain {
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Relative squared error of the regressor on a corpus.
    PredictEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the configured end-to-end pipeline.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides paths.out from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an instance file or a checkpoint.
    Describe { path: PathBuf },
}

fn optimal_value(inst: &MilpInstance) -> Result<f64> {
    let params = SolverParams::default();
    let rep = solve_milp(inst, &params)?;
    let outcome = rep.proven(params.max_nodes)?;
    outcome
        .value
        .ok_or_else(|| Error::LabelingFailure(format!("'{}' has no optimal value", inst.name)))
}

fn labeled(path: &Path) -> Result<Vec<FTuple>> {
    load_records(path)?
        .into_iter()
        .map(|r| {
            let name = r.instance.name.clone();
            r.labels
                .ok_or_else(|| Error::Validation(format!("'{name}' has no labels; run `label` first")))
        })
        .collect()
}

fn print_profiles(rows: &[(String, StatProfile)]) {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(6);
    print!("{:<width$}", "corpus");
    for m in METRICS {
        print!(" {m:>16}");
    }
    println!();
    for (name, p) in rows {
        print!("{name:<width$}");
        for v in p.values() {
            print!(" {v:>16.4}");
        }
        println!();
    }
}

fn describe(path: &Path) -> Result<()> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(&MAGIC[..bytes.len().min(MAGIC.len())]) && !bytes.is_empty() {
        let (meta, store) = decode_checkpoint(&bytes)?;
        let kind = meta.get("kind").and_then(|k| k.as_str()).unwrap_or("unknown");
        println!("checkpoint ({kind}), {} parameters in {} tensors", store.n_scalars(), store.len());
        for (name, t) in store.names().iter().zip(store.tensors()) {
            println!("  {name:<24} {}×{}", t.rows, t.cols);
        }
        return Ok(());
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to(),
        msg: "neither a checkpoint nor UTF-8 JSON".into(),
    })?;
    let (inst, labels) = instance_from_json(text, path)?;
    let p = instance_stats(&inst);
    println!(
        "{} cons × {} vars, density {:.2}, {:?}",
        inst.n_cons(),
        inst.n_vars(),
        p.density_mean,
        inst.mode
    );
    println!("name {}, labels {}", inst.name, if labels.is_some() { "present" } else { "absent" });
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenerateDataset {
            family,
            count,
            out,
            seed,
            n_cons,
            n_vars,
            density,
            n_items,
            n_bids,
            max_bundle,
        } => {
            let instances: Vec<MilpInstance> = (0..count as u64)
                .map(|k| match family {
                    FamilyArg::Sc => gen_set_cover(&ScConfig::new(n_cons, n_vars, density, seed + k)),
                    FamilyArg::Ca => gen_comb_auction(&CaConfig::new(n_items, n_bids, max_bundle, seed + k)),
                })
                .collect::<Result<_>>()?;
            store_instances(&instances, &out)?;
            println!("wrote {count} instances to {}", out.display());
        }
        Cmd::Solve { input, params } => {
            let params = match params {
                Some(p) => {
                    let text = fs::read_to_string(&p)?;
                    toml::from_str::<SolverParams>(&text).map_err(|e| Error::Validation(format!("params: {e}")))?
                }
                None => SolverParams::default(),
            };
            params.validate()?;
            for inst in load_instances(&input)? {
                let rep = solve_milp(&inst, &params)?;
                let (status, value) = match &rep.outcome {
                    Some(o) => (
                        format!("{:?}", o.status),
                        o.value.map_or("-".into(), |v| format!("{}", inst.reported_objective(v))),
                    ),
                    None => ("NodeLimitExceeded".into(), "-".into()),
                };
                println!(
                    "{} status={status} value={value} nodes={} pivots={}",
                    inst.name, rep.effort_nodes, rep.effort_pivots
                );
            }
        }
        Cmd::Label { input, out, x_source } => {
            let opts = LabelOptions {
                x_source: match x_source {
                    XSourceArg::Optimal => XSource::Optimal,
                    XSourceArg::FirstIncumbent => XSource::FirstIncumbent,
                },
                ..LabelOptions::default()
            };
            let records: Vec<Record> = load_instances(&input)?
                .into_iter()
                .map(|inst| {
                    let t = extract_labels(&inst, &opts)?;
                    Ok(Record {
                        instance: inst,
                        labels: Some(t),
                    })
                })
                .collect::<Result<_>>()?;
            store_records_file(&records, &out)?;
            println!("labeled {} instances into {}", records.len(), out.display());
        }
        Cmd::Train {
            labels,
            out,
            family,
            alpha,
            epochs,
            batch_size,
            lr,
            seed,
            latent,
            hidden,
            rounds,
        } => {
            let cfg = TrainConfig {
                epochs,
                batch_size,
                alpha: alpha.unwrap_or(Family::from(family).default_alpha()),
                lr,
                seed,
                latent,
                hidden,
                rounds,
            };
            let tuples = labeled(&labels)?;
            let trained = train(&tuples, &cfg)?;
            fs::write(&out, trained.vae.to_bytes())?;
            let first = trained.epoch_loss.first().copied().unwrap_or(f64::NAN);
            let last = trained.epoch_loss.last().copied().unwrap_or(f64::NAN);
            println!("epochs {epochs}: loss {first:.4} -> {last:.4}; wrote {}", out.display());
        }
        Cmd::Sample {
            model,
            labels,
            gamma,
            count,
            seed,
            out,
        } => {
            let cfg = InferConfig { gamma, count, seed };
            cfg.validate()?;
            let vae = Vae::from_bytes(&fs::read(&model)?)?;
            let tuples = labeled(&labels)?;
            let samples: Vec<MilpInstance> = sample_instances(&tuples, &vae, &cfg)?.into_iter().map(|p| p.0).collect();
            store_instances(&samples, &out)?;
            println!("wrote {} instances to {}", samples.len(), out.display());
        }
        Cmd::Baseline {
            kind,
            labels,
            gamma,
            count,
            seed,
            family,
            out,
        } => {
            let tuples = labeled(&labels)?;
            let scaler = FeatureScaler::fit(&tuples)?;
            let cfg = InferConfig { gamma, count, seed };
            let samples = match kind {
                BaselineKind::Random => random_decoder_sample(&tuples, &cfg, &scaler)?,
                BaselineKind::Bowly => {
                    let preset: fn(usize, usize, &mut ChaCha8Rng) -> BowlyConfig = match family {
                        FamilyArg::Sc => BowlyConfig::set_cover,
                        FamilyArg::Ca => BowlyConfig::comb_auction,
                    };
                    bowly_sample(&tuples, count, seed, &scaler, preset)?
                }
            };
            let instances: Vec<MilpInstance> = samples.into_iter().map(|p| p.0).collect();
            store_instances(&instances, &out)?;
            println!("wrote {} instances to {}", instances.len(), out.display());
        }
        Cmd::Verify { input } => {
            let instances = load_instances(&input)?;
            let mut ok = 0;
            for inst in &instances {
                match classify(inst)? {
                    Status::Optimal => ok += 1,
                    other => println!("{}: {other:?}", inst.name),
                }
            }
            println!("feasible-bounded: {ok}/{}", instances.len());
            if ok != instances.len() {
                return Err(Error::Validation(format!(
                    "{} instance(s) are not feasible and bounded",
                    instances.len() - ok
                )));
            }
        }
        Cmd::Stats { inputs, json } => {
            let mut rows = Vec::new();
            for input in &inputs {
                let profiles: Vec<StatProfile> = load_instances(input)?.iter().map(instance_stats).collect();
                let mean = mean_profile(&profiles).ok_or(Error::EmptyCorpus)?;
                rows.push((input.display().to_string(), mean));
            }
            if json {
                let v: Vec<_> = rows.iter().map(|(n, p)| serde_json::json!({"corpus": n, "mean": p})).collect();
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            } else {
                print_profiles(&rows);
            }
        }
        Cmd::Similarity {
            original,
            candidates,
            json,
        } => {
            let orig: Vec<StatProfile> = load_instances(&original)?.iter().map(instance_stats).collect();
            let cands: Vec<Vec<StatProfile>> = candidates
                .iter()
                .map(|c| Ok(load_instances(c)?.iter().map(instance_stats).collect()))
                .collect::<Result<_>>()?;
            let result = js_similarity(&orig, &cands)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result).expect("serializable"));
            } else {
                let width = candidates.iter().map(|c| c.display().to_string().len()).max().unwrap_or(0).max(9);
                print!("{:<width$}", "candidate");
                for m in METRICS {
                    print!(" {m:>16}");
                }
                println!(" {:>8}", "score");
                for (c, r) in candidates.iter().zip(&result.reports) {
                    print!("{:<width$}", c.display().to_string());
                    for v in r.scores {
                        print!(" {v:>16.4}");
                    }
                    println!(" {:>8.4}", r.score);
                }
                if result.degenerate {
                    println!("note: all distances equal; scores set to 1");
                }
            }
        }
        Cmd::Correlate {
            a,
            b,
            configs,
            seed,
            json,
        } => {
            let rep = tuning_correlation(&load_instances(&a)?, &load_instances(&b)?, configs, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("serializable"));
            } else {
                println!("r = {:.6}  p = {:.6e}  n = {}", rep.r, rep.p, rep.n);
            }
        }
        Cmd::PredictTrain {
            input,
            out,
            epochs,
            lr,
            seed,
        } => {
            let mut corpus = Vec::new();
            for path in &input {
                for inst in load_instances(path)? {
                    let v = optimal_value(&inst)?;
                    corpus.push((inst, v));
                }
            }
            let cfg = PredictorConfig {
                epochs,
                lr,
                seed,
                ..PredictorConfig::default()
            };
            let (model, losses) = train_objective_predictor(&corpus, &cfg)?;
            fs::write(&out, model.to_bytes())?;
            println!(
                "trained on {} instances, final loss {:.6}; wrote {}",
                corpus.len(),
                losses.last().copied().unwrap_or(f64::NAN),
                out.display()
            );
        }
        Cmd::PredictEval { model, input, json } => {
            let model = ObjectivePredictor::from_bytes(&fs::read(&model)?)?;
            let instances = load_instances(&input)?;
            let mut preds = Vec::new();
            let mut truths = Vec::new();
            for inst in &instances {
                preds.push(predict_objective(&model, inst)?);
                truths.push(optimal_value(inst)?);
            }
            let err = rel_mse(&preds, &truths)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&err).expect("serializable"));
            } else {
                println!("rel_mse = {:.6} over {} instances", err.value, instances.len() - err.excluded);
            }
        }
        Cmd::Pipeline { config, out } => {
            let cfg = PipelineConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.paths.out.clone());
            let summary = run_pipeline(&cfg, &out)?;
            println!("feasible-bounded: {}/{}", summary.verified, summary.sampled);
            for (name, score) in &summary.scores {
                println!("similarity {name:<8} {score:.4}");
            }
            if let Some(r) = summary.correlation {
                println!("effort correlation r = {r:.4}");
            }
            println!("manifest {}", out.join(milpgen::pipeline::MANIFEST).display());
        }
        Cmd::Describe { path } => describe(&path)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
