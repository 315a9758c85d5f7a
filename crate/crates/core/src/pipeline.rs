//! File-configured end-to-end run: generate, label, train, sample, verify
//! and score, with a manifest of content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{instance_stats, js_similarity_bins, mean_profile, tuning_correlation, METRICS};
use crate::baselines::{bowly_sample, random_decoder_sample, BowlyConfig};
use crate::dataset::{gen_comb_auction, gen_set_cover, store_instances, store_records_file, CaConfig, Record, ScConfig};
use crate::error::{Error, Result};
use crate::graph::FeatureScaler;
use crate::instance::{FTuple, MilpInstance, Status};
use crate::solver::{classify, extract_labels, LabelOptions};
use crate::vae::{sample_instances, train, InferConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sc,
    Ca,
}

impl Family {
    /// Reconstruction weight used when the config does not set one.
    pub fn default_alpha(self) -> f64 {
        match self {
            Family::Sc => 5.0,
            Family::Ca => 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub family: Family,
    pub count: usize,
    /// Instance `k` is generated with `seed + k`.
    #[serde(default)]
    pub seed: u64,
    pub n_cons: Option<usize>,
    pub n_vars: Option<usize>,
    pub density: Option<f64>,
    pub n_items: Option<usize>,
    pub n_bids: Option<usize>,
    pub max_bundle: Option<usize>,
}

impl DatasetSection {
    fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::Validation(format!("dataset.{key} is required for this family")))
    }

    /// Generator config of instance `k`, validated.
    fn instance(&self, k: usize) -> Result<MilpInstance> {
        let seed = self.seed + k as u64;
        match self.family {
            Family::Sc => gen_set_cover(&ScConfig::new(
                Self::need(self.n_cons, "n_cons")?,
                Self::need(self.n_vars, "n_vars")?,
                Self::need(self.density, "density")?,
                seed,
            )),
            Family::Ca => gen_comb_auction(&CaConfig::new(
                Self::need(self.n_items, "n_items")?,
                Self::need(self.n_bids, "n_bids")?,
                Self::need(self.max_bundle, "max_bundle")?,
                seed,
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Validation("dataset.count must be at least 1".into()));
        }
        match self.family {
            Family::Sc => {
                ScConfig::new(
                    Self::need(self.n_cons, "n_cons")?,
                    Self::need(self.n_vars, "n_vars")?,
                    Self::need(self.density, "density")?,
                    self.seed,
                )
                .validate()?;
                if self.n_cons < Some(2) {
                    return Err(Error::LastConstraint);
                }
            }
            Family::Ca => CaConfig::new(
                Self::need(self.n_items, "n_items")?,
                Self::need(self.n_bids, "n_bids")?,
                Self::need(self.max_bundle, "max_bundle")?,
                self.seed,
            )
            .validate()?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    pub bins: usize,
    /// Solver configurations for the effort correlation; 0 skips it.
    pub n_configs: usize,
    /// Also draw random-decoder and from-scratch baseline corpora.
    pub baselines: bool,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        AnalyticsSection {
            bins: 10,
            n_configs: 0,
            baselines: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub out: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            out: PathBuf::from("pipeline-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub label: LabelOptions,
    pub train: TrainConfig,
    pub infer: InferConfig,
    #[serde(default)]
    pub analytics: AnalyticsSection,
    #[serde(default)]
    pub paths: PathsSection,
}

impl PipelineConfig {
    /// Parses TOML. Unknown keys are rejected; an absent `train.alpha`
    /// takes the family default.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| toml_error(text, e))?;
        let family = table
            .get("dataset")
            .and_then(|d| d.get("family"))
            .and_then(|f| f.as_str())
            .and_then(|f| match f {
                "sc" => Some(Family::Sc),
                "ca" => Some(Family::Ca),
                _ => None,
            });
        let train = table
            .entry("train")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let (Some(family), Some(t)) = (family, train.as_table_mut()) {
            t.entry("alpha").or_insert(toml::Value::Float(family.default_alpha()));
        }
        let cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Validation(format!("config: {}", e.message())))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { line, column, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                column,
                msg,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.label.params.validate()?;
        self.train.validate()?;
        self.infer.validate()?;
        if self.analytics.bins < 1 {
            return Err(Error::Validation("analytics.bins must be at least 1".into()));
        }
        if self.analytics.n_configs == 1 || self.analytics.n_configs == 2 {
            return Err(Error::Validation("analytics.n_configs must be 0 or at least 3".into()));
        }
        Ok(())
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    Error::Parse {
        path: PathBuf::from("<config>"),
        line,
        column,
        msg: e.message().to_string(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: String,
    /// `complete` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<FileHash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub complete: bool,
    pub stages: Vec<StageEntry>,
}

pub const MANIFEST: &str = "MANIFEST.json";

struct Run<'a> {
    out: &'a Path,
    manifest: Manifest,
}

impl Run<'_> {
    fn write_manifest(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.out.join(MANIFEST), text + "\n")?;
        Ok(())
    }

    fn hash(&self, files: &[PathBuf]) -> Result<Vec<FileHash>> {
        files
            .iter()
            .map(|p| {
                let rel = p.strip_prefix(self.out).unwrap_or(p);
                Ok(FileHash {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    sha256: sha256_hex(&fs::read(p)?),
                })
            })
            .collect()
    }

    /// Runs one stage, records its files or its error, and rewrites the
    /// manifest either way.
    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce(&Path) -> Result<(T, Vec<PathBuf>)>) -> Result<T> {
        match f(self.out).and_then(|(v, files)| Ok((v, self.hash(&files)?))) {
            Ok((v, files)) => {
                self.manifest.stages.push(StageEntry {
                    stage: name.into(),
                    status: "complete".into(),
                    files,
                    error: None,
                });
                self.write_manifest()?;
                Ok(v)
            }
            Err(e) => {
                self.manifest.stages.push(StageEntry {
                    stage: name.into(),
                    status: "failed".into(),
                    files: Vec::new(),
                    error: Some(e.to_string()),
                });
                self.write_manifest()?;
                Err(e.in_stage(name))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub manifest: Manifest,
    pub verified: usize,
    pub sampled: usize,
    /// Aggregate similarity per candidate, in `candidates` order.
    pub scores: Vec<(String, f64)>,
    pub correlation: Option<f64>,
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    fs::write(&path, serde_json::to_string_pretty(value).expect("report serializes") + "\n")?;
    Ok(path)
}

fn verify_all(label: &str, instances: &[MilpInstance]) -> Result<String> {
    let mut ok = 0;
    for inst in instances {
        if classify(inst)? == Status::Optimal {
            ok += 1;
        }
    }
    let line = format!("{label} feasible-bounded: {ok}/{}", instances.len());
    if ok != instances.len() {
        return Err(Error::Validation(line));
    }
    Ok(line)
}

/// Runs every stage into `out`. The config is validated before anything
/// is written.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<PipelineSummary> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let config_text = serde_json::to_string(cfg).expect("config serializes");
    let mut run = Run {
        out,
        manifest: Manifest {
            config_sha256: sha256_hex(config_text.as_bytes()),
            complete: false,
            stages: Vec::new(),
        },
    };
    run.write_manifest()?;

    let instances = run.stage("generate", |out| {
        let instances: Vec<MilpInstance> = (0..cfg.dataset.count).map(|k| cfg.dataset.instance(k)).collect::<Result<_>>()?;
        let files = store_instances(&instances, &out.join("dataset"))?;
        Ok((instances, files))
    })?;

    let tuples = run.stage("label", |out| {
        let tuples: Vec<FTuple> = instances.iter().map(|i| extract_labels(i, &cfg.label)).collect::<Result<_>>()?;
        let records: Vec<Record> = instances
            .iter()
            .zip(&tuples)
            .map(|(i, t)| Record {
                instance: i.clone(),
                labels: Some(t.clone()),
            })
            .collect();
        let path = out.join("labels.json");
        store_records_file(&records, &path)?;
        Ok((tuples, vec![path]))
    })?;

    let vae = run.stage("train", |out| {
        let trained = train(&tuples, &cfg.train)?;
        let ckpt = out.join("model.ckpt");
        fs::write(&ckpt, trained.vae.to_bytes())?;
        let loss = write_json(out.join("train_loss.json"), &trained.epoch_loss)?;
        Ok((trained.vae, vec![ckpt, loss]))
    })?;

    let samples = run.stage("sample", |_| {
        let samples: Vec<MilpInstance> = sample_instances(&tuples, &vae, &cfg.infer)?.into_iter().map(|p| p.0).collect();
        Ok((samples, Vec::new()))
    })?;

    let mut candidates = vec![("vae".to_string(), samples)];
    if cfg.analytics.baselines {
        let scaler = FeatureScaler::fit(&tuples)?;
        let (random, bowly) = run.stage("baseline", |_| {
            let random = random_decoder_sample(&tuples, &cfg.infer, &scaler)?;
            let preset = match cfg.dataset.family {
                Family::Sc => BowlyConfig::set_cover,
                Family::Ca => BowlyConfig::comb_auction,
            };
            let bowly = bowly_sample(&tuples, cfg.infer.count, cfg.infer.seed, &scaler, preset)?;
            Ok(((random, bowly), Vec::new()))
        })?;
        candidates.push(("random".into(), random.into_iter().map(|p| p.0).collect()));
        candidates.push(("bowly".into(), bowly.into_iter().map(|p| p.0).collect()));
    }

    let verified = run.stage("verify", |out| {
        let mut lines = Vec::new();
        let mut files = Vec::new();
        for (name, corpus) in &candidates {
            lines.push(verify_all(name, corpus)?);
            let dir = if name == "vae" { "samples".to_string() } else { format!("baseline-{name}") };
            files.extend(store_instances(corpus, &out.join(dir))?);
        }
        let report = out.join("verify.txt");
        fs::write(&report, lines.join("\n") + "\n")?;
        files.push(report);
        Ok((candidates[0].1.len(), files))
    })?;

    let scores = run.stage("similarity", |out| {
        let original: Vec<_> = instances.iter().map(instance_stats).collect();
        let profiles: Vec<Vec<_>> = candidates.iter().map(|(_, c)| c.iter().map(instance_stats).collect()).collect();
        let result = js_similarity_bins(&original, &profiles, cfg.analytics.bins)?;
        let names: Vec<&str> = candidates.iter().map(|(n, _)| n.as_str()).collect();
        let json = serde_json::json!({
            "metrics": METRICS,
            "candidates": names,
            "original_mean": mean_profile(&original),
            "candidate_means": profiles.iter().map(|p| mean_profile(p)).collect::<Vec<_>>(),
            "result": result,
        });
        let path = write_json(out.join("similarity.json"), &json)?;
        let scores: Vec<(String, f64)> = names.iter().zip(&result.reports).map(|(n, r)| (n.to_string(), r.score)).collect();
        Ok((scores, vec![path]))
    })?;

    let correlation = if cfg.analytics.n_configs > 0 {
        Some(run.stage("correlate", |out| {
            let n = cfg.analytics.n_configs;
            match tuning_correlation(&instances, &candidates[0].1, n, 0) {
                Ok(rep) => {
                    let path = write_json(out.join("correlation.json"), &rep)?;
                    Ok((Some(rep.r), vec![path]))
                }
                // effort identical under every configuration: r is undefined
                Err(Error::ConstantInput) => {
                    let json = serde_json::json!({ "r": null, "p": null, "n": n, "constant_effort": true });
                    let path = write_json(out.join("correlation.json"), &json)?;
                    Ok((None, vec![path]))
                }
                Err(e) => Err(e),
            }
        })?)
        .flatten()
    } else {
        None
    };

    run.manifest.complete = true;
    run.write_manifest()?;
    Ok(PipelineSummary {
        manifest: run.manifest,
        verified,
        sampled: candidates[0].1.len(),
        scores,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
[dataset]
family = "sc"
count = 4
seed = 0
n_cons = 4
n_vars = 8
density = 0.5

[train]
epochs = 2

[infer]
gamma = 0.5
count = 4
seed = 1
"#;

    #[test]
    fn alpha_defaults_per_family() {
        let cfg = PipelineConfig::from_toml(TOY).unwrap();
        assert_eq!(cfg.train.alpha, 5.0);
        assert_eq!(cfg.train.epochs, 2);
        let ca = TOY.replace("family = \"sc\"", "family = \"ca\"");
        assert_eq!(PipelineConfig::from_toml(&ca).unwrap().train.alpha, 150.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = TOY.replace("epochs = 2", "epochs = 2\nepoch = 3");
        assert!(matches!(PipelineConfig::from_toml(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_gamma_rejected_before_work() {
        let cfg = PipelineConfig::from_toml(&TOY.replace("gamma = 0.5", "gamma = 0.0")).unwrap();
        let dir = std::env::temp_dir().join(format!("milpgen-gamma0-{}", std::process::id()));
        let err = run_pipeline(&cfg, &dir).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(!dir.exists());
    }
}
