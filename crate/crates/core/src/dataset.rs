//! Synthetic set-cover and combinatorial-auction generators, and instance
//! persistence.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    instance_to_json, FTuple, InstanceFile, MilpInstance, Mode, ObjectiveSense, SparseMatrix,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScConfig {
    pub n_cons: usize,
    pub n_vars: usize,
    pub density: f64,
    #[serde(default = "default_cost_range")]
    pub cost_range: (i64, i64),
    #[serde(default)]
    pub seed: u64,
}

fn default_cost_range() -> (i64, i64) {
    (1, 100)
}

impl ScConfig {
    pub fn new(n_cons: usize, n_vars: usize, density: f64, seed: u64) -> Self {
        ScConfig {
            n_cons,
            n_vars,
            density,
            cost_range: default_cost_range(),
            seed,
        }
    }

    fn target_nnz(&self) -> usize {
        (self.n_cons as f64 * self.n_vars as f64 * self.density).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cons < 1 || self.n_vars < 2 {
            return Err(Error::Validation("set cover needs n_cons ≥ 1 and n_vars ≥ 2".into()));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::Validation(format!("density {} outside (0, 1)", self.density)));
        }
        let (lo, hi) = self.cost_range;
        if lo < 1 || hi < lo {
            return Err(Error::Validation(format!("cost range [{lo}, {hi}] invalid")));
        }
        let nnz = self.target_nnz();
        if self.density * self.n_vars as f64 + 1e-9 < 2.0 || nnz < (2 * self.n_cons).max(self.n_vars) {
            return Err(Error::ConfigInfeasible(format!(
                "density {} gives {nnz} nonzeros; need at least {} to cover every row twice and every column once",
                self.density,
                (2 * self.n_cons).max(self.n_vars)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaConfig {
    pub n_items: usize,
    pub n_bids: usize,
    pub max_bundle: usize,
    #[serde(default = "default_price_range")]
    pub price_range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
}

fn default_price_range() -> (f64, f64) {
    (1.0, 100.0)
}

impl CaConfig {
    pub fn new(n_items: usize, n_bids: usize, max_bundle: usize, seed: u64) -> Self {
        CaConfig {
            n_items,
            n_bids,
            max_bundle,
            price_range: default_price_range(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_items < 1 || self.n_bids < 1 || self.max_bundle < 1 {
            return Err(Error::Validation("auction sizes must be at least 1".into()));
        }
        if self.max_bundle > self.n_items {
            return Err(Error::Validation(format!(
                "max_bundle {} exceeds n_items {}",
                self.max_bundle, self.n_items
            )));
        }
        let (lo, hi) = self.price_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Validation(format!("price range [{lo}, {hi}] invalid")));
        }
        Ok(())
    }
}

/// Set-cover instance `min costᵀx s.t. Mx ≥ 1, x ∈ {0,1}`, stored in
/// canonical form as `max (−cost)ᵀx s.t. (−M)x ≤ −1`.
///
/// The matrix has exactly `round(m·n·density)` nonzeros, every row at
/// least two and every column at least one.
pub fn gen_set_cover(cfg: &ScConfig) -> Result<MilpInstance> {
    cfg.validate()?;
    let (m, n) = (cfg.n_cons, cfg.n_vars);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut present: HashSet<(usize, usize)> = HashSet::new();
    let mut row_deg = vec![0usize; m];

    let mut cols: Vec<usize> = (0..n).collect();
    cols.shuffle(&mut rng);
    for (k, &j) in cols.iter().enumerate() {
        present.insert((k % m, j));
        row_deg[k % m] += 1;
    }
    for i in 0..m {
        while row_deg[i] < 2 {
            let j = rng.random_range(0..n);
            if present.insert((i, j)) {
                row_deg[i] += 1;
            }
        }
    }

    let target = cfg.target_nnz();
    let remaining = target - present.len();
    let free = m * n - present.len();
    if remaining * 2 > free {
        let mut absent: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|p| !present.contains(p))
            .collect();
        absent.shuffle(&mut rng);
        present.extend(absent.into_iter().take(remaining));
    } else {
        while present.len() < target {
            present.insert((rng.random_range(0..m), rng.random_range(0..n)));
        }
    }

    let mut trip: Vec<(usize, usize, f64)> = present.into_iter().map(|(i, j)| (i, j, -1.0)).collect();
    trip.sort_by_key(|&(i, j, _)| (i, j));
    let a = SparseMatrix::from_triplets(m, n, &trip)?;
    let (lo, hi) = cfg.cost_range;
    let c = (0..n).map(|_| -(rng.random_range(lo..=hi) as f64)).collect();
    let mut inst = MilpInstance::new(format!("sc-{}", cfg.seed), Mode::Binary, a, vec![-1.0; m], c)?;
    inst.original_sense = ObjectiveSense::Min;
    Ok(inst)
}

/// Combinatorial-auction set-packing instance with random bundles.
pub fn gen_comb_auction(cfg: &CaConfig) -> Result<MilpInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let items: Vec<usize> = (0..cfg.n_items).collect();
    let (lo, hi) = cfg.price_range;
    let bids: Vec<(Vec<usize>, f64)> = (0..cfg.n_bids)
        .map(|_| {
            let size = rng.random_range(1..=cfg.max_bundle);
            let bundle: Vec<usize> = items.choose_multiple(&mut rng, size).copied().collect();
            let price = if hi > lo { rng.random_range(lo..hi) } else { lo };
            (bundle, price)
        })
        .collect();
    comb_auction_from_bids(format!("ca-{}", cfg.seed), cfg.n_items, &bids)
}

/// Set-packing instance from explicit `(bundle, price)` bids.
///
/// Items no bid asks for would give empty rows and are dropped.
pub fn comb_auction_from_bids(
    name: impl Into<String>,
    n_items: usize,
    bids: &[(Vec<usize>, f64)],
) -> Result<MilpInstance> {
    if bids.is_empty() {
        return Err(Error::Validation("at least one bid is required".into()));
    }
    let mut wanted = vec![false; n_items];
    for (bundle, _) in bids {
        for &i in bundle {
            if i >= n_items {
                return Err(Error::Validation(format!("item {i} out of range")));
            }
            wanted[i] = true;
        }
    }
    let mut row_of = vec![usize::MAX; n_items];
    let mut m = 0;
    for i in 0..n_items {
        if wanted[i] {
            row_of[i] = m;
            m += 1;
        }
    }
    let mut trip = Vec::new();
    for (j, (bundle, _)) in bids.iter().enumerate() {
        let uniq: HashSet<usize> = bundle.iter().copied().collect();
        trip.extend(uniq.into_iter().map(|i| (row_of[i], j, 1.0)));
    }
    let a = SparseMatrix::from_triplets(m, bids.len(), &trip)?;
    let c = bids.iter().map(|(_, p)| *p).collect();
    MilpInstance::new(name, Mode::Binary, a, vec![1.0; m], c)
}

/// An instance with its optional solution tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub instance: MilpInstance,
    pub labels: Option<FTuple>,
}

impl Record {
    pub fn unlabeled(instance: MilpInstance) -> Self {
        Record {
            instance,
            labels: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Box<InstanceFile>),
    Many(Vec<InstanceFile>),
}

/// Loads instances from a directory of `*.json` files (sorted by file name)
/// or from one file holding a single instance or an array of them.
pub fn load_records(path: &Path) -> Result<Vec<Record>> {
    let mut files: Vec<PathBuf> = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "json") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut out = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file)?;
        let parsed: OneOrMany = serde_json::from_str(&text).map_err(|e| {
            // Re-parse as a single instance to get the more specific message.
            let e = serde_json::from_str::<InstanceFile>(&text).err().unwrap_or(e);
            Error::Parse {
                path: file.clone(),
                line: e.line(),
                column: e.column(),
                msg: e.to_string(),
            }
        })?;
        let list = match parsed {
            OneOrMany::One(f) => vec![*f],
            OneOrMany::Many(v) => v,
        };
        for f in list {
            let (instance, labels) = f.into_instance()?;
            out.push(Record { instance, labels });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(out)
}

pub fn load_instances(path: &Path) -> Result<Vec<MilpInstance>> {
    Ok(load_records(path)?.into_iter().map(|r| r.instance).collect())
}

/// Writes one `NNNNN.json` file per record into `dir`, creating it if needed.
/// Existing `*.json` files in `dir` are removed first.
pub fn store_records(records: &[Record], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "json") {
            fs::remove_file(p)?;
        }
    }
    let mut paths = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let p = dir.join(format!("{k:05}.json"));
        fs::write(&p, instance_to_json(&r.instance, r.labels.as_ref()))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Writes all records into one JSON array file.
pub fn store_records_file(records: &[Record], path: &Path) -> Result<()> {
    let files: Vec<InstanceFile> = records
        .iter()
        .map(|r| InstanceFile::from_instance(&r.instance, r.labels.as_ref()))
        .collect();
    fs::write(path, serde_json::to_string(&files).expect("instance serialization cannot fail"))?;
    Ok(())
}

pub fn store_instances(instances: &[MilpInstance], dir: &Path) -> Result<Vec<PathBuf>> {
    let records: Vec<Record> = instances.iter().cloned().map(Record::unlabeled).collect();
    store_records(&records, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Status;
    use crate::solver::{classify, solve_milp, SolverParams};

    #[test]
    fn tiny_set_cover_is_covered() {
        let inst = gen_set_cover(&ScConfig::new(2, 3, 0.67, 1)).unwrap();
        assert_eq!(inst.a.nnz(), 4);
        assert!(inst.a.row_degrees().iter().all(|&d| d >= 2));
        assert!(inst.a.col_degrees().iter().all(|&d| d >= 1));
        assert!(inst.is_feasible(&[1.0; 3], 1e-12));
        assert_eq!(classify(&inst).unwrap(), Status::Optimal);
    }

    #[test]
    fn sparse_set_cover_rejected() {
        assert!(matches!(
            gen_set_cover(&ScConfig::new(10, 20, 0.05, 0)),
            Err(Error::ConfigInfeasible(_))
        ));
    }

    #[test]
    fn set_cover_density_is_exact() {
        let cfg = ScConfig::new(10, 20, 0.3, 5);
        let inst = gen_set_cover(&cfg).unwrap();
        assert_eq!(inst.a.nnz(), 60);
        assert_eq!(inst, gen_set_cover(&cfg).unwrap());
        assert!(inst.c.iter().all(|&c| (-100.0..=-1.0).contains(&c) && c.fract() == 0.0));
    }

    #[test]
    fn auction_examples() {
        let p = SolverParams::default();
        let one = comb_auction_from_bids("a", 1, &[(vec![0], 3.0), (vec![0], 5.0)]).unwrap();
        assert_eq!(solve_milp(&one, &p).unwrap().outcome.unwrap().value, Some(5.0));
        let disjoint =
            comb_auction_from_bids("b", 3, &[(vec![0], 1.5), (vec![1], 2.0), (vec![2], 4.0)]).unwrap();
        assert_eq!(solve_milp(&disjoint, &p).unwrap().outcome.unwrap().value, Some(7.5));
    }

    #[test]
    fn unused_items_are_dropped() {
        let inst = comb_auction_from_bids("c", 4, &[(vec![1, 3], 1.0)]).unwrap();
        assert_eq!(inst.n_cons(), 2);
    }

    #[test]
    fn store_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let insts: Vec<MilpInstance> = (0..10)
            .map(|s| gen_comb_auction(&CaConfig::new(6, 8, 3, s)).unwrap())
            .collect();
        store_instances(&insts, dir.path()).unwrap();
        assert_eq!(load_instances(dir.path()).unwrap(), insts);
    }

    #[test]
    fn array_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let a = gen_comb_auction(&CaConfig::new(3, 3, 2, 0)).unwrap();
        let arr = format!(
            "[{},{}]",
            instance_to_json(&a, None),
            instance_to_json(&a, None)
        );
        let p = dir.path().join("all.json");
        fs::write(&p, arr).unwrap();
        assert_eq!(load_instances(&p).unwrap().len(), 2);
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{\"name\": ").unwrap();
        assert!(matches!(load_instances(&p), Err(Error::Parse { .. })));
    }
}
