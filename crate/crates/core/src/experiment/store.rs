//! Saving and loading reference sets and GP runs.

use super::table::{num, Table};
use super::{schema, write_json, ExperimentError};
use crate::ela::{ElaSample, FeatureVector, FEATURE_NAMES};
use crate::gp::{EvaluationRecord, GpConfig, GpRunLog, Validity};
use crate::space::{ReferenceEntry, ReferenceSet};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

pub const BOUNDS_FILE: &str = "bounds.json";
pub const CORPUS_FILE: &str = "corpus.csv";
pub const RUN_LOG_FILE: &str = "run_log.csv";
pub const GENERATIONS_FILE: &str = "generations.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const BEST_FILE: &str = "best.txt";
pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub name: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub retained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsFile {
    pub schema: String,
    pub dim: usize,
    pub design_seed: u64,
    pub threshold: f64,
    pub features: Vec<FeatureBounds>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn bounds_file(reference: &ReferenceSet) -> BoundsFile {
    BoundsFile {
        schema: schema::BOUNDS.to_string(),
        dim: reference.dim,
        design_seed: reference.design_seed,
        threshold: reference.threshold,
        features: FEATURE_NAMES
            .iter()
            .enumerate()
            .map(|(k, n)| FeatureBounds {
                name: n.to_string(),
                min: finite(reference.min[k]),
                max: finite(reference.max[k]),
                retained: reference.retained[k],
            })
            .collect(),
    }
}

/// Raw features of every corpus replicate.
pub fn corpus_table(reference: &ReferenceSet) -> Table {
    let mut t =
        Table::new(schema::CORPUS, ["fid", "iid", "source", "replicate", "flags"].into_iter().chain(FEATURE_NAMES));
    for e in &reference.corpus {
        for (r, fv) in e.sample.replicates.iter().enumerate() {
            let mut row = vec![
                e.fid.to_string(),
                e.iid.to_string(),
                e.sample.source.clone(),
                r.to_string(),
                fv.flags().join(";"),
            ];
            row.extend(fv.values().iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    t
}

pub fn save_reference(reference: &ReferenceSet, dir: &Path) -> Result<(), ExperimentError> {
    write_json(&dir.join(BOUNDS_FILE), &bounds_file(reference))?;
    corpus_table(reference).write(&dir.join(CORPUS_FILE))
}

/// Rebuilds a reference set from a saved corpus; bounds and retained
/// features are recomputed and checked against the saved ones.
pub fn load_reference(dir: &Path) -> Result<ReferenceSet, ExperimentError> {
    let bounds: BoundsFile = super::read_json(&dir.join(BOUNDS_FILE))?;
    let t = Table::read(&dir.join(CORPUS_FILE), schema::CORPUS)?;
    let (c_fid, c_iid, c_src, c_flags) = (t.column("fid")?, t.column("iid")?, t.column("source")?, t.column("flags")?);
    let feature_cols = FEATURE_NAMES.iter().map(|n| t.column(n)).collect::<Result<Vec<_>, _>>()?;
    let mut corpus: Vec<ReferenceEntry> = Vec::new();
    for i in 0..t.rows.len() {
        let fid: usize = t.parse(i, c_fid)?;
        let iid: usize = t.parse(i, c_iid)?;
        let values = feature_cols.iter().map(|&c| t.parse(i, c)).collect::<Result<Vec<f64>, _>>()?;
        let flags: Vec<String> = t.rows[i][c_flags].split(';').filter(|s| !s.is_empty()).map(str::to_string).collect();
        let fv = FeatureVector::with_flags(values, flags);
        match corpus.last_mut() {
            Some(e) if e.fid == fid && e.iid == iid => e.sample.replicates.push(fv),
            _ => corpus.push(ReferenceEntry {
                fid,
                iid,
                sample: ElaSample { source: t.rows[i][c_src].clone(), replicates: vec![fv] },
            }),
        }
    }
    let reference = ReferenceSet::from_corpus(bounds.dim, bounds.design_seed, bounds.threshold, corpus);
    if bounds_file(&reference) != bounds {
        return Err(ExperimentError::Inconsistent(format!("{} does not match its corpus", BOUNDS_FILE)));
    }
    Ok(reference)
}

/// A GP run as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RunData {
    pub config: GpConfig,
    pub records: Vec<EvaluationRecord>,
}

impl RunData {
    pub fn from_log(log: &GpRunLog) -> Self {
        RunData { config: log.config.clone(), records: log.records.clone() }
    }

    /// First record of every distinct valid expression, in log order.
    pub fn valid_distinct(&self) -> Vec<&EvaluationRecord> {
        let mut seen = HashSet::new();
        self.records.iter().filter(|r| r.validity == Validity::Valid && seen.insert(r.expression.as_str())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub target_fid: usize,
    pub dim: usize,
    pub seed: u64,
    pub initial_best: f64,
    pub final_best: f64,
    pub min_fitness: f64,
    pub records: usize,
    pub fresh_evaluations: usize,
    pub invalid_fraction: f64,
    pub fresh_invalid_fraction: f64,
    pub init_resamples: usize,
    pub best_expression: String,
}

pub fn run_summary(log: &GpRunLog) -> RunSummary {
    RunSummary {
        target_fid: log.config.target_fid,
        dim: log.config.dim,
        seed: log.config.seed,
        initial_best: log.initial_best(),
        final_best: log.final_best(),
        min_fitness: log.min_fitness(),
        records: log.records.len(),
        fresh_evaluations: log.records.iter().filter(|r| !r.cached).count(),
        invalid_fraction: log.invalid_fraction(),
        fresh_invalid_fraction: log.fresh_invalid_fraction(),
        init_resamples: log.init_resamples,
        best_expression: log.best.tree.to_text(),
    }
}

pub fn run_log_table(records: &[EvaluationRecord]) -> Table {
    let mut t = Table::new(schema::RUN_LOG, ["index", "generation", "expression", "fitness", "validity", "cached"]);
    for r in records {
        t.push(vec![
            r.index.to_string(),
            r.generation.to_string(),
            r.expression.clone(),
            num(r.fitness),
            r.validity.to_string(),
            r.cached.to_string(),
        ]);
    }
    t
}

pub fn generations_table(log: &GpRunLog) -> Table {
    let mut t = Table::new(
        schema::GENERATIONS,
        [
            "generation",
            "best",
            "mean_valid",
            "best_so_far",
            "evaluations",
            "unchanged_offspring",
            "depth_rejections",
            "invalid",
        ],
    );
    for g in &log.generations {
        t.push(vec![
            g.generation.to_string(),
            num(g.best),
            num(g.mean_valid),
            num(g.best_so_far),
            g.evaluations.to_string(),
            g.unchanged_offspring.to_string(),
            g.depth_rejections.to_string(),
            g.invalid.to_string(),
        ]);
    }
    t
}

/// Normalized retained features of every record that has them.
pub fn features_table(records: &[EvaluationRecord], names: &[&str]) -> Table {
    let mut t = Table::new(schema::FEATURES, ["index", "replicate"].into_iter().chain(names.iter().copied()));
    for r in records {
        for (k, rep) in r.features.iter().flatten().enumerate() {
            let mut row = vec![r.index.to_string(), k.to_string()];
            row.extend(rep.iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    t
}

pub fn save_run(log: &GpRunLog, names: &[&str], dir: &Path) -> Result<(), ExperimentError> {
    write_json(&dir.join(CONFIG_FILE), &log.config)?;
    run_log_table(&log.records).write(&dir.join(RUN_LOG_FILE))?;
    generations_table(log).write(&dir.join(GENERATIONS_FILE))?;
    features_table(&log.records, names).write(&dir.join(FEATURES_FILE))?;
    let best = dir.join(BEST_FILE);
    fs::write(&best, format!("{}\n", log.best.tree.to_text())).map_err(|e| ExperimentError::io(&best, e))?;
    write_json(&dir.join(SUMMARY_FILE), &run_summary(log))
}

pub fn load_run(dir: &Path) -> Result<RunData, ExperimentError> {
    let config: GpConfig = super::read_json(&dir.join(CONFIG_FILE))?;
    let t = Table::read(&dir.join(RUN_LOG_FILE), schema::RUN_LOG)?;
    let cols = ["index", "generation", "expression", "fitness", "validity", "cached"]
        .map(|c| t.column(c))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut features = load_features(&dir.join(FEATURES_FILE))?;
    let mut records = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let index: usize = t.parse(i, cols[0])?;
        let validity_text = &t.rows[i][cols[4]];
        let validity = Validity::from_name(validity_text).ok_or_else(|| ExperimentError::Parse {
            path: dir.join(RUN_LOG_FILE).display().to_string(),
            message: format!("unknown validity {validity_text:?}"),
        })?;
        records.push(EvaluationRecord {
            index,
            generation: t.parse(i, cols[1])?,
            expression: t.rows[i][cols[2]].clone(),
            fitness: t.parse(i, cols[3])?,
            validity,
            cached: t.parse(i, cols[5])?,
            features: features.remove(&index),
        });
    }
    Ok(RunData { config, records })
}

fn load_features(path: &Path) -> Result<BTreeMap<usize, Vec<Vec<f64>>>, ExperimentError> {
    let t = Table::read(path, schema::FEATURES)?;
    let c_index = t.column("index")?;
    let first = t.column("replicate")? + 1;
    let mut out: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for i in 0..t.rows.len() {
        let row = (first..t.header.len()).map(|c| t.parse(i, c)).collect::<Result<Vec<f64>, _>>()?;
        out.entry(t.parse(i, c_index)?).or_default().push(row);
    }
    Ok(out)
}
