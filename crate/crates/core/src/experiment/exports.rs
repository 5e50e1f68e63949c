//! Data behind the figures: fitness distributions, landscape grids,
//! parallel coordinates, embedding inputs and distance studies.

use super::store::RunData;
use super::table::{num, Table};
use super::{schema, ExperimentError};
use crate::ela::{self, ElaSample};
use crate::expr::ExprTree;
use crate::funcgen::{self, GeneratorConfig};
use crate::gp::{self, GpContext, Validity};
use crate::sampling::DoeDesign;
use crate::space::analysis::{self, DeviationTables, FeatureInnerOuter, InnerOuter};
use crate::space::{self, vector_distance, DistanceMetric, FitnessOptions, ReferenceSet, TargetProfile};
use crate::stats;
use crate::BbobInstance;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const GRID_PICKS: usize = 45;
pub const GRID_RESOLUTION: usize = 101;
pub const RFG_COUNT: usize = 1000;
pub const SUMMARY_QUANTILES: [f64; 3] = [0.05, 0.25, 0.5];

/// A baseline function with its features on the shared design.
#[derive(Clone, Debug, PartialEq)]
pub struct RfgFunction {
    pub expression: String,
    pub sample: Result<ElaSample, Validity>,
}

/// Valid random functions and their feature samples.
pub fn rfg_functions(
    config: &GeneratorConfig,
    design: &DoeDesign,
    count: usize,
) -> Result<Vec<RfgFunction>, ExperimentError> {
    let set = funcgen::generate_baseline_set(config, count, &design.points)?;
    Ok(set
        .functions
        .par_iter()
        .map(|f| {
            let expression = f.tree.to_text();
            let sample = ela::compute_ela_sample(design, &f.y, expression.clone()).map_err(|_| Validity::InvalidEla);
            RfgFunction { expression, sample }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Gp,
    Rfg,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Gp => "gp",
            Origin::Rfg => "rfg",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessEntry {
    pub target: usize,
    pub origin: Origin,
    pub index: usize,
    pub expression: String,
    pub fitness: f64,
    pub validity: Validity,
}

/// Quantiles are over valid entries; `NaN` when there are none.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessSummary {
    pub target: usize,
    pub origin: Origin,
    pub count: usize,
    pub invalid: usize,
    pub min: f64,
    pub quantiles: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub entries: Vec<FitnessEntry>,
    pub summaries: Vec<FitnessSummary>,
}

fn summarize(target: usize, origin: Origin, entries: &[FitnessEntry]) -> FitnessSummary {
    let valid: Vec<f64> = entries.iter().filter(|e| e.validity == Validity::Valid).map(|e| e.fitness).collect();
    let q = |p| if valid.is_empty() { f64::NAN } else { stats::quantile(&valid, p) };
    FitnessSummary {
        target,
        origin,
        count: entries.len(),
        invalid: entries.len() - valid.len(),
        min: valid.iter().copied().fold(f64::NAN, f64::min),
        quantiles: SUMMARY_QUANTILES.map(q),
    }
}

/// Fitness of every GP-sampled and every baseline function to each target.
/// GP entries come from the run aimed at that target, if any.
pub fn compare_gp_vs_rfg(
    reference: &ReferenceSet,
    targets: &[usize],
    runs: &[RunData],
    rfg: &[RfgFunction],
    options: &FitnessOptions,
    penalty: f64,
) -> Result<Comparison, ExperimentError> {
    let mut entries = Vec::new();
    let mut summaries = Vec::new();
    let normalized: Vec<Option<Vec<Vec<f64>>>> =
        rfg.iter().map(|f| f.sample.as_ref().ok().map(|s| reference.normalize_sample(s))).collect();
    for &fid in targets {
        let profile = TargetProfile::from_reference(reference, fid)?;
        let gp_entries: Vec<FitnessEntry> = runs
            .iter()
            .filter(|r| r.config.target_fid == fid)
            .flat_map(|r| &r.records)
            .map(|r| FitnessEntry {
                target: fid,
                origin: Origin::Gp,
                index: r.index,
                expression: r.expression.clone(),
                fitness: r.fitness,
                validity: r.validity,
            })
            .collect();
        let rfg_entries: Vec<FitnessEntry> = rfg
            .iter()
            .zip(&normalized)
            .enumerate()
            .map(|(i, (f, norm))| {
                let (fitness, validity) = match (&f.sample, norm) {
                    (Ok(_), Some(n)) => match space::fitness(n, &profile, reference, options) {
                        Ok(v) => (v, Validity::Valid),
                        Err(_) => (penalty, Validity::InvalidDistance),
                    },
                    (Err(v), _) => (penalty, *v),
                    (Ok(_), None) => unreachable!("normalized alongside the sample"),
                };
                FitnessEntry {
                    target: fid,
                    origin: Origin::Rfg,
                    index: i,
                    expression: f.expression.clone(),
                    fitness,
                    validity,
                }
            })
            .collect();
        summaries.push(summarize(fid, Origin::Gp, &gp_entries));
        summaries.push(summarize(fid, Origin::Rfg, &rfg_entries));
        entries.extend(gp_entries);
        entries.extend(rfg_entries);
    }
    Ok(Comparison { entries, summaries })
}

pub fn comparison_tables(c: &Comparison) -> (Table, Table) {
    let mut all =
        Table::new(schema::COMPARE_FITNESS, ["target", "source", "index", "expression", "fitness", "validity"]);
    for e in &c.entries {
        all.push(vec![
            e.target.to_string(),
            e.origin.to_string(),
            e.index.to_string(),
            e.expression.clone(),
            num(e.fitness),
            e.validity.to_string(),
        ]);
    }
    let mut summary =
        Table::new(schema::COMPARE_SUMMARY, ["target", "source", "count", "invalid", "min", "q05", "q25", "q50"]);
    for s in &c.summaries {
        let mut row =
            vec![s.target.to_string(), s.origin.to_string(), s.count.to_string(), s.invalid.to_string(), num(s.min)];
        row.extend(s.quantiles.iter().map(|&q| num(q)));
        summary.push(row);
    }
    (all, summary)
}

/// `round(linspace(0, n - 1, picks))`, or every rank when `n <= picks`.
pub fn linspace_ranks(n: usize, picks: usize) -> Vec<usize> {
    if n <= picks {
        return (0..n).collect();
    }
    if picks == 1 {
        return vec![0];
    }
    (0..picks).map(|k| (k as f64 * (n - 1) as f64 / (picks - 1) as f64).round() as usize).collect()
}

/// Distinct valid expressions of a run, best first (log order on ties).
pub fn ranked_candidates(run: &RunData) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> =
        run.valid_distinct().into_iter().map(|r| (r.expression.clone(), r.fitness)).collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    v
}

/// Mesh over `[-5, 5]^2`, second coordinate varying slowest.
pub fn grid_mesh(resolution: usize) -> Vec<[f64; 2]> {
    let (lo, hi) = crate::sampling::DOMAIN;
    let g: Vec<f64> = (0..resolution).map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64).collect();
    g.iter().flat_map(|&b| g.iter().map(move |&a| [a, b])).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridBlock {
    pub kind: &'static str,
    pub label: String,
    pub rank: Option<usize>,
    pub fitness: Option<f64>,
    pub values: Vec<f64>,
}

/// Target instances followed by linearly spaced picks from `ranked`, each
/// evaluated on the mesh.
pub fn export_landscape_grid(
    ranked: &[(String, f64)],
    fid: usize,
    dim: usize,
    resolution: usize,
    picks: usize,
) -> Result<Vec<GridBlock>, ExperimentError> {
    if dim != 2 {
        return Err(ExperimentError::DimensionUnsupported(dim));
    }
    if resolution < 2 {
        return Err(ExperimentError::Inconsistent(format!("grid resolution {resolution} is below 2")));
    }
    let mesh = grid_mesh(resolution);
    let mut blocks = Vec::new();
    for &iid in &space::REFERENCE_INSTANCES {
        let inst = BbobInstance::new(fid, iid, 2)?;
        blocks.push(GridBlock {
            kind: "target",
            label: format!("f{fid}_i{iid}"),
            rank: None,
            fitness: None,
            values: mesh.iter().map(|p| inst.evaluate(p)).collect(),
        });
    }
    for rank in linspace_ranks(ranked.len(), picks) {
        let (expr, fitness) = &ranked[rank];
        let tree = ExprTree::parse(expr)
            .map_err(|e| ExperimentError::Parse { path: "candidate".into(), message: e.to_string() })?;
        blocks.push(GridBlock {
            kind: "candidate",
            label: expr.clone(),
            rank: Some(rank),
            fitness: Some(*fitness),
            values: mesh.iter().map(|p| tree.evaluate(p)).collect(),
        });
    }
    Ok(blocks)
}

pub fn grid_table(blocks: &[GridBlock], resolution: usize) -> Table {
    let mesh = grid_mesh(resolution);
    let mut t = Table::new(schema::GRID, ["block", "kind", "label", "rank", "fitness", "x0", "x1", "y"]);
    for (b, block) in blocks.iter().enumerate() {
        let rank = block.rank.map_or(String::new(), |r| r.to_string());
        let fitness = block.fitness.map_or(String::new(), num);
        for (p, &y) in mesh.iter().zip(&block.values) {
            t.push(vec![
                b.to_string(),
                block.kind.to_string(),
                block.label.clone(),
                rank.clone(),
                fitness.clone(),
                num(p[0]),
                num(p[1]),
                num(y),
            ]);
        }
    }
    t
}

/// One row per (source, replicate): the target's instances, then the
/// highlighted and other candidates with their fitness. Candidates
/// without features contribute no rows.
pub fn export_parallel_coordinates(ctx: &GpContext, highlight: &[String], others: &[String]) -> Table {
    let names = ctx.reference.retained_names();
    let mut t = Table::new(
        schema::PARALLEL,
        ["source", "kind", "replicate", "fitness", "validity"].into_iter().chain(names.iter().copied()),
    );
    let push = |t: &mut Table, source: &str, kind: &str, fitness: String, validity: String, reps: &[Vec<f64>]| {
        for (r, rep) in reps.iter().enumerate() {
            let mut row = vec![source.to_string(), kind.to_string(), r.to_string(), fitness.clone(), validity.clone()];
            row.extend(rep.iter().map(|&v| num(v)));
            t.push(row);
        }
    };
    for e in ctx.reference.entries_for(ctx.target.fid) {
        push(
            &mut t,
            &e.sample.source,
            "target",
            String::new(),
            String::new(),
            &ctx.reference.normalize_sample(&e.sample),
        );
    }
    let tagged: Vec<(&String, &str)> =
        highlight.iter().map(|e| (e, "highlight")).chain(others.iter().map(|e| (e, "other"))).collect();
    let evals: Vec<gp::Evaluation> = tagged.par_iter().map(|(e, _)| gp::evaluate_text(e, ctx)).collect();
    for ((expr, kind), ev) in tagged.iter().zip(&evals) {
        if let Some(f) = &ev.features {
            push(&mut t, expr, kind, num(ev.fitness), ev.validity.to_string(), f);
        }
    }
    t
}

/// Fit data for the embedding: every normalized corpus replicate.
pub fn umap_reference_table(reference: &ReferenceSet) -> Table {
    let names = reference.retained_names();
    let mut t =
        Table::new(schema::UMAP_REFERENCE, ["fid", "iid", "replicate"].into_iter().chain(names.iter().copied()));
    for e in &reference.corpus {
        for (r, rep) in reference.normalize_sample(&e.sample).iter().enumerate() {
            let mut row = vec![e.fid.to_string(), e.iid.to_string(), r.to_string()];
            row.extend(rep.iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    t
}

/// Transform data: the mean normalized vector of each distinct valid
/// GP expression and its cityblock distance to the target's mean vector.
pub fn umap_candidate_table(reference: &ReferenceSet, target: &TargetProfile, run: &RunData) -> Table {
    let names = reference.retained_names();
    let centre = target.mean_vector();
    let mut t = Table::new(
        schema::UMAP_CANDIDATES,
        ["index", "expression", "fitness", "cityblock"].into_iter().chain(names.iter().copied()),
    );
    for r in run.valid_distinct() {
        let Some(reps) = &r.features else { continue };
        let mean: Vec<f64> =
            (0..names.len()).map(|f| stats::mean(&reps.iter().map(|x| x[f]).collect::<Vec<_>>())).collect();
        let d = vector_distance(DistanceMetric::Cityblock, &mean, &centre).unwrap_or(f64::NAN);
        let mut row = vec![r.index.to_string(), r.expression.clone(), num(r.fitness), num(d)];
        row.extend(mean.iter().map(|&v| num(v)));
        t.push(row);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceStudy {
    pub source_ids: Vec<String>,
    pub labels: Vec<usize>,
    /// Per metric, pairwise distances in `pair_indices` order.
    pub distances: Vec<Vec<f64>>,
    pub kendall: Vec<Vec<f64>>,
    pub inner_outer: Vec<InnerOuter>,
    pub features: Vec<FeatureInnerOuter>,
    pub deviation: DeviationTables,
}

pub fn distance_study(reference: &ReferenceSet, runs: &[RunData]) -> DistanceStudy {
    let sources = analysis::reference_sources(reference);
    let distances: Vec<Vec<f64>> =
        DistanceMetric::ALL.iter().map(|&m| analysis::pairwise_distances(m, &sources)).collect();
    let kendall = analysis::kendall_tau_matrix(&distances);
    let inner_outer =
        DistanceMetric::ALL.iter().zip(&distances).map(|(&m, d)| analysis::split_inner_outer(m, &sources, d)).collect();
    let features = analysis::per_feature_inner_outer(&sources, &reference.retained_names());
    let sampled: Vec<(usize, Vec<Vec<f64>>)> = runs
        .iter()
        .map(|r| {
            let rows = r.valid_distinct().into_iter().flat_map(|e| e.features.clone().unwrap_or_default()).collect();
            (r.config.target_fid, rows)
        })
        .collect();
    DistanceStudy {
        source_ids: sources.iter().map(|s| s.id.clone()).collect(),
        labels: sources.iter().map(|s| s.label).collect(),
        distances,
        kendall,
        inner_outer,
        features,
        deviation: analysis::feature_deviation_tables(reference, &sampled),
    }
}

const SPREAD_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn spread_row(feature: &str, kind: &str, v: &[f64], auc: f64) -> Vec<String> {
    let mut row = vec![feature.to_string(), kind.to_string(), v.len().to_string()];
    if v.is_empty() {
        row.extend(std::iter::repeat_n(num(f64::NAN), 1 + SPREAD_QUANTILES.len()));
    } else {
        row.push(num(stats::mean(v)));
        row.extend(SPREAD_QUANTILES.iter().map(|&q| num(stats::quantile(v, q))));
    }
    row.push(num(auc));
    row
}

/// Tables written by the distance study, with their file names.
pub fn distance_tables(study: &DistanceStudy) -> Vec<(&'static str, Table)> {
    let metric_names: Vec<&str> = DistanceMetric::ALL.iter().map(|m| m.name()).collect();
    let mut kendall = Table::new(schema::KENDALL, std::iter::once("metric").chain(metric_names.iter().copied()));
    for (m, row) in metric_names.iter().zip(&study.kendall) {
        kendall.push(std::iter::once(m.to_string()).chain(row.iter().map(|&v| num(v))).collect());
    }
    let mut pairs =
        Table::new(schema::PAIRS, ["source_a", "source_b", "inner"].into_iter().chain(metric_names.iter().copied()));
    let scales: Vec<f64> = study
        .distances
        .iter()
        .map(|d| {
            let m = d.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    for (k, (i, j)) in analysis::pair_indices(study.source_ids.len()).into_iter().enumerate() {
        let mut row = vec![
            study.source_ids[i].clone(),
            study.source_ids[j].clone(),
            (study.labels[i] == study.labels[j]).to_string(),
        ];
        row.extend(study.distances.iter().zip(&scales).map(|(d, s)| num(d[k] / s)));
        pairs.push(row);
    }
    let mut auc = Table::new(schema::AUC, ["metric", "auc", "inner_count", "outer_count"]);
    for io in &study.inner_outer {
        auc.push(vec![io.metric.name().into(), num(io.auc()), io.inner.len().to_string(), io.outer.len().to_string()]);
    }
    let mut features = Table::new(
        schema::FEATURE_INNER_OUTER,
        ["feature", "kind", "count", "mean", "q05", "q25", "q50", "q75", "q95", "auc"],
    );
    for f in &study.features {
        let a = analysis::auc(&f.inner, &f.outer);
        features.push(spread_row(&f.feature, "inner", &f.inner, a));
        features.push(spread_row(&f.feature, "outer", &f.outer, a));
    }
    let dev = &study.deviation;
    let deviation = |schema_name: &str, values: &[Vec<f64>]| {
        let mut t = Table::new(schema_name, std::iter::once("fid".to_string()).chain(dev.features.iter().cloned()));
        for (fid, row) in dev.fids.iter().zip(values) {
            t.push(std::iter::once(fid.to_string()).chain(row.iter().map(|&v| num(v))).collect());
        }
        t
    };
    vec![
        ("kendall.csv", kendall),
        ("pairs.csv", pairs),
        ("auc.csv", auc),
        ("feature_inner_outer.csv", features),
        ("deviation_reference.csv", deviation(schema::DEVIATION_REFERENCE, &dev.reference)),
        ("deviation_difference.csv", deviation(schema::DEVIATION_DIFFERENCE, &dev.difference)),
    ]
}
