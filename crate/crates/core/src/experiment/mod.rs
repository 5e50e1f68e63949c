//! End-to-end experiments driven by replayable manifests, and the CSV/JSON
//! files they leave behind.

pub mod exports;
pub mod store;
pub mod table;

use crate::bbob::{BbobError, BbobInstance};
use crate::ela::{ElaError, ElaSample, FEATURE_NAMES};
use crate::funcgen::{self, FuncGenError, GeneratorConfig};
use crate::gp::{self, GpConfig, GpContext, GpError};
use crate::rng::{self, tag};
use crate::sampling::{DoeDesign, Points, SamplingError};
use crate::space::{self, ReferenceSet, SpaceError, TargetProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
pub use table::{num, Table};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FUNCTIONS_FILE: &str = "functions.txt";
pub const REJECTIONS_FILE: &str = "functions.json";

/// Schema identifiers stamped into every file.
pub mod schema {
    pub const MANIFEST: &str = "elagp.manifest/1";
    pub const BOUNDS: &str = "elagp.bounds/1";
    pub const CORPUS: &str = "elagp.corpus/1";
    pub const RUN_LOG: &str = "elagp.run_log/1";
    pub const GENERATIONS: &str = "elagp.generations/1";
    pub const FEATURES: &str = "elagp.features/1";
    pub const REJECTIONS: &str = "elagp.rejections/1";
    pub const COMPARE_FITNESS: &str = "elagp.compare_fitness/1";
    pub const COMPARE_SUMMARY: &str = "elagp.compare_summary/1";
    pub const GRID: &str = "elagp.grid/1";
    pub const PARALLEL: &str = "elagp.parallel/1";
    pub const UMAP_REFERENCE: &str = "elagp.umap_reference/1";
    pub const UMAP_CANDIDATES: &str = "elagp.umap_candidates/1";
    pub const KENDALL: &str = "elagp.kendall/1";
    pub const PAIRS: &str = "elagp.pairs/1";
    pub const AUC: &str = "elagp.auc/1";
    pub const FEATURE_INNER_OUTER: &str = "elagp.feature_inner_outer/1";
    pub const DEVIATION_REFERENCE: &str = "elagp.deviation_reference/1";
    pub const DEVIATION_DIFFERENCE: &str = "elagp.deviation_difference/1";
    pub const DESIGN: &str = "elagp.design/1";
    pub const BBOB_VALUES: &str = "elagp.bbob_values/1";
    pub const ELA: &str = "elagp.ela/1";
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected schema {expected}, found {found:?}")]
    Schema { path: String, expected: String, found: String },
    #[error("{schema}: missing column {column}")]
    MissingColumn { schema: String, column: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("landscape grids need d = 2, got {0}")]
    DimensionUnsupported(usize),
    #[error("{0}")]
    Inconsistent(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Generator(#[from] FuncGenError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Bbob(#[from] BbobError),
    #[error(transparent)]
    Ela(#[from] ElaError),
}

impl ExperimentError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.display().to_string(), source }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Parse { path: path.display().to_string(), message: e.to_string() })
}

fn create_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))
}

/// What to run; inputs that are themselves experiment outputs are named
/// by directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// One run per target (and repetition). Identity fields of `gp`
    /// (seed, dimension, target, design seed) come from the manifest.
    GpRun {
        gp: GpConfig,
        #[serde(default = "one")]
        repetitions: usize,
    },
    RfgBaseline {
        count: usize,
    },
    ReferenceBuild,
    DistanceAnalysis {
        #[serde(default)]
        runs: Vec<PathBuf>,
    },
    Compare {
        runs: Vec<PathBuf>,
        rfg_count: usize,
    },
    GridExport {
        run: PathBuf,
        resolution: usize,
        picks: usize,
    },
    ParallelExport {
        highlight: Vec<String>,
        #[serde(default)]
        others: Vec<String>,
    },
    UmapExport {
        run: PathBuf,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema: String,
    pub tool_version: String,
    pub dim: usize,
    /// Seed of the stochastic search (GP runs, random functions).
    pub seed: u64,
    /// Seed of the design of experiments and its bootstraps.
    pub design_seed: u64,
    pub threshold: f64,
    pub targets: Vec<usize>,
    /// Saved reference to reuse instead of rebuilding it.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(flatten)]
    pub experiment: Experiment,
}

impl ExperimentManifest {
    pub fn new(experiment: Experiment, dim: usize, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentManifest {
            schema: schema::MANIFEST.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            dim,
            seed,
            design_seed: 0,
            threshold: space::CORRELATION_THRESHOLD,
            targets: vec![1],
            reference: None,
            out_dir: out_dir.into(),
            experiment,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        read_json(path)
    }

    /// GP configuration of the `rep`-th run for `fid`.
    pub fn gp_config(&self, base: &GpConfig, fid: usize, rep: usize) -> GpConfig {
        GpConfig {
            seed: self.seed.wrapping_add(rep as u64),
            dim: self.dim,
            target_fid: fid,
            design_seed: self.design_seed,
            ..base.clone()
        }
    }

    fn load_or_build_reference(&self) -> Result<ReferenceSet, ExperimentError> {
        let reference = match &self.reference {
            Some(dir) => store::load_reference(dir)?,
            None => space::build_reference(self.dim, self.design_seed, self.threshold)?,
        };
        if reference.dim != self.dim
            || reference.design_seed != self.design_seed
            || reference.threshold != self.threshold
        {
            return Err(ExperimentError::Inconsistent(format!(
                "reference (d={}, design seed {}, threshold {}) does not match the manifest",
                reference.dim, reference.design_seed, reference.threshold
            )));
        }
        Ok(reference)
    }

    fn first_target(&self) -> Result<usize, ExperimentError> {
        self.targets.first().copied().ok_or_else(|| ExperimentError::Inconsistent("no target given".into()))
    }
}

/// Output directory of one GP run inside a gp-run experiment.
pub fn run_dir(out: &Path, fid: usize, rep: usize, targets: usize, repetitions: usize) -> PathBuf {
    let mut dir = out.to_path_buf();
    if targets > 1 {
        dir.push(format!("f{fid:02}"));
    }
    if repetitions > 1 {
        dir.push(format!("rep{rep}"));
    }
    dir
}

/// Runs the experiment, writing its files and the manifest into
/// `out_dir`.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<(), ExperimentError> {
    let out = &manifest.out_dir;
    create_dir(out)?;
    match &manifest.experiment {
        Experiment::GpRun { gp: base, repetitions } => {
            let reference = manifest.load_or_build_reference()?;
            let names = reference.retained_names();
            for &fid in &manifest.targets {
                for rep in 0..*repetitions {
                    let config = manifest.gp_config(base, fid, rep);
                    let ctx = GpContext::new(&config, reference.clone())?;
                    let log = gp::run_with_context(&config, &ctx)?;
                    let dir = run_dir(out, fid, rep, manifest.targets.len(), *repetitions);
                    create_dir(&dir)?;
                    store::save_run(&log, &names, &dir)?;
                }
            }
        }
        Experiment::RfgBaseline { count } => {
            write_rfg_sample(manifest.dim, *count, manifest.seed, manifest.design_seed, out)?;
        }
        Experiment::ReferenceBuild => {
            store::save_reference(&manifest.load_or_build_reference()?, out)?;
        }
        Experiment::DistanceAnalysis { runs } => {
            let reference = manifest.load_or_build_reference()?;
            let runs = load_runs(runs, manifest.dim)?;
            let study = exports::distance_study(&reference, &runs);
            for (name, table) in exports::distance_tables(&study) {
                table.write(&out.join(name))?;
            }
        }
        Experiment::Compare { runs, rfg_count } => {
            let reference = manifest.load_or_build_reference()?;
            let runs = load_runs(runs, manifest.dim)?;
            let design = DoeDesign::new(manifest.dim, manifest.design_seed)?;
            let rfg = exports::rfg_functions(&rfg_generator(manifest.dim, manifest.seed), &design, *rfg_count)?;
            let c = exports::compare_gp_vs_rfg(
                &reference,
                &manifest.targets,
                &runs,
                &rfg,
                &space::FitnessOptions::default(),
                gp::PENALTY,
            )?;
            let (all, summary) = exports::comparison_tables(&c);
            all.write(&out.join("fitness.csv"))?;
            summary.write(&out.join("summary.csv"))?;
        }
        Experiment::GridExport { run, resolution, picks } => {
            let run = load_runs(std::slice::from_ref(run), manifest.dim)?.remove(0);
            let ranked = exports::ranked_candidates(&run);
            let blocks =
                exports::export_landscape_grid(&ranked, run.config.target_fid, manifest.dim, *resolution, *picks)?;
            exports::grid_table(&blocks, *resolution).write(&out.join("grid.csv"))?;
        }
        Experiment::ParallelExport { highlight, others } => {
            let reference = manifest.load_or_build_reference()?;
            let config =
                GpConfig { target_fid: manifest.first_target()?, ..manifest.gp_config(&GpConfig::default(), 1, 0) };
            let ctx = GpContext::new(&config, reference)?;
            exports::export_parallel_coordinates(&ctx, highlight, others).write(&out.join("parallel.csv"))?;
        }
        Experiment::UmapExport { run } => {
            let reference = manifest.load_or_build_reference()?;
            let run = load_runs(std::slice::from_ref(run), manifest.dim)?.remove(0);
            let target = TargetProfile::from_reference(&reference, run.config.target_fid)?;
            exports::umap_reference_table(&reference).write(&out.join("umap_reference.csv"))?;
            exports::umap_candidate_table(&reference, &target, &run).write(&out.join("umap_candidates.csv"))?;
        }
    }
    write_json(&out.join(MANIFEST_FILE), manifest)
}

/// Re-runs a saved manifest, optionally into another directory.
pub fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> Result<ExperimentManifest, ExperimentError> {
    let mut manifest = ExperimentManifest::load(manifest_path)?;
    if manifest.schema != schema::MANIFEST {
        return Err(ExperimentError::Schema {
            path: manifest_path.display().to_string(),
            expected: schema::MANIFEST.into(),
            found: manifest.schema,
        });
    }
    if let Some(dir) = out_dir {
        manifest.out_dir = dir.to_path_buf();
    }
    run_experiment(&manifest)?;
    Ok(manifest)
}

fn load_runs(dirs: &[PathBuf], dim: usize) -> Result<Vec<store::RunData>, ExperimentError> {
    dirs.iter()
        .map(|d| {
            let run = store::load_run(d)?;
            if run.config.dim != dim {
                return Err(ExperimentError::Inconsistent(format!(
                    "{}: run has d={}, manifest d={dim}",
                    d.display(),
                    run.config.dim
                )));
            }
            Ok(run)
        })
        .collect()
}

/// Generator of the baseline functions for `seed`.
pub fn rfg_generator(dim: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig::new(dim, rng::derive_seed(seed, &[tag::RFG]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionStats {
    pub schema: String,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    pub design_seed: u64,
    pub rejected_total: usize,
    pub rejected_max: usize,
    /// `rejected_histogram[k]`: functions accepted after `k` rejections.
    pub rejected_histogram: Vec<usize>,
}

/// Draws `count` valid functions and writes them, one per line, with a
/// rejection-statistics sidecar.
pub fn write_rfg_sample(
    dim: usize,
    count: usize,
    seed: u64,
    design_seed: u64,
    out: &Path,
) -> Result<RejectionStats, ExperimentError> {
    let design = DoeDesign::new(dim, design_seed)?;
    let set = funcgen::generate_baseline_set(&rfg_generator(dim, seed), count, &design.points)?;
    let mut lines = String::new();
    for f in &set.functions {
        lines.push_str(&f.tree.to_text());
        lines.push('\n');
    }
    let path = out.join(FUNCTIONS_FILE);
    fs::write(&path, lines).map_err(|e| ExperimentError::io(&path, e))?;
    let rejected_max = set.functions.iter().map(|f| f.rejected).max().unwrap_or(0);
    let mut rejected_histogram = vec![0; rejected_max + 1];
    for f in &set.functions {
        rejected_histogram[f.rejected] += 1;
    }
    let stats = RejectionStats {
        schema: schema::REJECTIONS.into(),
        dim,
        count,
        seed,
        design_seed,
        rejected_total: set.rejected_total,
        rejected_max,
        rejected_histogram,
    };
    write_json(&out.join(REJECTIONS_FILE), &stats)?;
    Ok(stats)
}

fn coordinate_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

pub fn design_table(points: &Points) -> Table {
    let mut t = Table::new(schema::DESIGN, coordinate_header(points.dim()));
    for p in points.rows() {
        t.push(p.iter().map(|&v| num(v)).collect());
    }
    t
}

/// Reads a point table (the layout of [`design_table`]).
pub fn read_points(path: &Path) -> Result<Points, ExperimentError> {
    let t = Table::read(path, schema::DESIGN)?;
    let rows = (0..t.rows.len())
        .map(|i| (0..t.header.len()).map(|c| t.parse(i, c)).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(ExperimentError::Inconsistent(format!("{}: no points", path.display())));
    }
    Ok(Points::from_rows(&rows))
}

/// Objective values of an instance, with a flag for points outside the
/// benchmark domain.
pub fn bbob_table(instance: &BbobInstance, points: &Points) -> Table {
    let mut header = coordinate_header(points.dim());
    header.extend(["y".to_string(), "in_domain".to_string()]);
    let mut t = Table::new(schema::BBOB_VALUES, header);
    for p in points.rows() {
        let (y, inside) = instance.evaluate_checked(p);
        let mut row: Vec<String> = p.iter().map(|&v| num(v)).collect();
        row.extend([num(y), inside.to_string()]);
        t.push(row);
    }
    t
}

/// Raw features, one row per (source, replicate).
pub fn ela_table(samples: &[ElaSample]) -> Table {
    let mut t = Table::new(schema::ELA, ["source", "replicate", "flags"].into_iter().chain(FEATURE_NAMES));
    for s in samples {
        for (r, fv) in s.replicates.iter().enumerate() {
            let mut row = vec![s.source.clone(), r.to_string(), fv.flags().join(";")];
            row.extend(fv.values().iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    t
}
