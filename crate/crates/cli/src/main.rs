use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use elagp::experiment::{self, exports, store, Experiment, ExperimentManifest, MANIFEST_FILE};
use elagp::gp::GpConfig;
use elagp::{ela, BbobInstance, DoeDesign, ExprTree};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "elagp", version, about = "ELA-guided function evolution experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// Seed of the experiment (the design seed for design-only commands).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Seed of the design of experiments.
    #[arg(long, global = true)]
    design_seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw valid random functions.
    RfgSample {
        #[arg(long, default_value_t = exports::RFG_COUNT)]
        count: usize,
    },
    /// Evaluate a benchmark instance on the design or on given points.
    BbobEval {
        #[arg(long)]
        fid: usize,
        #[arg(long, default_value_t = 1)]
        iid: usize,
        /// Point table as written by doe-export.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Write the design points.
    DoeExport,
    /// Compute landscape features of expressions or a benchmark instance.
    Ela {
        /// File with one expression per line.
        #[arg(long, conflicts_with = "fid")]
        expr: Option<PathBuf>,
        #[arg(long)]
        fid: Option<usize>,
        #[arg(long, default_value_t = 1)]
        iid: usize,
    },
    /// Compute and save the reference corpus and its bounds.
    ReferenceBuild,
    /// Evolve functions toward one or more targets.
    GpRun {
        #[arg(long, value_delimiter = ',', required = true)]
        fid: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
    },
    /// Distance-measure study over the reference corpus.
    DistanceAnalysis {
        /// Saved reference directory (rebuilt when omitted).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// GP run directories for the deviation tables.
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
    },
    /// Fitness distributions of GP runs and the random baseline.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        /// Targets to compare against (default: the runs' targets).
        #[arg(long, value_delimiter = ',')]
        fid: Vec<usize>,
        #[arg(long, default_value_t = exports::RFG_COUNT)]
        rfg_count: usize,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Landscape grids of ranked candidates from a run (d = 2).
    ExportGrid {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = exports::GRID_RESOLUTION)]
        resolution: usize,
        #[arg(long, default_value_t = exports::GRID_PICKS)]
        picks: usize,
    },
    /// Parallel-coordinate rows of a target and candidate expressions.
    ExportParallel {
        #[arg(long)]
        fid: usize,
        #[arg(long, required = true)]
        highlight: Vec<String>,
        /// File with further expressions, one per line.
        #[arg(long)]
        others: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Embedding fit and transform tables for a run.
    ExportUmapInputs {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Re-run an experiment from its manifest.
    Replay { manifest: PathBuf },
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    dim: Option<usize>,
    design_seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    gp: Option<GpConfig>,
}

/// Flags merged over the config file.
struct Settings {
    seed: Option<u64>,
    dim: usize,
    design_seed: Option<u64>,
    out: Option<PathBuf>,
    gp: GpConfig,
}

impl Settings {
    fn resolve(global: &Global) -> Result<(Self, Option<usize>)> {
        let file: FileConfig = match &global.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let settings = Settings {
            seed: global.seed.or(file.seed),
            dim: global.dim.or(file.dim).unwrap_or(2),
            design_seed: global.design_seed.or(file.design_seed),
            out: global.out.clone().or(file.out),
            gp: file.gp.unwrap_or_default(),
        };
        Ok((settings, global.threads.or(file.threads)))
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required")
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Design seed for commands whose only randomness is the design.
    fn design_only_seed(&self) -> u64 {
        self.design_seed.or(self.seed).unwrap_or(0)
    }

    fn manifest(
        &self,
        experiment: Experiment,
        targets: Vec<usize>,
        reference: Option<PathBuf>,
    ) -> Result<ExperimentManifest> {
        let mut m = ExperimentManifest::new(experiment, self.dim, self.seed(), self.out()?);
        m.design_seed = self.design_seed.unwrap_or(0);
        m.targets = targets;
        m.reference = reference;
        Ok(m)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn write_table(table: &experiment::Table, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    table.write(path)?;
    Ok(())
}

fn run_manifest(m: &ExperimentManifest) -> Result<()> {
    experiment::run_experiment(m)?;
    eprintln!("wrote {}", m.out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

fn execute(command: Command, s: &Settings) -> Result<()> {
    match command {
        Command::RfgSample { count } => run_manifest(&s.manifest(Experiment::RfgBaseline { count }, vec![], None)?),
        Command::BbobEval { fid, iid, points } => {
            let inst = BbobInstance::new(fid, iid, s.dim)?;
            let pts = match points {
                Some(p) => experiment::read_points(&p)?,
                None => DoeDesign::new(s.dim, s.design_only_seed())?.points,
            };
            if pts.dim() != s.dim {
                bail!("points have d={}, --dim is {}", pts.dim(), s.dim);
            }
            write_table(&experiment::bbob_table(&inst, &pts), s.out()?)
        }
        Command::DoeExport => {
            let design = DoeDesign::new(s.dim, s.design_only_seed())?;
            write_table(&experiment::design_table(&design.points), s.out()?)
        }
        Command::Ela { expr, fid, iid } => {
            let design = DoeDesign::new(s.dim, s.design_only_seed())?;
            let samples = match (expr, fid) {
                (Some(file), _) => read_lines(&file)?
                    .iter()
                    .map(|text| {
                        let tree = ExprTree::parse(text).map_err(|e| anyhow::anyhow!("{text}: {e}"))?;
                        let y = tree.evaluate_batch(&design.points);
                        ela::compute_ela_sample(&design, &y, text.clone()).with_context(|| text.clone())
                    })
                    .collect::<Result<Vec<_>>>()?,
                (None, Some(fid)) => {
                    let y = BbobInstance::new(fid, iid, s.dim)?.evaluate_batch(&design.points);
                    vec![ela::compute_ela_sample(&design, &y, format!("f{fid}_i{iid}"))?]
                }
                (None, None) => bail!("give --expr FILE or --fid F"),
            };
            write_table(&experiment::ela_table(&samples), s.out()?)
        }
        Command::ReferenceBuild => {
            let mut m = s.manifest(Experiment::ReferenceBuild, vec![], None)?;
            m.design_seed = s.design_only_seed();
            run_manifest(&m)
        }
        Command::GpRun { fid, repetitions, reference, generations, population } => {
            let mut gp = s.gp.clone();
            if let Some(g) = generations {
                gp.max_generations = g;
            }
            if let Some(p) = population {
                gp.population_size = p;
            }
            run_manifest(&s.manifest(Experiment::GpRun { gp, repetitions }, fid, reference)?)
        }
        Command::DistanceAnalysis { corpus, runs } => {
            run_manifest(&s.manifest(Experiment::DistanceAnalysis { runs }, vec![], corpus)?)
        }
        Command::Compare { runs, fid, rfg_count, reference } => {
            let targets = if fid.is_empty() {
                let mut t = runs
                    .iter()
                    .map(|r| store::load_run(r).map(|d| d.config.target_fid))
                    .collect::<Result<Vec<_>, _>>()?;
                t.sort_unstable();
                t.dedup();
                t
            } else {
                fid
            };
            run_manifest(&s.manifest(Experiment::Compare { runs, rfg_count }, targets, reference)?)
        }
        Command::ExportGrid { run, resolution, picks } => {
            run_manifest(&s.manifest(Experiment::GridExport { run, resolution, picks }, vec![], None)?)
        }
        Command::ExportParallel { fid, highlight, others, reference } => {
            let others = match others {
                Some(p) => read_lines(&p)?,
                None => Vec::new(),
            };
            run_manifest(&s.manifest(Experiment::ParallelExport { highlight, others }, vec![fid], reference)?)
        }
        Command::ExportUmapInputs { run, reference } => {
            run_manifest(&s.manifest(Experiment::UmapExport { run }, vec![], reference)?)
        }
        Command::Replay { manifest } => {
            let m = experiment::replay(&manifest, s.out.as_deref())?;
            eprintln!("replayed into {}", m.out_dir.display());
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (settings, threads) = Settings::resolve(&cli.global)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    execute(cli.command, &settings)
}
