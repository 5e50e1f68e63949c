//! Canonical generational GP over expression trees, minimizing the
//! feature-space distance to a target benchmark function.

pub mod variation;

use crate::ela::{self, ElaSample};
use crate::expr::{ExprTree, ProbabilityTable};
use crate::funcgen::{self, objective_defect, FuncGenError, GeneratorConfig, Grower};
use crate::rng::{self, tag};
use crate::sampling::{DoeDesign, SamplingError};
use crate::space::{self, FitnessOptions, ReferenceSet, SpaceError, TargetProfile};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub const PENALTY: f64 = 10000.0;
pub const BLOAT_DEPTH_LIMIT: usize = 17;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub penalty: f64,
    pub depth_min: usize,
    pub depth_max: usize,
    /// Offspring deeper than this are discarded in favour of the parent.
    pub bloat_depth_limit: usize,
    /// Depth range of subtrees grown by mutation.
    pub mutation_depth: (usize, usize),
    pub elitism: bool,
    pub seed: u64,
    pub target_fid: usize,
    pub dim: usize,
    pub design_seed: u64,
    pub fitness: FitnessOptions,
    pub table: ProbabilityTable,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 50,
            max_generations: 50,
            tournament_size: 5,
            crossover_prob: 0.5,
            mutation_prob: 0.1,
            penalty: PENALTY,
            depth_min: funcgen::DEPTH_MIN,
            depth_max: funcgen::DEPTH_MAX,
            bloat_depth_limit: BLOAT_DEPTH_LIMIT,
            mutation_depth: (0, 2),
            elitism: false,
            seed: 0,
            target_fid: 1,
            dim: 2,
            design_seed: 0,
            fitness: FitnessOptions::default(),
            table: ProbabilityTable::reference(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("invalid GP configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Generator(#[from] FuncGenError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let bad = |m: String| Err(GpError::BadConfig(m));
        for (name, p) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.tournament_size == 0 || self.population_size < self.tournament_size {
            return bad(format!(
                "population_size {} must be at least tournament_size {} (> 0)",
                self.population_size, self.tournament_size
            ));
        }
        if self.mutation_depth.0 > self.mutation_depth.1 {
            return bad("mutation depth range is empty".into());
        }
        self.generator().validate().map_err(GpError::from)
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            dim: self.dim,
            depth_min: self.depth_min,
            depth_max: self.depth_max,
            table: self.table.clone(),
            seed: rng::derive_seed(self.seed, &[tag::GP, 1]),
            max_resample_attempts: funcgen::MAX_RESAMPLE_ATTEMPTS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    InvalidExpression,
    InvalidObjective,
    InvalidEla,
    InvalidDistance,
}

impl Validity {
    pub const ALL: [Validity; 5] = [
        Validity::Valid,
        Validity::InvalidExpression,
        Validity::InvalidObjective,
        Validity::InvalidEla,
        Validity::InvalidDistance,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::InvalidExpression => "invalid_expression",
            Validity::InvalidObjective => "invalid_objective",
            Validity::InvalidEla => "invalid_ela",
            Validity::InvalidDistance => "invalid_distance",
        }
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of the fitness pipeline for one expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub validity: Validity,
    /// Normalized retained features, `replicate x feature`; present when
    /// feature computation succeeded.
    pub features: Option<Vec<Vec<f64>>>,
}

/// Everything the fitness pipeline needs besides the expression.
#[derive(Clone, Debug)]
pub struct GpContext {
    pub design: DoeDesign,
    pub reference: ReferenceSet,
    pub target: TargetProfile,
    pub options: FitnessOptions,
    pub penalty: f64,
}

impl GpContext {
    pub fn new(config: &GpConfig, reference: ReferenceSet) -> Result<Self, GpError> {
        if reference.dim != config.dim {
            return Err(SpaceError::DimensionMismatch { reference: reference.dim, got: config.dim }.into());
        }
        let design = DoeDesign::new(config.dim, reference.design_seed)?;
        let target = TargetProfile::from_reference(&reference, config.target_fid)?;
        Ok(GpContext { design, reference, target, options: config.fitness.clone(), penalty: config.penalty })
    }

    /// Builds the reference from scratch for `config`.
    pub fn build(config: &GpConfig) -> Result<Self, GpError> {
        let reference = space::build_reference(config.dim, config.design_seed, space::CORRELATION_THRESHOLD)?;
        Self::new(config, reference)
    }

    /// Context for another target sharing the same reference.
    pub fn retarget(&self, fid: usize) -> Result<Self, GpError> {
        let target = TargetProfile::from_reference(&self.reference, fid)?;
        Ok(GpContext { target, ..self.clone() })
    }

    /// Raw feature sample of `tree` on the design.
    pub fn ela_sample(&self, tree: &ExprTree) -> Result<ElaSample, Validity> {
        let y = tree.evaluate_batch(&self.design.points);
        if objective_defect(&y).is_some() {
            return Err(Validity::InvalidObjective);
        }
        ela::compute_ela_sample(&self.design, &y, tree.to_text()).map_err(|_| Validity::InvalidEla)
    }
}

/// Full pipeline: objective check, features, normalization, distance.
pub fn evaluate_individual(tree: &ExprTree, ctx: &GpContext) -> Evaluation {
    let penalized = |validity, features| Evaluation { fitness: ctx.penalty, validity, features };
    let sample = match ctx.ela_sample(tree) {
        Ok(s) => s,
        Err(v) => return penalized(v, None),
    };
    let features = ctx.reference.normalize_sample(&sample);
    match space::fitness(&features, &ctx.target, &ctx.reference, &ctx.options) {
        Ok(f) => Evaluation { fitness: f, validity: Validity::Valid, features: Some(features) },
        Err(_) => penalized(Validity::InvalidDistance, Some(features)),
    }
}

/// Pipeline entry for serialized expressions.
pub fn evaluate_text(text: &str, ctx: &GpContext) -> Evaluation {
    match ExprTree::parse(text) {
        Ok(tree) => evaluate_individual(&tree, ctx),
        Err(_) => Evaluation { fitness: ctx.penalty, validity: Validity::InvalidExpression, features: None },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub tree: ExprTree,
    pub fitness: f64,
    pub validity: Validity,
    /// Whether this individual's fitness came from a fresh pipeline run
    /// in the generation it was created (false for unmodified copies).
    pub evaluated: bool,
    pub generation_born: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub index: usize,
    pub generation: usize,
    pub expression: String,
    pub fitness: f64,
    pub validity: Validity,
    /// The value came from the expression cache rather than a new
    /// pipeline run.
    pub cached: bool,
    pub features: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub best: f64,
    /// Mean fitness of valid individuals (`NaN` if none).
    pub mean_valid: f64,
    pub best_so_far: f64,
    pub evaluations: usize,
    pub unchanged_offspring: usize,
    pub depth_rejections: usize,
    pub invalid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpRunLog {
    pub config: GpConfig,
    pub records: Vec<EvaluationRecord>,
    pub generations: Vec<GenerationSummary>,
    pub final_population: Vec<Individual>,
    /// Best individual ever evaluated.
    pub best: Individual,
    /// Trees discarded while drawing the initial population.
    pub init_resamples: usize,
}

impl GpRunLog {
    pub fn initial_best(&self) -> f64 {
        self.generations[0].best
    }

    pub fn final_best(&self) -> f64 {
        self.best.fitness
    }

    pub fn invalid_fraction(&self) -> f64 {
        let bad = self.records.iter().filter(|r| r.validity != Validity::Valid).count();
        bad as f64 / self.records.len() as f64
    }

    /// Invalid share among records that ran the pipeline (cache misses).
    pub fn fresh_invalid_fraction(&self) -> f64 {
        let fresh: Vec<&EvaluationRecord> = self.records.iter().filter(|r| !r.cached).collect();
        let bad = fresh.iter().filter(|r| r.validity != Validity::Valid).count();
        bad as f64 / fresh.len() as f64
    }

    pub fn min_fitness(&self) -> f64 {
        self.records.iter().map(|r| r.fitness).fold(f64::INFINITY, f64::min)
    }
}

/// Evolution state: population, expression cache and the running log.
pub struct GpState<'a> {
    pub config: &'a GpConfig,
    pub ctx: &'a GpContext,
    pub population: Vec<Individual>,
    pub generation: usize,
    cache: HashMap<String, Evaluation>,
    records: Vec<EvaluationRecord>,
    best: Option<Individual>,
    rng: rand_chacha::ChaCha8Rng,
    grower: Grower,
}

impl<'a> GpState<'a> {
    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn best(&self) -> Option<&Individual> {
        self.best.as_ref()
    }

    /// Evaluates `trees` (in parallel for fresh expressions), appending
    /// one record each in input order.
    fn evaluate_all(&mut self, trees: &[ExprTree]) -> Vec<Evaluation> {
        let texts: Vec<String> = trees.iter().map(ExprTree::to_text).collect();
        let mut fresh: Vec<usize> = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            if !self.cache.contains_key(t) && !fresh.iter().any(|&j| texts[j] == *t) {
                fresh.push(i);
            }
        }
        let ctx = self.ctx;
        let results: Vec<Evaluation> = fresh.par_iter().map(|&i| evaluate_individual(&trees[i], ctx)).collect();
        let mut fresh_set = vec![false; trees.len()];
        for (&i, e) in fresh.iter().zip(results) {
            fresh_set[i] = true;
            self.cache.insert(texts[i].clone(), e);
        }
        texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| {
                let e = self.cache[&text].clone();
                self.records.push(EvaluationRecord {
                    index: self.records.len(),
                    generation: self.generation,
                    expression: text,
                    fitness: e.fitness,
                    validity: e.validity,
                    cached: !fresh_set[i],
                    features: e.features.clone(),
                });
                e
            })
            .collect()
    }

    fn note_best(&mut self) {
        for ind in &self.population {
            if self.best.as_ref().is_none_or(|b| ind.fitness < b.fitness) {
                self.best = Some(ind.clone());
            }
        }
    }

    fn summary(&self, offspring_unchanged: usize, depth_rejections: usize, evaluations: usize) -> GenerationSummary {
        let fits: Vec<f64> = self.population.iter().map(|i| i.fitness).collect();
        let valid: Vec<f64> =
            self.population.iter().filter(|i| i.validity == Validity::Valid).map(|i| i.fitness).collect();
        GenerationSummary {
            generation: self.generation,
            best: fits.iter().copied().fold(f64::INFINITY, f64::min),
            mean_valid: if valid.is_empty() { f64::NAN } else { crate::stats::mean(&valid) },
            best_so_far: self.best.as_ref().map_or(f64::INFINITY, |b| b.fitness),
            evaluations,
            unchanged_offspring: offspring_unchanged,
            depth_rejections,
            invalid: self.population.iter().filter(|i| i.validity != Validity::Valid).count(),
        }
    }
}

/// Draws and evaluates the initial population. Returns the state and the
/// number of trees rejected while drawing.
pub fn initialize_population<'a>(config: &'a GpConfig, ctx: &'a GpContext) -> Result<(GpState<'a>, usize), GpError> {
    config.validate()?;
    let generator = config.generator();
    let drawn = (0..config.population_size)
        .into_par_iter()
        .map(|i| {
            funcgen::sample_valid_function(
                &generator,
                &ctx.design.points,
                &mut funcgen::function_stream(generator.seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let resamples = drawn.iter().map(|f| f.rejected).sum();
    let mut state = GpState {
        config,
        ctx,
        population: Vec::new(),
        generation: 0,
        cache: HashMap::new(),
        records: Vec::new(),
        best: None,
        rng: rng::stream(config.seed, &[tag::GP, 2]),
        grower: Grower::new(&config.table),
    };
    let trees: Vec<ExprTree> = drawn.into_iter().map(|f| f.tree).collect();
    let evals = state.evaluate_all(&trees);
    state.population = trees
        .into_iter()
        .zip(evals)
        .map(|(tree, e)| Individual {
            tree,
            fitness: e.fitness,
            validity: e.validity,
            evaluated: true,
            generation_born: 0,
        })
        .collect();
    state.note_best();
    Ok((state, resamples))
}

/// One generation: selection, crossover, mutation, evaluation of modified
/// offspring, replacement.
pub fn step_generation(state: &mut GpState) -> GenerationSummary {
    let config = state.config;
    let generation = state.generation + 1;
    let fits: Vec<f64> = state.population.iter().map(|i| i.fitness).collect();
    let winners: Vec<usize> = (0..config.population_size)
        .map(|_| variation::tournament(&fits, config.tournament_size, &mut state.rng))
        .collect();
    let mut offspring: Vec<(ExprTree, bool)> =
        winners.iter().map(|&w| (state.population[w].tree.clone(), false)).collect();
    let limit = config.bloat_depth_limit;
    let mut rejections = 0;
    for k in (0..offspring.len().saturating_sub(1)).step_by(2) {
        if state.rng.random::<f64>() < config.crossover_prob {
            if let Some((c1, c2)) = variation::one_point_crossover(&offspring[k].0, &offspring[k + 1].0, &mut state.rng)
            {
                for (slot, child) in [(k, c1), (k + 1, c2)] {
                    if child.depth() <= limit {
                        offspring[slot] = (child, true);
                    } else {
                        rejections += 1;
                    }
                }
            }
        }
    }
    for child in offspring.iter_mut() {
        if state.rng.random::<f64>() < config.mutation_prob {
            let (lo, hi) = config.mutation_depth;
            let mutant = variation::subtree_mutation(&child.0, &state.grower, lo, hi, &mut state.rng);
            if mutant.depth() <= limit {
                *child = (mutant, true);
            } else {
                rejections += 1;
            }
        }
    }
    state.generation = generation;
    let changed: Vec<usize> = (0..offspring.len()).filter(|&i| offspring[i].1).collect();
    let trees: Vec<ExprTree> = changed.iter().map(|&i| offspring[i].0.clone()).collect();
    let evals = state.evaluate_all(&trees);
    let mut evals = evals.into_iter();
    let mut next: Vec<Individual> = Vec::with_capacity(offspring.len());
    for (i, (tree, modified)) in offspring.into_iter().enumerate() {
        if modified {
            let e = evals.next().expect("one evaluation per modified offspring");
            next.push(Individual {
                tree,
                fitness: e.fitness,
                validity: e.validity,
                evaluated: true,
                generation_born: generation,
            });
        } else {
            let mut p = state.population[winners[i]].clone();
            p.evaluated = false;
            next.push(p);
        }
    }
    if config.elitism {
        let elite = state
            .population
            .iter()
            .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .cloned()
            .expect("non-empty population");
        let worst = (0..next.len()).max_by(|&a, &b| next[a].fitness.total_cmp(&next[b].fitness)).unwrap();
        if next.iter().all(|i| i.fitness > elite.fitness) {
            next[worst] = Individual { evaluated: false, ..elite };
        }
    }
    state.population = next;
    state.note_best();
    state.summary(config.population_size - changed.len(), rejections, changed.len())
}

/// Initializes and evolves for `max_generations` generations.
pub fn run_with_context(config: &GpConfig, ctx: &GpContext) -> Result<GpRunLog, GpError> {
    let (mut state, init_resamples) = initialize_population(config, ctx)?;
    let mut generations = vec![state.summary(0, 0, config.population_size)];
    for _ in 0..config.max_generations {
        generations.push(step_generation(&mut state));
    }
    Ok(GpRunLog {
        config: config.clone(),
        best: state.best.clone().expect("population evaluated"),
        final_population: state.population,
        records: state.records,
        generations,
        init_resamples,
    })
}

/// Builds the reference and runs.
pub fn run(config: &GpConfig) -> Result<GpRunLog, GpError> {
    let ctx = GpContext::build(config)?;
    run_with_context(config, &ctx)
}
