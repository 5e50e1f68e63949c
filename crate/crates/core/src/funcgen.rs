//! Random function generator.
//!
//! Trees grow recursively from the selection table. Nodes shallower than
//! the minimum depth must be operators, nodes at the maximum depth must be
//! operands, and anywhere in between the whole table is admissible. The
//! chosen symbol follows the table probabilities renormalized over the
//! admissible set.

use crate::expr::{ExprTree, Node, OpSpec, ProbabilityTable, Symbol};
use crate::rng::{self, tag};
use crate::sampling::Points;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEPTH_MIN: usize = 3;
pub const DEPTH_MAX: usize = 12;
pub const MAX_RESAMPLE_ATTEMPTS: usize = 1000;
/// Range of realized `a` constants.
pub const CONST_RANGE: (f64, f64) = (1.0, 10.0);
/// Range of realized `rand` values.
pub const RAND_RANGE: (f64, f64) = (1.0, 1.1);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuncGenError {
    #[error("no valid function after {attempts} consecutive draws")]
    ResamplingExhausted { attempts: usize },
    #[error("invalid generator configuration: {0}")]
    BadConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub dim: usize,
    pub depth_min: usize,
    pub depth_max: usize,
    pub table: ProbabilityTable,
    pub seed: u64,
    pub max_resample_attempts: usize,
}

impl GeneratorConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        GeneratorConfig {
            dim,
            depth_min: DEPTH_MIN,
            depth_max: DEPTH_MAX,
            table: ProbabilityTable::reference(),
            seed,
            max_resample_attempts: MAX_RESAMPLE_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<(), FuncGenError> {
        if self.dim == 0 {
            return Err(FuncGenError::BadConfig("dimension must be positive".into()));
        }
        if self.depth_min > self.depth_max {
            return Err(FuncGenError::BadConfig(format!(
                "depth_min {} exceeds depth_max {}",
                self.depth_min, self.depth_max
            )));
        }
        if self.max_resample_attempts == 0 {
            return Err(FuncGenError::BadConfig("max_resample_attempts must be positive".into()));
        }
        self.table.validate().map_err(|e| FuncGenError::BadConfig(e.to_string()))
    }

    pub fn grower(&self) -> Grower {
        Grower::new(&self.table)
    }
}

/// Cumulative categorical distribution over symbols.
#[derive(Clone, Debug)]
struct Categorical {
    symbols: Vec<Symbol>,
    cumulative: Vec<f64>,
}

impl Categorical {
    fn new<'a>(specs: impl Iterator<Item = &'a OpSpec>) -> Self {
        let mut symbols = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for s in specs {
            acc += s.init_probability;
            symbols.push(s.symbol);
            cumulative.push(acc);
        }
        Categorical { symbols, cumulative }
    }

    fn draw(&self, rng: &mut impl Rng) -> Symbol {
        let total = *self.cumulative.last().expect("empty categorical");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
            // u == total only through rounding; take the last positive entry.
            self.cumulative.iter().rposition(|&c| c > 0.0).unwrap_or(0)
        });
        self.symbols[i]
    }
}

/// Samples symbols and grows trees from a probability table.
#[derive(Clone, Debug)]
pub struct Grower {
    operands: Categorical,
    operators: Categorical,
    any: Categorical,
}

impl Grower {
    pub fn new(table: &ProbabilityTable) -> Self {
        Grower {
            operands: Categorical::new(table.operands()),
            operators: Categorical::new(table.operators()),
            any: Categorical::new(table.specs().iter()),
        }
    }

    pub fn draw_operand(&self, rng: &mut impl Rng) -> Symbol {
        self.operands.draw(rng)
    }

    pub fn draw_operator(&self, rng: &mut impl Rng) -> Symbol {
        self.operators.draw(rng)
    }

    /// Realizes an operand symbol into a leaf node.
    pub fn leaf(symbol: Symbol, rng: &mut impl Rng) -> Node {
        match symbol {
            Symbol::X => Node::X,
            Symbol::A => Node::Const(rng.random_range(CONST_RANGE.0..CONST_RANGE.1)),
            Symbol::Rand => Node::Rand(rng.random_range(RAND_RANGE.0..RAND_RANGE.1)),
            op => panic!("{op} is not an operand"),
        }
    }

    /// Grows a tree whose leaves all sit between `depth_min` and
    /// `depth_max` (root depth 0).
    pub fn grow(&self, depth_min: usize, depth_max: usize, rng: &mut impl Rng) -> ExprTree {
        let mut nodes = Vec::new();
        self.grow_into(0, depth_min, depth_max, rng, &mut nodes);
        ExprTree::from_prefix(nodes).expect("grown trees are well formed")
    }

    fn grow_into(&self, depth: usize, min: usize, max: usize, rng: &mut impl Rng, out: &mut Vec<Node>) {
        let symbol = if depth >= max {
            self.operands.draw(rng)
        } else if depth < min {
            self.operators.draw(rng)
        } else {
            self.any.draw(rng)
        };
        if symbol.is_operand() {
            out.push(Self::leaf(symbol, rng));
        } else {
            out.push(Node::Op(symbol));
            for _ in 0..symbol.arity() {
                self.grow_into(depth + 1, min, max, rng, out);
            }
        }
    }
}

/// One sampled tree.
pub fn sample_tree(config: &GeneratorConfig, rng: &mut impl Rng) -> ExprTree {
    config.grower().grow(config.depth_min, config.depth_max, rng)
}

/// Why an objective vector is unusable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveDefect {
    NonFinite,
    Constant,
}

/// Checks that objective values are finite and not all equal.
pub fn objective_defect(y: &[f64]) -> Option<ObjectiveDefect> {
    if y.iter().any(|v| !v.is_finite()) {
        return Some(ObjectiveDefect::NonFinite);
    }
    match y.first() {
        Some(first) if y.iter().any(|v| v != first) => None,
        _ => Some(ObjectiveDefect::Constant),
    }
}

/// A tree together with its objective values on the design.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidFunction {
    pub tree: ExprTree,
    pub y: Vec<f64>,
    /// Draws rejected before this function was accepted.
    pub rejected: usize,
}

/// Draws trees until one yields a usable objective vector on `points`.
pub fn sample_valid_function(
    config: &GeneratorConfig,
    points: &Points,
    rng: &mut impl Rng,
) -> Result<ValidFunction, FuncGenError> {
    config.validate()?;
    if points.dim() != config.dim {
        return Err(FuncGenError::BadConfig(format!(
            "design dimension {} does not match generator dimension {}",
            points.dim(),
            config.dim
        )));
    }
    let grower = config.grower();
    for rejected in 0..config.max_resample_attempts {
        let tree = grower.grow(config.depth_min, config.depth_max, rng);
        let y = tree.evaluate_batch(points);
        if objective_defect(&y).is_none() {
            return Ok(ValidFunction { tree, y, rejected });
        }
    }
    Err(FuncGenError::ResamplingExhausted { attempts: config.max_resample_attempts })
}

/// RNG for the `index`-th function drawn under `seed`.
pub fn function_stream(seed: u64, index: u64) -> ChaCha8Rng {
    rng::stream(seed, &[tag::RFG, index])
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineSet {
    pub functions: Vec<ValidFunction>,
    pub rejected_total: usize,
}

/// `count` valid functions, each drawn from its own substream.
pub fn generate_baseline_set(
    config: &GeneratorConfig,
    count: usize,
    points: &Points,
) -> Result<BaselineSet, FuncGenError> {
    config.validate()?;
    let functions = (0..count)
        .into_par_iter()
        .map(|i| sample_valid_function(config, points, &mut function_stream(config.seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let rejected_total = functions.iter().map(|f| f.rejected).sum();
    Ok(BaselineSet { functions, rejected_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::DoeDesign;

    #[test]
    fn forced_depth_bound() {
        let mut config = GeneratorConfig::new(2, 5);
        config.depth_max = 3;
        let mut rng = function_stream(5, 0);
        for _ in 0..200 {
            assert_eq!(sample_tree(&config, &mut rng).depth(), 3);
        }
    }

    #[test]
    fn depths_within_limits() {
        let config = GeneratorConfig::new(3, 1);
        let mut rng = function_stream(1, 0);
        for _ in 0..500 {
            let t = sample_tree(&config, &mut rng);
            assert!((DEPTH_MIN..=DEPTH_MAX).contains(&t.depth()), "{}", t.depth());
        }
    }

    #[test]
    fn constants_in_range() {
        let config = GeneratorConfig::new(2, 3);
        let mut rng = function_stream(3, 0);
        for _ in 0..300 {
            for n in sample_tree(&config, &mut rng).nodes() {
                match *n {
                    Node::Const(v) => assert!((1.0..10.0).contains(&v)),
                    Node::Rand(v) => assert!((1.0..1.1).contains(&v)),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn valid_function_has_usable_objective() {
        let design = DoeDesign::new(2, 0).unwrap();
        let config = GeneratorConfig::new(2, 8);
        let f = sample_valid_function(&config, &design.points, &mut function_stream(8, 0)).unwrap();
        assert!(f.y.iter().all(|v| v.is_finite()));
        let first = f.y[0];
        assert!(f.y.iter().any(|&v| v != first));
    }

    #[test]
    fn constant_only_pool_exhausts() {
        let design = DoeDesign::new(2, 0).unwrap();
        let mut config = GeneratorConfig::new(2, 8);
        config.table = config.table.with_operand_probabilities(0.0, 1.0, 0.0).unwrap();
        config.max_resample_attempts = 50;
        let err = sample_valid_function(&config, &design.points, &mut function_stream(8, 0)).unwrap_err();
        assert_eq!(err, FuncGenError::ResamplingExhausted { attempts: 50 });
    }

    #[test]
    fn baseline_set_singleton_and_seed_dependence() {
        let design = DoeDesign::new(2, 0).unwrap();
        let a = generate_baseline_set(&GeneratorConfig::new(2, 1), 1, &design.points).unwrap();
        assert_eq!(a.functions.len(), 1);
        let texts = |seed| -> Vec<String> {
            let set = generate_baseline_set(&GeneratorConfig::new(2, seed), 20, &design.points).unwrap();
            let mut v: Vec<String> = set.functions.iter().map(|f| f.tree.to_text()).collect();
            v.sort();
            v
        };
        assert_ne!(texts(1), texts(2));
    }

    #[test]
    fn defects() {
        assert_eq!(objective_defect(&[1.0, 1.0]), Some(ObjectiveDefect::Constant));
        assert_eq!(objective_defect(&[1.0, f64::NAN]), Some(ObjectiveDefect::NonFinite));
        assert_eq!(objective_defect(&[1.0, f64::INFINITY]), Some(ObjectiveDefect::NonFinite));
        assert_eq!(objective_defect(&[]), Some(ObjectiveDefect::Constant));
        assert_eq!(objective_defect(&[1.0, 2.0]), None);
    }
}
