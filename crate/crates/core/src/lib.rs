//! Function evolution guided by exploratory landscape analysis.
//!
//! The crate evolves closed-form expressions with a canonical genetic
//! programming loop whose fitness is the distance between the landscape
//! features of a candidate and those of a target benchmark function.
//!
//! Module map:
//!
//! * [`expr`]: expression-tree genotype, evaluation and the text format.
//! * [`funcgen`]: the random function generator used for initialization
//!   and as the baseline function set.
//! * [`bbob`]: the 24 noiseless benchmark functions with seeded instances.
//! * [`sampling`]: Sobol' designs and bootstrap index sets.
//! * [`ela`]: the landscape feature battery.
//! * [`space`]: reference normalization, feature filtering, distances,
//!   fitness and the distance studies.
//! * [`gp`]: the genetic programming engine.
//! * [`experiment`]: manifests, experiment drivers and CSV/JSON exports.

pub mod bbob;
pub mod ela;
pub mod experiment;
pub mod expr;
pub mod funcgen;
pub mod gp;
pub mod rng;
pub mod sampling;
pub mod space;
pub mod stats;

pub use bbob::BbobInstance;
pub use ela::{ElaSample, FeatureVector, FEATURE_NAMES};
pub use expr::{ExprTree, Node, Symbol};
pub use sampling::{DoeDesign, Points};
