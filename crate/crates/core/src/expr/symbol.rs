use serde::{Deserialize, Serialize};

/// The operand and operator pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    X,
    A,
    Rand,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Rec,
    Multen,
    Square,
    Sqrt,
    Abs,
    Exp,
    Log,
    Sin,
    Cos,
    Round,
    Sum,
    Mean,
    Cum,
    Prod,
    Max,
}

/// How a protected operator guards its argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protection {
    /// Return 1 when |value| <= [`PROTECTION_THRESHOLD`].
    ReturnOneNearZero,
}

/// Magnitude at or below which protected operators return 1.
pub const PROTECTION_THRESHOLD: f64 = 1e-20;

impl Symbol {
    pub const OPERANDS: [Symbol; 3] = [Symbol::X, Symbol::A, Symbol::Rand];

    pub const OPERATORS: [Symbol; 20] = [
        Symbol::Add,
        Symbol::Sub,
        Symbol::Mul,
        Symbol::Div,
        Symbol::Neg,
        Symbol::Rec,
        Symbol::Multen,
        Symbol::Square,
        Symbol::Sqrt,
        Symbol::Abs,
        Symbol::Exp,
        Symbol::Log,
        Symbol::Sin,
        Symbol::Cos,
        Symbol::Round,
        Symbol::Sum,
        Symbol::Mean,
        Symbol::Cum,
        Symbol::Prod,
        Symbol::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::X => "x",
            Symbol::A => "a",
            Symbol::Rand => "rand",
            Symbol::Add => "add",
            Symbol::Sub => "sub",
            Symbol::Mul => "mul",
            Symbol::Div => "div",
            Symbol::Neg => "neg",
            Symbol::Rec => "rec",
            Symbol::Multen => "multen",
            Symbol::Square => "square",
            Symbol::Sqrt => "sqrt",
            Symbol::Abs => "abs",
            Symbol::Exp => "exp",
            Symbol::Log => "log",
            Symbol::Sin => "sin",
            Symbol::Cos => "cos",
            Symbol::Round => "round",
            Symbol::Sum => "sum",
            Symbol::Mean => "mean",
            Symbol::Cum => "cum",
            Symbol::Prod => "prod",
            Symbol::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Symbol> {
        Self::OPERANDS.iter().chain(Self::OPERATORS.iter()).copied().find(|s| s.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Symbol::X | Symbol::A | Symbol::Rand => 0,
            Symbol::Add | Symbol::Sub | Symbol::Mul | Symbol::Div => 2,
            _ => 1,
        }
    }

    pub fn is_operand(self) -> bool {
        self.arity() == 0
    }

    pub fn protection(self) -> Option<Protection> {
        match self {
            Symbol::Div | Symbol::Rec | Symbol::Log => Some(Protection::ReturnOneNearZero),
            _ => None,
        }
    }

    /// Initial selection probability from the reference pool.
    pub fn default_probability(self) -> f64 {
        match self {
            Symbol::X => 0.6250,
            Symbol::A => 0.3125,
            Symbol::Rand => 0.0625,
            Symbol::Add | Symbol::Sub => 0.1655,
            Symbol::Mul | Symbol::Div => 0.1098,
            Symbol::Neg | Symbol::Rec | Symbol::Multen | Symbol::Abs | Symbol::Exp => 0.0219,
            Symbol::Square | Symbol::Sqrt => 0.0549,
            Symbol::Log | Symbol::Sin | Symbol::Cos | Symbol::Round | Symbol::Sum | Symbol::Mean => 0.0329,
            Symbol::Cum | Symbol::Prod | Symbol::Max => 0.0109,
        }
    }
}

impl std::fmt::Display for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the selection table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpSpec {
    pub symbol: Symbol,
    pub arity: usize,
    pub init_probability: f64,
    pub protection: Option<Protection>,
}

impl OpSpec {
    pub fn new(symbol: Symbol, init_probability: f64) -> Self {
        OpSpec { symbol, arity: symbol.arity(), init_probability, protection: symbol.protection() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("{class} probabilities sum to {sum}, expected 1")]
    BadSum { class: &'static str, sum: f64 },
    #[error("negative or non-finite probability for {0}")]
    BadProbability(Symbol),
    #[error("symbol {0} listed more than once")]
    Duplicate(Symbol),
    #[error("symbol {0} has a protection rule it does not support")]
    BadProtection(Symbol),
    #[error("symbol {0} declares arity {1}")]
    BadArity(Symbol, usize),
}

/// Selection probabilities for operands and operators.
///
/// Operands and operators are two separate categorical distributions; each
/// sums to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    specs: Vec<OpSpec>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl ProbabilityTable {
    pub fn new(specs: Vec<OpSpec>) -> Result<Self, TableError> {
        let table = ProbabilityTable { specs };
        table.validate()?;
        Ok(table)
    }

    /// The reference pool with its published probabilities.
    pub fn reference() -> Self {
        let specs = Symbol::OPERANDS
            .iter()
            .chain(Symbol::OPERATORS.iter())
            .map(|&s| OpSpec::new(s, s.default_probability()))
            .collect();
        ProbabilityTable { specs }
    }

    /// Copy of the table with the operand probabilities replaced.
    pub fn with_operand_probabilities(&self, x: f64, a: f64, rand: f64) -> Result<Self, TableError> {
        let specs = self
            .specs
            .iter()
            .map(|s| match s.symbol {
                Symbol::X => OpSpec::new(Symbol::X, x),
                Symbol::A => OpSpec::new(Symbol::A, a),
                Symbol::Rand => OpSpec::new(Symbol::Rand, rand),
                _ => s.clone(),
            })
            .collect();
        ProbabilityTable::new(specs)
    }

    pub fn validate(&self) -> Result<(), TableError> {
        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.specs {
            if !seen.insert(spec.symbol) {
                return Err(TableError::Duplicate(spec.symbol));
            }
            if !spec.init_probability.is_finite() || spec.init_probability < 0.0 {
                return Err(TableError::BadProbability(spec.symbol));
            }
            if spec.arity != spec.symbol.arity() {
                return Err(TableError::BadArity(spec.symbol, spec.arity));
            }
            if spec.protection.is_some() && spec.symbol.protection().is_none() {
                return Err(TableError::BadProtection(spec.symbol));
            }
        }
        let operand_sum = self.operand_sum();
        if (operand_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(TableError::BadSum { class: "operand", sum: operand_sum });
        }
        let operator_sum = self.operator_sum();
        if (operator_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(TableError::BadSum { class: "operator", sum: operator_sum });
        }
        Ok(())
    }

    pub fn specs(&self) -> &[OpSpec] {
        &self.specs
    }

    pub fn probability(&self, symbol: Symbol) -> f64 {
        self.specs.iter().find(|s| s.symbol == symbol).map_or(0.0, |s| s.init_probability)
    }

    pub fn operands(&self) -> impl Iterator<Item = &OpSpec> {
        self.specs.iter().filter(|s| s.arity == 0)
    }

    pub fn operators(&self) -> impl Iterator<Item = &OpSpec> {
        self.specs.iter().filter(|s| s.arity > 0)
    }

    pub fn operand_sum(&self) -> f64 {
        self.operands().map(|s| s.init_probability).sum()
    }

    pub fn operator_sum(&self) -> f64 {
        self.operators().map(|s| s.init_probability).sum()
    }
}

impl Default for ProbabilityTable {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_sums_to_one_per_class() {
        let t = ProbabilityTable::reference();
        assert!((t.operand_sum() - 1.0).abs() <= 1e-9, "{}", t.operand_sum());
        assert!((t.operator_sum() - 1.0).abs() <= 1e-9, "{}", t.operator_sum());
        assert_eq!(t.specs().len(), 23);
        t.validate().unwrap();
    }

    #[test]
    fn protections_only_on_div_rec_log() {
        let protected: Vec<Symbol> =
            ProbabilityTable::reference().specs().iter().filter(|s| s.protection.is_some()).map(|s| s.symbol).collect();
        assert_eq!(protected, vec![Symbol::Div, Symbol::Rec, Symbol::Log]);
    }

    #[test]
    fn names_round_trip() {
        for s in Symbol::OPERANDS.iter().chain(Symbol::OPERATORS.iter()) {
            assert_eq!(Symbol::from_name(s.name()), Some(*s));
        }
        assert_eq!(Symbol::from_name("pow"), None);
    }

    #[test]
    fn bad_sum_rejected() {
        let err = ProbabilityTable::reference().with_operand_probabilities(0.5, 0.5, 0.5).unwrap_err();
        assert!(matches!(err, TableError::BadSum { class: "operand", .. }));
    }
}
