//! Abstract syntax for C-RASP programs.
//!
//! A program is a straight-line list of named operations. Every operation has
//! one of two sorts (Boolean or Count) and may only reference operations
//! defined before it. The token predicates `Q_σ` are available implicitly and
//! are referenced through [`Ref::Token`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The start-of-sequence token. Never part of a program alphabet.
pub const SOS: &str = "$";

/// Ordered set of input symbols. Order is the declaration order and is used
/// for every deterministic tie-break in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    /// Builds an alphabet, rejecting empty or duplicate symbols and `$`.
    pub fn new<I, S>(symbols: I) -> Result<Self, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if s.is_empty() {
                return Err(AlphabetError::EmptySymbol);
            }
            if s == SOS {
                return Err(AlphabetError::Reserved);
            }
            if !seen.insert(s.as_str()) {
                return Err(AlphabetError::Duplicate(s.clone()));
            }
        }
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index_of(symbol).is_some()
    }

    /// Maps a word onto symbol indices; returns the first offending position
    /// (1-based) and symbol on failure.
    pub fn encode<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>, (usize, String)> {
        word.iter()
            .enumerate()
            .map(|(i, s)| {
                self.index_of(s.as_ref())
                    .ok_or_else(|| (i + 1, s.as_ref().to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlphabetError {
    #[error("alphabet must contain at least one symbol")]
    Empty,
    #[error("alphabet symbols must be non-empty")]
    EmptySymbol,
    #[error("the symbol \"$\" is reserved for start-of-sequence")]
    Reserved,
    #[error("duplicate alphabet symbol {0:?}")]
    Duplicate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    Count,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Boolean"),
            Sort::Count => f.write_str("Count"),
        }
    }
}

/// Unary periodic relation: holds at position `t` iff `t ≡ residue (mod modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PeriodicRelation {
    pub modulus: u32,
    pub residue: u32,
}

impl PeriodicRelation {
    pub fn holds(&self, position: usize) -> bool {
        position % self.modulus as usize == self.residue as usize
    }

    pub fn is_valid(&self) -> bool {
        self.modulus >= 1 && self.residue < self.modulus
    }
}

/// Binary local relation: holds for `(i, j)` iff `j - i` is one of `offsets`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalRelation {
    pub offsets: BTreeSet<i64>,
}

impl LocalRelation {
    pub fn single(offset: i64) -> Self {
        Self {
            offsets: BTreeSet::from([offset]),
        }
    }

    pub fn new<I: IntoIterator<Item = i64>>(offsets: I) -> Self {
        Self {
            offsets: offsets.into_iter().collect(),
        }
    }

    /// Largest look-back distance among the non-positive offsets.
    pub fn radius(&self) -> usize {
        self.offsets
            .iter()
            .filter(|&&c| c <= 0)
            .map(|c| c.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Mask of a counting operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mask {
    /// `j <= i`
    All,
    /// `j < i` (sugar)
    Strict,
    /// `j <= i` and `j - i ∈ offsets`
    Local(LocalRelation),
}

/// Reference to a value at the current position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ref {
    /// A previously defined operation.
    Op(String),
    /// The built-in token predicate `Q_σ`.
    Token(String),
}

impl Ref {
    pub fn op(name: impl Into<String>) -> Self {
        Ref::Op(name.into())
    }

    pub fn token(symbol: impl Into<String>) -> Self {
        Ref::Token(symbol.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Ref(Ref),
    Lit(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Le,
    Ge,
    Eq,
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
        }
    }

    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Lt => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Body {
    Initial(String),
    Not(Ref),
    And(Ref, Ref),
    True,
    Positional(PeriodicRelation),
    Compare { op: CmpOp, lhs: Operand, rhs: Operand },
    Count { mask: Mask, pred: Ref },
    Conditional { cond: Ref, then: Ref, otherwise: Ref },
    Add(Ref, Ref),
    Sub(Ref, Ref),
    One,
}

impl Body {
    pub fn sort(&self) -> Sort {
        match self {
            Body::Initial(_)
            | Body::Not(_)
            | Body::And(..)
            | Body::True
            | Body::Positional(_)
            | Body::Compare { .. } => Sort::Bool,
            Body::Count { .. }
            | Body::Conditional { .. }
            | Body::Add(..)
            | Body::Sub(..)
            | Body::One => Sort::Count,
        }
    }

    /// True when the body only uses the core constructs (no sugar).
    pub fn is_core(&self) -> bool {
        match self {
            Body::Compare { op, lhs, rhs } => {
                *op == CmpOp::Le
                    && matches!(lhs, Operand::Ref(_))
                    && matches!(rhs, Operand::Ref(_))
            }
            Body::Count { mask, .. } => match mask {
                Mask::All => true,
                Mask::Strict => false,
                Mask::Local(rel) => rel.offsets.len() == 1,
            },
            _ => true,
        }
    }

    /// All references this body reads, paired with the sort each must have.
    pub fn refs(&self) -> Vec<(&Ref, Sort)> {
        let mut out = Vec::new();
        match self {
            Body::Initial(_) | Body::True | Body::Positional(_) | Body::One => {}
            Body::Not(a) => out.push((a, Sort::Bool)),
            Body::And(a, b) => {
                out.push((a, Sort::Bool));
                out.push((b, Sort::Bool));
            }
            Body::Compare { lhs, rhs, .. } => {
                for o in [lhs, rhs] {
                    if let Operand::Ref(r) = o {
                        out.push((r, Sort::Count));
                    }
                }
            }
            Body::Count { pred, .. } => out.push((pred, Sort::Bool)),
            Body::Conditional {
                cond,
                then,
                otherwise,
            } => {
                out.push((cond, Sort::Bool));
                out.push((then, Sort::Count));
                out.push((otherwise, Sort::Count));
            }
            Body::Add(a, b) | Body::Sub(a, b) => {
                out.push((a, Sort::Count));
                out.push((b, Sort::Count));
            }
        }
        out
    }

    pub fn uses_positional(&self) -> bool {
        matches!(self, Body::Positional(_))
    }

    pub fn uses_local(&self) -> bool {
        matches!(
            self,
            Body::Count {
                mask: Mask::Local(_),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    pub body: Body,
}

impl Operation {
    pub fn new(name: impl Into<String>, body: Body) -> Self {
        Self {
            name: name.into(),
            body,
        }
    }

    pub fn sort(&self) -> Sort {
        self.body.sort()
    }
}

/// A validated C-RASP program.
///
/// Construct through [`crate::dsl::parse`] or [`Program::new`]; both run the
/// validator, so every `Program` value satisfies the reference and sort
/// invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub(crate) name: String,
    pub(crate) alphabet: Alphabet,
    pub(crate) ops: Vec<Operation>,
    pub(crate) accept: Option<String>,
    pub(crate) predict: Option<Vec<(String, String)>>,
    pub(crate) empty_accepts: bool,
}

impl Program {
    /// Validates and builds a program.
    pub fn new(
        name: impl Into<String>,
        alphabet: Alphabet,
        ops: Vec<Operation>,
        accept: Option<String>,
        predict: Option<Vec<(String, String)>>,
        empty_accepts: bool,
    ) -> Result<Self, super::DslError> {
        let p = Self {
            name: name.into(),
            alphabet,
            ops,
            accept,
            predict,
            empty_accepts,
        };
        super::validate::validate(&p)?;
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    /// Explicit accept declaration, if any.
    pub fn accept_decl(&self) -> Option<&str> {
        self.accept.as_deref()
    }

    /// Name of the accepting operation: the explicit declaration or the last
    /// Boolean operation.
    pub fn accept_op(&self) -> &str {
        match &self.accept {
            Some(a) => a,
            None => self
                .ops
                .iter()
                .rev()
                .find(|o| o.sort() == Sort::Bool)
                .map(|o| o.name.as_str())
                .expect("validated program has a Boolean op"),
        }
    }

    pub fn predict(&self) -> Option<&[(String, String)]> {
        self.predict.as_deref()
    }

    pub fn empty_accepts(&self) -> bool {
        self.empty_accepts
    }

    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.name == name)
    }

    pub fn op(&self, name: &str) -> Option<&Operation> {
        self.ops.iter().find(|o| o.name == name)
    }

    /// Whether any operation uses a periodic positional relation.
    pub fn uses_positional(&self) -> bool {
        self.ops.iter().any(|o| o.body.uses_positional())
    }

    /// Whether any counting operation uses a local relation.
    pub fn uses_local(&self) -> bool {
        self.ops.iter().any(|o| o.body.uses_local())
    }

    /// True when the program lies in C-RASP[∅].
    pub fn is_position_free(&self) -> bool {
        !self.uses_positional() && !self.uses_local()
    }

    /// Maximum look-back distance over all local counts.
    pub fn locality_radius(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|o| match &o.body {
                Body::Count {
                    mask: Mask::Local(rel),
                    ..
                } => Some(rel.radius()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_core(&self) -> bool {
        self.ops.iter().all(|o| o.body.is_core())
    }
}
