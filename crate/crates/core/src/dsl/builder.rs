//! Programmatic construction of programs, used for parameterised families
//! (piecewise-testable templates, Dyck depth bounds, induction heads over
//! large vocabularies).

use super::{
    Alphabet, Body, CmpOp, DslError, LocalRelation, Mask, Operand, Operation, PeriodicRelation,
    Program, Ref,
};

#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    name: String,
    symbols: Vec<String>,
    ops: Vec<Operation>,
    accept: Option<String>,
    predict: Option<Vec<(String, String)>>,
    empty_accepts: bool,
}

impl ProgramBuilder {
    pub fn new<S: AsRef<str>>(name: &str, symbols: &[S]) -> Self {
        Self {
            name: name.to_string(),
            symbols: symbols.iter().map(|s| s.as_ref().to_string()).collect(),
            ops: Vec::new(),
            accept: None,
            predict: None,
            empty_accepts: false,
        }
    }

    /// Appends an operation and returns a reference to it.
    pub fn op(&mut self, name: &str, body: Body) -> Ref {
        self.ops.push(Operation::new(name, body));
        Ref::op(name)
    }

    pub fn not(&mut self, name: &str, a: Ref) -> Ref {
        self.op(name, Body::Not(a))
    }

    pub fn and(&mut self, name: &str, a: Ref, b: Ref) -> Ref {
        self.op(name, Body::And(a, b))
    }

    /// `a or b` as `not (not a and not b)`.
    pub fn or(&mut self, name: &str, a: Ref, b: Ref) -> Ref {
        let na = self.not(&format!("{name}_na"), a);
        let nb = self.not(&format!("{name}_nb"), b);
        let both = self.and(&format!("{name}_nn"), na, nb);
        self.not(name, both)
    }

    /// Conjunction of one or more refs, chained left to right.
    pub fn and_all(&mut self, name: &str, refs: Vec<Ref>) -> Ref {
        self.fold(name, refs, Self::and)
    }

    /// Disjunction of one or more refs.
    pub fn or_all(&mut self, name: &str, refs: Vec<Ref>) -> Ref {
        self.fold(name, refs, Self::or)
    }

    fn fold(&mut self, name: &str, refs: Vec<Ref>, f: fn(&mut Self, &str, Ref, Ref) -> Ref) -> Ref {
        assert!(!refs.is_empty(), "fold over no operands");
        let n = refs.len();
        let mut it = refs.into_iter();
        let mut acc = it.next().unwrap();
        if n == 1 {
            // keep the requested name visible as an operation
            return self.and(name, acc.clone(), acc);
        }
        for (k, r) in it.enumerate() {
            let last = k + 2 == n;
            let nm = if last {
                name.to_string()
            } else {
                format!("{name}_{}", k + 1)
            };
            acc = f(self, &nm, acc, r);
        }
        acc
    }

    pub fn count(&mut self, name: &str, pred: Ref) -> Ref {
        self.op(
            name,
            Body::Count {
                mask: Mask::All,
                pred,
            },
        )
    }

    pub fn count_local(&mut self, name: &str, offsets: &[i64], pred: Ref) -> Ref {
        self.op(
            name,
            Body::Count {
                mask: Mask::Local(LocalRelation::new(offsets.iter().copied())),
                pred,
            },
        )
    }

    pub fn positional(&mut self, name: &str, modulus: u32, residue: u32) -> Ref {
        self.op(name, Body::Positional(PeriodicRelation { modulus, residue }))
    }

    pub fn cmp(&mut self, name: &str, lhs: Operand, op: CmpOp, rhs: Operand) -> Ref {
        self.op(name, Body::Compare { op, lhs, rhs })
    }

    /// The leftward existential macro: `name_n := count A`, `name := name_n >= 1`.
    pub fn exists(&mut self, name: &str, a: Ref) -> Ref {
        let c = self.count(&format!("{name}_n"), a);
        self.cmp(name, Operand::Ref(c), CmpOp::Ge, Operand::Lit(1))
    }

    pub fn accept(&mut self, name: &str) -> &mut Self {
        self.accept = Some(name.to_string());
        self
    }

    pub fn predict(&mut self, symbol: &str, op: &str) -> &mut Self {
        self.predict
            .get_or_insert_with(Vec::new)
            .push((symbol.to_string(), op.to_string()));
        self
    }

    pub fn empty_accepts(&mut self, yes: bool) -> &mut Self {
        self.empty_accepts = yes;
        self
    }

    pub fn build(self) -> Result<Program, DslError> {
        let alphabet = Alphabet::new(self.symbols)?;
        Program::new(
            self.name,
            alphabet,
            self.ops,
            self.accept,
            self.predict,
            self.empty_accepts,
        )
    }
}

/// Shorthand for an operand referring to an op.
pub fn r(name: &str) -> Operand {
    Operand::Ref(Ref::op(name))
}
