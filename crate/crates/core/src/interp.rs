//! Exact reference semantics.
//!
//! Programs are evaluated position by position by a small streaming machine:
//! prefix counts are running sums, local counts keep a short history of their
//! predicate, and everything else is a function of the current row. Values are
//! exact `i64`; Booleans are stored as 0/1.

use std::collections::HashMap;
use std::fmt::Write;

use serde::Serialize;

use crate::dsl::{Body, CmpOp, Mask, Operand, Program, Ref, Sort};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("symbol {symbol:?} at position {position} is not in the alphabet")]
    SymbolNotInAlphabet { position: usize, symbol: String },
    #[error("program has no predict declaration")]
    NoPredictDeclaration,
    #[error("position {t} is outside 1..={len}")]
    PositionOutOfRange { t: usize, len: usize },
    #[error("generation needs a non-empty prefix")]
    EmptyPrefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Value {
    Bool(bool),
    Count(i64),
}

/// Values of every operation at every position of a word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub word: Vec<String>,
    pub names: Vec<String>,
    pub sorts: Vec<Sort>,
    /// `rows[t-1][k]` is op `k` at position `t`.
    rows: Vec<Vec<i64>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Raw value of op `k` at 1-based position `t` (Booleans as 0/1).
    pub fn raw(&self, k: usize, t: usize) -> i64 {
        self.rows[t - 1][k]
    }

    pub fn value(&self, k: usize, t: usize) -> Value {
        let v = self.raw(k, t);
        match self.sorts[k] {
            Sort::Bool => Value::Bool(v != 0),
            Sort::Count => Value::Count(v),
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Values of one op over all positions; panics on an unknown name.
    pub fn series(&self, name: &str) -> Vec<Value> {
        let k = self.index(name).unwrap_or_else(|| panic!("no op {name}"));
        (1..=self.len()).map(|t| self.value(k, t)).collect()
    }

    pub fn bools(&self, name: &str) -> Vec<bool> {
        self.series(name)
            .into_iter()
            .map(|v| matches!(v, Value::Bool(true)))
            .collect()
    }

    pub fn counts(&self, name: &str) -> Vec<i64> {
        let k = self.index(name).unwrap_or_else(|| panic!("no op {name}"));
        (1..=self.len()).map(|t| self.raw(k, t)).collect()
    }

    /// Operation × position table, tab separated, one op per line.
    pub fn table(&self) -> String {
        let mut out = String::from("op\tsort");
        for s in &self.word {
            let _ = write!(out, "\t{s}");
        }
        out.push('\n');
        for (k, name) in self.names.iter().enumerate() {
            let sort = match self.sorts[k] {
                Sort::Bool => "B",
                Sort::Count => "C",
            };
            let _ = write!(out, "{name}\t{sort}");
            for t in 1..=self.len() {
                match self.value(k, t) {
                    Value::Bool(b) => out.push_str(if b { "\tT" } else { "\tF" }),
                    Value::Count(c) => {
                        let _ = write!(out, "\t{c}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Tok(u32),
    Op(u32),
}

#[derive(Debug, Clone, Copy)]
enum Opd {
    Op(u32),
    Lit(i64),
}

#[derive(Debug, Clone)]
enum Instr {
    Initial(u32),
    Not(Src),
    And(Src, Src),
    True,
    Pos(u32, u32),
    Cmp(CmpOp, Opd, Opd),
    /// prefix count; `strict` excludes the current position
    Count { pred: Src, acc: u32, strict: bool },
    /// local count over offsets `-d` (d ≥ 0); history slot `hist`
    Local { pred: Src, dists: Vec<u32>, hist: u32 },
    Cond(Src, u32, u32),
    Add(u32, u32),
    Sub(u32, u32),
    One,
    Zero,
}

/// Compiled form of a program for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Machine {
    instrs: Vec<Instr>,
    n_syms: usize,
    accept: usize,
    predict: Option<Vec<(usize, usize)>>,
    // state
    cur: Vec<i64>,
    accs: Vec<i64>,
    hists: Vec<History>,
    t: usize,
    sym: u32,
}

/// Ring buffer of the last `cap` predicate values, most recent first.
#[derive(Debug, Clone)]
struct History {
    buf: Vec<bool>,
    head: usize,
}

impl History {
    fn new(cap: usize) -> Self {
        Self {
            buf: vec![false; cap.max(1)],
            head: 0,
        }
    }

    fn push(&mut self, v: bool) {
        self.head = (self.head + self.buf.len() - 1) % self.buf.len();
        self.buf[self.head] = v;
    }

    /// Value `d` steps back (0 = most recent push).
    fn get(&self, d: usize) -> bool {
        self.buf[(self.head + d) % self.buf.len()]
    }

    fn clear(&mut self) {
        self.buf.iter_mut().for_each(|b| *b = false);
        self.head = 0;
    }
}

impl Machine {
    pub fn new(p: &Program) -> Self {
        let index: HashMap<&str, u32> = p.ops().iter().enumerate().map(|(k, o)| (o.name.as_str(), k as u32)).collect();
        let idx = |name: &str| index[name];
        let src = |r: &Ref| match r {
            Ref::Op(n) => Src::Op(idx(n)),
            Ref::Token(s) => Src::Tok(p.alphabet().index_of(s).expect("validated symbol") as u32),
        };
        let cnt = |r: &Ref| match r {
            Ref::Op(n) => idx(n),
            Ref::Token(_) => unreachable!("validated count reference"),
        };
        let opd = |o: &Operand| match o {
            Operand::Ref(r) => Opd::Op(cnt(r)),
            Operand::Lit(k) => Opd::Lit(*k as i64),
        };
        let mut n_acc = 0;
        let mut hists = Vec::new();
        let instrs = p
            .ops()
            .iter()
            .map(|op| match &op.body {
                Body::Initial(s) => Instr::Initial(p.alphabet().index_of(s).unwrap() as u32),
                Body::Not(a) => Instr::Not(src(a)),
                Body::And(a, b) => Instr::And(src(a), src(b)),
                Body::True => Instr::True,
                Body::Positional(r) => Instr::Pos(r.modulus, r.residue),
                Body::Compare { op, lhs, rhs } => Instr::Cmp(*op, opd(lhs), opd(rhs)),
                Body::Count { mask, pred } => match mask {
                    Mask::All | Mask::Strict => {
                        n_acc += 1;
                        Instr::Count {
                            pred: src(pred),
                            acc: n_acc - 1,
                            strict: *mask == Mask::Strict,
                        }
                    }
                    Mask::Local(rel) => {
                        let dists: Vec<u32> = rel
                            .offsets
                            .iter()
                            .filter(|&&c| c <= 0)
                            .map(|c| c.unsigned_abs() as u32)
                            .collect();
                        if dists.is_empty() {
                            Instr::Zero
                        } else {
                            hists.push(History::new(rel.radius() + 1));
                            Instr::Local {
                                pred: src(pred),
                                dists,
                                hist: hists.len() as u32 - 1,
                            }
                        }
                    }
                },
                Body::Conditional {
                    cond,
                    then,
                    otherwise,
                } => Instr::Cond(src(cond), cnt(then), cnt(otherwise)),
                Body::Add(a, b) => Instr::Add(cnt(a), cnt(b)),
                Body::Sub(a, b) => Instr::Sub(cnt(a), cnt(b)),
                Body::One => Instr::One,
            })
            .collect::<Vec<_>>();
        let predict = p.predict().map(|pr| {
            pr.iter()
                .map(|(s, o)| (p.alphabet().index_of(s).unwrap(), idx(o) as usize))
                .collect()
        });
        Self {
            cur: vec![0; instrs.len()],
            accs: vec![0; n_acc as usize],
            instrs,
            n_syms: p.alphabet().len(),
            accept: idx(p.accept_op()) as usize,
            predict,
            hists,
            t: 0,
            sym: 0,
        }
    }

    pub fn reset(&mut self) {
        self.t = 0;
        self.accs.iter_mut().for_each(|a| *a = 0);
        self.hists.iter_mut().for_each(History::clear);
        self.cur.iter_mut().for_each(|v| *v = 0);
    }

    /// Number of positions consumed so far.
    pub fn position(&self) -> usize {
        self.t
    }

    #[inline]
    fn read(&self, s: Src) -> bool {
        match s {
            Src::Tok(x) => x == self.sym,
            Src::Op(k) => self.cur[k as usize] != 0,
        }
    }

    /// Consumes one symbol (alphabet index) and evaluates every op there.
    pub fn step(&mut self, sym: usize) {
        debug_assert!(sym < self.n_syms);
        self.t += 1;
        self.sym = sym as u32;
        let t = self.t;
        for k in 0..self.instrs.len() {
            let v = match &self.instrs[k] {
                Instr::Initial(x) => (*x == self.sym) as i64,
                Instr::Not(a) => !self.read(*a) as i64,
                Instr::And(a, b) => (self.read(*a) && self.read(*b)) as i64,
                Instr::True => 1,
                Instr::Pos(m, r) => (t % *m as usize == *r as usize) as i64,
                Instr::Cmp(op, a, b) => {
                    let get = |o: &Opd| match o {
                        Opd::Op(k) => self.cur[*k as usize],
                        Opd::Lit(x) => *x,
                    };
                    op.eval(get(a), get(b)) as i64
                }
                Instr::Count { pred, acc, strict } => {
                    let here = self.read(*pred) as i64;
                    let a = &mut self.accs[*acc as usize];
                    if *strict {
                        let before = *a;
                        *a += here;
                        before
                    } else {
                        *a += here;
                        *a
                    }
                }
                Instr::Local { pred, dists, hist } => {
                    let here = self.read(*pred);
                    let h = &mut self.hists[*hist as usize];
                    h.push(here);
                    dists
                        .iter()
                        .filter(|&&d| (d as usize) < t && h.get(d as usize))
                        .count() as i64
                }
                Instr::Cond(c, a, b) => {
                    if self.read(*c) {
                        self.cur[*a as usize]
                    } else {
                        self.cur[*b as usize]
                    }
                }
                Instr::Add(a, b) => self.cur[*a as usize] + self.cur[*b as usize],
                Instr::Sub(a, b) => self.cur[*a as usize] - self.cur[*b as usize],
                Instr::One => 1,
                Instr::Zero => 0,
            };
            self.cur[k] = v;
        }
    }

    /// Current row (values at the last consumed position).
    pub fn row(&self) -> &[i64] {
        &self.cur
    }

    pub fn accepting(&self) -> bool {
        self.cur[self.accept] != 0
    }

    /// Predicted symbols (alphabet indices, ascending) at the current position.
    pub fn predicted(&self) -> Option<Vec<usize>> {
        let pr = self.predict.as_ref()?;
        let mut out: Vec<usize> = pr
            .iter()
            .filter(|(_, k)| self.cur[*k] != 0)
            .map(|(s, _)| *s)
            .collect();
        out.sort_unstable();
        Some(out)
    }
}

fn encode<S: AsRef<str>>(p: &Program, w: &[S]) -> Result<Vec<usize>, InterpError> {
    p.alphabet()
        .encode(w)
        .map_err(|(position, symbol)| InterpError::SymbolNotInAlphabet { position, symbol })
}

/// Evaluates every op at every position of `w`.
pub fn evaluate<S: AsRef<str>>(p: &Program, w: &[S]) -> Result<Trace, InterpError> {
    let ids = encode(p, w)?;
    let mut m = Machine::new(p);
    let mut rows = Vec::with_capacity(ids.len());
    for &s in &ids {
        m.step(s);
        rows.push(m.row().to_vec());
    }
    Ok(Trace {
        word: w.iter().map(|s| s.as_ref().to_string()).collect(),
        names: p.ops().iter().map(|o| o.name.clone()).collect(),
        sorts: p.ops().iter().map(|o| o.sort()).collect(),
        rows,
    })
}

/// Acceptance: the accept op at the last position; the empty word follows
/// the program's `empty accepts` flag.
pub fn accepts<S: AsRef<str>>(p: &Program, w: &[S]) -> Result<bool, InterpError> {
    let ids = encode(p, w)?;
    Ok(accepts_ids(&mut Machine::new(p), p, &ids))
}

/// Acceptance on pre-encoded input, reusing `m` (which is reset first).
pub fn accepts_ids(m: &mut Machine, p: &Program, ids: &[usize]) -> bool {
    if ids.is_empty() {
        return p.empty_accepts();
    }
    m.reset();
    for &s in ids {
        m.step(s);
    }
    m.accepting()
}

fn symbols(p: &Program, ids: &[usize]) -> Vec<String> {
    ids.iter()
        .map(|&i| p.alphabet().symbols()[i].clone())
        .collect()
}

/// Symbols whose predict target holds at position `t`, in alphabet order.
pub fn predicted_set<S: AsRef<str>>(
    p: &Program,
    w: &[S],
    t: usize,
) -> Result<Vec<String>, InterpError> {
    if p.predict().is_none() {
        return Err(InterpError::NoPredictDeclaration);
    }
    if t == 0 || t > w.len() {
        return Err(InterpError::PositionOutOfRange { t, len: w.len() });
    }
    let ids = encode(p, &w[..t])?;
    let mut m = Machine::new(p);
    for &s in &ids {
        m.step(s);
    }
    Ok(symbols(p, &m.predicted().unwrap()))
}

/// Predicted sets at every position 1..=|w|.
pub fn predicted_sets<S: AsRef<str>>(p: &Program, w: &[S]) -> Result<Vec<Vec<String>>, InterpError> {
    if p.predict().is_none() {
        return Err(InterpError::NoPredictDeclaration);
    }
    let ids = encode(p, w)?;
    let mut m = Machine::new(p);
    Ok(ids
        .iter()
        .map(|&s| {
            m.step(s);
            symbols(p, &m.predicted().unwrap())
        })
        .collect())
}

/// Greedy generation: repeatedly appends the first predicted symbol in
/// alphabet order. Stops after appending `stop`, when nothing is predicted,
/// or after `max_steps` symbols. Returns prefix plus generated symbols.
pub fn generate<S: AsRef<str>>(
    p: &Program,
    prefix: &[S],
    max_steps: usize,
    stop: Option<&str>,
) -> Result<Vec<String>, InterpError> {
    if p.predict().is_none() {
        return Err(InterpError::NoPredictDeclaration);
    }
    if prefix.is_empty() {
        return Err(InterpError::EmptyPrefix);
    }
    let ids = encode(p, prefix)?;
    let stop = stop.and_then(|s| p.alphabet().index_of(s));
    let mut m = Machine::new(p);
    for &s in &ids {
        m.step(s);
    }
    let mut out = ids;
    for _ in 0..max_steps {
        let next = match m.predicted().unwrap().first() {
            Some(&s) => s,
            None => break,
        };
        out.push(next);
        m.step(next);
        if Some(next) == stop {
            break;
        }
    }
    Ok(symbols(p, &out))
}
