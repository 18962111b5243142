use std::collections::{BTreeMap, HashSet};

use super::{Body, CmpOp, LocalRelation, Mask, Operand, Operation, Program, Ref};

/// Rewrites every sugared construct into core operations.
///
/// Each rewritten operation keeps its name (as the last of its expansion), so
/// accept/predict targets and later references are untouched. Helper
/// operations get fresh names. Integer literals share one `1` operation and
/// are built as `Add` chains; `0` is `1 - 1`.
pub fn desugar(p: &Program) -> Program {
    let mut cx = Ctx {
        used: p.ops.iter().map(|o| o.name.clone()).collect(),
        out: Vec::with_capacity(p.ops.len()),
        one: None,
        lits: BTreeMap::new(),
    };
    for op in &p.ops {
        cx.lower(op);
    }
    let q = Program {
        name: p.name.clone(),
        alphabet: p.alphabet.clone(),
        ops: cx.out,
        accept: p.accept.clone(),
        predict: p.predict.clone(),
        empty_accepts: p.empty_accepts,
    };
    debug_assert!(super::validate::validate(&q).is_ok());
    debug_assert!(q.is_core());
    q
}

struct Ctx {
    used: HashSet<String>,
    out: Vec<Operation>,
    one: Option<String>,
    lits: BTreeMap<u64, String>,
}

impl Ctx {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 2;
        while self.used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }

    fn emit(&mut self, name: String, body: Body) -> Ref {
        self.out.push(Operation::new(name.clone(), body));
        Ref::Op(name)
    }

    fn helper(&mut self, base: &str, body: Body) -> Ref {
        let name = self.fresh(base);
        self.emit(name, body)
    }

    fn one(&mut self) -> Ref {
        if let Some(n) = &self.one {
            return Ref::Op(n.clone());
        }
        let r = self.helper("one", Body::One);
        if let Ref::Op(n) = &r {
            self.one = Some(n.clone());
        }
        r
    }

    fn lit(&mut self, k: u64) -> Ref {
        if k == 1 {
            return self.one();
        }
        if let Some(n) = self.lits.get(&k) {
            return Ref::Op(n.clone());
        }
        let one = self.one();
        let body = if k == 0 {
            Body::Sub(one.clone(), one)
        } else {
            let prev = self.lit(k - 1);
            Body::Add(prev, one)
        };
        let r = self.helper(&format!("lit{k}"), body);
        if let Ref::Op(n) = &r {
            self.lits.insert(k, n.clone());
        }
        r
    }

    fn operand(&mut self, o: &Operand) -> Ref {
        match o {
            Operand::Ref(r) => r.clone(),
            Operand::Lit(k) => self.lit(*k),
        }
    }

    fn lower(&mut self, op: &Operation) {
        let name = op.name.clone();
        match &op.body {
            Body::Compare { op: cmp, lhs, rhs } => {
                let a = self.operand(lhs);
                let b = self.operand(rhs);
                let le = |x: Ref, y: Ref| Body::Compare {
                    op: CmpOp::Le,
                    lhs: Operand::Ref(x),
                    rhs: Operand::Ref(y),
                };
                match cmp {
                    CmpOp::Le => {
                        self.emit(name, le(a, b));
                    }
                    CmpOp::Ge => {
                        self.emit(name, le(b, a));
                    }
                    CmpOp::Eq => {
                        let x = self.helper(&format!("{name}_le"), le(a.clone(), b.clone()));
                        let y = self.helper(&format!("{name}_ge"), le(b, a));
                        self.emit(name, Body::And(x, y));
                    }
                    CmpOp::Lt => {
                        let one = self.one();
                        let s = self.helper(&format!("{name}_succ"), Body::Add(a, one));
                        self.emit(name, le(s, b));
                    }
                }
            }
            Body::Count {
                mask: Mask::Strict,
                pred,
            } => {
                let c = self.helper(
                    &format!("{name}_incl"),
                    Body::Count {
                        mask: Mask::All,
                        pred: pred.clone(),
                    },
                );
                let one = self.one();
                let zero = self.lit(0);
                let here = self.helper(
                    &format!("{name}_here"),
                    Body::Conditional {
                        cond: pred.clone(),
                        then: one,
                        otherwise: zero,
                    },
                );
                self.emit(name, Body::Sub(c, here));
            }
            Body::Count {
                mask: Mask::Local(rel),
                pred,
            } if rel.offsets.len() > 1 => {
                let parts: Vec<Ref> = rel
                    .offsets
                    .iter()
                    .rev()
                    .map(|&c| {
                        let tag = if c < 0 {
                            format!("{name}_m{}", c.unsigned_abs())
                        } else {
                            format!("{name}_p{c}")
                        };
                        self.helper(
                            &tag,
                            Body::Count {
                                mask: Mask::Local(LocalRelation::single(c)),
                                pred: pred.clone(),
                            },
                        )
                    })
                    .collect();
                let mut acc = parts[0].clone();
                for (k, part) in parts.iter().enumerate().skip(1) {
                    let body = Body::Add(acc, part.clone());
                    acc = if k + 1 == parts.len() {
                        self.emit(name.clone(), body)
                    } else {
                        self.helper(&format!("{name}_sum"), body)
                    };
                }
            }
            body => {
                self.emit(name, body.clone());
            }
        }
    }
}
