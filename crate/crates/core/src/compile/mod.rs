//! Lowering of C-RASP programs to Limit Transformers.
//!
//! The program is desugared first. Every row of the residual stream then
//! holds, at row `t + 1`, the value of each Boolean op at position `t` as
//! 0/1 and each count `c` as `c / (t + 1)`. The start row holds zeros in
//! every op channel. Each op gets its own layer (two for a look-back count),
//! and every layer has exactly one head, which is all-zero when the op is
//! computed by the MLP alone.
//!
//! Gating the start row: the constant channel is 0 there, so the Boolean
//! gadgets that would otherwise need a bias read the constant channel
//! instead; counts of gated predicates vanish there automatically.

mod check;
mod plan;

use std::collections::BTreeMap;

pub use check::{check_channels, ChannelCheck};
pub use plan::{ChannelPlan, CompileReport, Gadget, OpChannel, OpReport};

use crate::dsl::{desugar, Body, Mask, Operand, PeriodicRelation, Program, Ref, SOS};
use crate::runtime::{
    Activation, FixedPrecision, Head, Layer, LimitTransformer, Matrix, Mlp, PeriodicEncoding,
    PositionalLogitFn,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("unsupported construct in op {op}: {what}")]
    UnsupportedConstruct { op: String, what: String },
    #[error("plan needs {needed} channels, cap is {cap}")]
    ChannelOverflow { needed: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileOptions {
    pub max_channels: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub net: LimitTransformer,
    pub plan: ChannelPlan,
    pub report: CompileReport,
    /// The desugared program the plan refers to.
    pub program: Program,
}

pub fn compile(p: &Program, fp: FixedPrecision) -> Result<Compiled, CompileError> {
    compile_with(p, fp, CompileOptions::default())
}

/// Hidden unit: activation, bias, input weights, output weights.
struct Unit {
    act: Activation,
    bias: f64,
    input: Vec<(usize, f64)>,
    output: Vec<(usize, f64)>,
}

impl Unit {
    fn relu(input: Vec<(usize, f64)>, bias: f64, out: usize, w: f64) -> Self {
        Self {
            act: Activation::Relu,
            bias,
            input,
            output: vec![(out, w)],
        }
    }
}

#[derive(Default)]
struct LayerSpec {
    head: Option<Head>,
    units: Vec<Unit>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Bound `M` (a power of two) with `|C(t)| <= M (t + 1)` for every count op.
fn count_bounds(p: &Program) -> BTreeMap<&str, u32> {
    let mut m: BTreeMap<&str, u32> = BTreeMap::new();
    for op in p.ops() {
        let get = |r: &Ref| match r {
            Ref::Op(n) => m.get(n.as_str()).copied().unwrap_or(1),
            Ref::Token(_) => 1,
        };
        let b = match &op.body {
            Body::Add(a, b) | Body::Sub(a, b) => get(a).saturating_add(get(b)),
            Body::Conditional { then, otherwise, .. } => get(then).max(get(otherwise)),
            _ => 1,
        };
        m.insert(&op.name, b.next_power_of_two());
    }
    m
}

pub fn compile_with(
    p: &Program,
    fp: FixedPrecision,
    opts: CompileOptions,
) -> Result<Compiled, CompileError> {
    let prog = desugar(p);
    let syms = prog.alphabet().symbols();

    // Reserved channels.
    let is_sos = 0;
    let constant = 1;
    let mut next = 2;
    let tokens: Vec<(String, usize)> = syms
        .iter()
        .map(|s| {
            next += 1;
            (s.clone(), next - 1)
        })
        .collect();
    let mut rels: Vec<PeriodicRelation> = prog
        .ops()
        .iter()
        .filter_map(|o| match o.body {
            Body::Positional(r) => Some(r),
            _ => None,
        })
        .collect();
    rels.sort();
    rels.dedup();
    let positional: Vec<(PeriodicRelation, usize)> = rels
        .iter()
        .map(|r| {
            next += 1;
            (*r, next - 1)
        })
        .collect();
    let one_count = next;
    next += 1;
    let mut homes = Vec::with_capacity(prog.ops().len());
    for op in prog.ops() {
        homes.push(OpChannel {
            name: op.name.clone(),
            sort: op.sort(),
            channel: next,
        });
        next += 1;
    }
    let home_of: BTreeMap<&str, usize> = homes.iter().map(|h| (h.name.as_str(), h.channel)).collect();
    let mut scratch = Vec::new();
    for op in prog.ops() {
        if let Body::Count {
            mask: Mask::Local(rel),
            ..
        } = &op.body
        {
            let off = *rel.offsets.iter().next().unwrap();
            if off < 0 {
                scratch.push((op.name.clone(), next, next + 1));
                next += 2;
            }
        }
    }
    let d = next;
    if let Some(cap) = opts.max_channels {
        if d > cap {
            return Err(CompileError::ChannelOverflow { needed: d, cap });
        }
    }
    let token_ch: BTreeMap<&str, usize> = tokens.iter().map(|(s, c)| (s.as_str(), *c)).collect();
    let ch = |r: &Ref| -> usize {
        match r {
            Ref::Op(n) => home_of[n.as_str()],
            Ref::Token(s) => token_ch[s.as_str()],
        }
    };

    let period = rels
        .iter()
        .fold(1usize, |acc, r| acc / gcd(acc, r.modulus as usize) * r.modulus as usize);
    let beta = 2f64.powi(-(fp.bits() as i32 - 1));
    let bounds = count_bounds(&prog);

    let mut layers: Vec<LayerSpec> = Vec::new();
    // Layer 0: 1/r by uniform attention over the start marker.
    layers.push(LayerSpec {
        head: Some(Head {
            v: Matrix::from_entries(d, d, [(one_count, is_sos, 1.0)]),
            ..Head::zero(d)
        }),
        units: vec![],
    });

    let mut op_reports = Vec::with_capacity(prog.ops().len());
    let mut tau = 0usize;
    let mut scratch_iter = scratch.iter();
    for op in prog.ops() {
        let h = home_of[op.name.as_str()];
        let first = layers.len();
        let mlp = |units: Vec<Unit>| LayerSpec { head: None, units };
        let gadget = match &op.body {
            Body::Initial(s) => {
                layers.push(mlp(vec![Unit::relu(vec![(token_ch[s.as_str()], 1.0), (is_sos, -1.0)], 0.0, h, 1.0)]));
                Gadget::Initial
            }
            Body::Positional(rel) => {
                let f = positional.iter().find(|x| x.0 == *rel).unwrap().1;
                layers.push(mlp(vec![Unit::relu(vec![(f, 1.0), (is_sos, -1.0)], 0.0, h, 1.0)]));
                Gadget::Positional
            }
            Body::Not(a) => {
                layers.push(mlp(vec![Unit::relu(vec![(constant, 1.0), (ch(a), -1.0)], 0.0, h, 1.0)]));
                Gadget::Not
            }
            Body::And(a, b) => {
                let mut input = vec![(constant, -1.0)];
                // `a and a` reads the same channel twice
                input.push((ch(a), 1.0));
                input.push((ch(b), 1.0));
                layers.push(mlp(vec![Unit::relu(input, 0.0, h, 1.0)]));
                Gadget::And
            }
            Body::True => {
                layers.push(mlp(vec![Unit::relu(vec![(constant, 1.0)], 0.0, h, 1.0)]));
                Gadget::True
            }
            Body::Compare { lhs, rhs, .. } => {
                let (Operand::Ref(l), Operand::Ref(r)) = (lhs, rhs) else {
                    return Err(CompileError::UnsupportedConstruct {
                        op: op.name.clone(),
                        what: "literal operand after desugaring".into(),
                    });
                };
                // (hs(C2 - C1 + β - s) + hs(0)) / 2
                let units = vec![
                    Unit {
                        act: Activation::Heaviside,
                        bias: beta,
                        input: vec![(ch(r), 1.0), (ch(l), -1.0), (is_sos, -1.0)],
                        output: vec![(h, 0.5)],
                    },
                    Unit {
                        act: Activation::Heaviside,
                        bias: 0.0,
                        input: vec![],
                        output: vec![(h, 0.5)],
                    },
                ];
                layers.push(mlp(units));
                Gadget::Leq
            }
            Body::Count { mask: Mask::All, pred } => {
                layers.push(LayerSpec {
                    head: Some(Head {
                        v: Matrix::from_entries(d, d, [(h, ch(pred), 1.0)]),
                        ..Head::zero(d)
                    }),
                    units: vec![],
                });
                Gadget::CountUniform
            }
            Body::Count {
                mask: Mask::Local(rel),
                pred,
            } => {
                let off = *rel.offsets.iter().next().unwrap();
                if off > 0 {
                    Gadget::CountVacuous
                } else if off == 0 {
                    layers.push(mlp(vec![Unit::relu(
                        vec![(one_count, 1.0), (ch(pred), 1.0)],
                        -1.0,
                        h,
                        1.0,
                    )]));
                    Gadget::CountSelf
                } else {
                    let dist = off.unsigned_abs() as usize;
                    tau = tau.max(dist);
                    let (_, avg, flag) = scratch_iter.next().unwrap();
                    let mut phi = vec![0.0; dist + 1];
                    phi[dist] = 2.0;
                    layers.push(LayerSpec {
                        head: Some(Head {
                            k: Matrix::from_entries(d, d, [(0, is_sos, 1.0)]),
                            q: Matrix::from_entries(d, d, [(0, constant, 1.0)]),
                            v: Matrix::from_entries(d, d, [(*avg, ch(pred), 1.0)]),
                            phi: PositionalLogitFn::new(phi),
                        }),
                        units: vec![
                            Unit {
                                act: Activation::Heaviside,
                                bias: -0.5,
                                input: vec![(*avg, 1.0)],
                                output: vec![(*flag, 0.5)],
                            },
                            Unit {
                                act: Activation::Heaviside,
                                bias: 0.0,
                                input: vec![],
                                output: vec![(*flag, 0.5)],
                            },
                        ],
                    });
                    layers.push(mlp(vec![Unit::relu(
                        vec![(one_count, 1.0), (*flag, 1.0)],
                        -1.0,
                        h,
                        1.0,
                    )]));
                    Gadget::CountLocal { distance: dist }
                }
            }
            Body::Count { mask: Mask::Strict, .. } => {
                return Err(CompileError::UnsupportedConstruct {
                    op: op.name.clone(),
                    what: "strict count after desugaring".into(),
                })
            }
            Body::Conditional {
                cond,
                then,
                otherwise,
            } => {
                let m = bounds[op.name.as_str()];
                let mf = m as f64;
                let (c, a, b) = (ch(cond), ch(then), ch(otherwise));
                let units = vec![
                    Unit::relu(vec![(a, 1.0), (c, mf)], -mf, h, 1.0),
                    Unit::relu(vec![(a, -1.0), (c, mf)], -mf, h, -1.0),
                    Unit::relu(vec![(b, 1.0), (c, -mf)], 0.0, h, 1.0),
                    Unit::relu(vec![(b, -1.0), (c, -mf)], 0.0, h, -1.0),
                ];
                layers.push(mlp(units));
                Gadget::Conditional { bound: m }
            }
            Body::Add(a, b) | Body::Sub(a, b) => {
                let sign = if matches!(op.body, Body::Add(..)) { 1.0 } else { -1.0 };
                let x = vec![(ch(a), 1.0), (ch(b), sign)];
                let nx = x.iter().map(|(c, w)| (*c, -w)).collect();
                layers.push(mlp(vec![
                    Unit::relu(x, 0.0, h, 1.0),
                    Unit::relu(nx, 0.0, h, -1.0),
                ]));
                if sign > 0.0 {
                    Gadget::Add
                } else {
                    Gadget::Sub
                }
            }
            Body::One => {
                layers.push(mlp(vec![Unit::relu(vec![(one_count, 1.0), (is_sos, -1.0)], 0.0, h, 1.0)]));
                Gadget::One
            }
        };
        op_reports.push(OpReport {
            name: op.name.clone(),
            channel: h,
            gadget,
            layers: (first..layers.len()).collect(),
        });
    }

    // Embedding: the start marker, and constant plus one-hot for every symbol.
    let mut emb = vec![(0, is_sos, 1.0)];
    for (k, (_, c)) in tokens.iter().enumerate() {
        emb.push((k + 1, constant, 1.0));
        emb.push((k + 1, *c, 1.0));
    }
    let embedding = Matrix::from_entries(syms.len() + 1, d, emb);
    let encoding = PeriodicEncoding {
        table: Matrix::from_entries(
            period,
            d,
            (0..period).flat_map(|k| {
                positional
                    .iter()
                    .filter(move |(r, _)| r.holds(k))
                    .map(move |(_, c)| (k, *c, 1.0))
            }),
        ),
    };

    let accept = home_of[prog.accept_op()];
    let mut out_rows = Vec::new();
    let mut labels = Vec::new();
    for (sym, target) in prog.predict().unwrap_or(&[]) {
        out_rows.push(home_of[target.as_str()]);
        labels.push(sym.clone());
    }
    out_rows.push(accept);
    labels.push("accept".into());
    let unembedding = Matrix::from_entries(
        out_rows.len(),
        d,
        out_rows
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| [(k, c, 2.0), (k, constant, -1.0)]),
    );

    let net_layers: Vec<Layer> = layers
        .into_iter()
        .map(|spec| {
            let f = spec.units.len();
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut bias = Vec::with_capacity(f);
            let mut act = Vec::with_capacity(f);
            for (u, unit) in spec.units.into_iter().enumerate() {
                a.extend(unit.input.iter().map(|&(c, w)| (u, c, w)));
                b.extend(unit.output.iter().map(|&(c, w)| (c, u, w)));
                bias.push(unit.bias);
                act.push(unit.act);
            }
            Layer {
                heads: vec![spec.head.unwrap_or_else(|| Head::zero(d))],
                mlp: Mlp {
                    a: Matrix::from_entries(f, d, a),
                    b: Matrix::from_entries(d, f, b),
                    bias,
                    act,
                },
            }
        })
        .collect();

    let mut symbols = vec![SOS.to_string()];
    symbols.extend(syms.iter().cloned());
    let plan = ChannelPlan {
        width: d,
        is_sos,
        constant,
        tokens,
        positional,
        one_count,
        homes,
        scratch,
        accept,
    };
    let report = CompileReport {
        program: prog.name().to_string(),
        layers: net_layers.len(),
        heads: 1,
        channels: d,
        precision: fp.bits(),
        tau,
        period,
        max_rows: 1u64 << (fp.bits().saturating_sub(2)),
        ops: op_reports,
        notes: vec![
            "start row keeps its marker channel; op channels are gated to 0 there".into(),
            "comparisons carry a bias of 2^-(p-1); exact while rows < max_rows".into(),
        ],
    };
    let net = LimitTransformer {
        symbols,
        d,
        embedding,
        encoding,
        layers: net_layers,
        unembedding,
        output_labels: labels,
        precision: fp,
        param_precision: fp.bits(),
        empty_accepts: prog.empty_accepts(),
        metadata: Some(serde_json::json!({
            "channel_plan": plan,
            "compile_report": report,
        })),
    };
    debug_assert!(net.validate().is_ok());
    Ok(Compiled {
        net,
        plan,
        report,
        program: prog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::interp::accepts;
    use crate::runtime::{accepts_net, reg_infinity};

    const MAJ: &str = "program maj over {0, 1} {
        C1(i) := count[j<=i] Q_1(j);
        C0(i) := count[j<=i] Q_0(j);
        M(i) := C0(i) < C1(i);
    }";

    fn words(alpha: &[&str], max: usize) -> Vec<Vec<String>> {
        let mut out = vec![vec![]];
        let mut layer: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|w| {
                    alpha.iter().map(move |s| {
                        let mut v = w.clone();
                        v.push(s.to_string());
                        v
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn majority_matches_count_oracle() {
        let p = parse(MAJ).unwrap();
        let c = compile(&p, FixedPrecision::default()).unwrap();
        assert!(c.net.validate().is_ok());
        assert_eq!(c.report.period, 1);
        assert_eq!(c.report.tau, 0);
        for w in words(&["0", "1"], 10).into_iter().skip(1) {
            let ones = w.iter().filter(|s| *s == "1").count();
            assert_eq!(accepts_net(&c.net, &w).unwrap(), 2 * ones > w.len(), "{w:?}");
        }
        let r = reg_infinity(&c.net);
        assert_eq!((r.period, r.phi_energy), (1.0, 0.0));
    }

    #[test]
    fn local_and_periodic_programs() {
        let src = "program ab over {a, b} {
            A(i) := Q_a(i);
            N(i) := count[j<=i, j==i-1] A(j);
            P(i) := N(i) >= 1;
            Q(i) := Q_b(i) and P(i);
            C(i) := count[j<=i] Q(j);
            L(i) := C(i) >= 1;
        }";
        let p = parse(src).unwrap();
        let c = compile(&p, FixedPrecision::default()).unwrap();
        assert_eq!(c.report.tau, 1);
        for w in words(&["a", "b"], 9).into_iter().skip(1) {
            let s: String = w.concat();
            assert_eq!(accepts_net(&c.net, &w).unwrap(), s.contains("ab"), "{s}");
        }
        let src = "program even over {a} {
            NA(i) := not Q_a(i);
            C(i) := count[j<=i] NA(j);
            A(i) := C(i) = 0;
            E(i) := pos mod(2,0)(i);
            D(i) := E(i) and A(i);
        }";
        let p = parse(src).unwrap();
        let c = compile(&p, FixedPrecision::default()).unwrap();
        assert_eq!(c.report.period, 2);
        assert_eq!(reg_infinity(&c.net).period, 2.0);
        for n in 1..=12 {
            let w = vec!["a"; n];
            assert_eq!(accepts_net(&c.net, &w).unwrap(), n % 2 == 0);
        }
    }

    #[test]
    fn sugar_heavy_program_agrees_with_interpreter() {
        let src = "program mix over {a, b, c} {
            S(i) := count[j<i] Q_a(j);
            L(i) := count[j<=i, j in {i-1, i-3, i, i+2}] Q_b(j);
            K(i) := if Q_c(i) then S(i) else L(i);
            D0(i) := K(i) - S(i);
            O(i) := 1;
            D(i) := D0(i) + O(i);
            R(i) := pos mod(3,1)(i);
            T(i) := true;
            X(i) := D(i) < 3;
            NR(i) := not R(i);
            Y(i) := X(i) and NR(i);
            YT(i) := Y(i) and T(i);
            CY(i) := count[j<=i] YT(j);
            Z(i) := CY(i) = L(i);
        }";
        let p = parse(src).unwrap();
        let c = compile(&p, FixedPrecision::default()).unwrap();
        assert_eq!(c.report.tau, 3);
        assert_eq!(c.report.period, 3);
        for w in words(&["a", "b", "c"], 6).into_iter().skip(1) {
            assert_eq!(accepts_net(&c.net, &w).unwrap(), accepts(&p, &w).unwrap(), "{w:?}");
            let chk = check_channels(&p, &c, &w).unwrap();
            assert_eq!(chk.max_bool_err, 0.0, "{w:?}");
            assert!(chk.max_count_err <= 1e-12, "{w:?} {}", chk.max_count_err);
        }
    }

    #[test]
    fn channel_cap() {
        let p = parse(MAJ).unwrap();
        let e = compile_with(&p, FixedPrecision::default(), CompileOptions { max_channels: Some(3) });
        assert!(matches!(e, Err(CompileError::ChannelOverflow { .. })));
    }

    #[test]
    fn plan_channels_disjoint() {
        let p = parse(MAJ).unwrap();
        let c = compile(&p, FixedPrecision::default()).unwrap();
        let mut all = c.plan.all_channels();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        assert_eq!(n, c.plan.width);
    }
}
