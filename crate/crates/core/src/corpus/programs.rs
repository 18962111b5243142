//! Program library: text sources for the hand-written programs and builders
//! for the parameterised families.

use crate::dsl::builder::r;
use crate::dsl::{parse, Body, CmpOp, Mask, Operand, Program, ProgramBuilder, Ref};

/// Hand-written sources, keyed by program name.
pub const SOURCES: &[(&str, &str)] = &[
    ("MAJORITY", include_str!("../../corpus/majority.crasp")),
    ("DYCK1", include_str!("../../corpus/dyck1.crasp")),
    ("ANBNCN", include_str!("../../corpus/anbncn.crasp")),
    ("EXISTS_A", include_str!("../../corpus/exists_a.crasp")),
    ("SUBSTRING_AB", include_str!("../../corpus/substring_ab.crasp")),
    ("AA_STAR", include_str!("../../corpus/aa_star.crasp")),
    ("AAAA_STAR", include_str!("../../corpus/aaaa_star.crasp")),
    ("ABAB_STAR", include_str!("../../corpus/abab_star.crasp")),
    ("TOMITA1", include_str!("../../corpus/tomita1.crasp")),
    ("TOMITA2", include_str!("../../corpus/tomita2.crasp")),
    ("TOMITA4", include_str!("../../corpus/tomita4.crasp")),
    ("AB_D_BC", include_str!("../../corpus/ab_d_bc.crasp")),
];

pub(crate) fn parsed(name: &str) -> Program {
    let src = SOURCES
        .iter()
        .find(|s| s.0 == name)
        .unwrap_or_else(|| panic!("no source for {name}"))
        .1;
    parse(src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn tok(s: &str) -> Ref {
    Ref::token(s)
}

fn op(s: &str) -> Ref {
    Ref::op(s)
}

fn ge1(b: &mut ProgramBuilder, name: &str, c: Ref) -> Ref {
    b.cmp(name, Operand::Ref(c), CmpOp::Ge, Operand::Lit(1))
}

fn eq0(b: &mut ProgramBuilder, name: &str, c: Ref) -> Ref {
    b.cmp(name, Operand::Ref(c), CmpOp::Eq, Operand::Lit(0))
}

/// Appends ops recognising `Σ* a₁ Σ* … aₙ Σ*` and returns the final Boolean.
///
/// `H_k(i)` holds when `x_i = a_k` and `H_{k-1}` held strictly earlier.
fn subsequence_ops(b: &mut ProgramBuilder, prefix: &str, pattern: &[&str]) -> Ref {
    assert!(!pattern.is_empty());
    let mut h = b.and(&format!("{prefix}H1"), tok(pattern[0]), tok(pattern[0]));
    for (k, a) in pattern.iter().enumerate().skip(1) {
        let c = b.op(
            &format!("{prefix}B{k}_n"),
            Body::Count { mask: Mask::Strict, pred: h },
        );
        let before = ge1(b, &format!("{prefix}B{k}"), c);
        h = b.and(&format!("{prefix}H{}", k + 1), tok(a), before);
    }
    b.exists(&format!("{prefix}E"), h)
}

/// Piecewise-testable template `Σ* a₁ Σ* … aₙ Σ*`.
pub fn piecewise(name: &str, symbols: &[&str], pattern: &[&str]) -> Program {
    let mut b = ProgramBuilder::new(name, symbols);
    subsequence_ops(&mut b, "", pattern);
    b.build().expect("piecewise template")
}

/// Tomita 7 (`0*1*0*1*`): the complement of the subsequence language of 1010.
pub fn tomita7() -> Program {
    let mut b = ProgramBuilder::new("TOMITA7", &["0", "1"]);
    let e = subsequence_ops(&mut b, "", &["1", "0", "1", "0"]);
    b.not("L", e);
    b.empty_accepts(true);
    b.build().expect("tomita7")
}

/// `D_n` over {a, b}: the height `#a - #b` stays within `[0, n]` and ends at 0.
pub fn dyck_depth(name: &str, n: u64) -> Program {
    let mut b = ProgramBuilder::new(name, &["a", "b"]);
    b.count("C_a", tok("a"));
    b.count("C_b", tok("b"));
    b.cmp("Lo", r("C_b"), CmpOp::Le, r("C_a"));
    b.op("H", Body::Sub(op("C_a"), op("C_b")));
    b.cmp("Hi", r("H"), CmpOp::Le, Operand::Lit(n));
    b.and("Ok", op("Lo"), op("Hi"));
    b.not("Bad", op("Ok"));
    let cv = b.count("C_bad", op("Bad"));
    eq0(&mut b, "M", cv);
    b.cmp("Bal", r("C_a"), CmpOp::Eq, r("C_b"));
    b.and("D", op("M"), op("Bal"));
    b.empty_accepts(true);
    b.build().expect("dyck depth")
}

/// `aa*bb*cc*dd*ee*`: every letter occurs and none follows a larger one.
pub fn a_to_e() -> Program {
    let letters = ["a", "b", "c", "d", "e"];
    let mut b = ProgramBuilder::new("A_TO_E", &letters);
    let mut viol = Vec::new();
    for (k, x) in letters.iter().enumerate().take(4) {
        let larger: Vec<Ref> = letters[k + 1..].iter().map(|z| tok(z)).collect();
        let g = b.or_all(&format!("G_{x}"), larger);
        let c = b.op(
            &format!("G_{x}_n"),
            Body::Count { mask: Mask::Strict, pred: g },
        );
        let seen = ge1(&mut b, &format!("S_{x}"), c);
        viol.push(b.and(&format!("V_{x}"), tok(x), seen));
    }
    let v = b.or_all("V", viol);
    let cv = b.count("C_V", v);
    let mut all = vec![eq0(&mut b, "Ok", cv)];
    for x in letters {
        all.push(b.exists(&format!("P_{x}"), tok(x)));
    }
    b.and_all("L", all);
    b.build().expect("a_to_e")
}

/// Appends the bigram machinery shared by both induction programs and
/// returns, for each symbol `a`, the count op holding `#{k : x_k = x_i, x_{k+1} = a}`.
fn bigram_selectors(b: &mut ProgramBuilder, symbols: &[&str]) -> Vec<Ref> {
    for s in symbols {
        let c = b.count_local(&format!("Prev_{s}_n"), &[-1], tok(s));
        ge1(b, &format!("Prev_{s}"), c);
    }
    let mut sel = Vec::with_capacity(symbols.len());
    for a in symbols {
        let mut acc: Option<Ref> = None;
        for (k, s) in symbols.iter().enumerate() {
            let bg = b.and(&format!("B_{s}_{a}"), tok(a), op(&format!("Prev_{s}")));
            let cnt = b.count(&format!("N_{s}_{a}"), bg);
            acc = Some(match acc {
                None => cnt,
                Some(prev) => {
                    let nm = if k + 1 == symbols.len() {
                        format!("Sel_{a}")
                    } else {
                        format!("Sel_{a}_{k}")
                    };
                    b.op(&nm, Body::Conditional { cond: tok(s), then: cnt, otherwise: prev })
                }
            });
        }
        // a single-symbol alphabet selects the only count directly
        sel.push(acc.unwrap());
    }
    sel
}

/// Predicts every `σ` such that the bigram `x_i σ` already occurred.
pub fn induction_all(name: &str, symbols: &[&str]) -> Program {
    let mut b = ProgramBuilder::new(name, symbols);
    let sel = bigram_selectors(&mut b, symbols);
    for (a, s) in symbols.iter().zip(sel) {
        ge1(&mut b, &format!("Next_{a}"), s);
    }
    for a in symbols {
        b.predict(a, &format!("Next_{a}"));
    }
    b.build().expect("induction_all")
}

/// Predicts the most frequent successor of earlier occurrences of `x_i` (ties kept).
pub fn induction_argmax(name: &str, symbols: &[&str]) -> Program {
    let mut b = ProgramBuilder::new(name, symbols);
    let sel = bigram_selectors(&mut b, symbols);
    for (k, a) in symbols.iter().enumerate() {
        let mut conj = Vec::new();
        for (m, c) in symbols.iter().enumerate() {
            if m != k {
                conj.push(b.cmp(
                    &format!("More_{a}_{c}"),
                    Operand::Ref(sel[m].clone()),
                    CmpOp::Le,
                    Operand::Ref(sel[k].clone()),
                ));
            }
        }
        if conj.is_empty() {
            b.op(&format!("Next_{a}"), Body::True);
        } else {
            b.and_all(&format!("Next_{a}"), conj);
        }
    }
    for a in symbols {
        b.predict(a, &format!("Next_{a}"));
    }
    b.build().expect("induction_argmax")
}

/// Alphabet of the numeric tasks: `1..=v` then `SEP`.
pub fn numeric_alphabet(v: usize) -> Vec<String> {
    (1..=v).map(|k| k.to_string()).chain(["SEP".to_string()]).collect()
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Copy of unique tokens: the induction program over numbers and `SEP`.
pub fn copy_unique(v: usize) -> Program {
    let a = numeric_alphabet(v);
    induction_all("COPY_UNIQUE", &as_strs(&a))
}

/// At `SEP`, predicts the strictly more frequent bit.
pub fn binary_majority() -> Program {
    let mut b = ProgramBuilder::new("BINARY_MAJORITY", &["0", "1", "SEP"]);
    b.count("C1", tok("1"));
    b.count("C0", tok("0"));
    b.cmp("M1", r("C0"), CmpOp::Lt, r("C1"));
    b.cmp("M0", r("C1"), CmpOp::Lt, r("C0"));
    b.and("Next_1", tok("SEP"), op("M1"));
    b.and("Next_0", tok("SEP"), op("M0"));
    b.predict("0", "Next_0").predict("1", "Next_1");
    b.build().expect("binary_majority")
}

/// At `SEP`, predicts the most frequent letter.
pub fn majority_task(letters: &[&str]) -> Program {
    let mut symbols = letters.to_vec();
    symbols.push("SEP");
    let mut b = ProgramBuilder::new("MAJORITY_TASK", &symbols);
    for x in letters {
        b.count(&format!("C_{x}"), tok(x));
    }
    for x in letters {
        let mut conj = vec![tok("SEP")];
        for y in letters.iter().filter(|y| *y != x) {
            conj.push(b.cmp(&format!("Ge_{x}_{y}"), r(&format!("C_{y}")), CmpOp::Le, r(&format!("C_{x}"))));
        }
        b.and_all(&format!("Next_{x}"), conj);
    }
    for x in letters {
        b.predict(x, &format!("Next_{x}"));
    }
    b.build().expect("majority_task")
}

/// Sort over `1..=v`: after `SEP` or a number `u`, predicts the smallest
/// number in the input that is larger than `u`.
pub fn sort_program(v: usize) -> Program {
    let a = numeric_alphabet(v);
    let mut b = ProgramBuilder::new("SORT", &as_strs(&a));
    // Below_k: the current symbol is SEP or a number smaller than k
    let mut below = b.and("Below_1", tok("SEP"), tok("SEP"));
    let mut none_before = b.op("None_1", Body::True);
    for k in 1..=v {
        let present = b.exists(&format!("In_{k}"), tok(&k.to_string()));
        let g = b.and(&format!("G_{k}"), present, below.clone());
        b.and(&format!("Next_{k}"), g.clone(), none_before.clone());
        if k < v {
            below = b.or(&format!("Below_{}", k + 1), below, tok(&k.to_string()));
            let ng = b.not(&format!("NG_{k}"), g);
            none_before = b.and(&format!("None_{}", k + 1), none_before, ng);
        }
    }
    for k in 1..=v {
        b.predict(&k.to_string(), &format!("Next_{k}"));
    }
    b.build().expect("sort")
}

/// Binary majority interleave: stream `k` occupies positions `≡ k (mod 3)`
/// before `SEP`; the `k`-th label is predicted `k - 1` positions after `SEP`.
pub fn binary_majority_interleave() -> Program {
    let mut b = ProgramBuilder::new("BMI", &["0", "1", "SEP"]);
    let seps = b.count("C_sep", tok("SEP"));
    let pre = eq0(&mut b, "Pre", seps);
    let post = b.not("Post", pre.clone());
    b.count("After", post);
    let mut one_cases = Vec::new();
    let mut zero_cases = Vec::new();
    for k in 1..=3u32 {
        let s = b.positional(&format!("S{k}"), 3, k % 3);
        let in_k = b.and(&format!("In{k}"), s, pre.clone());
        let one = b.and(&format!("One{k}"), tok("1"), in_k.clone());
        let zero = b.and(&format!("Zero{k}"), tok("0"), in_k);
        b.count(&format!("C1_{k}"), one);
        b.count(&format!("C0_{k}"), zero);
        let m1 = b.cmp(&format!("M1_{k}"), r(&format!("C0_{k}")), CmpOp::Lt, r(&format!("C1_{k}")));
        let m0 = b.cmp(&format!("M0_{k}"), r(&format!("C1_{k}")), CmpOp::Lt, r(&format!("C0_{k}")));
        let at = b.cmp(&format!("At{k}"), r("After"), CmpOp::Eq, Operand::Lit(k as u64));
        one_cases.push(b.and(&format!("Y1_{k}"), at.clone(), m1));
        zero_cases.push(b.and(&format!("Y0_{k}"), at, m0));
    }
    b.or_all("Next_1", one_cases);
    b.or_all("Next_0", zero_cases);
    b.predict("0", "Next_0").predict("1", "Next_1");
    b.build().expect("bmi")
}

/// The 26 lowercase letters.
pub fn letters26() -> Vec<String> {
    (b'a'..=b'z').map(|c| (c as char).to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{accepts, generate, predicted_set, predicted_sets};

    fn w(s: &str) -> Vec<String> {
        s.chars().map(String::from).collect()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn sources_parse_under_their_names() {
        for (name, _) in SOURCES {
            assert_eq!(parsed(name).name(), *name);
        }
    }

    #[test]
    fn piecewise_and_tomita7() {
        let p = piecewise("PW", &["a", "b"], &["a", "b", "a"]);
        assert!(accepts(&p, &w("bbaabba")).unwrap());
        assert!(!accepts(&p, &w("aab")).unwrap());
        let t = tomita7();
        assert!(accepts(&t, &w("0011001")).unwrap());
        assert!(!accepts(&t, &w("1010")).unwrap());
        assert!(accepts(&t, &w("")).unwrap());
    }

    #[test]
    fn dyck_depth_bounds_height() {
        let d2 = dyck_depth("D2", 2);
        assert!(accepts(&d2, &w("aabbab")).unwrap());
        assert!(!accepts(&d2, &w("aaabbb")).unwrap());
        assert!(!accepts(&d2, &w("ba")).unwrap());
    }

    #[test]
    fn induction_examples() {
        let all = induction_all("IA", &["a", "b", "c"]);
        assert_eq!(predicted_set(&all, &w("abcab"), 5).unwrap(), ["c"]);
        assert_eq!(predicted_set(&all, &w("abacab"), 6).unwrap(), ["a"]);
        assert_eq!(predicted_set(&all, &w("abaca"), 5).unwrap(), ["b", "c"]);
        assert!(predicted_set(&all, &w("a"), 1).unwrap().is_empty());
        let am = induction_argmax("IM", &["a", "b", "c"]);
        assert_eq!(predicted_set(&am, &w("ababa"), 5).unwrap(), ["b"]);
        assert_eq!(predicted_set(&am, &w("abacaba"), 7).unwrap(), ["b"]);
    }

    #[test]
    fn copy_unique_generation() {
        let p = copy_unique(30);
        let out = generate(&p, &toks("SEP 14 23 6 9 SEP"), 10, Some("SEP")).unwrap();
        assert_eq!(out.join(" "), "SEP 14 23 6 9 SEP 14 23 6 9 SEP");
    }

    #[test]
    fn task_predicates() {
        let bm = binary_majority();
        assert_eq!(predicted_set(&bm, &toks("0 1 1 SEP"), 4).unwrap(), ["1"]);
        let letters = ["a", "b", "c"];
        let mj = majority_task(&letters);
        assert_eq!(predicted_set(&mj, &toks("c b a b SEP"), 5).unwrap(), ["b"]);
        let s = sort_program(30);
        let sets = predicted_sets(&s, &toks("14 23 6 9 SEP 6 9 14 23")).unwrap();
        let tail: Vec<String> = sets[4..].iter().map(|v| v.join(",")).collect();
        assert_eq!(tail, ["6", "9", "14", "23", ""]);
        let bmi = binary_majority_interleave();
        let sets = predicted_sets(&bmi, &toks("1 0 1 1 0 0 1 1 1 SEP 1 0 1")).unwrap();
        let tail: Vec<String> = sets[9..12].iter().map(|v| v.join(",")).collect();
        assert_eq!(tail, ["1", "0", "1"]);
    }
}
