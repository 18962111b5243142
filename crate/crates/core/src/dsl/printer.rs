use std::fmt::Write;

use super::lexer::is_ident_char;
use super::{Body, Mask, Operand, Program, Ref};

/// Canonical text of a program. `parse(&print(p))` equals `p`.
pub fn print(p: &Program) -> String {
    let mut out = String::new();
    let syms: Vec<String> = p.alphabet.symbols().iter().map(|s| symbol(s)).collect();
    let _ = writeln!(out, "program {} over {{{}}} {{", p.name, syms.join(", "));
    for op in &p.ops {
        let _ = writeln!(out, "  {}(i) := {};", op.name, body(&op.body));
    }
    if let Some(a) = &p.accept {
        let _ = writeln!(out, "  accept {a};");
    }
    if let Some(pred) = &p.predict {
        let entries: Vec<String> = pred
            .iter()
            .map(|(s, t)| format!("{} -> {t}", symbol(s)))
            .collect();
        let _ = writeln!(out, "  predict {};", entries.join(", "));
    }
    if p.empty_accepts {
        out.push_str("  empty accepts;\n");
    }
    out.push_str("}\n");
    out
}

/// Bare when the symbol lexes back as a single plain word, quoted otherwise.
pub(crate) fn symbol(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_ident_char) && !s.starts_with("Q_") {
        s.to_string()
    } else {
        let mut q = String::from("\"");
        for c in s.chars() {
            if c == '"' || c == '\\' {
                q.push('\\');
            }
            q.push(c);
        }
        q.push('"');
        q
    }
}

fn reference(r: &Ref, var: char) -> String {
    match r {
        Ref::Op(n) => format!("{n}({var})"),
        Ref::Token(s) => format!("{}({var})", token_text(s)),
    }
}

fn token_text(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_ident_char) {
        format!("Q_{s}")
    } else {
        let quoted = symbol(s);
        format!("Q_{quoted}")
    }
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Ref(r) => reference(r, 'i'),
        Operand::Lit(k) => k.to_string(),
    }
}

fn offset(c: i64) -> String {
    match c {
        0 => "i".to_string(),
        c if c < 0 => format!("i-{}", c.unsigned_abs()),
        c => format!("i+{c}"),
    }
}

fn body(b: &Body) -> String {
    match b {
        Body::Initial(s) => reference(&Ref::Token(s.clone()), 'i'),
        Body::Not(r) => format!("not {}", reference(r, 'i')),
        Body::And(a, c) => format!("{} and {}", reference(a, 'i'), reference(c, 'i')),
        Body::True => "true".to_string(),
        Body::Positional(rel) => format!("pos mod({},{})(i)", rel.modulus, rel.residue),
        Body::Compare { op, lhs, rhs } => {
            format!("{} {} {}", operand(lhs), op.symbol(), operand(rhs))
        }
        Body::Count { mask, pred } => {
            let m = match mask {
                Mask::All => "j<=i".to_string(),
                Mask::Strict => "j<i".to_string(),
                Mask::Local(rel) if rel.offsets.len() == 1 => {
                    format!("j<=i, j=={}", offset(*rel.offsets.iter().next().unwrap()))
                }
                Mask::Local(rel) => {
                    // descending offsets read naturally: {i, i-1, i-2}
                    let offs: Vec<String> = rel.offsets.iter().rev().map(|c| offset(*c)).collect();
                    format!("j<=i, j in {{{}}}", offs.join(", "))
                }
            };
            format!("count[{m}] {}", reference(pred, 'j'))
        }
        Body::Conditional {
            cond,
            then,
            otherwise,
        } => format!(
            "if {} then {} else {}",
            reference(cond, 'i'),
            reference(then, 'i'),
            reference(otherwise, 'i')
        ),
        Body::Add(a, c) => format!("{} + {}", reference(a, 'i'), reference(c, 'i')),
        Body::Sub(a, c) => format!("{} - {}", reference(a, 'i'), reference(c, 'i')),
        Body::One => "1".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn local_and_positional_syntax() {
        let p = parse(
            "program s over {a,b} { C(i) := count[j<=i, j==i-1] Q_a(j); P(i) := pos mod(2,0)(i); \
             D(i) := count[j<=i, j in {i-2, i-1}] Q_b(j); T(i) := 1 <= C(i); }",
        )
        .unwrap();
        let text = print(&p);
        assert!(text.contains("count[j<=i, j==i-1]"), "{text}");
        assert!(text.contains("pos mod(2,0)"), "{text}");
        assert!(text.contains("j in {i-1, i-2}"), "{text}");
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn awkward_symbols_round_trip() {
        let p = parse(
            r##"program s over {"(", ")", "#", "a b", "\"", "Q_x", 007, if} {
                 A(i) := Q_"("(i); B(i) := Q_"#"(i); C(i) := Q_007(i); D(i) := Q_if(i);
                 E(i) := Q_Q_x(i); F(i) := Q_"a b"(i); G(i) := Q_"\""(i);
                 predict "#" -> A, "\"" -> G;
               }"##,
        )
        .unwrap();
        let text = print(&p);
        assert_eq!(parse(&text).unwrap(), p, "{text}");
    }
}
