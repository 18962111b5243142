use std::collections::BTreeSet;

use super::lexer::{lex, Pos, Spanned, Tok};
use super::validate::validate_located;
use super::{
    Alphabet, Body, CmpOp, DslError, LocalRelation, Location, Mask, Operand, Operation,
    PeriodicRelation, Program, Ref,
};

/// Parses and validates a program in the `.crasp` text format.
pub fn parse(src: &str) -> Result<Program, DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    p.program()
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

type PResult<T> = Result<T, DslError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> PResult<T> {
        let pos = self.pos();
        Err(DslError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: format!("{expected}, found {}", self.peek().describe()),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn punct(&mut self, p: &str) -> PResult<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("`{p}`"))
        }
    }

    fn kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(w) if !super::KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => self.fail(what),
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek() {
            Tok::Num(n) => match n.parse::<u64>() {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => self.fail("an integer that fits in 64 bits"),
            },
            _ => self.fail("an integer"),
        }
    }

    fn symbol(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) | Tok::Num(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("a symbol"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        self.kw("program")?;
        let name = self.ident("a program name")?;
        self.kw("over")?;
        self.punct("{")?;
        let mut symbols = vec![self.symbol()?];
        while self.is_punct(",") {
            self.bump();
            symbols.push(self.symbol()?);
        }
        self.punct("}")?;
        let alphabet = Alphabet::new(symbols)?;
        self.punct("{")?;

        let mut ops = Vec::new();
        let mut locs = Vec::new();
        let mut accept = None;
        let mut predict: Option<Vec<(String, String)>> = None;
        let mut empty_accepts = false;
        let mut seen_empty = false;

        while !self.is_punct("}") {
            let start = self.pos();
            if self.is_kw("accept") {
                self.bump();
                if accept.is_some() {
                    return Err(dup(start, "accept"));
                }
                accept = Some(self.ident("an operation name")?);
                self.punct(";")?;
            } else if self.is_kw("predict") {
                self.bump();
                if predict.is_some() {
                    return Err(dup(start, "predict"));
                }
                let mut entries = Vec::new();
                loop {
                    let sym = self.symbol()?;
                    self.punct("->")?;
                    entries.push((sym, self.ident("an operation name")?));
                    if self.is_punct(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.punct(";")?;
                predict = Some(entries);
            } else if self.is_kw("empty") {
                self.bump();
                self.kw("accepts")?;
                self.punct(";")?;
                if seen_empty {
                    return Err(dup(start, "empty accepts"));
                }
                seen_empty = true;
                empty_accepts = true;
            } else {
                let name = self.ident("an operation name or `}`")?;
                self.punct("(")?;
                self.kw("i")?;
                self.punct(")")?;
                self.punct(":=")?;
                let body = self.expr()?;
                self.punct(";")?;
                ops.push(Operation::new(name, body));
                locs.push(Location {
                    line: start.line,
                    col: start.col,
                });
            }
        }
        self.punct("}")?;
        if *self.peek() != Tok::Eof {
            return self.fail("end of input");
        }
        let prog = Program {
            name,
            alphabet,
            ops,
            accept,
            predict,
            empty_accepts,
        };
        validate_located(&prog, &locs)?;
        Ok(prog)
    }

    /// `X(var)` where X is an op name or `Q_σ`.
    fn reference(&mut self, var: &str) -> PResult<Ref> {
        let r = match self.peek().clone() {
            Tok::Initial(s) => {
                self.bump();
                Ref::Token(s)
            }
            Tok::Ident(w) if !super::KEYWORDS.contains(&w.as_str()) => {
                self.bump();
                Ref::Op(w)
            }
            _ => return self.fail("a reference"),
        };
        self.punct("(")?;
        self.kw(var)?;
        self.punct(")")?;
        Ok(r)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Tok::Punct("<=") => Some(CmpOp::Le),
            Tok::Punct(">=") => Some(CmpOp::Ge),
            Tok::Punct("=") => Some(CmpOp::Eq),
            Tok::Punct("<") => Some(CmpOp::Lt),
            _ => None,
        }
    }

    fn operand(&mut self) -> PResult<Operand> {
        if let Tok::Num(_) = self.peek() {
            Ok(Operand::Lit(self.int()?))
        } else {
            Ok(Operand::Ref(self.reference("i")?))
        }
    }

    fn expr(&mut self) -> PResult<Body> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Body::Not(self.reference("i")?));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(Body::True);
        }
        if self.is_kw("pos") {
            self.bump();
            self.kw("mod")?;
            self.punct("(")?;
            let m = self.small_int()?;
            self.punct(",")?;
            let r = self.small_int()?;
            self.punct(")")?;
            self.punct("(")?;
            self.kw("i")?;
            self.punct(")")?;
            return Ok(Body::Positional(PeriodicRelation {
                modulus: m,
                residue: r,
            }));
        }
        if self.is_kw("count") {
            self.bump();
            self.punct("[")?;
            let mask = self.mask()?;
            self.punct("]")?;
            let pred = self.reference("j")?;
            return Ok(Body::Count { mask, pred });
        }
        if self.is_kw("if") {
            self.bump();
            let cond = self.reference("i")?;
            self.kw("then")?;
            let then = self.reference("i")?;
            self.kw("else")?;
            let otherwise = self.reference("i")?;
            return Ok(Body::Conditional {
                cond,
                then,
                otherwise,
            });
        }
        if let Tok::Num(n) = self.peek() {
            if n == "1" && *self.peek2() == Tok::Punct(";") {
                self.bump();
                return Ok(Body::One);
            }
            let lhs = self.operand()?;
            return self.compare_rest(lhs);
        }
        let lhs = self.reference("i")?;
        if self.cmp_op().is_some() {
            return self.compare_rest(Operand::Ref(lhs));
        }
        if self.is_kw("and") {
            self.bump();
            return Ok(Body::And(lhs, self.reference("i")?));
        }
        if self.is_punct("+") {
            self.bump();
            return Ok(Body::Add(lhs, self.reference("i")?));
        }
        if self.is_punct("-") {
            self.bump();
            return Ok(Body::Sub(lhs, self.reference("i")?));
        }
        match lhs {
            Ref::Token(s) if self.is_punct(";") => Ok(Body::Initial(s)),
            _ => self.fail("`and`, `+`, `-` or a comparison"),
        }
    }

    fn small_int(&mut self) -> PResult<u32> {
        let pos = self.pos();
        let n = self.int()?;
        u32::try_from(n).map_err(|_| DslError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: "an integer below 2^32".into(),
        })
    }

    fn compare_rest(&mut self, lhs: Operand) -> PResult<Body> {
        let op = match self.cmp_op() {
            Some(op) => op,
            None => return self.fail("a comparison operator"),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(Body::Compare { op, lhs, rhs })
    }

    fn mask(&mut self) -> PResult<Mask> {
        self.kw("j")?;
        if self.is_punct("<") {
            self.bump();
            self.kw("i")?;
            return Ok(Mask::Strict);
        }
        self.punct("<=")?;
        self.kw("i")?;
        if !self.is_punct(",") {
            return Ok(Mask::All);
        }
        self.bump();
        self.kw("j")?;
        if self.is_punct("==") {
            self.bump();
            return Ok(Mask::Local(LocalRelation::single(self.offset()?)));
        }
        self.kw("in")?;
        self.punct("{")?;
        let mut offsets = BTreeSet::from([self.offset()?]);
        while self.is_punct(",") {
            self.bump();
            offsets.insert(self.offset()?);
        }
        self.punct("}")?;
        Ok(Mask::Local(LocalRelation { offsets }))
    }

    /// `i`, `i-c` or `i+c`; returns `j - i`.
    fn offset(&mut self) -> PResult<i64> {
        self.kw("i")?;
        let sign = if self.is_punct("-") {
            -1
        } else if self.is_punct("+") {
            1
        } else {
            return Ok(0);
        };
        self.bump();
        let pos = self.pos();
        let c = self.int()?;
        let c = i64::try_from(c).map_err(|_| DslError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: "a smaller offset".into(),
        })?;
        Ok(sign * c)
    }
}

fn dup(pos: Pos, what: &str) -> DslError {
    DslError::Syntax {
        line: pos.line,
        col: pos.col,
        expected: format!("at most one `{what}` declaration"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Sort;

    const MAJ: &str = "program maj over {0,1} { C1(i) := count[j<=i] Q_1(j); C0(i) := count[j<=i] Q_0(j); M(i) := C0(i) <= C1(i); }";

    #[test]
    fn majority_example() {
        let p = parse(MAJ).unwrap();
        assert_eq!(p.ops().len(), 3);
        assert_eq!(p.accept_op(), "M");
        assert_eq!(p.alphabet().symbols(), ["0", "1"]);
    }

    #[test]
    fn undefined_reference() {
        let e = parse("program bad over {a} { P(i) := C(i) <= C(i); }").unwrap_err();
        assert!(matches!(e, DslError::UnknownReference { .. }), "{e}");
        assert_eq!(e.location(), Some(Location { line: 1, col: 24 }));
    }

    #[test]
    fn sort_error_has_location() {
        let src = "program bad over {a} {\n  C(i) := count[j<=i] Q_a(j);\n  N(i) := not C(i);\n}";
        let e = parse(src).unwrap_err();
        assert!(matches!(e, DslError::Sort { .. }));
        assert_eq!(e.location(), Some(Location { line: 3, col: 3 }));
        assert!(e.to_string().starts_with("3:3:"));
    }

    #[test]
    fn reserved_dollar() {
        let e = parse(r#"program x over {a, "$"} { T(i) := true; }"#).unwrap_err();
        assert_eq!(e, DslError::ReservedSymbol("$".into()));
    }

    #[test]
    fn every_construct() {
        let src = r#"
            program every over {a, "(", 7} {
              A(i) := Q_a(i);
              N(i) := not Q_"("(i);
              B(i) := A(i) and N(i);
              T(i) := true;
              P(i) := pos mod(3,1)(i);
              C(i) := count[j<=i] A(j);
              S(i) := count[j<i] Q_7(j);
              L(i) := count[j<=i, j==i-2] B(j);
              M(i) := count[j<=i, j in {i-1, i, i+3}] A(j);
              O(i) := 1;
              D(i) := if P(i) then C(i) else O(i);
              E(i) := C(i) + S(i);
              F(i) := E(i) - L(i);
              G(i) := 2 < F(i);
              H(i) := F(i) >= 0;
              K(i) := C(i) = M(i);
              accept G;
              predict a -> G, 7 -> H;
              empty accepts;
            }"#;
        let p = parse(src).unwrap();
        assert_eq!(p.ops().len(), 16);
        assert_eq!(p.accept_op(), "G");
        assert!(p.empty_accepts());
        assert_eq!(p.predict().unwrap().len(), 2);
        assert_eq!(p.op("A").unwrap().body, Body::Initial("a".into()));
        assert_eq!(p.op("O").unwrap().sort(), Sort::Count);
        assert_eq!(
            p.op("M").unwrap().body,
            Body::Count {
                mask: Mask::Local(LocalRelation::new([-1, 0, 3])),
                pred: Ref::op("A")
            }
        );
        assert_eq!(p.locality_radius(), 2);
    }

    #[test]
    fn syntax_errors() {
        for src in [
            "",
            "program p over {} { T(i) := true; }",
            "program p over {a} { T(i) := true }",
            "program p over {a} { T(i) = true; }",
            "program p over {a} { T(i) := C(i); }",
            "program p over {a} { T(i) := true; accept T; accept T; }",
            "program p over {a} { T(i) := true; } extra",
            "program p over {a} { T(j) := true; }",
        ] {
            let e = parse(src).unwrap_err();
            assert!(
                matches!(e, DslError::Syntax { .. } | DslError::Alphabet(_)),
                "{src}: {e:?}"
            );
        }
    }
}
