use std::collections::{BTreeSet, HashMap};

use super::{Body, DslError, Location, Mask, Program, Ref, Sort};

/// Words that may not be used as operation or program names.
pub const KEYWORDS: &[&str] = &[
    "program", "over", "not", "and", "true", "pos", "mod", "count", "if", "then", "else", "accept",
    "accepts", "predict", "empty", "in", "i", "j",
];

/// Operation names are identifiers that are not keywords and do not start
/// with `Q_` (reserved for token predicates).
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with("Q_")
        && !KEYWORDS.contains(&name)
}

pub(crate) fn validate(p: &Program) -> Result<(), DslError> {
    validate_located(p, &[])
}

/// Validates `p`; `locs[k]`, when present, is the source location of op `k`.
pub(crate) fn validate_located(p: &Program, locs: &[Location]) -> Result<(), DslError> {
    if !is_valid_name(&p.name) {
        return Err(DslError::InvalidName {
            name: p.name.clone(),
            at: None,
        });
    }
    let mut sorts: HashMap<&str, Sort> = HashMap::new();
    for (k, op) in p.ops.iter().enumerate() {
        let at = locs.get(k).copied();
        if !is_valid_name(&op.name) {
            return Err(DslError::InvalidName {
                name: op.name.clone(),
                at,
            });
        }
        if sorts.contains_key(op.name.as_str()) {
            return Err(DslError::DuplicateName {
                op: op.name.clone(),
                at,
            });
        }
        match &op.body {
            Body::Initial(s) if !p.alphabet.contains(s) => {
                return Err(DslError::UnknownReference {
                    op: op.name.clone(),
                    reference: format!("Q_{s}"),
                    at,
                });
            }
            Body::Positional(rel) if !rel.is_valid() => {
                return Err(DslError::InvalidRelation {
                    op: op.name.clone(),
                    reason: format!(
                        "mod({},{}) needs modulus >= 1 and residue below it",
                        rel.modulus, rel.residue
                    ),
                    at,
                });
            }
            Body::Count {
                mask: Mask::Local(rel),
                ..
            } if rel.offsets.is_empty() => {
                return Err(DslError::InvalidRelation {
                    op: op.name.clone(),
                    reason: "local relation needs at least one offset".into(),
                    at,
                });
            }
            _ => {}
        }
        for (r, want) in op.body.refs() {
            match r {
                Ref::Token(s) => {
                    if !p.alphabet.contains(s) {
                        return Err(DslError::UnknownReference {
                            op: op.name.clone(),
                            reference: format!("Q_{s}"),
                            at,
                        });
                    }
                    if want != Sort::Bool {
                        return Err(DslError::Sort {
                            op: op.name.clone(),
                            expected: want,
                            found: Sort::Bool,
                            at,
                        });
                    }
                }
                Ref::Op(name) => match sorts.get(name.as_str()) {
                    None => {
                        return Err(DslError::UnknownReference {
                            op: op.name.clone(),
                            reference: name.clone(),
                            at,
                        })
                    }
                    Some(&found) if found != want => {
                        return Err(DslError::Sort {
                            op: op.name.clone(),
                            expected: want,
                            found,
                            at,
                        })
                    }
                    Some(_) => {}
                },
            }
        }
        sorts.insert(&op.name, op.sort());
    }
    if !sorts.values().any(|s| *s == Sort::Bool) {
        return Err(DslError::NoBooleanOp);
    }
    if let Some(a) = &p.accept {
        match sorts.get(a.as_str()) {
            None => {
                return Err(DslError::InvalidAccept {
                    name: a.clone(),
                    reason: "no such operation".into(),
                })
            }
            Some(Sort::Count) => {
                return Err(DslError::InvalidAccept {
                    name: a.clone(),
                    reason: "must be a Boolean operation".into(),
                })
            }
            Some(Sort::Bool) => {}
        }
    }
    if let Some(pred) = &p.predict {
        if pred.is_empty() {
            return Err(DslError::InvalidPredict {
                symbol: String::new(),
                reason: "predict declaration lists no symbols".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for (sym, target) in pred {
            let fail = |reason: &str| {
                Err(DslError::InvalidPredict {
                    symbol: sym.clone(),
                    reason: reason.to_string(),
                })
            };
            if !p.alphabet.contains(sym) {
                return fail("symbol is not in the alphabet");
            }
            if !seen.insert(sym.as_str()) {
                return fail("symbol listed twice");
            }
            match sorts.get(target.as_str()) {
                None => return fail(&format!("unknown operation `{target}`")),
                Some(Sort::Count) => return fail(&format!("`{target}` is not Boolean")),
                Some(Sort::Bool) => {}
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{Alphabet, CmpOp, Operand, Operation, PeriodicRelation};

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn count_a() -> Operation {
        Operation::new(
            "C",
            Body::Count {
                mask: Mask::All,
                pred: Ref::token("a"),
            },
        )
    }

    #[test]
    fn names() {
        assert!(is_valid_name("C_a1"));
        assert!(is_valid_name("_x"));
        assert!(!is_valid_name("Q_a"));
        assert!(!is_valid_name("1x"));
        assert!(!is_valid_name("count"));
        assert!(!is_valid_name(""));
    }

    #[test]
    fn forward_reference_rejected() {
        let ops = vec![
            Operation::new(
                "P",
                Body::Compare {
                    op: CmpOp::Le,
                    lhs: Operand::Ref(Ref::op("C")),
                    rhs: Operand::Lit(1),
                },
            ),
            count_a(),
        ];
        let e = Program::new("t", ab(), ops, None, None, false).unwrap_err();
        assert!(matches!(e, DslError::UnknownReference { .. }), "{e}");
    }

    #[test]
    fn sort_mismatch_rejected() {
        let ops = vec![count_a(), Operation::new("N", Body::Not(Ref::op("C")))];
        let e = Program::new("t", ab(), ops, None, None, false).unwrap_err();
        assert!(
            matches!(
                e,
                DslError::Sort {
                    expected: Sort::Bool,
                    found: Sort::Count,
                    ..
                }
            ),
            "{e}"
        );
    }

    #[test]
    fn needs_boolean_and_valid_accept() {
        let e = Program::new("t", ab(), vec![count_a()], None, None, false).unwrap_err();
        assert_eq!(e, DslError::NoBooleanOp);
        let ops = vec![count_a(), Operation::new("T", Body::True)];
        let e = Program::new("t", ab(), ops.clone(), Some("C".into()), None, false).unwrap_err();
        assert!(matches!(e, DslError::InvalidAccept { .. }));
        let e = Program::new(
            "t",
            ab(),
            ops,
            None,
            Some(vec![("z".into(), "T".into())]),
            false,
        )
        .unwrap_err();
        assert!(matches!(e, DslError::InvalidPredict { .. }));
    }

    #[test]
    fn bad_modulus_and_duplicate() {
        let ops = vec![Operation::new(
            "P",
            Body::Positional(PeriodicRelation {
                modulus: 2,
                residue: 2,
            }),
        )];
        let e = Program::new("t", ab(), ops, None, None, false).unwrap_err();
        assert!(matches!(e, DslError::InvalidRelation { .. }));
        let ops = vec![Operation::new("T", Body::True), Operation::new("T", Body::True)];
        let e = Program::new("t", ab(), ops, None, None, false).unwrap_err();
        assert!(matches!(e, DslError::DuplicateName { .. }));
    }

    #[test]
    fn reserved_symbol() {
        let e: DslError = Alphabet::new(["a", "$"]).unwrap_err().into();
        assert_eq!(e, DslError::ReservedSymbol("$".into()));
    }
}
