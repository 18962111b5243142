use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{uses_positional, Flag, ManifestRow};
use crate::dsl::Program;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRow {
    pub row: String,
    pub plain: Flag,
    pub periodic_local: Flag,
    pub program: Option<String>,
    /// Whether the program uses periodic positions or local counts.
    pub positional: Option<bool>,
    pub pass: bool,
    pub detail: String,
}

/// Cross-checks every manifest row against the library: programs exist
/// exactly where a construction is claimed, use positional constructs exactly
/// where the plain fragment does not suffice, and are absent for proven
/// impossibilities.
pub fn audit_expressiveness(manifest: &[ManifestRow], lib: &BTreeMap<String, Program>) -> Vec<AuditRow> {
    manifest
        .iter()
        .map(|r| {
            let prog = r.program.as_ref().and_then(|n| lib.get(n));
            let positional = prog.map(uses_positional);
            let claimed_elsewhere = r.language.as_ref().is_some_and(|l| {
                manifest
                    .iter()
                    .any(|o| o.language.as_ref() == Some(l) && o.program.as_ref().is_some_and(|n| lib.contains_key(n)))
            });
            let (pass, detail) = match (r.plain, r.periodic_local) {
                (_, Flag::No) => {
                    let absent = r.program.is_none() && !claimed_elsewhere;
                    (absent, if absent { "no program, as required" } else { "a program exists for an impossible row" })
                }
                (Flag::Yes, _) => match positional {
                    Some(false) => (true, "program uses no positional constructs"),
                    Some(true) => (false, "program uses positional constructs"),
                    None => (false, "program missing"),
                },
                (Flag::No | Flag::NoneFound, Flag::Yes) => match positional {
                    Some(true) => (true, "program uses positional constructs"),
                    Some(false) => (false, "program should need positional constructs"),
                    None => (false, "program missing"),
                },
                _ => match positional {
                    Some(_) => (true, "library program"),
                    None => (false, "program missing"),
                },
            };
            AuditRow {
                row: r.row.clone(),
                plain: r.plain,
                periodic_local: r.periodic_local,
                program: r.program.clone(),
                positional,
                pass,
                detail: detail.to_string(),
            }
        })
        .collect()
}
