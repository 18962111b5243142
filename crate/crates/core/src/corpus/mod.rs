//! Program library, language oracles, task generators and the manifest that
//! ties programs to the expressiveness claims they witness.

mod lang;
mod programs;
mod tasks;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dsl::{Body, Mask, Program};

pub use lang::{legal_next, membership, oracle, sample_member, ClosedForm, Dfa, LanguageOracle, Recognizer, LANGUAGE_IDS};
pub use programs::{
    a_to_e, binary_majority, binary_majority_interleave, copy_unique, dyck_depth, induction_all,
    induction_argmax, letters26, majority_task, numeric_alphabet, piecewise, sort_program,
    tomita7, SOURCES,
};
pub use tasks::{gen_task, TaskId, TaskInstance, VOCAB};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error("symbol `{0}` is not in the language alphabet")]
    SymbolNotInAlphabet(String),
    #[error("{task}: LEN {len} is below the minimum {min}")]
    LenBelowMinimum { task: String, len: usize, min: usize },
    #[error("{task}: LEN {len} {reason}")]
    InvalidLength { task: String, len: usize, reason: String },
}

/// Vocabulary size of the stdlib SORT and COPY_UNIQUE instances. The task
/// generators use [`VOCAB`]; the builders accept any size.
pub const SMALL_VOCAB: usize = 8;

/// Every library program by name.
pub fn stdlib() -> BTreeMap<String, Program> {
    let mut m = BTreeMap::new();
    for (name, _) in SOURCES {
        m.insert(name.to_string(), programs::parsed(name));
    }
    let abc = ["a", "b", "c"];
    let letters = letters26();
    let letters: Vec<&str> = letters.iter().map(String::as_str).collect();
    let built = [
        piecewise("PIECEWISE_ABA", &["a", "b"], &["a", "b", "a"]),
        tomita7(),
        dyck_depth("D2", 2),
        dyck_depth("D3", 3),
        dyck_depth("D4", 4),
        dyck_depth("D12", 12),
        a_to_e(),
        induction_all("INDUCTION_ALL", &abc),
        induction_argmax("INDUCTION_ARGMAX", &abc),
        binary_majority(),
        binary_majority_interleave(),
        majority_task(&letters),
        sort_program(SMALL_VOCAB),
        copy_unique(SMALL_VOCAB),
    ];
    for p in built {
        m.insert(p.name().to_string(), p);
    }
    m
}

pub fn program(name: &str) -> Result<Program, CorpusError> {
    stdlib().remove(name).ok_or_else(|| CorpusError::UnknownProgram(name.to_string()))
}

/// One column entry of the expressiveness tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Yes,
    No,
    NoneFound,
    /// Not part of either table; only the program's own constructs are reported.
    Unlisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Language,
    Task,
    Library,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestRow {
    pub row: String,
    pub kind: RowKind,
    /// C-RASP without positional relations.
    pub plain: Flag,
    /// C-RASP with periodic and local relations.
    pub periodic_local: Flag,
    pub program: Option<String>,
    pub language: Option<String>,
    pub task: Option<TaskId>,
    pub note: Option<String>,
}

fn row(
    row: &str,
    kind: RowKind,
    flags: (Flag, Flag),
    program: Option<&str>,
    language: Option<&str>,
    task: Option<TaskId>,
) -> ManifestRow {
    ManifestRow {
        row: row.into(),
        kind,
        plain: flags.0,
        periodic_local: flags.1,
        program: program.map(Into::into),
        language: language.map(Into::into),
        task,
        note: None,
    }
}

/// Rows of both expressiveness tables plus the library-only programs.
pub fn manifest() -> Vec<ManifestRow> {
    use Flag::*;
    use RowKind::*;
    let lang = |name: &str, f, p: Option<&str>, l: &str| row(name, Language, f, p, Some(l), None);
    let task = |name: &str, f, p: Option<&str>, t| row(name, Task, f, p, None, Some(t));
    let lib = |p: &str, l: Option<&str>| row(p, Library, (Unlisted, Unlisted), Some(p), l, None);
    let mut rows = vec![
        lang("Tomita 1", (Yes, Yes), Some("TOMITA1"), "tomita1"),
        lang("Tomita 2", (Yes, Yes), Some("TOMITA2"), "tomita2"),
        lang("Tomita 3", (No, No), None, "tomita3"),
        lang("Tomita 4", (No, Yes), Some("TOMITA4"), "tomita4"),
        lang("Tomita 5", (No, No), None, "tomita5"),
        lang("Tomita 6", (No, No), None, "tomita6"),
        lang("Tomita 7", (Yes, Yes), Some("TOMITA7"), "tomita7"),
        lang("D2", (Yes, Yes), Some("D2"), "d2"),
        lang("D3", (Yes, Yes), Some("D3"), "d3"),
        lang("D4", (Yes, Yes), Some("D4"), "d4"),
        lang("D12", (Yes, Yes), Some("D12"), "d12"),
        lang("PARITY", (No, No), None, "parity"),
        lang("(aa)*", (No, Yes), Some("AA_STAR"), "aa_star"),
        lang("(aaaa)*", (No, Yes), Some("AAAA_STAR"), "aaaa_star"),
        lang("(abab)*", (No, Yes), Some("ABAB_STAR"), "abab_star"),
        lang("aa*bb*cc*dd*ee*", (Yes, Yes), Some("A_TO_E"), "a_to_e"),
        lang("{a,b}*d{b,c}*", (Yes, Yes), Some("AB_D_BC"), "ab_d_bc"),
        lang("{0,1,2}*02*", (No, No), None, "zero_two"),
        task("Binary Majority", (Yes, Yes), Some("BINARY_MAJORITY"), TaskId::BinaryMajority),
        task(
            "Binary Majority Interleave",
            (NoneFound, Yes),
            Some("BMI"),
            TaskId::BinaryMajorityInterleave,
        ),
        task("Majority", (Yes, Yes), Some("MAJORITY_TASK"), TaskId::Majority),
        task("Sort", (Yes, Yes), Some("SORT"), TaskId::Sort),
        task("Copy (unique)", (No, Yes), Some("COPY_UNIQUE"), TaskId::CopyUnique),
        task("Copy (repeat)", (No, No), None, TaskId::CopyRepeat),
        task("Parity", (No, No), None, TaskId::Parity),
        task("Addition", (No, No), None, TaskId::Addition),
        lib("MAJORITY", Some("majority")),
        lib("DYCK1", Some("dyck1")),
        lib("ANBNCN", Some("anbncn")),
        lib("EXISTS_A", Some("contains_a")),
        lib("PIECEWISE_ABA", Some("subseq_aba")),
        lib("SUBSTRING_AB", Some("substring_ab")),
        lib("INDUCTION_ALL", None),
        lib("INDUCTION_ARGMAX", None),
    ];
    rows[2].note = Some(
        "automaton follows the standard Tomita-3 reading: no odd run of 1s directly followed by an odd run of 0s".into(),
    );
    rows[16].note = Some("alphabet {a,b,c,d}; d occurs exactly once".into());
    rows
}

/// Whether the program uses periodic positions or local counts.
pub fn uses_positional(p: &Program) -> bool {
    p.ops().iter().any(|o| {
        matches!(o.body, Body::Positional(_)) || matches!(o.body, Body::Count { mask: Mask::Local(_), .. })
    })
}

/// `(program, language id)` for every program that decides a language.
pub fn language_claims() -> Vec<(String, String)> {
    manifest()
        .into_iter()
        .filter_map(|r| Some((r.program?, r.language?)))
        .collect()
}

/// Pretty JSON manifest with a trailing newline.
pub fn manifest_json() -> String {
    let mut s = serde_json::to_string_pretty(&manifest()).expect("manifest serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, print};
    use crate::interp::{accepts_ids, Machine};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Interpreter acceptance on every word up to `max`, walking the word
    /// tree depth-first so each prefix is stepped once.
    fn exhaustive(p: &Program, o: &LanguageOracle, max: usize) -> usize {
        let k = p.alphabet().len();
        let map: Vec<usize> = p
            .alphabet()
            .symbols()
            .iter()
            .map(|s| o.alphabet.iter().position(|a| a == s).unwrap())
            .collect();
        let mut checked = 0;
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        let mut m = Machine::new(p);
        while let Some(w) = stack.pop() {
            let got = accepts_ids(&mut m, p, &w);
            let ow: Vec<&str> = w.iter().map(|&a| o.alphabet[map[a]].as_str()).collect();
            assert_eq!(got, membership(o, &ow).unwrap(), "{} on {:?}", p.name(), ow);
            checked += 1;
            if w.len() < max {
                for a in 0..k {
                    let mut v = w.clone();
                    v.push(a);
                    stack.push(v);
                }
            }
        }
        checked
    }

    #[test]
    fn stdlib_agrees_with_oracles_exhaustively() {
        let lib = stdlib();
        for (prog, lang) in language_claims() {
            let p = &lib[&prog];
            let o = oracle(&lang).unwrap();
            let max = if o.alphabet.len() <= 3 { 12 } else { 8 };
            assert!(exhaustive(p, &o, max) > 0);
        }
    }

    #[test]
    fn stdlib_agrees_with_oracles_on_long_strings() {
        let lib = stdlib();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (prog, lang) in language_claims() {
            let p = &lib[&prog];
            let o = oracle(&lang).unwrap();
            for len in [25, 50, 100, 150] {
                for _ in 0..50 {
                    let w: Vec<&str> = (0..len)
                        .map(|_| o.alphabet[rng.gen_range(0..o.alphabet.len())].as_str())
                        .collect();
                    assert_eq!(crate::interp::accepts(p, &w).unwrap(), membership(&o, &w).unwrap());
                }
                if let Some(d) = o.as_dfa() {
                    if let Some(ids) = d.sample_member(len, &mut rng) {
                        let w: Vec<&str> = ids.iter().map(|&a| o.alphabet[a].as_str()).collect();
                        assert!(crate::interp::accepts(p, &w).unwrap(), "{prog} positive sample");
                    }
                }
            }
        }
    }

    #[test]
    fn manifest_programs_exist_and_match_tiers() {
        let lib = stdlib();
        let rows = manifest();
        for r in &rows {
            if let Some(p) = &r.program {
                let p = &lib[p];
                match (r.plain, r.periodic_local) {
                    (Flag::Yes, _) => assert!(!uses_positional(p), "{}", r.row),
                    (Flag::No | Flag::NoneFound, Flag::Yes) => assert!(uses_positional(p), "{}", r.row),
                    _ => {}
                }
            }
            if r.periodic_local == Flag::No {
                assert!(r.program.is_none());
            }
            if let Some(l) = &r.language {
                assert!(oracle(l).is_ok());
            }
        }
        for name in lib.keys() {
            assert!(rows.iter().any(|r| r.program.as_deref() == Some(name)), "{name} not in manifest");
        }
        assert!(manifest_json().contains("\"Tomita 3\""));
    }

    #[test]
    fn tomita4_uses_two_step_lookback() {
        let p = &stdlib()["TOMITA4"];
        let offsets: Vec<Vec<i64>> = p
            .ops()
            .iter()
            .filter_map(|o| match &o.body {
                Body::Count { mask: Mask::Local(l), .. } => Some(l.offsets.iter().copied().collect::<Vec<_>>()),
                _ => None,
            })
            .collect();
        assert_eq!(offsets, [vec![-2, -1]]);
    }

    #[test]
    fn library_prints_and_reparses() {
        for (name, p) in stdlib() {
            assert_eq!(parse(&print(&p)).unwrap(), p, "{name}");
        }
    }
}
