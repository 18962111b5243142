use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    bin_report, check_equivalence, max_exhaustive_len, BinConfig, BinReport, EquivConfig,
    EquivalenceReport, HarnessError, SampleSpec, DEFAULT_CAP,
};
use crate::corpus::{language_claims, oracle, stdlib};
use crate::runtime::FixedPrecision;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Program names; empty means the whole library.
    pub programs: Vec<String>,
    /// `None`: 12 for two symbols, 10 for three, otherwise the largest bound under the cap.
    pub exhaustive_len: Option<usize>,
    pub samples: SampleSpec,
    pub channel_checks: usize,
    pub bins: Option<BinConfig>,
    pub cap: u64,
    pub precision: FixedPrecision,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            programs: Vec::new(),
            exhaustive_len: None,
            samples: SampleSpec::bins(100, 20, 0),
            channel_checks: 20,
            bins: Some(BinConfig { per_bin: 100, ..Default::default() }),
            cap: DEFAULT_CAP,
            precision: FixedPrecision::default(),
        }
    }
}

/// Exhaustive bound used when none is given.
pub fn default_exhaustive_len(symbols: usize, cap: u64) -> usize {
    let want = if symbols <= 2 { 12 } else { 10 };
    max_exhaustive_len(symbols, cap, want)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub equivalence: EquivalenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinReport>,
}

/// Reference used for bin reports, by program name.
pub fn references() -> BTreeMap<String, String> {
    let mut m: BTreeMap<String, String> = language_claims().into_iter().collect();
    m.insert("INDUCTION_ALL".into(), "induction_all".into());
    m.insert("INDUCTION_ARGMAX".into(), "induction_argmax".into());
    m
}

/// Equivalence (and, where a reference exists, bin accuracy) for each program.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteEntry>, HarnessError> {
    let lib = stdlib();
    let refs = references();
    let names: Vec<String> = if cfg.programs.is_empty() { lib.keys().cloned().collect() } else { cfg.programs.clone() };
    let mut out = Vec::new();
    for name in names {
        let p = lib.get(&name).ok_or_else(|| crate::corpus::CorpusError::UnknownProgram(name.clone()))?;
        let language = language_claims().into_iter().find(|(n, _)| *n == name).map(|(_, l)| l);
        let ecfg = EquivConfig {
            exhaustive_len: cfg.exhaustive_len.unwrap_or_else(|| default_exhaustive_len(p.alphabet().len(), cfg.cap)),
            samples: cfg.samples.clone(),
            channel_checks: cfg.channel_checks,
            cap: cfg.cap,
            precision: cfg.precision,
            oracle: language.map(|l| oracle(&l)).transpose()?,
        };
        let equivalence = check_equivalence(p, &ecfg)?;
        let bins = match (&cfg.bins, refs.get(&name)) {
            (Some(b), Some(r)) => Some(bin_report(p, r, &BinConfig { precision: cfg.precision, ..b.clone() })?),
            _ => None,
        };
        out.push(SuiteEntry { equivalence, bins });
    }
    Ok(out)
}

/// One JSON object per line.
pub fn json_lines(entries: &[SuiteEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("report serializes") + "\n")
        .collect()
}

/// `program,bin1,bin2,bin3,mismatches,max_count_err`; missing bins are empty.
pub fn csv_summary(entries: &[SuiteEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["program", "bin1", "bin2", "bin3", "mismatches", "max_count_err"]).unwrap();
    for e in entries {
        let mut rec = vec![e.equivalence.program.clone()];
        for k in 0..3 {
            let acc = e.bins.as_ref().and_then(|b| b.bins[k].accuracy);
            rec.push(acc.map(|a| a.to_string()).unwrap_or_default());
        }
        rec.push(e.equivalence.mismatches.to_string());
        rec.push(format!("{:e}", e.equivalence.max_count_err));
        w.write_record(&rec).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_outputs() {
        let cfg = SuiteConfig {
            programs: vec!["MAJORITY".into(), "BINARY_MAJORITY".into()],
            exhaustive_len: Some(6),
            samples: SampleSpec::bins(4, 2, 1),
            channel_checks: 2,
            bins: Some(BinConfig { per_bin: 4, ..Default::default() }),
            ..Default::default()
        };
        let entries = run_suite(&cfg).unwrap();
        assert!(entries.iter().all(|e| e.equivalence.passed()));
        let jl = json_lines(&entries);
        assert_eq!(jl.lines().count(), 2);
        let csv = csv_summary(&entries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "program,bin1,bin2,bin3,mismatches,max_count_err");
        assert!(lines[1].starts_with("MAJORITY,1,1,1,0,"));
        assert!(lines[2].starts_with("BINARY_MAJORITY,,,,0,"));
    }

    #[test]
    fn default_bounds() {
        assert_eq!(default_exhaustive_len(2, DEFAULT_CAP), 12);
        assert_eq!(default_exhaustive_len(3, DEFAULT_CAP), 10);
        assert_eq!(default_exhaustive_len(4, DEFAULT_CAP), 8);
    }
}
