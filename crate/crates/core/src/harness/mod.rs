//! Verification that compiled networks agree with the interpreter, per-bin
//! accuracy against oracles, and the expressiveness audit.
//!
//! Every sampled string is derived from `(seed, stream, length, index)`, so
//! results do not depend on evaluation order and any witness can be replayed.

mod audit;
mod bins;
mod report;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::compile::{check_channels, compile, CompileError, Compiled};
use crate::corpus::{sample_member, LanguageOracle};
use crate::dsl::Program;
use crate::interp::Machine;
use crate::runtime::{forward_final, FixedPrecision};

pub use audit::{audit_expressiveness, AuditRow};
pub use bins::{bin_report, induction_set, BinAccuracy, BinConfig, BinReport, Reference, BINS};
pub use report::{csv_summary, default_exhaustive_len, json_lines, references, run_suite, SuiteConfig, SuiteEntry};

/// Environment variable selecting the worker count.
pub const THREADS_ENV: &str = "CRASP_THREADS";

/// Default limit on the number of exhaustively enumerated strings.
pub const DEFAULT_CAP: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("{strings} strings up to length {len} exceed the cap of {cap}")]
    CapExceeded { len: usize, strings: u64, cap: u64 },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// Which strings to sample at which lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSpec {
    pub lengths: Vec<usize>,
    /// Uniform i.i.d. strings per length.
    pub uniform: usize,
    /// Oracle-sampled members per length (needs a positive sampler).
    pub positive: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn none() -> Self {
        Self { lengths: vec![], uniform: 0, positive: 0, seed: 0 }
    }

    /// `{25, 50, 100, 150}` with the given counts.
    pub fn bins(uniform: usize, positive: usize, seed: u64) -> Self {
        Self { lengths: vec![25, 50, 100, 150], uniform, positive, seed }
    }
}

#[derive(Debug, Clone)]
pub struct EquivConfig {
    pub exhaustive_len: usize,
    pub samples: SampleSpec,
    /// Number of sampled strings (taken in order) that also get a channel check.
    pub channel_checks: usize,
    pub cap: u64,
    pub precision: FixedPrecision,
    /// Source of positive samples.
    pub oracle: Option<LanguageOracle>,
}

impl Default for EquivConfig {
    fn default() -> Self {
        Self {
            exhaustive_len: 8,
            samples: SampleSpec::none(),
            channel_checks: 0,
            cap: DEFAULT_CAP,
            precision: FixedPrecision::default(),
            oracle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Exhaustive,
    Uniform,
    Positive,
}

/// A string on which the two sides disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub word: Vec<String>,
    pub source: Source,
    /// Seed that regenerates the word via [`sample_word`] (sampled strings only).
    pub seed: Option<u64>,
    pub interp_accepts: bool,
    pub net_accepts: bool,
    /// First position whose predicted sets differ.
    pub predict_position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthCount {
    pub len: usize,
    pub uniform: usize,
    pub positive: usize,
    pub mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub program: String,
    pub exhaustive_len: usize,
    pub exhaustive_strings: u64,
    pub sampled: Vec<LengthCount>,
    /// Strings where acceptance or any predicted set differs.
    pub mismatches: u64,
    /// At most [`MAX_WITNESSES`], in enumeration order.
    pub witnesses: Vec<Witness>,
    pub channel_checks: usize,
    pub max_bool_err: f64,
    pub max_count_err: f64,
    pub layers: usize,
    pub channels: usize,
    /// Wall-clock time; left out of serialized output unless set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }

    /// Bool error 0 and count error within `2^(2-p)`.
    pub fn channels_ok(&self, fp: FixedPrecision) -> bool {
        self.max_bool_err == 0.0 && self.max_count_err <= (2.0f64).powi(2 - fp.bits() as i32)
    }
}

pub const MAX_WITNESSES: usize = 10;

/// Deterministic per-string seed.
pub fn derive_seed(seed: u64, stream: u64, len: usize, index: usize) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (len as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (index as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform i.i.d. word of alphabet indices.
pub fn sample_word(k: usize, len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(0..k)).collect()
}

/// Runs `f` on a pool with the configured number of workers
/// (`CRASP_THREADS`, default all cores).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let n = threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Number of words of length `0..=len` over `k` symbols, saturating.
pub fn count_words(k: usize, len: usize) -> u64 {
    let mut total: u64 = 0;
    let mut pow: u64 = 1;
    for _ in 0..=len {
        total = total.saturating_add(pow);
        pow = pow.saturating_mul(k as u64);
    }
    total
}

/// Largest bound whose exhaustive enumeration fits in `cap`.
pub fn max_exhaustive_len(k: usize, cap: u64, limit: usize) -> usize {
    (0..=limit).rev().find(|&l| count_words(k, l) <= cap).unwrap_or(0)
}

/// The `index`-th word in length-lexicographic order.
fn nth_word(k: usize, mut index: u64) -> Vec<usize> {
    let mut len = 0;
    let mut block = 1u64;
    while index >= block {
        index -= block;
        len += 1;
        block *= k as u64;
    }
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = (index % k as u64) as usize;
        index /= k as u64;
    }
    w
}

/// Outcome of comparing both sides on one word.
struct Outcome {
    interp: bool,
    net: bool,
    predict_position: Option<usize>,
}

impl Outcome {
    fn agrees(&self) -> bool {
        self.interp == self.net && self.predict_position.is_none()
    }
}

/// Both sides of a comparison with their symbol maps.
struct Sides<'a> {
    p: &'a Program,
    c: &'a Compiled,
    /// `net_ids[0]` is the start token, `net_ids[a + 1]` the symbol with program index `a`.
    net_ids: Vec<usize>,
    /// Program alphabet index of each labelled network output.
    labels: Vec<usize>,
}

impl<'a> Sides<'a> {
    fn new(p: &'a Program, c: &'a Compiled) -> Self {
        let net = &c.net;
        let mut net_ids = vec![net.symbol_index(crate::dsl::SOS).expect("start token")];
        net_ids.extend(p.alphabet().symbols().iter().map(|s| net.symbol_index(s).expect("symbol in net")));
        let labels = net.output_labels[..net.out_dim() - 1]
            .iter()
            .map(|s| p.alphabet().index_of(s).expect("label in alphabet"))
            .collect();
        Self { p, c, net_ids, labels }
    }

    /// Compares acceptance and, for predict programs, the predicted set at
    /// every position. `ids` are program alphabet indices.
    fn compare(&self, m: &mut Machine, ids: &[usize]) -> Outcome {
        let net = &self.c.net;
        if ids.is_empty() {
            return Outcome { interp: self.p.empty_accepts(), net: net.empty_accepts, predict_position: None };
        }
        let mut x = Vec::with_capacity(ids.len() + 1);
        x.push(self.net_ids[0]);
        x.extend(ids.iter().map(|&a| self.net_ids[a + 1]));
        let (_, lg, _) = forward_final(net, &x, 0);
        m.reset();
        let mut predict_position = None;
        for (t, &a) in ids.iter().enumerate() {
            m.step(a);
            if !self.labels.is_empty() && predict_position.is_none() {
                let want = m.predicted().unwrap();
                let row = &lg[t + 1];
                let mut got: Vec<usize> =
                    self.labels.iter().enumerate().filter(|(o, _)| row[*o] > 0.0).map(|(_, &s)| s).collect();
                got.sort_unstable();
                if got != want {
                    predict_position = Some(t + 1);
                }
            }
        }
        Outcome {
            interp: m.accepting(),
            net: *lg.last().unwrap().last().unwrap() > 0.0,
            predict_position,
        }
    }
}

/// Compiles `p` and compares it against the interpreter.
pub fn check_equivalence(p: &Program, cfg: &EquivConfig) -> Result<EquivalenceReport, HarnessError> {
    let c = compile(p, cfg.precision)?;
    check_compiled(p, &c, cfg)
}

/// [`check_equivalence`] on an already compiled (possibly modified) network.
pub fn check_compiled(p: &Program, c: &Compiled, cfg: &EquivConfig) -> Result<EquivalenceReport, HarnessError> {
    let start = Instant::now();
    let k = p.alphabet().len();
    let strings = count_words(k, cfg.exhaustive_len);
    if strings > cfg.cap {
        return Err(HarnessError::CapExceeded { len: cfg.exhaustive_len, strings, cap: cfg.cap });
    }
    let symbols = p.alphabet().symbols();
    let sides = Sides::new(p, c);

    let witness = |ids: &[usize], o: &Outcome, source, seed| Witness {
        word: ids.iter().map(|&a| symbols[a].clone()).collect(),
        source,
        seed,
        interp_accepts: o.interp,
        net_accepts: o.net,
        predict_position: o.predict_position,
    };

    // exhaustive part, in chunks so each worker reuses one machine
    const CHUNK: u64 = 512;
    let chunks: Vec<(u64, u64)> = (0..strings.div_ceil(CHUNK))
        .map(|b| (b * CHUNK, ((b + 1) * CHUNK).min(strings)))
        .collect();
    let exhaustive: Vec<(u64, Vec<Witness>)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut m = Machine::new(p);
            let mut bad = 0;
            let mut ws = Vec::new();
            for i in lo..hi {
                let ids = nth_word(k, i);
                let o = sides.compare(&mut m, &ids);
                if !o.agrees() {
                    bad += 1;
                    if ws.len() < MAX_WITNESSES {
                        ws.push(witness(&ids, &o, Source::Exhaustive, None));
                    }
                }
            }
            (bad, ws)
        })
        .collect();

    // sampled part: (length, source, index, seed)
    let mut jobs = Vec::new();
    for &len in &cfg.samples.lengths {
        for i in 0..cfg.samples.uniform {
            jobs.push((len, Source::Uniform, i, derive_seed(cfg.samples.seed, 0, len, i)));
        }
        if cfg.oracle.is_some() {
            for i in 0..cfg.samples.positive {
                jobs.push((len, Source::Positive, i, derive_seed(cfg.samples.seed, 1, len, i)));
            }
        }
    }
    let sampled: Vec<Option<(Vec<usize>, Outcome)>> = jobs
        .par_iter()
        .map_init(
            || Machine::new(p),
            |m, &(len, src, _, seed)| {
                let ids = match src {
                    Source::Positive => {
                        let o = cfg.oracle.as_ref().unwrap();
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let w = sample_member(o, len, &mut rng)?;
                        w.iter().map(|s| p.alphabet().index_of(s).expect("oracle alphabet")).collect()
                    }
                    _ => sample_word(k, len, seed),
                };
                let o = sides.compare(m, &ids);
                Some((ids, o))
            },
        )
        .collect();

    let checks: Vec<crate::compile::ChannelCheck> = sampled
        .iter()
        .flatten()
        .take(cfg.channel_checks)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(ids, _)| {
            let w: Vec<&str> = ids.iter().map(|&a| symbols[a].as_str()).collect();
            check_channels(p, c, &w).expect("word over the program alphabet")
        })
        .collect();

    let mut report = EquivalenceReport {
        program: p.name().to_string(),
        exhaustive_len: cfg.exhaustive_len,
        exhaustive_strings: strings,
        sampled: Vec::new(),
        mismatches: 0,
        witnesses: Vec::new(),
        channel_checks: checks.len(),
        max_bool_err: checks.iter().map(|c| c.max_bool_err).fold(0.0, f64::max),
        max_count_err: checks.iter().map(|c| c.max_count_err).fold(0.0, f64::max),
        layers: c.net.depth(),
        channels: c.net.d,
        runtime_ms: None,
    };
    for (bad, ws) in exhaustive {
        report.mismatches += bad;
        report.witnesses.extend(ws);
    }
    for &len in &cfg.samples.lengths {
        report.sampled.push(LengthCount { len, uniform: 0, positive: 0, mismatches: 0 });
    }
    for (job, res) in jobs.iter().zip(&sampled) {
        let Some((ids, o)) = res else { continue };
        let row = report.sampled.iter_mut().find(|r| r.len == job.0).unwrap();
        match job.1 {
            Source::Positive => row.positive += 1,
            _ => row.uniform += 1,
        }
        if !o.agrees() {
            row.mismatches += 1;
            report.mismatches += 1;
            report.witnesses.push(witness(ids, o, job.1, Some(job.3)));
        }
    }
    report.witnesses.truncate(MAX_WITNESSES);
    report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    Ok(report)
}

/// Re-runs both sides on a witness; true when they still disagree.
pub fn replay(p: &Program, c: &Compiled, w: &Witness) -> bool {
    let ids: Vec<usize> = match (w.source, w.seed) {
        (Source::Uniform, Some(seed)) => sample_word(p.alphabet().len(), w.word.len(), seed),
        _ => w.word.iter().map(|s| p.alphabet().index_of(s).unwrap()).collect(),
    };
    let mut m = Machine::new(p);
    !Sides::new(p, c).compare(&mut m, &ids).agrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{oracle, program};
    use crate::runtime::Activation;

    #[test]
    fn word_enumeration_is_length_lexicographic() {
        let words: Vec<Vec<usize>> = (0..7).map(|i| nth_word(2, i)).collect();
        assert_eq!(words, [vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(count_words(2, 3), 15);
        assert_eq!(count_words(3, 0), 1);
        assert_eq!(max_exhaustive_len(3, 200_000, 12), 10);
        assert_eq!(max_exhaustive_len(2, 200_000, 12), 12);
    }

    #[test]
    fn majority_agrees() {
        let p = program("MAJORITY").unwrap();
        let cfg = EquivConfig {
            exhaustive_len: 10,
            samples: SampleSpec::bins(20, 5, 7),
            channel_checks: 10,
            oracle: Some(oracle("majority").unwrap()),
            ..Default::default()
        };
        let r = check_equivalence(&p, &cfg).unwrap();
        assert_eq!(r.mismatches, 0, "{:?}", r.witnesses);
        assert_eq!(r.exhaustive_strings, 2047);
        assert_eq!(r.sampled.iter().map(|s| s.uniform + s.positive).sum::<usize>(), 100);
        assert!(r.channels_ok(cfg.precision));
        assert_eq!(r.channel_checks, 10);
    }

    #[test]
    fn predict_program_agrees() {
        let p = program("INDUCTION_ALL").unwrap();
        let cfg = EquivConfig { exhaustive_len: 6, samples: SampleSpec::bins(3, 0, 1), ..Default::default() };
        let r = check_equivalence(&p, &cfg).unwrap();
        assert_eq!(r.mismatches, 0, "{:?}", r.witnesses);
    }

    #[test]
    fn corrupted_net_is_caught_and_witnesses_replay() {
        let p = program("MAJORITY").unwrap();
        let mut c = compile(&p, FixedPrecision::default()).unwrap();
        // the comparison's constant unit hs(0) becomes ReLU(0) = 0
        let mlp = c
            .net
            .layers
            .iter_mut()
            .map(|l| &mut l.mlp)
            .find(|m| m.act.contains(&Activation::Heaviside))
            .unwrap();
        let unit = (0..mlp.act.len())
            .find(|&u| mlp.act[u] == Activation::Heaviside && mlp.a.row(u).iter().all(|&x| x == 0.0))
            .unwrap();
        mlp.act[unit] = Activation::Relu;
        let cfg = EquivConfig { exhaustive_len: 8, samples: SampleSpec::bins(10, 0, 3), ..Default::default() };
        let r = check_compiled(&p, &c, &cfg).unwrap();
        assert!(r.mismatches > 0);
        assert!(!r.witnesses.is_empty() && r.witnesses.len() <= MAX_WITNESSES);
        for w in &r.witnesses {
            assert!(replay(&p, &c, w), "{w:?}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let p = program("MAJORITY").unwrap();
        let cfg = EquivConfig { exhaustive_len: 20, ..Default::default() };
        assert!(matches!(check_equivalence(&p, &cfg), Err(HarnessError::CapExceeded { .. })));
    }

    #[test]
    fn reports_do_not_depend_on_worker_count() {
        let p = program("SUBSTRING_AB").unwrap();
        let cfg = EquivConfig {
            exhaustive_len: 8,
            samples: SampleSpec::bins(10, 3, 5),
            channel_checks: 4,
            oracle: Some(oracle("substring_ab").unwrap()),
            ..Default::default()
        };
        let run = |t| {
            let mut r = with_threads(Some(t), || check_equivalence(&p, &cfg).unwrap());
            r.runtime_ms = None;
            serde_json::to_string(&r).unwrap()
        };
        let one = run(1);
        for t in 2..=4 {
            assert_eq!(run(t), one);
        }
    }
}
