use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, HarnessError};
use crate::compile::compile;
use crate::corpus::{legal_next, membership, oracle, sample_member, LanguageOracle};
use crate::dsl::Program;
use crate::runtime::{forward_final, FixedPrecision, LimitTransformer};

/// Length bins; the first starts at the task's minimum length.
pub const BINS: [(usize, usize); 3] = [(1, 50), (51, 100), (101, 150)];

/// What the compiled network is scored against.
#[derive(Debug, Clone)]
pub enum Reference {
    Language(LanguageOracle),
    /// `{σ : ∃k<i, x_k = x_i, x_{k+1} = σ}`
    InductionAll,
    /// Most frequent such `σ`, ties kept; every symbol when none exists.
    InductionArgmax,
}

impl Reference {
    pub fn from_id(id: &str) -> Result<Self, HarnessError> {
        Ok(match id {
            "induction_all" => Reference::InductionAll,
            "induction_argmax" => Reference::InductionArgmax,
            _ => Reference::Language(oracle(id)?),
        })
    }
}

/// Brute-force successor counts of earlier occurrences of `w[i]` (0-based `i`).
fn successor_counts(w: &[usize], i: usize, k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for j in 0..i {
        if w[j] == w[i] {
            c[w[j + 1]] += 1;
        }
    }
    c
}

/// Reference predicted set at 0-based position `i`.
pub fn induction_set(w: &[usize], i: usize, k: usize, argmax: bool) -> Vec<usize> {
    let c = successor_counts(w, i, k);
    if argmax {
        let best = *c.iter().max().unwrap();
        (0..k).filter(|&a| c[a] == best).collect()
    } else {
        (0..k).filter(|&a| c[a] > 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinAccuracy {
    pub lo: usize,
    pub hi: usize,
    pub samples: usize,
    pub correct: usize,
    /// Absent when the bin holds no samples.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinReport {
    pub program: String,
    pub reference: String,
    pub bins: Vec<BinAccuracy>,
}

#[derive(Debug, Clone)]
pub struct BinConfig {
    pub per_bin: usize,
    pub seed: u64,
    pub l_min: usize,
    pub precision: FixedPrecision,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self { per_bin: 200, seed: 0, l_min: 1, precision: FixedPrecision::default() }
    }
}

/// Network output rows for `$w` (row 0 is the start token).
fn outputs(net: &LimitTransformer, p: &Program, w: &[usize]) -> Vec<Vec<f64>> {
    let sos = net.symbol_index(crate::dsl::SOS).unwrap();
    let mut x = vec![sos];
    x.extend(w.iter().map(|&a| net.symbol_index(&p.alphabet().symbols()[a]).unwrap()));
    forward_final(net, &x, 0).1
}

fn labelled(net: &LimitTransformer, p: &Program, row: &[f64]) -> Vec<usize> {
    let k = net.out_dim() - 1;
    let mut v: Vec<usize> = (0..k)
        .filter(|&o| row[o] > 0.0)
        .map(|o| p.alphabet().index_of(&net.output_labels[o]).unwrap())
        .collect();
    v.sort_unstable();
    v
}

/// Per-bin accuracy of the compiled network against `reference_id`.
/// Predict programs are scored per sequence: every step must match.
pub fn bin_report(p: &Program, reference_id: &str, cfg: &BinConfig) -> Result<BinReport, HarnessError> {
    let reference = Reference::from_id(reference_id)?;
    let c = compile(p, cfg.precision)?;
    let net = &c.net;
    let k = p.alphabet().len();
    let symbols = p.alphabet().symbols();
    let mut bins = Vec::new();
    for (b, &(lo, hi)) in BINS.iter().enumerate() {
        let lo = if b == 0 { lo.max(cfg.l_min) } else { lo };
        if lo > hi || cfg.per_bin == 0 {
            bins.push(BinAccuracy { lo, hi, samples: 0, correct: 0, accuracy: None });
            continue;
        }
        let results: Vec<bool> = (0..cfg.per_bin)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2, b, i));
                let len = rng.gen_range(lo..=hi);
                let positive = match &reference {
                    Reference::Language(o) if i % 2 == 1 => sample_member(o, len, &mut rng)
                        .map(|w| w.iter().map(|s| p.alphabet().index_of(s).unwrap()).collect()),
                    _ => None,
                };
                let w: Vec<usize> = positive.unwrap_or_else(|| (0..len).map(|_| rng.gen_range(0..k)).collect());
                let out = outputs(net, p, &w);
                let strs: Vec<&str> = w.iter().map(|&a| symbols[a].as_str()).collect();
                match &reference {
                    Reference::Language(o) if p.predict().is_some() => (0..w.len()).all(|t| {
                        let want: Vec<usize> = legal_next(o, &strs[..=t])
                            .unwrap()
                            .iter()
                            .map(|s| p.alphabet().index_of(s).unwrap())
                            .collect();
                        labelled(net, p, &out[t + 1]) == want
                    }),
                    Reference::Language(o) => {
                        let got = *out.last().unwrap().last().unwrap() > 0.0;
                        got == membership(o, &strs).unwrap()
                    }
                    Reference::InductionAll | Reference::InductionArgmax => {
                        let argmax = matches!(reference, Reference::InductionArgmax);
                        (0..w.len()).all(|t| labelled(net, p, &out[t + 1]) == induction_set(&w, t, k, argmax))
                    }
                }
            })
            .collect();
        let correct = results.iter().filter(|&&ok| ok).count();
        bins.push(BinAccuracy {
            lo,
            hi,
            samples: results.len(),
            correct,
            accuracy: Some(correct as f64 / results.len() as f64),
        });
    }
    Ok(BinReport { program: p.name().to_string(), reference: reference_id.to_string(), bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::program;

    #[test]
    fn brute_force_induction_sets() {
        // a b a c a: at the last a, successors b and c
        let w = [0, 1, 0, 2, 0];
        assert_eq!(induction_set(&w, 4, 3, false), [1, 2]);
        assert_eq!(induction_set(&w, 0, 3, false), Vec::<usize>::new());
        assert_eq!(induction_set(&w, 0, 3, true), [0, 1, 2]);
        let w = [0, 1, 0, 1, 0, 2, 0];
        assert_eq!(induction_set(&w, 6, 3, true), [1]);
    }

    #[test]
    fn dyck1_is_perfect_in_every_bin() {
        let p = program("DYCK1").unwrap();
        let r = bin_report(&p, "dyck1", &BinConfig { per_bin: 30, ..Default::default() }).unwrap();
        for b in &r.bins {
            assert_eq!(b.accuracy, Some(1.0), "{b:?}");
        }
    }

    #[test]
    fn induction_all_matches_brute_force() {
        let p = program("INDUCTION_ALL").unwrap();
        let r = bin_report(&p, "induction_all", &BinConfig { per_bin: 10, ..Default::default() }).unwrap();
        assert!(r.bins.iter().all(|b| b.accuracy == Some(1.0)), "{r:?}");
    }

    #[test]
    fn empty_bins_are_absent() {
        let p = program("MAJORITY").unwrap();
        let r = bin_report(&p, "majority", &BinConfig { per_bin: 0, ..Default::default() }).unwrap();
        assert!(r.bins.iter().all(|b| b.accuracy.is_none() && b.samples == 0));
        assert!(bin_report(&p, "nope", &BinConfig::default()).is_err());
    }
}
