//! Generators for the algorithmic tasks.

use std::ops::Range;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    BinaryMajority,
    BinaryMajorityInterleave,
    Majority,
    Sort,
    CopyUnique,
    CopyRepeat,
    Parity,
    Addition,
}

/// Numbers available to Sort and Copy (unique): `1..=VOCAB`.
pub const VOCAB: usize = 150;

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        TaskId::BinaryMajority,
        TaskId::BinaryMajorityInterleave,
        TaskId::Majority,
        TaskId::Sort,
        TaskId::CopyUnique,
        TaskId::CopyRepeat,
        TaskId::Parity,
        TaskId::Addition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::BinaryMajority => "binary_majority",
            TaskId::BinaryMajorityInterleave => "binary_majority_interleave",
            TaskId::Majority => "majority",
            TaskId::Sort => "sort",
            TaskId::CopyUnique => "copy_unique",
            TaskId::CopyRepeat => "copy_repeat",
            TaskId::Parity => "parity",
            TaskId::Addition => "addition",
        }
    }

    pub fn from_name(s: &str) -> Option<TaskId> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn l_min(self) -> usize {
        match self {
            TaskId::BinaryMajorityInterleave => 3,
            TaskId::Parity => 0,
            TaskId::Addition => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskInstance {
    pub task: TaskId,
    /// Full sequence, `SOS` first and `EOS` last.
    pub tokens: Vec<String>,
    /// Token indices trained with the language-modelling loss (answer and `EOS`).
    pub supervised: Range<usize>,
    pub len: usize,
}

impl TaskInstance {
    /// One token per line.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    /// Tokens strictly between `SOS` and the first `SEP` (or `+` ... `=` for addition).
    pub fn input(&self) -> &[String] {
        let end = self.tokens.iter().position(|t| t == "SEP").unwrap_or(self.supervised.start);
        &self.tokens[1..end]
    }

    pub fn answer(&self) -> &[String] {
        &self.tokens[self.supervised.start..self.supervised.end - 1]
    }
}

fn bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Random bits with unequal numbers of 0s and 1s.
fn untied_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    loop {
        let b = bits(rng, n);
        let ones = b.iter().filter(|&&x| x == 1).count();
        if 2 * ones != n {
            return b;
        }
    }
}

fn majority_bit(b: &[u8]) -> u8 {
    let ones = b.iter().filter(|&&x| x == 1).count();
    u8::from(2 * ones > b.len())
}

fn strs<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

/// MSB-first binary sum without leading zeros.
fn add_binary(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let (mut i, mut j, mut carry) = (a.len(), b.len(), 0u8);
    while i > 0 || j > 0 || carry > 0 {
        let mut s = carry;
        if i > 0 {
            i -= 1;
            s += a[i];
        }
        if j > 0 {
            j -= 1;
            s += b[j];
        }
        out.push(s % 2);
        carry = s / 2;
    }
    while out.len() > 1 && out.last() == Some(&0) {
        out.pop();
    }
    if out.is_empty() {
        out.push(0);
    }
    out.reverse();
    out
}

fn assemble(task: TaskId, len: usize, input: Vec<String>, sep: bool, answer: Vec<String>) -> TaskInstance {
    let mut tokens = vec!["SOS".to_string()];
    tokens.extend(input);
    if sep {
        tokens.push("SEP".into());
    }
    let start = tokens.len();
    tokens.extend(answer);
    tokens.push("EOS".into());
    let end = tokens.len();
    TaskInstance { task, tokens, supervised: start..end, len }
}

/// Deterministic instance of `task` with length parameter `len`.
pub fn gen_task(task: TaskId, len: usize, seed: u64) -> Result<TaskInstance, CorpusError> {
    if len < task.l_min() {
        return Err(CorpusError::LenBelowMinimum { task: task.name().into(), len, min: task.l_min() });
    }
    let invalid = |reason: &str| CorpusError::InvalidLength {
        task: task.name().into(),
        len,
        reason: reason.into(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    Ok(match task {
        TaskId::BinaryMajority => {
            let b = untied_bits(rng, len);
            assemble(task, len, strs(&b), true, vec![majority_bit(&b).to_string()])
        }
        TaskId::BinaryMajorityInterleave => {
            if len % 3 != 0 {
                return Err(invalid("must be a multiple of 3"));
            }
            let n = len / 3;
            let streams: Vec<Vec<u8>> = (0..3).map(|_| untied_bits(rng, n)).collect();
            let input: Vec<String> =
                (0..n).flat_map(|t| streams.iter().map(move |s| s[t].to_string())).collect();
            let labels = streams.iter().map(|s| majority_bit(s).to_string()).collect();
            assemble(task, len, input, true, labels)
        }
        TaskId::Majority => {
            let letters: Vec<char> = ('a'..='z').collect();
            loop {
                let w: Vec<char> = (0..len).map(|_| *letters.choose(rng).unwrap()).collect();
                let mut counts = [0usize; 26];
                for c in &w {
                    counts[(*c as u8 - b'a') as usize] += 1;
                }
                let best = *counts.iter().max().unwrap();
                if counts.iter().filter(|&&c| c == best).count() == 1 {
                    let arg = counts.iter().position(|&c| c == best).unwrap();
                    let label = ((b'a' + arg as u8) as char).to_string();
                    break assemble(task, len, strs(&w), true, vec![label]);
                }
            }
        }
        TaskId::Sort | TaskId::CopyUnique => {
            if len > VOCAB {
                return Err(invalid("exceeds the vocabulary of unique numbers"));
            }
            let x: Vec<usize> = index::sample(rng, VOCAB, len).into_iter().map(|k| k + 1).collect();
            let mut y = x.clone();
            if task == TaskId::Sort {
                y.sort_unstable();
            }
            assemble(task, len, strs(&x), true, strs(&y))
        }
        TaskId::CopyRepeat => {
            let x: Vec<&str> = (0..len).map(|_| if rng.gen::<bool>() { "a" } else { "b" }).collect();
            assemble(task, len, strs(&x), true, strs(&x))
        }
        TaskId::Parity => {
            let ones = rng.gen_range(0..=len);
            let mut b: Vec<u8> = (0..len).map(|k| u8::from(k < ones)).collect();
            b.shuffle(rng);
            let label = if ones % 2 == 0 { "e" } else { "o" };
            assemble(task, len, strs(&b), true, vec![label.into()])
        }
        TaskId::Addition => {
            let l1 = rng.gen_range(1..=len - 3);
            let a = bits(rng, l1);
            let b = bits(rng, len - 2 - l1);
            let mut input = strs(&a);
            input.push("+".into());
            input.extend(strs(&b));
            input.push("=".into());
            assemble(task, len, input, false, strs(&add_binary(&a, &b)))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(b: &[String]) -> u128 {
        b.iter().fold(0, |v, d| 2 * v + d.parse::<u128>().unwrap())
    }

    #[test]
    fn templates_match_the_documented_examples() {
        let p = gen_task(TaskId::Parity, 5, 0).unwrap();
        assert_eq!(p.tokens.len(), 9);
        assert_eq!(p.tokens[0], "SOS");
        assert_eq!(p.tokens[6], "SEP");
        assert_eq!(p.tokens[8], "EOS");
        assert_eq!(p.supervised, 7..9);

        let a = gen_task(TaskId::Addition, 7, 1).unwrap();
        let plus = a.tokens.iter().position(|t| t == "+").unwrap();
        let eq = a.tokens.iter().position(|t| t == "=").unwrap();
        assert_eq!(eq, 7, "LEN counts both operands plus + and =");
        assert!(plus > 1 && eq > plus + 1);
        let x = value(&a.tokens[1..plus]);
        let y = value(&a.tokens[plus + 1..eq]);
        assert_eq!(value(a.answer()), x + y);
        assert_eq!(a.supervised.start, eq + 1);

        let c = gen_task(TaskId::CopyUnique, 4, 2).unwrap();
        assert_eq!(c.tokens.len(), 11);
        assert_eq!(c.tokens[5], "SEP");
        assert_eq!(&c.tokens[1..5], &c.tokens[6..10]);
    }

    #[test]
    fn addition_of_the_example() {
        let s = |v: &[u8]| strs(v).concat();
        assert_eq!(s(&add_binary(&[1, 0, 1], &[1, 0])), "111");
        assert_eq!(s(&add_binary(&[1, 1], &[1])), "100");
        assert_eq!(s(&add_binary(&[0, 0], &[0])), "0");
    }

    #[test]
    fn constraints_hold_over_many_seeds() {
        for seed in 0..200 {
            for len in [1, 2, 6, 9, 30] {
                let b = gen_task(TaskId::BinaryMajority, len, seed).unwrap();
                let x = b.input();
                let ones = x.iter().filter(|t| *t == "1").count();
                assert_ne!(2 * ones, len);
                assert_eq!(b.answer()[0], if 2 * ones > len { "1" } else { "0" });

                let m = gen_task(TaskId::Majority, len, seed).unwrap();
                let target = &m.answer()[0];
                let tc = m.input().iter().filter(|t| *t == target).count();
                for l in 'a'..='z' {
                    let l = l.to_string();
                    if &l != target {
                        assert!(m.input().iter().filter(|t| **t == l).count() < tc);
                    }
                }

                let u = gen_task(TaskId::CopyUnique, len, seed).unwrap();
                let mut set = u.input().to_vec();
                set.sort();
                set.dedup();
                assert_eq!(set.len(), len);
                assert_eq!(u.answer(), u.input());

                let s = gen_task(TaskId::Sort, len, seed).unwrap();
                let mut sorted: Vec<usize> = s.input().iter().map(|t| t.parse().unwrap()).collect();
                sorted.sort();
                assert_eq!(s.answer(), strs(&sorted));
            }
            let i = gen_task(TaskId::BinaryMajorityInterleave, 9, seed).unwrap();
            assert_eq!(i.input().len(), 9);
            for k in 0..3 {
                let stream: Vec<u8> = i.input().iter().skip(k).step_by(3).map(|t| t.parse().unwrap()).collect();
                assert_eq!(i.answer()[k], majority_bit(&stream).to_string());
            }
            let a = gen_task(TaskId::Addition, 4, seed).unwrap();
            assert_eq!(a.tokens[2], "+");
        }
    }

    #[test]
    fn parity_ones_are_uniform() {
        let mut hist = [0usize; 5];
        for seed in 0..5000 {
            let p = gen_task(TaskId::Parity, 4, seed).unwrap();
            hist[p.input().iter().filter(|t| *t == "1").count()] += 1;
        }
        for h in hist {
            assert!((850..1150).contains(&h), "{hist:?}");
        }
        assert_eq!(gen_task(TaskId::Parity, 0, 0).unwrap().tokens, ["SOS", "SEP", "e", "EOS"]);
    }

    #[test]
    fn deterministic_and_checked() {
        for t in TaskId::ALL {
            let len = 12;
            assert_eq!(gen_task(t, len, 5).unwrap(), gen_task(t, len, 5).unwrap());
            assert_eq!(TaskId::from_name(t.name()), Some(t));
        }
        assert!(matches!(
            gen_task(TaskId::Addition, 3, 0),
            Err(CorpusError::LenBelowMinimum { min: 4, .. })
        ));
        assert!(matches!(
            gen_task(TaskId::BinaryMajorityInterleave, 2, 0),
            Err(CorpusError::LenBelowMinimum { .. })
        ));
        assert!(matches!(
            gen_task(TaskId::BinaryMajorityInterleave, 7, 0),
            Err(CorpusError::InvalidLength { .. })
        ));
        assert!(gen_task(TaskId::Sort, 151, 0).is_err());
        assert!(gen_task(TaskId::Sort, 150, 0).is_ok());
    }
}
