//! Benchmark languages: hand-built DFAs and closed-form recognizers.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::CorpusError;

/// Complete DFA over an ordered alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dfa {
    pub alphabet: Vec<String>,
    /// `delta[q][a]`
    pub delta: Vec<Vec<usize>>,
    pub start: usize,
    pub accepting: Vec<bool>,
}

impl Dfa {
    /// Builds a DFA; `delta` must be total and in range.
    pub fn new(alphabet: &[&str], delta: Vec<Vec<usize>>, start: usize, accepting: &[usize]) -> Self {
        let n = delta.len();
        assert!(delta.iter().all(|row| row.len() == alphabet.len() && row.iter().all(|&q| q < n)));
        let mut acc = vec![false; n];
        for &q in accepting {
            acc[q] = true;
        }
        Self {
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            delta,
            start,
            accepting: acc,
        }
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    /// State after reading `ids`.
    pub fn run(&self, ids: &[usize]) -> usize {
        ids.iter().fold(self.start, |q, &a| self.delta[q][a])
    }

    /// States from which an accepting state is reachable.
    pub fn live(&self) -> Vec<bool> {
        let mut live = self.accepting.clone();
        loop {
            let mut changed = false;
            for q in 0..self.states() {
                if !live[q] && self.delta[q].iter().any(|&r| live[r]) {
                    live[q] = true;
                    changed = true;
                }
            }
            if !changed {
                return live;
            }
        }
    }

    /// `paths[l][q]`: number of accepted words of length `l` read from `q`
    /// (as `f64`, only used for proportional sampling).
    fn path_counts(&self, len: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.accepting.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect::<Vec<_>>()];
        for l in 1..=len {
            let prev = &out[l - 1];
            let row = (0..self.states())
                .map(|q| self.delta[q].iter().map(|&r| prev[r]).sum())
                .collect();
            out.push(row);
        }
        out
    }

    /// Uniformly random accepted word of exactly `len` symbols, if any exists.
    pub fn sample_member<R: Rng>(&self, len: usize, rng: &mut R) -> Option<Vec<usize>> {
        let paths = self.path_counts(len);
        if paths[len][self.start] == 0.0 {
            return None;
        }
        let mut q = self.start;
        let mut w = Vec::with_capacity(len);
        for l in (0..len).rev() {
            let weights: Vec<f64> = self.delta[q].iter().map(|&r| paths[l][r]).collect();
            let total: f64 = weights.iter().sum();
            let mut x = rng.gen::<f64>() * total;
            let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap();
            for (a, &wt) in weights.iter().enumerate() {
                if wt > 0.0 && x < wt {
                    pick = a;
                    break;
                }
                x -= wt;
            }
            w.push(pick);
            q = self.delta[q][pick];
        }
        Some(w)
    }
}

/// Non-regular or pattern languages recognised directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ClosedForm {
    /// `#1 >= #0` over {0, 1}
    Majority,
    /// `#1 > #0` over {0, 1}
    StrictMajority,
    /// balanced parentheses over {(, )}
    Dyck1,
    /// a^n b^n c^n, n >= 0
    AnBnCn,
    /// contains the given factor
    Factor(Vec<String>),
    /// contains the given scattered subsequence
    Subsequence(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Recognizer {
    Dfa(Dfa),
    Closed(ClosedForm),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LanguageOracle {
    pub id: String,
    pub alphabet: Vec<String>,
    pub recognizer: Recognizer,
    /// Readability only; membership never depends on it.
    pub description: String,
}

fn count(w: &[&str], s: &str) -> usize {
    w.iter().filter(|x| **x == s).count()
}

fn has_factor(w: &[&str], f: &[String]) -> bool {
    f.is_empty() || w.windows(f.len()).any(|win| win.iter().zip(f).all(|(a, b)| *a == b))
}

fn has_subsequence(w: &[&str], f: &[String]) -> bool {
    let mut it = f.iter().peekable();
    for s in w {
        if it.peek().is_some_and(|x| x == s) {
            it.next();
        }
    }
    it.peek().is_none()
}

impl ClosedForm {
    fn accepts(&self, w: &[&str]) -> bool {
        match self {
            ClosedForm::Majority => count(w, "1") >= count(w, "0"),
            ClosedForm::StrictMajority => count(w, "1") > count(w, "0"),
            ClosedForm::Dyck1 => {
                let mut d: i64 = 0;
                for s in w {
                    d += if *s == "(" { 1 } else { -1 };
                    if d < 0 {
                        return false;
                    }
                }
                d == 0
            }
            ClosedForm::AnBnCn => {
                let n = w.len() / 3;
                w.len() % 3 == 0
                    && w[..n].iter().all(|s| *s == "a")
                    && w[n..2 * n].iter().all(|s| *s == "b")
                    && w[2 * n..].iter().all(|s| *s == "c")
            }
            ClosedForm::Factor(f) => has_factor(w, f),
            ClosedForm::Subsequence(f) => has_subsequence(w, f),
        }
    }

    /// Whether some extension of `w` is a member.
    fn is_prefix(&self, w: &[&str]) -> bool {
        match self {
            ClosedForm::Dyck1 => {
                let mut d: i64 = 0;
                w.iter().all(|s| {
                    d += if *s == "(" { 1 } else { -1 };
                    d >= 0
                })
            }
            ClosedForm::AnBnCn => {
                let a = w.iter().take_while(|s| **s == "a").count();
                let b = w[a..].iter().take_while(|s| **s == "b").count();
                let c = w[a + b..].iter().take_while(|s| **s == "c").count();
                a + b + c == w.len() && b <= a && c <= b && (c == 0 || b == a)
            }
            _ => true,
        }
    }
}

impl LanguageOracle {
    fn dfa(id: &str, description: &str, dfa: Dfa) -> Self {
        Self {
            id: id.into(),
            alphabet: dfa.alphabet.clone(),
            recognizer: Recognizer::Dfa(dfa),
            description: description.into(),
        }
    }

    fn closed(id: &str, alphabet: &[&str], description: &str, c: ClosedForm) -> Self {
        Self {
            id: id.into(),
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            recognizer: Recognizer::Closed(c),
            description: description.into(),
        }
    }

    pub fn as_dfa(&self) -> Option<&Dfa> {
        match &self.recognizer {
            Recognizer::Dfa(d) => Some(d),
            Recognizer::Closed(_) => None,
        }
    }

    fn ids<S: AsRef<str>>(&self, w: &[S]) -> Result<Vec<usize>, CorpusError> {
        w.iter()
            .map(|s| {
                self.alphabet
                    .iter()
                    .position(|a| a == s.as_ref())
                    .ok_or_else(|| CorpusError::SymbolNotInAlphabet(s.as_ref().to_string()))
            })
            .collect()
    }
}

/// Exact membership.
pub fn membership<S: AsRef<str>>(o: &LanguageOracle, w: &[S]) -> Result<bool, CorpusError> {
    let ids = o.ids(w)?;
    Ok(match &o.recognizer {
        Recognizer::Dfa(d) => d.accepting[d.run(&ids)],
        Recognizer::Closed(c) => {
            let w: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            c.accepts(&w)
        }
    })
}

/// Symbols `σ` such that `prefix σ` is a prefix of some member, in alphabet order.
pub fn legal_next<S: AsRef<str>>(o: &LanguageOracle, prefix: &[S]) -> Result<Vec<String>, CorpusError> {
    let ids = o.ids(prefix)?;
    Ok(match &o.recognizer {
        Recognizer::Dfa(d) => {
            let live = d.live();
            let q = d.run(&ids);
            (0..d.alphabet.len())
                .filter(|&a| live[d.delta[q][a]])
                .map(|a| d.alphabet[a].clone())
                .collect()
        }
        Recognizer::Closed(c) => {
            let mut w: Vec<&str> = prefix.iter().map(AsRef::as_ref).collect();
            if !c.is_prefix(&w) {
                return Ok(vec![]);
            }
            let mut out = Vec::new();
            for a in &o.alphabet {
                w.push(a);
                if c.is_prefix(&w) {
                    out.push(a.clone());
                }
                w.pop();
            }
            out
        }
    })
}

/// A member of exactly `len` symbols drawn at random, if one exists. DFA
/// languages are sampled uniformly; closed forms use simple constructions
/// that cover every member but are not uniform.
pub fn sample_member<R: Rng>(o: &LanguageOracle, len: usize, rng: &mut R) -> Option<Vec<String>> {
    let sym = |s: &str| s.to_string();
    let uniform = |rng: &mut R, n: usize| -> Vec<String> {
        (0..n).map(|_| o.alphabet[rng.gen_range(0..o.alphabet.len())].clone()).collect()
    };
    match &o.recognizer {
        Recognizer::Dfa(d) => d
            .sample_member(len, rng)
            .map(|ids| ids.into_iter().map(|a| o.alphabet[a].clone()).collect()),
        Recognizer::Closed(c) => Some(match c {
            ClosedForm::Majority | ClosedForm::StrictMajority => {
                let lo = if *c == ClosedForm::Majority { len.div_ceil(2) } else { len / 2 + 1 };
                if lo > len {
                    return None;
                }
                let ones = rng.gen_range(lo..=len);
                let mut w: Vec<String> = (0..len).map(|k| sym(if k < ones { "1" } else { "0" })).collect();
                w.shuffle(rng);
                w
            }
            ClosedForm::Dyck1 => {
                if len % 2 == 1 {
                    return None;
                }
                // completions[r][h]: balanced suffixes of length r from height h
                let mut completions = vec![vec![0.0f64; len + 2]; len + 1];
                completions[0][0] = 1.0;
                for r in 1..=len {
                    for h in 0..=len {
                        let down = if h > 0 { completions[r - 1][h - 1] } else { 0.0 };
                        completions[r][h] = down + completions[r - 1][h + 1];
                    }
                }
                let mut h = 0;
                let mut w = Vec::with_capacity(len);
                for r in (1..=len).rev() {
                    let up = completions[r - 1][h + 1];
                    let down = if h > 0 { completions[r - 1][h - 1] } else { 0.0 };
                    if rng.gen::<f64>() * (up + down) < up {
                        w.push(sym("("));
                        h += 1;
                    } else {
                        w.push(sym(")"));
                        h -= 1;
                    }
                }
                w
            }
            ClosedForm::AnBnCn => {
                if len % 3 != 0 {
                    return None;
                }
                ["a", "b", "c"].iter().flat_map(|s| std::iter::repeat(sym(s)).take(len / 3)).collect()
            }
            ClosedForm::Factor(f) => {
                if len < f.len() {
                    return None;
                }
                let mut w = uniform(rng, len);
                let at = rng.gen_range(0..=len - f.len());
                w[at..at + f.len()].clone_from_slice(f);
                w
            }
            ClosedForm::Subsequence(f) => {
                if len < f.len() {
                    return None;
                }
                let mut w = uniform(rng, len);
                let mut at = rand::seq::index::sample(rng, len, f.len()).into_vec();
                at.sort_unstable();
                for (p, s) in at.into_iter().zip(f) {
                    w[p] = s.clone();
                }
                w
            }
        }),
    }
}

const B01: &[&str] = &["0", "1"];
const AB: &[&str] = &["a", "b"];

fn tomita(k: u8) -> Dfa {
    match k {
        // 1*
        1 => Dfa::new(B01, vec![vec![1, 0], vec![1, 1]], 0, &[0]),
        // (10)*: 0 start/accept, 1 after a 1, 2 dead
        2 => Dfa::new(B01, vec![vec![2, 1], vec![0, 2], vec![2, 2]], 0, &[0]),
        // 0 even run of 1s (or none pending), 1 odd 1s, 2 odd 1s then odd 0s,
        // 3 odd 1s then even 0s, 4 dead
        3 => Dfa::new(
            B01,
            vec![vec![0, 1], vec![2, 0], vec![3, 4], vec![2, 1], vec![4, 4]],
            0,
            &[0, 1, 3],
        ),
        // trailing zeros 0, 1, 2; 3 dead
        4 => Dfa::new(B01, vec![vec![1, 0], vec![2, 0], vec![3, 0], vec![3, 3]], 0, &[0, 1, 2]),
        // (length parity, ones parity) = 2*len + ones
        5 => Dfa::new(
            B01,
            vec![vec![2, 3], vec![3, 2], vec![0, 1], vec![1, 0]],
            0,
            &[0],
        ),
        // (#0 - #1) mod 3
        6 => Dfa::new(B01, vec![vec![1, 2], vec![2, 0], vec![0, 1]], 0, &[0]),
        // 0*1*0*1*: phase 0..3, 4 dead
        7 => Dfa::new(
            B01,
            vec![vec![0, 1], vec![2, 1], vec![2, 3], vec![4, 3], vec![4, 4]],
            0,
            &[0, 1, 2, 3],
        ),
        _ => unreachable!(),
    }
}

/// D_n = (a D_{n-1} b)*: depth 0..=n, then a dead state.
fn dyck_depth(n: usize) -> Dfa {
    let dead = n + 1;
    let mut delta = Vec::with_capacity(n + 2);
    for d in 0..=n {
        let up = if d < n { d + 1 } else { dead };
        let down = if d > 0 { d - 1 } else { dead };
        delta.push(vec![up, down]);
    }
    delta.push(vec![dead, dead]);
    Dfa::new(AB, delta, 0, &[0])
}

/// (w)* for a fixed non-empty word over {a, b}.
fn power_of(word: &[usize]) -> Dfa {
    let k = word.len();
    let dead = k;
    let mut delta = Vec::with_capacity(k + 1);
    for (q, &want) in word.iter().enumerate() {
        let mut row = vec![dead; 2];
        row[want] = (q + 1) % k;
        delta.push(row);
    }
    delta.push(vec![dead, dead]);
    Dfa::new(AB, delta, 0, &[0])
}

/// Identifiers of every oracle, in manifest order.
pub const LANGUAGE_IDS: &[&str] = &[
    "tomita1", "tomita2", "tomita3", "tomita4", "tomita5", "tomita6", "tomita7", "d2", "d3", "d4",
    "d12", "parity", "aa_star", "aaaa_star", "abab_star", "a_to_e", "ab_d_bc", "zero_two",
    "majority", "strict_majority", "dyck1", "anbncn", "contains_a", "substring_ab", "subseq_aba",
];

pub fn oracle(id: &str) -> Result<LanguageOracle, CorpusError> {
    let o = match id {
        "tomita1" => LanguageOracle::dfa(id, "1*", tomita(1)),
        "tomita2" => LanguageOracle::dfa(id, "(10)*", tomita(2)),
        "tomita3" => LanguageOracle::dfa(
            id,
            "no odd run of 1s immediately followed by an odd run of 0s (standard automaton)",
            tomita(3),
        ),
        "tomita4" => LanguageOracle::dfa(id, "no 000 factor", tomita(4)),
        "tomita5" => LanguageOracle::dfa(id, "even length, even number of 1s", tomita(5)),
        "tomita6" => LanguageOracle::dfa(id, "#0 - #1 divisible by 3", tomita(6)),
        "tomita7" => LanguageOracle::dfa(id, "0*1*0*1*", tomita(7)),
        "d2" => LanguageOracle::dfa(id, "(a(ab)*b)*", dyck_depth(2)),
        "d3" => LanguageOracle::dfa(id, "D_3 = (a D_2 b)*", dyck_depth(3)),
        "d4" => LanguageOracle::dfa(id, "D_4 = (a D_3 b)*", dyck_depth(4)),
        "d12" => LanguageOracle::dfa(id, "D_12 = (a D_11 b)*", dyck_depth(12)),
        "parity" => LanguageOracle::dfa(
            id,
            "b*(ab*ab*)*",
            Dfa::new(AB, vec![vec![1, 0], vec![0, 1]], 0, &[0]),
        ),
        "aa_star" => LanguageOracle::dfa(id, "(aa)*", power_of(&[0, 0])),
        "aaaa_star" => LanguageOracle::dfa(id, "(aaaa)*", power_of(&[0, 0, 0, 0])),
        "abab_star" => LanguageOracle::dfa(id, "(abab)*", power_of(&[0, 1, 0, 1])),
        "a_to_e" => {
            // state k: last symbol is letter k-1 (0 = start); 6 dead
            let mut delta = vec![vec![6; 5]; 7];
            for q in 0..6usize {
                if q == 0 {
                    delta[0][0] = 1;
                    continue;
                }
                let cur = q - 1;
                delta[q][cur] = q;
                if cur + 1 < 5 {
                    delta[q][cur + 1] = q + 1;
                }
            }
            LanguageOracle::dfa(
                id,
                "aa*bb*cc*dd*ee*",
                Dfa::new(&["a", "b", "c", "d", "e"], delta, 0, &[5]),
            )
        }
        "ab_d_bc" => LanguageOracle::dfa(
            id,
            "{a,b}*d{b,c}*",
            // 0 before d, 1 after d, 2 dead
            Dfa::new(
                &["a", "b", "c", "d"],
                vec![vec![0, 0, 2, 1], vec![2, 1, 1, 2], vec![2, 2, 2, 2]],
                0,
                &[1],
            ),
        ),
        "zero_two" => LanguageOracle::dfa(
            id,
            "{0,1,2}*02*",
            Dfa::new(&["0", "1", "2"], vec![vec![1, 0, 0], vec![1, 0, 1]], 0, &[1]),
        ),
        "majority" => LanguageOracle::closed(id, B01, "#1 >= #0", ClosedForm::Majority),
        "strict_majority" => {
            LanguageOracle::closed(id, B01, "#1 > #0", ClosedForm::StrictMajority)
        }
        "dyck1" => LanguageOracle::closed(id, &["(", ")"], "balanced parentheses", ClosedForm::Dyck1),
        "anbncn" => LanguageOracle::closed(id, &["a", "b", "c"], "a^n b^n c^n", ClosedForm::AnBnCn),
        "contains_a" => {
            LanguageOracle::closed(id, AB, "Σ*aΣ*", ClosedForm::Factor(vec!["a".into()]))
        }
        "substring_ab" => LanguageOracle::closed(
            id,
            AB,
            "Σ*abΣ*",
            ClosedForm::Factor(vec!["a".into(), "b".into()]),
        ),
        "subseq_aba" => LanguageOracle::closed(
            id,
            AB,
            "Σ*aΣ*bΣ*aΣ*",
            ClosedForm::Subsequence(vec!["a".into(), "b".into(), "a".into()]),
        ),
        _ => return Err(CorpusError::UnknownLanguage(id.to_string())),
    };
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use regex::Regex;

    fn all_words(alpha: &[String], max: usize) -> Vec<Vec<String>> {
        let mut out = vec![vec![]];
        let mut frontier: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..max {
            frontier = frontier
                .iter()
                .flat_map(|w| {
                    alpha.iter().map(move |s| {
                        let mut v = w.clone();
                        v.push(s.clone());
                        v
                    })
                })
                .collect();
            out.extend(frontier.iter().cloned());
        }
        out
    }

    /// Independent regex or arithmetic definitions of every DFA language.
    fn dual(id: &str, w: &[String]) -> bool {
        let s: String = w.concat();
        let re = |p: &str| Regex::new(&format!("^(?:{p})$")).unwrap().is_match(&s);
        let ones = s.matches('1').count() as i64;
        let zeros = s.matches('0').count() as i64;
        match id {
            "tomita1" => re("1*"),
            "tomita2" => re("(10)*"),
            "tomita3" => {
                // split into runs; reject if an odd 1-run is directly followed by an odd 0-run
                let runs: Vec<(char, usize)> = s.chars().fold(vec![], |mut v: Vec<(char, usize)>, c| {
                    match v.last_mut() {
                        Some((d, n)) if *d == c => *n += 1,
                        _ => v.push((c, 1)),
                    }
                    v
                });
                !runs
                    .windows(2)
                    .any(|p| p[0].0 == '1' && p[0].1 % 2 == 1 && p[1].0 == '0' && p[1].1 % 2 == 1)
            }
            "tomita4" => !s.contains("000"),
            "tomita5" => s.len() % 2 == 0 && ones % 2 == 0,
            "tomita6" => (zeros - ones).rem_euclid(3) == 0,
            "tomita7" => re("0*1*0*1*"),
            "d2" | "d3" | "d4" | "d12" => {
                let n: i64 = id[1..].parse().unwrap();
                let mut d = 0i64;
                s.chars().all(|c| {
                    d += if c == 'a' { 1 } else { -1 };
                    (0..=n).contains(&d)
                }) && d == 0
            }
            "parity" => re("b*(ab*ab*)*"),
            "aa_star" => re("(aa)*"),
            "aaaa_star" => re("(aaaa)*"),
            "abab_star" => re("(abab)*"),
            "a_to_e" => re("aa*bb*cc*dd*ee*"),
            "ab_d_bc" => re("[ab]*d[bc]*"),
            "zero_two" => re("[012]*02*"),
            _ => unreachable!("{id}"),
        }
    }

    #[test]
    fn dfas_match_independent_definitions() {
        for id in LANGUAGE_IDS {
            let o = oracle(id).unwrap();
            if o.as_dfa().is_none() {
                continue;
            }
            let max = if o.alphabet.len() <= 2 { 12 } else { 7 };
            for w in all_words(&o.alphabet, max) {
                assert_eq!(membership(&o, &w).unwrap(), dual(id, &w), "{id} {w:?}");
            }
        }
    }

    #[test]
    fn spot_values() {
        let m = |id: &str, w: &str| {
            let o = oracle(id).unwrap();
            let w: Vec<String> = w.chars().map(String::from).collect();
            membership(&o, &w).unwrap()
        };
        assert!(m("tomita4", "0010"));
        assert!(!m("tomita4", "1000"));
        assert!(m("aaaa_star", "aaaa"));
        assert!(!m("aaaa_star", "aa"));
        assert!(m("zero_two", "102"));
        assert!(m("zero_two", "120"));
        assert!(!m("zero_two", "121"));
        assert!(!m("zero_two", "021"));
        assert!(m("dyck1", "(())()"));
        assert!(!m("dyck1", ")("));
        assert!(m("anbncn", "aabbcc"));
        assert!(m("anbncn", ""));
        assert!(!m("anbncn", "acb"));
        assert!(m("subseq_aba", "bbaabba"));
        assert!(!m("subseq_aba", "bbaab"));
        assert!(oracle("nope").is_err());
    }

    #[test]
    fn legal_next_examples() {
        let ln = |id: &str, p: &[&str]| legal_next(&oracle(id).unwrap(), p).unwrap();
        assert_eq!(ln("tomita1", &["1", "1"]), ["1"]);
        assert_eq!(ln("dyck1", &["("]), ["(", ")"]);
        assert_eq!(ln("dyck1", &[]), ["("]);
        assert_eq!(ln("anbncn", &["a", "b"]), ["c"]);
        assert_eq!(ln("anbncn", &["a", "a", "b"]), ["b"]);
        assert_eq!(ln("tomita2", &["1"]), ["0"]);
    }

    #[test]
    fn legal_next_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in LANGUAGE_IDS {
            let o = oracle(id).unwrap();
            let Some(d) = o.as_dfa() else { continue };
            // every live state reaches acceptance within `states` steps
            let bound = d.states();
            let suffixes = all_words(&o.alphabet, bound.min(6));
            if bound > 6 && o.alphabet.len() > 2 {
                continue;
            }
            let suffixes = if bound > 6 { all_words(&o.alphabet, bound) } else { suffixes };
            for _ in 0..40 {
                let len = rng.gen_range(0..=10);
                let p: Vec<String> =
                    (0..len).map(|_| o.alphabet[rng.gen_range(0..o.alphabet.len())].clone()).collect();
                let brute: Vec<String> = o
                    .alphabet
                    .iter()
                    .filter(|a| {
                        suffixes.iter().any(|s| {
                            let mut w = p.clone();
                            w.push((*a).clone());
                            w.extend(s.iter().cloned());
                            membership(&o, &w).unwrap()
                        })
                    })
                    .cloned()
                    .collect();
                assert_eq!(legal_next(&o, &p).unwrap(), brute, "{id} {p:?}");
            }
        }
    }

    #[test]
    fn sampled_members_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for id in LANGUAGE_IDS {
            let o = oracle(id).unwrap();
            let Some(d) = o.as_dfa() else { continue };
            for len in [0, 1, 4, 25, 150] {
                if let Some(w) = d.sample_member(len, &mut rng) {
                    assert_eq!(w.len(), len);
                    let w: Vec<&str> = w.iter().map(|&a| o.alphabet[a].as_str()).collect();
                    assert!(membership(&o, &w).unwrap(), "{id}");
                }
            }
        }
        for id in ["majority", "strict_majority", "dyck1", "anbncn", "contains_a", "substring_ab", "subseq_aba"] {
            let o = oracle(id).unwrap();
            for len in [0, 1, 2, 3, 6, 25, 150] {
                if let Some(w) = sample_member(&o, len, &mut rng) {
                    assert_eq!(w.len(), len);
                    assert!(membership(&o, &w).unwrap(), "{id} {w:?}");
                }
            }
        }
        assert!(sample_member(&oracle("dyck1").unwrap(), 150, &mut rng).is_some());
        let d = oracle("aaaa_star").unwrap();
        let d = d.as_dfa().unwrap();
        assert!(d.sample_member(6, &mut rng).is_none());
        assert_eq!(d.sample_member(8, &mut rng).unwrap(), vec![0; 8]);
    }
}
