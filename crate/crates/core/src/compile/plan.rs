use serde::{Deserialize, Serialize};

use crate::dsl::{PeriodicRelation, Sort};

/// Where every quantity lives in the residual stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub width: usize,
    /// 1 at the start row only.
    pub is_sos: usize,
    /// 1 at every row except the start row.
    pub constant: usize,
    /// Token one-hots in alphabet order (0 at the start row).
    pub tokens: Vec<(String, usize)>,
    /// Raw periodic features read from the encoding table.
    pub positional: Vec<(PeriodicRelation, usize)>,
    /// `1/r` at row `r`.
    pub one_count: usize,
    /// One home per operation of the desugared program, in program order.
    pub homes: Vec<OpChannel>,
    /// Work channels of local counts: (op, attention average, threshold flag).
    pub scratch: Vec<(String, usize, usize)>,
    /// Home of the accepting op.
    pub accept: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpChannel {
    pub name: String,
    pub sort: Sort,
    pub channel: usize,
}

impl ChannelPlan {
    pub fn home(&self, op: &str) -> Option<usize> {
        self.homes.iter().find(|h| h.name == op).map(|h| h.channel)
    }

    pub fn token(&self, sym: &str) -> Option<usize> {
        self.tokens.iter().find(|t| t.0 == sym).map(|t| t.1)
    }

    /// Every channel index, reserved ones included. Used to check disjointness.
    pub fn all_channels(&self) -> Vec<usize> {
        let mut v = vec![self.is_sos, self.constant, self.one_count];
        v.extend(self.tokens.iter().map(|t| t.1));
        v.extend(self.positional.iter().map(|p| p.1));
        v.extend(self.homes.iter().map(|h| h.channel));
        for (_, a, b) in &self.scratch {
            v.push(*a);
            v.push(*b);
        }
        v
    }
}

/// Construction used for one operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Gadget {
    Initial,
    Positional,
    Not,
    And,
    True,
    /// Heaviside comparison plus a constant-one unit.
    Leq,
    /// Uniform attention over the predicate channel.
    CountUniform,
    /// Attention with a positional bonus at distance `distance`, a threshold, then a select.
    CountLocal { distance: usize },
    /// `j == i`: the predicate scaled by the one-count channel.
    CountSelf,
    /// Only positive offsets: always zero, no layer emitted.
    CountVacuous,
    Conditional { bound: u32 },
    Add,
    Sub,
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpReport {
    pub name: String,
    pub channel: usize,
    pub gadget: Gadget,
    /// Layers (0-based) emitted for this op.
    pub layers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub program: String,
    pub layers: usize,
    pub heads: usize,
    pub channels: usize,
    pub precision: u32,
    /// Largest look-back distance among local counts.
    pub tau: usize,
    /// Encoding period: lcm of the positional moduli.
    pub period: usize,
    /// Longest input (`|w| + 1` rows) for which comparisons are guaranteed exact.
    pub max_rows: u64,
    pub ops: Vec<OpReport>,
    pub notes: Vec<String>,
}
