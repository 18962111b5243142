use serde::Serialize;

use super::Compiled;
use crate::dsl::{Program, Sort};
use crate::interp::{evaluate, InterpError};
use crate::runtime::{encode_word, forward_ids};

/// Largest deviation between op channels and the interpreter's values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCheck {
    pub max_bool_err: f64,
    pub max_count_err: f64,
    /// Per op of the desugared program, in program order.
    pub per_op: Vec<(String, f64)>,
    /// Largest absolute value on any op channel at the start row.
    pub sos_leak: f64,
}

/// Runs the interpreter on the compiled (desugared) program and the network
/// on `$w`, then compares every op home at rows `2..=|w|+1` with `{0, 1}`
/// for Booleans and `c / (t + 1)` for counts. `p` is only used to check
/// that `w` fits the source alphabet.
pub fn check_channels<S: AsRef<str>>(
    p: &Program,
    c: &Compiled,
    w: &[S],
) -> Result<ChannelCheck, InterpError> {
    p.alphabet()
        .encode(w)
        .map_err(|(position, symbol)| InterpError::SymbolNotInAlphabet { position, symbol })?;
    let mut out = ChannelCheck {
        max_bool_err: 0.0,
        max_count_err: 0.0,
        per_op: Vec::with_capacity(c.plan.homes.len()),
        sos_leak: 0.0,
    };
    let ids = encode_word(&c.net, w).expect("alphabet checked");
    let acts = forward_ids(&c.net, &ids, 0);
    let last = acts.depth_last();
    if w.is_empty() {
        for h in &c.plan.homes {
            out.sos_leak = out.sos_leak.max(acts.get(last, 1, h.channel).abs());
            out.per_op.push((h.name.clone(), 0.0));
        }
        return Ok(out);
    }
    let trace = evaluate(&c.program, w)?;
    for (k, h) in c.plan.homes.iter().enumerate() {
        out.sos_leak = out.sos_leak.max(acts.get(last, 1, h.channel).abs());
        let mut err: f64 = 0.0;
        for t in 1..=w.len() {
            let got = acts.get(last, t + 1, h.channel);
            let want = trace.raw(k, t) as f64 / (t + 1) as f64;
            let want = if h.sort == Sort::Bool { trace.raw(k, t) as f64 } else { want };
            err = err.max((got - want).abs());
        }
        match h.sort {
            Sort::Bool => out.max_bool_err = out.max_bool_err.max(err),
            Sort::Count => out.max_count_err = out.max_count_err.max(err),
        }
        out.per_op.push((h.name.clone(), err));
    }
    Ok(out)
}
