//! The forward pass.
//!
//! Row `r` (1-based, row 1 = `$`) starts as `E[x_r] + p[r + o]`. Each layer
//! adds the sum of its heads' attention outputs, then the MLP output. Head
//! logits `(K y_j)·(Q y_i) + φ(i - j)` are rounded to `p` fractional bits,
//! weights are `round(exp(ln(n) · logit))` with `n` the number of rows, and
//! each query normalises by the exact sum of its rounded weights. The
//! residual stream itself is kept in `f64`.
//!
//! Most keys of a compiled net carry logit 0 (weight 1), so a head is
//! evaluated as a prefix sum over all keys plus corrections for the few
//! "special" keys: those inside the φ window and those with `K y_j != 0`.

use std::collections::HashMap;

use serde::Serialize;

use super::{LimitTransformer, RuntimeError};
use crate::dsl::SOS;

/// Largest exponent fed to `exp`; larger arguments are clamped and flagged.
pub const EXP_LIMIT: f64 = 600.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ForwardFlags {
    /// Some `ln(n) · logit` exceeded [`EXP_LIMIT`] and was clamped.
    pub exp_saturated: bool,
    /// Some query saw a zero weight sum; its head output was set to zero.
    pub zero_weight_sum: bool,
}

/// Every layer's residual stream plus output logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTensor {
    pub n: usize,
    pub d: usize,
    /// `layers[l]` is the stream after layer `l` (0 = embeddings), row-major n×d.
    pub layers: Vec<Vec<f64>>,
    /// Output logits per row.
    pub logits: Vec<Vec<f64>>,
    pub flags: ForwardFlags,
}

impl ActivationTensor {
    /// Channel `ch` of 1-based row `row` after layer `layer`.
    pub fn get(&self, layer: usize, row: usize, ch: usize) -> f64 {
        self.layers[layer][(row - 1) * self.d + ch]
    }

    /// Index of the final layer, for use with [`ActivationTensor::get`].
    pub fn depth_last(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn last(&self) -> &[f64] {
        self.layers.last().unwrap()
    }
}

/// Maps an SOS-prefixed word to symbol indices of `net`.
pub fn encode_input<S: AsRef<str>>(
    net: &LimitTransformer,
    x: &[S],
) -> Result<Vec<usize>, RuntimeError> {
    match x.first() {
        Some(s) if s.as_ref() == SOS => {}
        _ => {
            return Err(RuntimeError::MalformedInput(
                "input must start with the start token".into(),
            ))
        }
    }
    x.iter()
        .enumerate()
        .map(|(k, s)| {
            let s = s.as_ref();
            if k > 0 && s == SOS {
                return Err(RuntimeError::MalformedInput(format!(
                    "start token repeated at row {}",
                    k + 1
                )));
            }
            net.symbol_index(s)
                .ok_or_else(|| RuntimeError::MalformedInput(format!("unknown symbol {s:?}")))
        })
        .collect()
}

/// Prepends `$` to `w` and encodes it.
pub fn encode_word<S: AsRef<str>>(
    net: &LimitTransformer,
    w: &[S],
) -> Result<Vec<usize>, RuntimeError> {
    let mut x: Vec<&str> = Vec::with_capacity(w.len() + 1);
    x.push(SOS);
    x.extend(w.iter().map(AsRef::as_ref));
    encode_input(net, &x)
}

fn embed(net: &LimitTransformer, ids: &[usize], o: usize) -> Vec<f64> {
    let d = net.d;
    let mut y = vec![0.0; ids.len() * d];
    let period = net.encoding.period();
    for &(r, c, v) in net.embedding.entries() {
        for (row, &s) in ids.iter().enumerate() {
            if s == r as usize {
                y[row * d + c as usize] += v;
            }
        }
    }
    for &(r, c, v) in net.encoding.table.entries() {
        for row in 0..ids.len() {
            // 0-based row index equals (r_1based - 1)
            if (row + o) % period == r as usize {
                y[row * d + c as usize] += v;
            }
        }
    }
    y
}

/// Exact accumulator for sums of `p`-bit dyadic weights, falling back to
/// `f64` when a weight is too large to scale into an `i128`.
struct WeightSum {
    scale: f64,
    exact: i128,
    float: f64,
    exact_ok: bool,
}

impl WeightSum {
    fn new(p: u32) -> Self {
        Self {
            scale: (p as f64).exp2(),
            exact: 0,
            float: 0.0,
            exact_ok: true,
        }
    }

    fn add(&mut self, w: f64, times: usize) {
        self.float += w * times as f64;
        if self.exact_ok {
            let s = w * self.scale;
            if s.abs() < 2f64.powi(100) && s.fract() == 0.0 {
                self.exact += s as i128 * times as i128;
            } else {
                self.exact_ok = false;
            }
        }
    }

    fn total(&self) -> f64 {
        if self.exact_ok {
            self.exact as f64 / self.scale
        } else {
            self.float
        }
    }
}

struct Ctx<'a> {
    net: &'a LimitTransformer,
    ln_n: f64,
    memo: HashMap<u64, f64>,
    flags: ForwardFlags,
}

impl Ctx<'_> {
    fn weight(&mut self, logit: f64) -> f64 {
        if let Some(&w) = self.memo.get(&logit.to_bits()) {
            return w;
        }
        let mut z = self.ln_n * logit;
        if z > EXP_LIMIT {
            z = EXP_LIMIT;
            self.flags.exp_saturated = true;
        }
        let w = self.net.precision.round(z.exp());
        self.memo.insert(logit.to_bits(), w);
        w
    }

    fn logit(&self, dot: f64, phi: f64) -> f64 {
        self.net.precision.round(dot + phi)
    }
}

/// Per-head data that only depends on the layer input.
struct HeadPrep {
    /// V output rows with entries, and V y_j restricted to them (n × |vrows|).
    vrows: Vec<usize>,
    vy: Vec<f64>,
    /// rows where both K and Q have entries; K y_j and Q y_i restricted to them
    kq: Vec<usize>,
    ky: Vec<f64>,
    qy: Vec<f64>,
    /// keys with K y_j != 0 on `kq`
    key_specials: Vec<usize>,
}

fn prepare(head: &super::Head, y: &[f64], n: usize, d: usize) -> HeadPrep {
    let vrows = head.v.nonzero_rows();
    let vpos: HashMap<usize, usize> = vrows.iter().enumerate().map(|(k, r)| (*r, k)).collect();
    let nv = vrows.len();
    let mut vy = vec![0.0; n * nv];
    for j in 0..n {
        let yj = &y[j * d..(j + 1) * d];
        for &(r, c, v) in head.v.entries() {
            vy[j * nv + vpos[&(r as usize)]] += v * yj[c as usize];
        }
    }
    let krows = head.k.nonzero_rows();
    let qrows = head.q.nonzero_rows();
    let kq: Vec<usize> = krows.into_iter().filter(|r| qrows.contains(r)).collect();
    let na = kq.len();
    let mut ky = vec![0.0; n * na];
    let mut qy = vec![0.0; n * na];
    let mut key_specials = Vec::new();
    if na > 0 {
        let apos: HashMap<usize, usize> = kq.iter().enumerate().map(|(k, r)| (*r, k)).collect();
        for j in 0..n {
            let yj = &y[j * d..(j + 1) * d];
            for &(r, c, v) in head.k.entries() {
                if let Some(&a) = apos.get(&(r as usize)) {
                    ky[j * na + a] += v * yj[c as usize];
                }
            }
            for &(r, c, v) in head.q.entries() {
                if let Some(&a) = apos.get(&(r as usize)) {
                    qy[j * na + a] += v * yj[c as usize];
                }
            }
            if ky[j * na..(j + 1) * na].iter().any(|v| *v != 0.0) {
                key_specials.push(j);
            }
        }
    }
    HeadPrep {
        vrows,
        vy,
        kq,
        ky,
        qy,
        key_specials,
    }
}

impl HeadPrep {
    fn dot(&self, i: usize, j: usize) -> f64 {
        let na = self.kq.len();
        (0..na).map(|a| self.ky[j * na + a] * self.qy[i * na + a]).sum()
    }
}

fn attention(cx: &mut Ctx, head: &super::Head, y: &[f64], n: usize, delta: &mut [f64]) {
    let d = cx.net.d;
    let hp = prepare(head, y, n, d);
    let nv = hp.vrows.len();
    let tau = if head.phi.is_zero() {
        None
    } else {
        Some(head.phi.radius())
    };
    let mut prefix = vec![0.0; nv];
    let mut specials: Vec<usize> = Vec::new();
    let mut num = vec![0.0; nv];
    let p = cx.net.precision.bits();
    for i in 0..n {
        for (k, acc) in prefix.iter_mut().enumerate() {
            *acc += hp.vy[i * nv + k];
        }
        specials.clear();
        let lo = tau.map(|t| i.saturating_sub(t));
        if let Some(lo) = lo {
            specials.extend(lo..=i);
        }
        if !hp.key_specials.is_empty() {
            let na = hp.kq.len();
            if hp.qy[i * na..(i + 1) * na].iter().any(|v| *v != 0.0) {
                for &j in &hp.key_specials {
                    if j > i {
                        break;
                    }
                    if lo.is_none_or(|lo| j < lo) {
                        specials.push(j);
                    }
                }
            }
        }
        let mut sum = WeightSum::new(p);
        sum.add(1.0, i + 1 - specials.len());
        num.copy_from_slice(&prefix);
        for &j in &specials {
            let dot = if hp.kq.is_empty() { 0.0 } else { hp.dot(i, j) };
            let a = cx.logit(dot, head.phi.at(i - j));
            let w = cx.weight(a);
            sum.add(w, 1);
            if w != 1.0 {
                for (k, x) in num.iter_mut().enumerate() {
                    *x += (w - 1.0) * hp.vy[j * nv + k];
                }
            }
        }
        let s = sum.total();
        if s == 0.0 {
            cx.flags.zero_weight_sum = true;
            continue;
        }
        for (k, &r) in hp.vrows.iter().enumerate() {
            delta[i * d + r] += num[k] / s;
        }
    }
}

fn mlp(net: &LimitTransformer, l: usize, y: &mut [f64], n: usize) {
    let m = &net.layers[l].mlp;
    let f = m.width();
    if f == 0 {
        return;
    }
    let d = net.d;
    let mut h = vec![0.0; f];
    for row in y.chunks_exact_mut(d).take(n) {
        h.copy_from_slice(&m.bias);
        m.a.mul_add(row, &mut h);
        for (x, act) in h.iter_mut().zip(&m.act) {
            *x = act.apply(*x);
        }
        m.b.mul_add(&h, row);
    }
}

fn layer_step(cx: &mut Ctx, l: usize, y: &mut [f64], n: usize) {
    let d = cx.net.d;
    let layer = &cx.net.layers[l];
    if layer.heads.iter().any(|h| !h.v.is_zero()) {
        let mut delta = vec![0.0; n * d];
        for head in &layer.heads {
            if !head.v.is_zero() {
                attention(cx, head, y, n, &mut delta);
            }
        }
        for (a, b) in y.iter_mut().zip(&delta) {
            *a += b;
        }
    }
    mlp(cx.net, l, y, n);
}

fn logits(net: &LimitTransformer, y: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|r| {
            let mut out = vec![0.0; net.out_dim()];
            net.unembedding.mul_add(&y[r * net.d..(r + 1) * net.d], &mut out);
            out
        })
        .collect()
}

fn run(
    net: &LimitTransformer,
    ids: &[usize],
    o: usize,
    mut keep: impl FnMut(&[f64]),
) -> (Vec<f64>, ForwardFlags) {
    let n = ids.len();
    let mut cx = Ctx {
        net,
        ln_n: (n as f64).ln(),
        memo: HashMap::new(),
        flags: ForwardFlags::default(),
    };
    let mut y = embed(net, ids, o);
    keep(&y);
    for l in 0..net.layers.len() {
        layer_step(&mut cx, l, &mut y, n);
        keep(&y);
    }
    (y, cx.flags)
}

/// Full forward pass on an SOS-prefixed word at positional offset `o`.
pub fn forward<S: AsRef<str>>(
    net: &LimitTransformer,
    x: &[S],
    o: usize,
) -> Result<ActivationTensor, RuntimeError> {
    let ids = encode_input(net, x)?;
    Ok(forward_ids(net, &ids, o))
}

/// [`forward`] on pre-encoded input (index 0 must be the start token).
pub fn forward_ids(net: &LimitTransformer, ids: &[usize], o: usize) -> ActivationTensor {
    let mut layers = Vec::with_capacity(net.layers.len() + 1);
    let (y, flags) = run(net, ids, o, |y| layers.push(y.to_vec()));
    ActivationTensor {
        n: ids.len(),
        d: net.d,
        logits: logits(net, &y, ids.len()),
        layers,
        flags,
    }
}

/// Final residual stream and output logits, without keeping intermediate layers.
pub fn forward_final(
    net: &LimitTransformer,
    ids: &[usize],
    o: usize,
) -> (Vec<f64>, Vec<Vec<f64>>, ForwardFlags) {
    let (y, flags) = run(net, ids, o, |_| {});
    let lg = logits(net, &y, ids.len());
    (y, lg, flags)
}

/// Network acceptance of `w`: last output coordinate at the last row of
/// `$w` is positive. The empty word uses the configured flag.
pub fn accepts_net<S: AsRef<str>>(net: &LimitTransformer, w: &[S]) -> Result<bool, RuntimeError> {
    if w.is_empty() {
        return Ok(net.empty_accepts);
    }
    let ids = encode_word(net, w)?;
    Ok(accepts_ids(net, &ids))
}

/// Acceptance on encoded `$w` (length ≥ 2).
pub fn accepts_ids(net: &LimitTransformer, ids: &[usize]) -> bool {
    if ids.len() <= 1 {
        return net.empty_accepts;
    }
    let (_, lg, _) = forward_final(net, ids, 0);
    *lg.last().unwrap().last().unwrap() > 0.0
}

/// Predicted symbol sets read off the network outputs at program positions
/// `1..=|w|`: every output except the last is labelled with a symbol and
/// counts as predicted when positive. Sets are in network symbol order.
pub fn predicted_sets_net<S: AsRef<str>>(
    net: &LimitTransformer,
    w: &[S],
) -> Result<Vec<Vec<String>>, RuntimeError> {
    let ids = encode_word(net, w)?;
    let (_, lg, _) = forward_final(net, &ids, 0);
    let k = net.out_dim() - 1;
    let mut order: Vec<(usize, usize)> = net.output_labels[..k]
        .iter()
        .enumerate()
        .filter_map(|(o, s)| net.symbol_index(s).map(|i| (i, o)))
        .collect();
    order.sort_unstable();
    Ok(lg[1..]
        .iter()
        .map(|row| {
            order
                .iter()
                .filter(|(_, o)| row[*o] > 0.0)
                .map(|(i, _)| net.symbols[*i].clone())
                .collect()
        })
        .collect())
}

/// Normalised attention weights of head `h` in layer `l` for 1-based query
/// row `row`, over keys `1..=row`, computed directly from the definition.
pub fn attention_weights<S: AsRef<str>>(
    net: &LimitTransformer,
    x: &[S],
    l: usize,
    h: usize,
    row: usize,
) -> Result<Vec<f64>, RuntimeError> {
    let ids = encode_input(net, x)?;
    let n = ids.len();
    if row == 0 || row > n || l >= net.depth() || h >= net.heads() {
        return Err(RuntimeError::MalformedInput("no such row, layer or head".into()));
    }
    let mut cx = Ctx {
        net,
        ln_n: (n as f64).ln(),
        memo: HashMap::new(),
        flags: ForwardFlags::default(),
    };
    let mut y = embed(net, &ids, 0);
    for k in 0..l {
        layer_step(&mut cx, k, &mut y, n);
    }
    let head = &net.layers[l].heads[h];
    let hp = prepare(head, &y, n, net.d);
    let i = row - 1;
    let ws: Vec<f64> = (0..=i)
        .map(|j| {
            let dot = if hp.kq.is_empty() { 0.0 } else { hp.dot(i, j) };
            let a = cx.logit(dot, head.phi.at(i - j));
            cx.weight(a)
        })
        .collect();
    let mut sum = WeightSum::new(net.precision.bits());
    for &w in &ws {
        sum.add(w, 1);
    }
    let s = sum.total();
    Ok(ws.iter().map(|w| w / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{
        Activation, FixedPrecision, Head, Layer, Matrix, Mlp, PeriodicEncoding, PositionalLogitFn,
    };

    /// Symbols `$`, `a`, `b`; channel 0 is 1 on `b`. One layer, one head.
    fn net(head: Head, mlp: Mlp, d: usize) -> LimitTransformer {
        let t = LimitTransformer {
            symbols: vec![SOS.into(), "a".into(), "b".into()],
            d,
            embedding: Matrix::from_entries(3, d, [(2, 0, 1.0)]),
            encoding: PeriodicEncoding::constant_zero(d),
            layers: vec![Layer {
                heads: vec![head],
                mlp,
            }],
            unembedding: Matrix::from_entries(1, d, [(0, d - 1, 1.0)]),
            output_labels: vec!["accept".into()],
            precision: FixedPrecision::default(),
            param_precision: 24,
            empty_accepts: false,
            metadata: None,
        };
        t.validate().unwrap();
        t
    }

    fn copy_head(phi: Vec<f64>) -> Head {
        Head {
            v: Matrix::from_entries(2, 2, [(1, 0, 1.0)]),
            phi: PositionalLogitFn::new(phi),
            ..Head::zero(2)
        }
    }

    #[test]
    fn uniform_average() {
        // value channel (0,1,1,0) over rows 1..4
        let t = net(copy_head(vec![]), Mlp::empty(2), 2);
        let a = forward(&t, &["$", "b", "b", "a"], 0).unwrap();
        assert_eq!(a.get(1, 4, 1), 0.5);
        assert_eq!(a.get(1, 2, 1), 0.5);
        assert_eq!(a.get(1, 3, 1), 2.0 / 3.0);
        assert_eq!(a.flags, ForwardFlags::default());
    }

    #[test]
    fn local_head_weight() {
        // n = 8, φ(1) = 1, query row 6, only row 5 carries the value.
        let t = net(copy_head(vec![0.0, 1.0]), Mlp::empty(2), 2);
        let x = ["$", "a", "a", "a", "b", "a", "a", "a"];
        let w = attention_weights(&t, &x, 0, 0, 6).unwrap();
        // five keys of weight 1 plus the target of weight e^{ln 8} = 8
        assert_eq!(w[4], 8.0 / 13.0);
        assert!(w[4] > 0.5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let a = forward(&t, &x, 0).unwrap();
        assert_eq!(a.get(1, 6, 1), 8.0 / 13.0);
    }

    #[test]
    fn heaviside_at_zero() {
        let mlp = Mlp {
            a: Matrix::zeros(1, 2),
            b: Matrix::from_entries(2, 1, [(1, 0, 1.0)]),
            bias: vec![0.0],
            act: vec![Activation::Heaviside],
        };
        let t = net(Head::zero(2), mlp, 2);
        let a = forward(&t, &["$", "a"], 0).unwrap();
        assert_eq!(a.get(1, 2, 1), 1.0);
        assert!(accepts_net(&t, &["a"]).unwrap());
        assert!(!accepts_net(&t, &[] as &[&str]).unwrap());
    }

    #[test]
    fn key_dependent_logits_match_direct_weights() {
        // K reads channel 0 (the `b` indicator), Q reads the constant-ish
        // channel 1 filled by the embedding of every non-start symbol.
        let d = 3;
        let mut t = net(Head::zero(d), Mlp::empty(d), d);
        t.embedding = Matrix::from_entries(3, d, [(2, 0, 1.0), (1, 1, 1.0), (2, 1, 1.0)]);
        t.layers[0].heads[0] = Head {
            k: Matrix::from_entries(d, d, [(0, 0, 0.75)]),
            q: Matrix::from_entries(d, d, [(0, 1, 1.0)]),
            v: Matrix::from_entries(d, d, [(2, 0, 1.0)]),
            phi: PositionalLogitFn::new(vec![0.5, -0.25]),
        };
        let x = ["$", "b", "a", "b", "b", "a", "a", "b", "a"];
        let a = forward(&t, &x, 0).unwrap();
        for row in 1..=x.len() {
            let w = attention_weights(&t, &x, 0, 0, row).unwrap();
            let expect: f64 = (0..row).filter(|&j| x[j] == "b").map(|j| w[j]).sum();
            assert!((a.get(1, row, 2) - expect).abs() < 1e-12, "row {row}");
        }
    }

    #[test]
    fn saturation_is_flagged() {
        let t = net(copy_head(vec![1e6]), Mlp::empty(2), 2);
        let a = forward(&t, &["$", "b", "a"], 0).unwrap();
        assert!(a.flags.exp_saturated);
        assert!(a.last().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn malformed_inputs() {
        let t = net(Head::zero(2), Mlp::empty(2), 2);
        assert!(forward(&t, &["a"], 0).is_err());
        assert!(forward(&t, &["$", "$"], 0).is_err());
        assert!(forward(&t, &["$", "z"], 0).is_err());
    }
}
