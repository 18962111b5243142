//! JSON net format. Every real is written as an exact dyadic rational
//! `"<m>p<e>"` meaning `m · 2^e` with `m` an odd integer (or `"0"`), so a
//! round trip is bit-exact.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use super::{
    Activation, FixedPrecision, Head, Layer, LimitTransformer, Matrix, Mlp, PeriodicEncoding,
    PositionalLogitFn, RuntimeError,
};

pub const FORMAT_NAME: &str = "crasp-limit-transformer";
pub const FORMAT_VERSION: u32 = 1;

/// Exact text form of a finite double.
pub fn dyadic_string(x: f64) -> String {
    assert!(x.is_finite(), "dyadic_string of non-finite value");
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += tz as i64;
    format!("{sign}{m}p{e}")
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Inverse of [`dyadic_string`]. Rejects values that are not exactly
/// representable as a finite double.
pub fn dyadic_parse(s: &str) -> Result<f64, String> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = if body == "0" {
        0.0
    } else {
        let (m, e) = body
            .split_once('p')
            .ok_or_else(|| format!("expected <mantissa>p<exponent>, got {s:?}"))?;
        if m.is_empty() || !m.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad mantissa in {s:?}"));
        }
        let m: u64 = m.parse().map_err(|_| format!("mantissa out of range in {s:?}"))?;
        let e: i64 = e.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
        if m == 0 || m >= 1u64 << 53 {
            return Err(format!("mantissa must be in 1..2^53 in {s:?}"));
        }
        let v = ldexp(m as f64, e);
        if !v.is_finite() || v == 0.0 || dyadic_string(v) != format!("{}p{}", m >> m.trailing_zeros(), e + m.trailing_zeros() as i64) {
            return Err(format!("{s:?} is not an exact finite double"));
        }
        v
    };
    Ok(if neg { -v } else { v })
}

#[derive(Debug, Clone, Copy)]
struct Dy(f64);

impl Serialize for Dy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&dyadic_string(self.0))
    }
}

impl<'de> Deserialize<'de> for Dy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        dyadic_parse(&s).map(Dy).map_err(de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, Dy)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WHead {
    k: WMatrix,
    q: WMatrix,
    v: WMatrix,
    phi: Vec<Dy>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WMlp {
    a: WMatrix,
    b: WMatrix,
    bias: Vec<Dy>,
    act: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WLayer {
    heads: Vec<WHead>,
    mlp: WMlp,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WNet {
    format: String,
    version: u32,
    symbols: Vec<String>,
    d: usize,
    precision: u32,
    param_precision: u32,
    empty_accepts: bool,
    embedding: WMatrix,
    encoding: WMatrix,
    layers: Vec<WLayer>,
    unembedding: WMatrix,
    output_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

fn wm(m: &Matrix) -> WMatrix {
    WMatrix {
        rows: m.rows(),
        cols: m.cols(),
        entries: m.entries().iter().map(|&(r, c, v)| (r, c, Dy(v))).collect(),
    }
}

fn dys(v: &[f64]) -> Vec<Dy> {
    v.iter().copied().map(Dy).collect()
}

/// Pretty-printed JSON; deterministic for a given net.
pub fn serialize(t: &LimitTransformer) -> String {
    let w = WNet {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        symbols: t.symbols.clone(),
        d: t.d,
        precision: t.precision.bits(),
        param_precision: t.param_precision,
        empty_accepts: t.empty_accepts,
        embedding: wm(&t.embedding),
        encoding: wm(&t.encoding.table),
        layers: t
            .layers
            .iter()
            .map(|l| WLayer {
                heads: l
                    .heads
                    .iter()
                    .map(|h| WHead {
                        k: wm(&h.k),
                        q: wm(&h.q),
                        v: wm(&h.v),
                        phi: dys(h.phi.table()),
                    })
                    .collect(),
                mlp: WMlp {
                    a: wm(&l.mlp.a),
                    b: wm(&l.mlp.b),
                    bias: dys(&l.mlp.bias),
                    act: l.mlp.act.iter().map(|a| a.tag()).collect(),
                },
            })
            .collect(),
        unembedding: wm(&t.unembedding),
        output_labels: t.output_labels.clone(),
        metadata: t.metadata.clone(),
    };
    let mut s = serde_json::to_string_pretty(&w).expect("net serializes");
    s.push('\n');
    s
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> RuntimeError {
    RuntimeError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn matrix(w: WMatrix, path: &str) -> Result<Matrix, RuntimeError> {
    let mut prev: Option<(u32, u32)> = None;
    for (k, &(r, c, Dy(v))) in w.entries.iter().enumerate() {
        let at = || format!("{path}.entries[{k}]");
        if r as usize >= w.rows || c as usize >= w.cols {
            return Err(schema(at(), format!("index ({r},{c}) outside {}x{}", w.rows, w.cols)));
        }
        if v == 0.0 {
            return Err(schema(at(), "explicit zero entry"));
        }
        if prev.is_some_and(|p| p >= (r, c)) {
            return Err(schema(at(), "entries must be sorted by (row, col) without repeats"));
        }
        prev = Some((r, c));
    }
    Ok(Matrix::from_entries(
        w.rows,
        w.cols,
        w.entries.into_iter().map(|(r, c, Dy(v))| (r as usize, c as usize, v)),
    ))
}

fn floats(v: Vec<Dy>) -> Vec<f64> {
    v.into_iter().map(|d| d.0).collect()
}

/// Parses and validates a net. Errors name the offending field path.
pub fn deserialize(text: &str) -> Result<LimitTransformer, RuntimeError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let w: WNet = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    if w.format != FORMAT_NAME {
        return Err(schema("format", format!("expected {FORMAT_NAME:?}, got {:?}", w.format)));
    }
    if w.version != FORMAT_VERSION {
        return Err(schema("version", format!("unsupported version {}", w.version)));
    }
    let precision =
        FixedPrecision::new(w.precision).map_err(|e| schema("precision", e.to_string()))?;
    let mut layers = Vec::with_capacity(w.layers.len());
    for (l, wl) in w.layers.into_iter().enumerate() {
        let mut heads = Vec::with_capacity(wl.heads.len());
        for (h, wh) in wl.heads.into_iter().enumerate() {
            let p = format!("layers[{l}].heads[{h}]");
            let phi = floats(wh.phi);
            if phi.last() == Some(&0.0) {
                return Err(schema(format!("{p}.phi"), "trailing zero in phi table"));
            }
            heads.push(Head {
                k: matrix(wh.k, &format!("{p}.k"))?,
                q: matrix(wh.q, &format!("{p}.q"))?,
                v: matrix(wh.v, &format!("{p}.v"))?,
                phi: PositionalLogitFn::new(phi),
            });
        }
        let p = format!("layers[{l}].mlp");
        let act = wl
            .mlp
            .act
            .chars()
            .map(|c| {
                Activation::from_tag(c)
                    .ok_or_else(|| schema(format!("{p}.act"), format!("unknown activation tag {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        layers.push(Layer {
            heads,
            mlp: Mlp {
                a: matrix(wl.mlp.a, &format!("{p}.a"))?,
                b: matrix(wl.mlp.b, &format!("{p}.b"))?,
                bias: floats(wl.mlp.bias),
                act,
            },
        });
    }
    let t = LimitTransformer {
        symbols: w.symbols,
        d: w.d,
        embedding: matrix(w.embedding, "embedding")?,
        encoding: PeriodicEncoding {
            table: matrix(w.encoding, "encoding")?,
        },
        layers,
        unembedding: matrix(w.unembedding, "unembedding")?,
        output_labels: w.output_labels,
        precision,
        param_precision: w.param_precision,
        empty_accepts: w.empty_accepts,
        metadata: w.metadata,
    };
    t.validate().map_err(|e| match e {
        RuntimeError::DimensionMismatch(m) => schema("(net)", m),
        other => other,
    })?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::SOS;

    pub(crate) fn identity_net() -> LimitTransformer {
        LimitTransformer {
            symbols: vec![SOS.into(), "a".into()],
            d: 1,
            embedding: Matrix::from_entries(2, 1, [(1, 0, 1.0)]),
            encoding: PeriodicEncoding::constant_zero(1),
            layers: vec![],
            unembedding: Matrix::from_entries(1, 1, [(0, 0, 1.0)]),
            output_labels: vec!["accept".into()],
            precision: FixedPrecision::default(),
            param_precision: 24,
            empty_accepts: false,
            metadata: None,
        }
    }

    #[test]
    fn dyadic_strings() {
        assert_eq!(dyadic_string(0.3125), "5p-4");
        assert_eq!(dyadic_string(-1.0), "-1p0");
        assert_eq!(dyadic_string(12.0), "3p2");
        assert_eq!(dyadic_string(0.0), "0");
        for x in [0.1, -1e-300, 5e-324, f64::MAX, 1.0 / 3.0, 123456.789] {
            assert_eq!(dyadic_parse(&dyadic_string(x)).unwrap().to_bits(), x.to_bits());
        }
        assert!(dyadic_parse("1.5").is_err());
        assert!(dyadic_parse("1p5000").is_err());
        assert!(dyadic_parse("9007199254740993p0").is_err());
    }

    #[test]
    fn minimal_net_round_trips() {
        let t = identity_net();
        t.validate().unwrap();
        let s = serialize(&t);
        assert_eq!(deserialize(&s).unwrap(), t);
        assert_eq!(serialize(&deserialize(&s).unwrap()), s);
    }

    #[test]
    fn corrupted_field_names_path() {
        let mut t = identity_net();
        t.layers.push(Layer {
            heads: vec![Head::zero(1)],
            mlp: Mlp::empty(1),
        });
        t.layers[0].heads[0].phi = PositionalLogitFn::new(vec![0.5]);
        let s = serialize(&t).replace("\"1p-1\"", "\"half\"");
        match deserialize(&s) {
            Err(RuntimeError::Schema { path, .. }) => assert_eq!(path, "layers[0].heads[0].phi[0]"),
            other => panic!("{other:?}"),
        }
        let s = serialize(&t).replace("\"d\": 1", "\"d\": 2");
        assert!(matches!(deserialize(&s), Err(RuntimeError::Schema { .. })));
        let s = serialize(&t).replace(FORMAT_NAME, "other");
        match deserialize(&s) {
            Err(RuntimeError::Schema { path, .. }) => assert_eq!(path, "format"),
            other => panic!("{other:?}"),
        }
    }
}
