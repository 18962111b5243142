use serde::{Deserialize, Serialize};

use super::{FixedPrecision, Matrix, RuntimeError};
use crate::dsl::SOS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Heaviside,
}

impl Activation {
    /// `hs(x) = 1` for `x >= 0`, `-1` otherwise.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Heaviside => {
                if x >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn tag(self) -> char {
        match self {
            Activation::Relu => 'R',
            Activation::Heaviside => 'H',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            'R' => Some(Activation::Relu),
            'H' => Some(Activation::Heaviside),
            _ => None,
        }
    }
}

/// Positional logit term as a function of `d = i - j >= 0`. Entries past the
/// end of the table are zero, so the radius is `table.len() - 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PositionalLogitFn {
    table: Vec<f64>,
}

impl PositionalLogitFn {
    pub fn zero() -> Self {
        Self { table: Vec::new() }
    }

    /// Trailing zeros are trimmed.
    pub fn new(mut table: Vec<f64>) -> Self {
        while table.last() == Some(&0.0) {
            table.pop();
        }
        Self { table }
    }

    pub fn at(&self, d: usize) -> f64 {
        self.table.get(d).copied().unwrap_or(0.0)
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    /// Largest `d` with a non-zero value (0 for the zero function).
    pub fn radius(&self) -> usize {
        self.table.len().saturating_sub(1)
    }

    pub fn energy(&self) -> f64 {
        self.table.iter().map(|v| v * v).sum()
    }
}

/// Encodings repeating with period `Δ`: row `r` (1-based) at offset `o`
/// reads `table[(r + o - 1) mod Δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicEncoding {
    pub table: Matrix,
}

impl PeriodicEncoding {
    pub fn constant_zero(d: usize) -> Self {
        Self {
            table: Matrix::zeros(1, d),
        }
    }

    pub fn period(&self) -> usize {
        self.table.rows()
    }

    /// Smallest period of the infinite sequence the table describes.
    pub fn minimal_period(&self) -> usize {
        let n = self.period();
        let rows: Vec<Vec<f64>> = (0..n).map(|r| self.table.row(r)).collect();
        (1..=n)
            .filter(|k| n % k == 0)
            .find(|&k| (0..n).all(|r| rows[r] == rows[r % k]))
            .unwrap_or(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub k: Matrix,
    pub q: Matrix,
    pub v: Matrix,
    pub phi: PositionalLogitFn,
}

impl Head {
    pub fn zero(d: usize) -> Self {
        Self {
            k: Matrix::zeros(d, d),
            q: Matrix::zeros(d, d),
            v: Matrix::zeros(d, d),
            phi: PositionalLogitFn::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// d_ff × d
    pub a: Matrix,
    /// d × d_ff
    pub b: Matrix,
    pub bias: Vec<f64>,
    pub act: Vec<Activation>,
}

impl Mlp {
    pub fn empty(d: usize) -> Self {
        Self {
            a: Matrix::zeros(0, d),
            b: Matrix::zeros(d, 0),
            bias: Vec::new(),
            act: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.act.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub heads: Vec<Head>,
    pub mlp: Mlp,
}

/// A Limit Transformer: token embeddings plus periodic encodings, `L` layers
/// of `H` heads with positional logit terms and a mixed ReLU/Heaviside MLP,
/// and an unembedding. Symbol 0 is always the start token `$`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTransformer {
    pub symbols: Vec<String>,
    pub d: usize,
    /// (|Σ|+1) × d
    pub embedding: Matrix,
    pub encoding: PeriodicEncoding,
    pub layers: Vec<Layer>,
    /// out_dim × d; the last output coordinate decides acceptance
    pub unembedding: Matrix,
    pub output_labels: Vec<String>,
    pub precision: FixedPrecision,
    pub param_precision: u32,
    pub empty_accepts: bool,
    /// Free-form provenance (channel plan, compile report).
    pub metadata: Option<serde_json::Value>,
}

impl LimitTransformer {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn heads(&self) -> usize {
        self.layers.first().map_or(0, |l| l.heads.len())
    }

    pub fn out_dim(&self) -> usize {
        self.unembedding.rows()
    }

    pub fn symbol_index(&self, s: &str) -> Option<usize> {
        self.symbols.iter().position(|x| x == s)
    }

    /// Checks every shape, tag list and finiteness invariant.
    pub fn validate(&self) -> Result<(), RuntimeError> {
        let bad = |m: String| Err(RuntimeError::DimensionMismatch(m));
        let d = self.d;
        if self.symbols.first().map(String::as_str) != Some(SOS) {
            return bad("symbol 0 must be the start token".into());
        }
        if self.symbols[1..].iter().any(|s| s == SOS) {
            return bad("start token listed twice".into());
        }
        let shape = |m: &Matrix, r: usize, c: usize, what: &str| {
            if m.rows() != r || m.cols() != c {
                Err(RuntimeError::DimensionMismatch(format!(
                    "{what} is {}x{}, expected {r}x{c}",
                    m.rows(),
                    m.cols()
                )))
            } else if !m.all_finite() {
                Err(RuntimeError::NonFinite)
            } else {
                Ok(())
            }
        };
        shape(&self.embedding, self.symbols.len(), d, "embedding")?;
        if self.encoding.period() == 0 {
            return bad("encoding period must be positive".into());
        }
        shape(&self.encoding.table, self.encoding.period(), d, "encoding")?;
        let h = self.heads();
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.heads.len() != h {
                return bad(format!("layer {l} has {} heads, expected {h}", layer.heads.len()));
            }
            for (k, head) in layer.heads.iter().enumerate() {
                shape(&head.k, d, d, &format!("K[{l}][{k}]"))?;
                shape(&head.q, d, d, &format!("Q[{l}][{k}]"))?;
                shape(&head.v, d, d, &format!("V[{l}][{k}]"))?;
                if head.phi.table().iter().any(|v| !v.is_finite()) {
                    return Err(RuntimeError::NonFinite);
                }
            }
            let f = layer.mlp.act.len();
            shape(&layer.mlp.a, f, d, &format!("A[{l}]"))?;
            shape(&layer.mlp.b, d, f, &format!("B[{l}]"))?;
            if layer.mlp.bias.len() != f {
                return bad(format!("b[{l}] has {} entries, expected {f}", layer.mlp.bias.len()));
            }
            if layer.mlp.bias.iter().any(|v| !v.is_finite()) {
                return Err(RuntimeError::NonFinite);
            }
        }
        shape(&self.unembedding, self.unembedding.rows(), d, "unembedding")?;
        if self.unembedding.rows() == 0 {
            return bad("unembedding needs at least one output".into());
        }
        if self.output_labels.len() != self.unembedding.rows() {
            return bad(format!(
                "{} output labels for {} outputs",
                self.output_labels.len(),
                self.unembedding.rows()
            ));
        }
        Ok(())
    }
}
