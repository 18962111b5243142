use serde::Serialize;

use super::LimitTransformer;

/// Components of the R∞ complexity of a net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegBreakdown {
    /// `L + H + d`
    pub size: f64,
    /// parameter precision plus logit precision
    pub precision: f64,
    /// largest absolute parameter, encodings included, φ excluded
    pub magnitude: f64,
    /// minimal period of the positional encodings
    pub period: f64,
    /// largest `Σ_d φ(d)²` over heads
    pub phi_energy: f64,
    pub total: f64,
}

pub fn reg_infinity(t: &LimitTransformer) -> RegBreakdown {
    let size = (t.depth() + t.heads() + t.d) as f64;
    let precision = (t.param_precision + t.precision.bits()) as f64;
    let mut magnitude = t
        .embedding
        .max_abs()
        .max(t.encoding.table.max_abs())
        .max(t.unembedding.max_abs());
    let mut phi_energy: f64 = 0.0;
    for l in &t.layers {
        for h in &l.heads {
            magnitude = magnitude.max(h.k.max_abs()).max(h.q.max_abs()).max(h.v.max_abs());
            phi_energy = phi_energy.max(h.phi.energy());
        }
        magnitude = magnitude
            .max(l.mlp.a.max_abs())
            .max(l.mlp.b.max_abs())
            .max(l.mlp.bias.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let period = t.encoding.minimal_period() as f64;
    RegBreakdown {
        size,
        precision,
        magnitude,
        period,
        phi_energy,
        total: size + precision + magnitude + period + phi_energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::SOS;
    use crate::runtime::{
        FixedPrecision, Head, Layer, Matrix, Mlp, PeriodicEncoding, PositionalLogitFn,
    };

    fn zero_net() -> LimitTransformer {
        LimitTransformer {
            symbols: vec![SOS.into(), "a".into()],
            d: 2,
            embedding: Matrix::zeros(2, 2),
            encoding: PeriodicEncoding::constant_zero(2),
            layers: vec![Layer {
                heads: vec![Head::zero(2)],
                mlp: Mlp::empty(2),
            }],
            unembedding: Matrix::zeros(1, 2),
            output_labels: vec!["accept".into()],
            precision: FixedPrecision::default(),
            param_precision: 24,
            empty_accepts: false,
            metadata: None,
        }
    }

    #[test]
    fn zero_net_components() {
        let t = zero_net();
        t.validate().unwrap();
        let r = reg_infinity(&t);
        assert_eq!(
            (r.size, r.precision, r.magnitude, r.period, r.phi_energy),
            (4.0, 48.0, 0.0, 1.0, 0.0)
        );
        assert_eq!(r.total, 53.0);
    }

    #[test]
    fn period_and_phi() {
        let mut t = zero_net();
        // stored period 4, true period 2
        t.encoding.table = Matrix::from_entries(4, 2, [(0, 0, 1.0), (2, 0, 1.0)]);
        t.layers[0].heads[0].phi = PositionalLogitFn::new(vec![0.0, 2.0, 1.0]);
        t.layers[0].mlp.bias = vec![];
        let r = reg_infinity(&t);
        assert_eq!(r.period, 2.0);
        assert_eq!(r.phi_energy, 5.0);
        assert_eq!(r.magnitude, 1.0);
    }
}
