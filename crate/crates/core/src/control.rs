//! Static external field `H(x) = Σ_k a_k cos(k k₀ x) + b_k sin(k k₀ x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ControlFieldRepr", into = "ControlFieldRepr")]
pub struct ControlField {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub k0: f64,
}

#[derive(Serialize, Deserialize)]
struct ControlFieldRepr {
    #[serde(rename = "N")]
    n: usize,
    k0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<ControlFieldRepr> for ControlField {
    type Error = Error;

    fn try_from(r: ControlFieldRepr) -> Result<Self> {
        if r.a.len() != r.n || r.b.len() != r.n {
            return Err(Error::Config(format!(
                "control field declares N = {} but has {} cosine and {} sine coefficients",
                r.n,
                r.a.len(),
                r.b.len()
            )));
        }
        Ok(ControlField {
            a: r.a,
            b: r.b,
            k0: r.k0,
        })
    }
}

impl From<ControlField> for ControlFieldRepr {
    fn from(c: ControlField) -> Self {
        ControlFieldRepr {
            n: c.a.len(),
            k0: c.k0,
            a: c.a,
            b: c.b,
        }
    }
}

impl ControlField {
    pub fn zero(n: usize, k0: f64) -> Self {
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            k0,
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>, k0: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(Self { a, b, k0 })
    }

    /// Number of Fourier modes N.
    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(k, (&ak, &bk))| {
                let (s, c) = ((k + 1) as f64 * self.k0 * x).sin_cos();
                ak * c + bk * s
            })
            .sum()
    }

    pub fn sample(&self, grid: &PhaseSpaceGrid) -> Vec<f64> {
        (0..grid.mx).map(|i| self.eval(grid.x(i))).collect()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `(a₁..a_N, b₁..b_N)`.
    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.order());
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    pub fn unpack(params: &[f64], n: usize, k0: f64) -> Result<Self> {
        if params.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n,
                got: params.len(),
            });
        }
        Ok(Self {
            a: params[..n].to_vec(),
            b: params[n..].to_vec(),
            k0,
        })
    }
}

/// Selects which entries of the packed `(a, b)` vector an optimizer or
/// sweep may move; the rest stay at their base value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterMask {
    pub n: usize,
    pub free: Vec<usize>,
}

impl ParameterMask {
    pub fn all(n: usize) -> Self {
        Self {
            n,
            free: (0..2 * n).collect(),
        }
    }

    pub fn new(n: usize, free: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = free.iter().find(|&&i| i >= 2 * n) {
            return Err(Error::Config(format!(
                "mask index {bad} out of range for N = {n}"
            )));
        }
        let mut sorted = free.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != free.len() {
            return Err(Error::Config("mask has duplicate indices".into()));
        }
        Ok(Self { n, free })
    }

    /// Index of `a_k` (1-based k) in the packed vector.
    pub fn a_index(&self, k: usize) -> usize {
        k - 1
    }

    /// Index of `b_k` (1-based k) in the packed vector.
    pub fn b_index(&self, k: usize) -> usize {
        self.n + k - 1
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn full_len(&self) -> usize {
        2 * self.n
    }

    pub fn is_free(&self, index: usize) -> bool {
        self.free.contains(&index)
    }

    /// Writes the free values into a copy of `base`.
    pub fn expand(&self, free_values: &[f64], base: &[f64]) -> Result<Vec<f64>> {
        if free_values.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: free_values.len(),
            });
        }
        if base.len() != self.full_len() {
            return Err(Error::LengthMismatch {
                expected: self.full_len(),
                got: base.len(),
            });
        }
        let mut full = base.to_vec();
        for (&idx, &val) in self.free.iter().zip(free_values) {
            full[idx] = val;
        }
        Ok(full)
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Human-readable name of a packed index, e.g. `b2`.
    pub fn param_name(&self, index: usize) -> String {
        if index < self.n {
            format!("a{}", index + 1)
        } else {
            format!("b{}", index - self.n + 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn basic_evaluations() {
        let k0 = 0.2;
        assert_eq!(ControlField::zero(3, k0).eval(1.234), 0.0);
        let h = ControlField::new(vec![0.0], vec![1.0], k0).unwrap();
        assert!((h.eval(PI / (2.0 * k0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn choice_b_matches_direct_summation() {
        let grid = PhaseSpaceGrid::new(256, 256, 10.0 * PI, 6.0).unwrap();
        let h = ControlField::new(vec![0.0, 0.0], vec![-1.28741e-3, 2.5e-4], grid.k0()).unwrap();
        let sampled = h.sample(&grid);
        for (i, &hv) in sampled.iter().enumerate() {
            let x = i as f64 * 10.0 * PI / 256.0;
            let direct = -1.28741e-3 * (0.2 * x).sin() + 2.5e-4 * (0.4 * x).sin();
            assert!((hv - direct).abs() < 1e-17);
        }
    }

    #[test]
    fn pack_layout() {
        let h = ControlField::zero(14, 0.2);
        assert_eq!(h.pack().len(), 28);
        assert!(ControlField::unpack(&[1.0, 2.0, 3.0], 2, 0.2).is_err());
        let mask = ParameterMask::new(2, vec![2, 3]).unwrap();
        let full = mask.expand(&[-1e-3, 2e-4], &[0.0; 4]).unwrap();
        let f = ControlField::unpack(&full, 2, 0.2).unwrap();
        assert_eq!(f.a, vec![0.0, 0.0]);
        assert_eq!(f.b, vec![-1e-3, 2e-4]);
        assert_eq!(mask.param_name(3), "b2");
    }

    #[test]
    fn json_shape() {
        let h = ControlField::new(vec![1.5e-3], vec![-3.2e-4], 0.1).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("\"N\":1"));
        let back: ControlField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        let bad = r#"{"N":2,"k0":0.1,"a":[1.0],"b":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<ControlField>(bad).is_err());
    }

    proptest! {
        #[test]
        fn zero_mean_over_period(coeffs in prop::collection::vec(-1.0f64..1.0, 0..12)) {
            let n = coeffs.len() / 2;
            let h = ControlField::unpack(&coeffs[..2 * n], n, 0.2).unwrap();
            let grid = PhaseSpaceGrid::new(64, 8, 10.0 * PI, 6.0).unwrap();
            let integral: f64 = h.sample(&grid).iter().sum::<f64>() * grid.dx();
            prop_assert!(integral.abs() < 1e-12);
        }

        #[test]
        fn linear_in_coefficients(
            p in prop::collection::vec(-1.0f64..1.0, 6),
            q in prop::collection::vec(-1.0f64..1.0, 6),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
            x in 0.0f64..31.4,
        ) {
            let combo: Vec<f64> = p.iter().zip(&q).map(|(a, b)| alpha * a + beta * b).collect();
            let hp = ControlField::unpack(&p, 3, 0.2).unwrap();
            let hq = ControlField::unpack(&q, 3, 0.2).unwrap();
            let hc = ControlField::unpack(&combo, 3, 0.2).unwrap();
            prop_assert!((hc.eval(x) - (alpha * hp.eval(x) + beta * hq.eval(x))).abs() < 1e-13);
        }

        #[test]
        fn pack_roundtrip(p in prop::collection::vec(-1.0f64..1.0, 0..10)) {
            let n = p.len() / 2;
            let h = ControlField::unpack(&p[..2 * n], n, 0.3).unwrap();
            prop_assert_eq!(ControlField::unpack(&h.pack(), n, 0.3).unwrap(), h);
        }
    }
}
