//! Parameters pinned to the Felli–Schneider curve.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FsParameters {
    pub d: usize,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub a_c: f64,
    pub lambda_fs: f64,
    /// `S_FS^{-1}`; only known once a grid has resolved the bubble.
    pub s_inv: Option<f64>,
    pub a_p: f64,
    pub b_p: f64,
}

impl FsParameters {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
        let df = d as f64;
        let lambda_fs = 4.0 * (df - 1.0) / ((p + 1.0).powi(2) - 4.0);
        let a_c = (df - 2.0) / 2.0;
        let a = a_c - lambda_fs.sqrt();
        if a >= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "(d, p) = ({d}, {p}) gives a = {a} >= 0, outside the degenerate regime"
            )));
        }
        let b = a + 1.0 - k_of(d, p);
        Ok(Self {
            d,
            p,
            a,
            b,
            a_c,
            lambda_fs,
            s_inv: None,
            a_p: p * (p - 1.0) / 2.0,
            b_p: p * (p - 1.0) * (p - 2.0) / 6.0,
        })
    }

    pub fn sqrt_lambda(&self) -> f64 {
        self.lambda_fs.sqrt()
    }

    /// `1 + a - b`.
    pub fn k(&self) -> f64 {
        1.0 + self.a - self.b
    }

    /// Exponent recovered from `(a, b)` through `p = (d + 2k)/(d - 2k)`.
    pub fn p_from_ab(&self) -> f64 {
        let df = self.d as f64;
        let k = self.k();
        (df + 2.0 * k) / (df - 2.0 * k)
    }

    pub fn b_fs(&self) -> f64 {
        b_fs(self.d, self.a)
    }

    pub fn with_s_inv(mut self, s_inv: f64) -> Self {
        self.s_inv = Some(s_inv);
        self
    }
}

fn k_of(d: usize, p: f64) -> f64 {
    d as f64 * (p - 1.0) / (2.0 * (p + 1.0))
}

/// The Felli–Schneider curve `b_FS(a)`.
pub fn b_fs(d: usize, a: f64) -> f64 {
    let df = d as f64;
    let a_c = (df - 2.0) / 2.0;
    let g = a_c - a;
    df * g / (2.0 * (g * g + df - 1.0).sqrt()) + a - a_c
}
