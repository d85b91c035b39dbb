//! Banded matrices and LU factorization with partial pivoting.
//!
//! Storage is row-major with room for the pivoting fill: row `i` keeps
//! columns `i - kl ..= i + kl + ku`.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.n);
        for (i, d) in diag.iter().enumerate() {
            let k = self.idx(i, i);
            self.data[k] += d;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let base = i * self.width() + self.kl - i;
            let mut s = 0.0;
            for j in lo..hi {
                s += self.data[base + j] * x[j];
            }
            *yi = s;
        }
    }

    pub fn lu(&self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut a = self.clone();
        let mut piv = vec![0usize; n];
        let reach = kl + ku;
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.idx(k, k)].abs();
            for r in k + 1..=last {
                let v = a.data[a.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= f64::EPSILON * scale * 1e-3 || best == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {k} of a banded factorization")));
            }
            piv[k] = p;
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (ik, ip) = (a.idx(k, c), a.idx(p, c));
                    a.data.swap(ik, ip);
                }
            }
            let pivot = a.data[a.idx(k, k)];
            for r in k + 1..=last {
                let irk = a.idx(r, k);
                let l = a.data[irk] / pivot;
                a.data[irk] = l;
                if l != 0.0 {
                    for c in k + 1..=cmax {
                        let kc = a.data[a.idx(k, c)];
                        let irc = a.idx(r, c);
                        a.data[irc] -= l * kc;
                    }
                }
            }
        }
        Ok(BandLu { a, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    a: Banded,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + a.kl).min(n - 1) {
                    b[r] -= a.data[a.idx(r, k)] * bk;
                }
            }
        }
        let reach = a.kl + a.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                s -= a.data[a.idx(k, c)] * b[c];
            }
            b[k] = s / a.data[a.idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
