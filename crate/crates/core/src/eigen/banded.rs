//! Symmetric banded matrices and their Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric `n × n` matrix with half-bandwidth `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    b: usize,
    // Row `i` stores columns `i − b ..= i` (leading entries unused near the top).
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, b: usize) -> Self {
        Self { n, b, data: vec![0.0; n * (b + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.b + 1) + (j + self.b - i)
    }

    /// Add `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.b, "entry ({i},{j}) outside bandwidth {}", self.b);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.b {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.b);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    /// In-place Cholesky `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(b));
                let mut s = self.data[self.idx(i, j)];
                for k in klo..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Degenerate(format!("matrix not positive definite at row {i}")));
                    }
                    let k = self.idx(i, i);
                    self.data[k] = s.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

/// Cholesky factor of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, b) = (l.n, l.b);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = y[i];
            for k in lo..i {
                s -= l.data[l.idx(i, k)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            y[i] /= l.data[l.idx(i, i)];
            let lo = i.saturating_sub(b);
            let yi = y[i];
            for k in lo..i {
                y[k] -= l.data[l.idx(i, k)] * yi;
            }
        }
        y
    }
}
