//! Banded matrix storage and LU factorization with partial pivoting.
//!
//! Storage follows the usual band layout: entry `(i, j)` lives at
//! `data[j*ldab + kl + ku + i - j]` with `ldab = 2*kl + ku + 1`. The extra
//! `kl` superdiagonal rows hold the fill produced by row pivoting.
//!
//! Every linear solve in the crate goes through this kernel: the scalar
//! transport systems are tridiagonal (`kl = ku = 1`) and the coupled
//! velocity/strain system, interleaved per node, has `kl = ku = 3`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular at column {0}")]
    Singular(usize),
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    Dimension { n: usize, len: usize },
}

#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0);
        let ldab = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "({i},{j}) outside band");
        j * self.ldab + self.kl + self.ku + i - j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku < j || j + self.kl < i {
            return 0.0;
        }
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    /// Replace row `i` by the identity row (used for Dirichlet constraints).
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, if i == j { 1.0 } else { 0.0 });
        }
    }

    /// y = A·x over the logical band.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let xj = x[j];
            for i in lo..=hi {
                y[i] += self.data[self.offset(i, j)] * xj;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        d
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    pub fn factor(mut self) -> Result<BandedLu, LinalgError> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // storage row of the diagonal
        let mut ipiv = vec![0usize; n];
        // Highest column index touched by eliminations so far.
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j); // active subdiagonal entries
            // Pivot search in column j, rows j..=j+km.
            let col = j * ldab + kv;
            let mut jp = 0usize;
            let mut best = self.data[col].abs();
            for t in 1..=km {
                let v = self.data[col + t].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(LinalgError::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // Swap rows j and j+jp across columns j..=ju.
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = a + jp;
                    self.data.swap(a, b);
                }
            }
            if km > 0 {
                let piv = self.data[col];
                for t in 1..=km {
                    self.data[col + t] /= piv;
                }
                for c in (j + 1)..=ju {
                    let head = c * ldab + kv + j - c;
                    let f = self.data[head];
                    if f != 0.0 {
                        for t in 1..=km {
                            self.data[head + t] -= self.data[col + t] * f;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            data: self.data,
            ipiv,
        })
    }
}

/// Factored form of a [`Banded`] matrix; solves repeatedly without refactoring.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Dimension {
                n: self.n,
                len: b.len(),
            });
        }
        let kv = self.kl + self.ku;
        // L (with row interchanges)
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            let col = j * self.ldab + kv;
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= self.data[col + t] * bj;
                }
            }
        }
        // U
        for j in (0..self.n).rev() {
            let col = j * self.ldab + kv;
            b[j] /= self.data[col];
            let bj = b[j];
            if bj != 0.0 {
                let reach = kv.min(j);
                for t in 1..=reach {
                    b[j - t] -= self.data[col - t] * bj;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}
