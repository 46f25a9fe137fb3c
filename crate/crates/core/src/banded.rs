//! Banded matrices with a partial-pivoting LU and a rank-one (Sherman-Morrison)
//! corrected solver.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn row_nonzeros(&self, i: usize) -> usize {
        self.row_range(i).filter(|&j| self.get(i, j) != 0.0).count()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_range(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// `a * self + b * I`
    pub fn scaled_plus_identity(&self, a: f64, b: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= a;
        }
        for i in 0..self.n {
            m.add(i, i, b);
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn lu(&self) -> Result<BandedLu> {
        BandedLu::factor(self)
    }
}

/// LU factors with row pivoting. Upper factor has `kl + ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku_ext: usize,
    upper: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn factor(m: &BandedMatrix) -> Result<Self> {
        let (n, kl) = (m.n, m.kl);
        let ku_ext = m.ku + kl;
        let width = kl + ku_ext + 1;
        let mut a = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for j in m.row_range(i) {
                a[at(i, j)] = m.get(i, j);
            }
        }
        let mut mult = vec![0.0; n * kl.max(1)];
        let mut piv = vec![0; n];
        let scale = m.data.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[at(k, k)].abs();
            for i in k + 1..=last {
                let v = a[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * scale * 1e-3 || best == 0.0 {
                return Err(Error::SingularSystem(format!("zero pivot at column {k}")));
            }
            piv[k] = p;
            let jmax = (k + ku_ext).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(at(k, j), at(p, j));
                }
            }
            let pivot = a[at(k, k)];
            for i in k + 1..=last {
                let l = a[at(i, k)] / pivot;
                mult[k * kl + (i - k - 1)] = l;
                a[at(i, k)] = 0.0;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        a[at(i, j)] -= l * a[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku_ext,
            upper: a,
            mult,
            piv,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl) = (self.n, self.kl);
        let width = kl + self.ku_ext + 1;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.mult[k * kl + (i - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = k * width;
            let mut s = b[k];
            for j in k + 1..=(k + self.ku_ext).min(n - 1) {
                s -= self.upper[row + (j + kl - k)] * b[j];
            }
            b[k] = s / self.upper[row + kl];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solver for `(B - c * g * v^T) x = r` with `B` banded, via Sherman-Morrison.
#[derive(Debug, Clone)]
pub struct RankOneSolver {
    lu: BandedLu,
    v: Vec<f64>,
    coef: f64,
    binv_g: Vec<f64>,
    denom: f64,
}

impl RankOneSolver {
    pub fn new(b: &BandedMatrix, g: &[f64], v: &[f64], coef: f64) -> Result<Self> {
        let lu = b.lu()?;
        let binv_g = lu.solve(g);
        let vq: f64 = v.iter().zip(&binv_g).map(|(a, b)| a * b).sum();
        let denom = 1.0 - coef * vq;
        if denom.abs() < 1e-12 * (1.0 + (coef * vq).abs()) {
            return Err(Error::SingularSystem(
                "rank-one update makes the system singular".into(),
            ));
        }
        Ok(Self {
            lu,
            v: v.to_vec(),
            coef,
            binv_g,
            denom,
        })
    }

    pub fn solve_in_place(&self, r: &mut [f64]) {
        self.lu.solve_in_place(r);
        if self.coef == 0.0 {
            return;
        }
        let vy: f64 = self.v.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
        let s = self.coef * vy / self.denom;
        for (ri, qi) in r.iter_mut().zip(&self.binv_g) {
            *ri += s * qi;
        }
    }
}
