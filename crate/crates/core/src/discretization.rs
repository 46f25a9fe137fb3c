//! Finite-difference representation of `a d/dx + b d^3/dx^3 - d^5/dx^5` on a
//! uniform grid with `u = u_x = 0` at both ends and `u_xx(L) = F`.
//!
//! Interior rows use the standard second-order centered stencils (3, 5 and 7
//! points). The two ghost values beyond each end are eliminated with one
//! polynomial fit per end that honours the boundary conditions:
//!
//! * left: `q(x) = sum_{k=2..6} c_k x^k` through `u_1..u_5` (so `q(0) = q'(0) = 0`),
//! * right: `q(y) = F y^2 / 2 + sum_{k=3..6} c_k y^k`, `y = L - x`, through
//!   `u_N..u_{N-3}`.
//!
//! The fits are exact for degree-6 data, so the ghost error is `O(h^7)` and
//! every row of the fifth-derivative stencil stays second-order consistent.
//! The left fit also gives the feedback trace `u_xx(0) = 2 c_2`.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::model::PhysicalParams;

pub const MIN_NODES: usize = 12;

/// `h^2 u_xx(0)` from `u_1..u_5` (exact inverse of the integer Vandermonde system).
pub const TRACE0_WEIGHTS: [f64; 5] = [10.0, -5.0, 20.0 / 9.0, -5.0 / 8.0, 2.0 / 25.0];

/// Left ghosts `u_{-1}`, `u_{-2}` in terms of `u_1..u_5`.
pub const LEFT_GHOSTS: [[f64; 5]; 2] = [
    [15.0, -10.0, 5.0, -1.5, 0.2],
    [140.0, -105.0, 56.0, -17.5, 2.4],
];

/// Right ghosts `u_{N+2}`, `u_{N+3}` in terms of `u_N, u_{N-1}, u_{N-2}, u_{N-3}`.
pub const RIGHT_GHOSTS: [[f64; 4]; 2] = [
    [-10.0, 2.5, -5.0 / 9.0, 1.0 / 16.0],
    [-160.0, 45.0, -32.0 / 3.0, 1.25],
];

/// Coefficients of `h^2 F` in the right ghosts.
pub const RIGHT_GHOST_FORCING: [f64; 2] = [2.5, 30.0];

/// Centered stencils as `(offset, coefficient)`; divide by `h^order`.
pub const D1_STENCIL: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
pub const D3_STENCIL: [(isize, f64); 4] = [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)];
pub const D5_STENCIL: [(isize, f64); 6] = [
    (-3, -0.5),
    (-2, 2.0),
    (-1, -2.5),
    (1, 2.5),
    (2, -2.0),
    (3, 0.5),
];

/// Uniform grid with `n` interior nodes `x_j = j h`, `j = 1..n`, `h = L / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub length: f64,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        Ok(Self {
            n,
            h: length / (n + 1) as f64,
            length,
        })
    }

    /// Coordinate of interior node `j` (1-based).
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    /// Interior node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|j| self.x(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (1..=self.n).map(|j| f(self.x(j))).collect()
    }
}

/// Semi-discrete operator: `du/dt = A u + g_F F`.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    pub grid: Grid,
    pub a: f64,
    pub b: f64,
    /// `A` with all homogeneous conditions eliminated (4 bands each side).
    pub a_interior: BandedMatrix,
    /// Column multiplying `F = u_xx(L)`.
    pub g_f: Vec<f64>,
    /// Dense row computing `u_xx(0)` from the interior values.
    pub trace0: Vec<f64>,
    /// Dense row computing `u_xx(L)` from the interior values, without using `F`.
    pub trace_l: Vec<f64>,
}

impl SpatialOperator {
    pub fn build(params: &PhysicalParams, grid: Grid) -> Result<Self> {
        Self::with_coefficients(params.a, params.b, grid)
    }

    /// Same operator for arbitrary `a, b` (used by the spectral sweep).
    pub fn with_coefficients(a: f64, b: f64, grid: Grid) -> Result<Self> {
        let n = grid.n;
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        let h = grid.h;
        let mut stencil: Vec<(isize, f64)> = Vec::new();
        let mut push = |st: &[(isize, f64)], scale: f64| {
            for &(k, c) in st {
                match stencil.iter_mut().find(|(o, _)| *o == k) {
                    Some(e) => e.1 += scale * c,
                    None => stencil.push((k, scale * c)),
                }
            }
        };
        // u_t = -a u_x - b u_xxx + u_xxxxx
        push(&D1_STENCIL, -a / h);
        push(&D3_STENCIL, -b / h.powi(3));
        push(&D5_STENCIL, 1.0 / h.powi(5));

        let mut mat = BandedMatrix::zeros(n, 4, 4);
        let mut g_f = vec![0.0; n];
        let ni = n as isize;
        for i in 1..=ni {
            let row = (i - 1) as usize;
            for &(k, c) in &stencil {
                let j = i + k;
                if (1..=ni).contains(&j) {
                    mat.add(row, (j - 1) as usize, c);
                } else if j == 0 || j == ni + 1 {
                    // u(0) = u(L) = 0
                } else if j < 0 {
                    let w = &LEFT_GHOSTS[(-j - 1) as usize];
                    for (col, wc) in w.iter().enumerate() {
                        mat.add(row, col, c * wc);
                    }
                } else {
                    let gi = (j - ni - 2) as usize;
                    for (r, wc) in RIGHT_GHOSTS[gi].iter().enumerate() {
                        mat.add(row, n - 1 - r, c * wc);
                    }
                    g_f[row] += c * RIGHT_GHOST_FORCING[gi] * h * h;
                }
            }
        }

        let mut trace0 = vec![0.0; n];
        let mut trace_l = vec![0.0; n];
        for (k, w) in TRACE0_WEIGHTS.iter().enumerate() {
            trace0[k] = w / (h * h);
            trace_l[n - 1 - k] = w / (h * h);
        }
        Ok(Self {
            grid,
            a,
            b,
            a_interior: mat,
            g_f,
            trace0,
            trace_l,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// `A u + g_F F`
    pub fn apply(&self, u: &[f64], forcing: f64) -> Vec<f64> {
        let mut out = self.a_interior.matvec(u);
        if forcing != 0.0 {
            for (o, g) in out.iter_mut().zip(&self.g_f) {
                *o += g * forcing;
            }
        }
        out
    }

    /// Centered `a f' + b f''' - f^(5)` at node `j` from values `f(k)` at arbitrary
    /// integer node indices (no boundary closure).
    pub fn centered_at(&self, f: impl Fn(isize) -> f64, j: isize) -> f64 {
        let h = self.grid.h;
        let d = |st: &[(isize, f64)]| st.iter().map(|&(k, c)| c * f(j + k)).sum::<f64>();
        self.a * d(&D1_STENCIL) / h + self.b * d(&D3_STENCIL) / h.powi(3)
            - d(&D5_STENCIL) / h.powi(5)
    }

    /// Centered first derivative with zero boundary values (skew-symmetric).
    pub fn d1(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let inv = 0.5 / self.grid.h;
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                inv * (right - left)
            })
            .collect()
    }

    pub fn trace_uxx0(&self, u: &[f64]) -> f64 {
        trace_uxx0(self, u)
    }

    pub fn trace_uxx_l(&self, u: &[f64]) -> f64 {
        dot_prefix(&self.trace_l, u)
    }

    /// `||u_xx||^2` by trapezoid; end values from the one-sided traces.
    pub fn h2_seminorm(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let h = self.grid.h;
        let at = |i: isize| {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                u[i as usize]
            }
        };
        let mut sum = 0.0;
        for i in 0..n as isize {
            let d2 = (at(i - 1) - 2.0 * at(i) + at(i + 1)) / (h * h);
            sum += d2 * d2;
        }
        let w0 = self.trace_uxx0(u);
        let wl = self.trace_uxx_l(u);
        h * (sum + 0.5 * (w0 * w0 + wl * wl))
    }
}

fn dot_prefix(row: &[f64], u: &[f64]) -> f64 {
    // rows are sparse: only the first/last five entries are nonzero
    row.iter()
        .zip(u)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, v)| w * v)
        .sum()
}

/// One-sided `u_xx(0)` using `u(0) = u_x(0) = 0`.
pub fn trace_uxx0(op: &SpatialOperator, u: &[f64]) -> f64 {
    let h2 = op.grid.h * op.grid.h;
    TRACE0_WEIGHTS
        .iter()
        .zip(u)
        .map(|(w, v)| w * v)
        .sum::<f64>()
        / h2
}

/// Trapezoid values of `int u^2 dx` and `int x u^2 dx` (zero boundary values).
pub fn mass_and_weighted_mass(u: &[f64], grid: &Grid) -> (f64, f64) {
    let h = grid.h;
    let mut l2 = 0.0;
    let mut weighted = 0.0;
    for (j, v) in u.iter().enumerate() {
        let v2 = v * v;
        l2 += v2;
        weighted += grid.x(j + 1) * v2;
    }
    (h * l2, h * weighted)
}
