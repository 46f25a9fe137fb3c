//! Overdetermined eigenproblem test for critical lengths.
//!
//! `lambda u + a u' + b u''' - u''''' = 0` with `u = u' = 0` at both ends and
//! `u''(L) = 0` is a well-posed eigenproblem; a nontrivial solution that also
//! has `u''(0) = 0` would obstruct unique continuation. For each of the lowest
//! eigenpairs the residual `|u''(0)| / ||u||` is computed; a minimum bounded
//! away from zero says no such solution exists at that length.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{Grid, SpatialOperator};
use crate::error::{Error, Result};

pub const MIN_SPECTRAL_NODES: usize = 100;
pub const EIGENPAIRS: usize = 50;
const INVERSE_ITERATIONS: usize = 3;
const EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralResult {
    pub length: f64,
    pub n: usize,
    pub min_residual: f64,
    /// Eigenvalue of the pair attaining the minimum.
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub pairs_checked: usize,
}

/// Smallest `|u''(0)| / ||u||` over the `EIGENPAIRS` eigenpairs of smallest modulus.
pub fn spectral_lemma_test(a: f64, b: f64, length: f64, n: usize) -> Result<SpectralResult> {
    if n < MIN_SPECTRAL_NODES {
        return Err(Error::GridTooSmall {
            n,
            min: MIN_SPECTRAL_NODES,
        });
    }
    let grid = Grid::new(length, n)?;
    let op = SpatialOperator::with_coefficients(a, b, grid)?;
    let dense = DMatrix::from_fn(n, n, |i, j| op.a_interior.get(i, j));
    let norm = dense.norm();
    let schur = dense
        .clone()
        .try_schur(f64::EPSILON, 0)
        .ok_or(Error::EigenNotConverged(length))?;
    let mut eigs: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    // one representative per conjugate pair: residuals of conjugates coincide
    let mut chosen: Vec<Complex64> = Vec::new();
    for e in eigs {
        if e.im < 0.0 && chosen.iter().any(|c| (c.conj() - e).norm() <= 1e-9 * e.norm().max(1.0)) {
            continue;
        }
        chosen.push(e);
        if chosen.len() == EIGENPAIRS {
            break;
        }
    }

    let complex = dense.map(|v| Complex64::new(v, 0.0));
    let h = grid.h;
    let trace: DVector<Complex64> =
        DVector::from_iterator(n, op.trace0.iter().map(|&v| Complex64::new(v, 0.0)));
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for &lambda in &chosen {
        let v = eigenvector(&complex, lambda, norm).ok_or(Error::EigenNotConverged(length))?;
        let vnorm = (h * v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
        let residual = trace.dot(&v).norm() / vnorm;
        if residual < best.0 {
            best = (residual, lambda);
        }
    }
    Ok(SpectralResult {
        length,
        n,
        min_residual: best.0,
        eigenvalue_re: best.1.re,
        eigenvalue_im: best.1.im,
        pairs_checked: chosen.len(),
    })
}

/// Inverse iteration at a slightly perturbed shift.
fn eigenvector(m: &DMatrix<Complex64>, lambda: Complex64, norm: f64) -> Option<DVector<Complex64>> {
    let n = m.nrows();
    let eps = 1e-10 * lambda.norm().max(1.0);
    let shift = lambda + Complex64::new(eps, eps);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.2));
    for _ in 0..INVERSE_ITERATIONS {
        v = lu.solve(&v)?;
        let s = v.norm();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        v /= Complex64::new(s, 0.0);
    }
    let r = m * &v - &v * lambda;
    (r.norm() <= EIGEN_TOL * norm.max(1.0)).then_some(v)
}

/// Refinement-calibrated verdict at one length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralCertificate {
    pub fine: SpectralResult,
    pub coarse: SpectralResult,
    /// `10 |r(N) - r(N/2)|`
    pub threshold: f64,
    pub pass: bool,
}

/// Residual at `n` compared with ten times its change from `n / 2`.
pub fn spectral_certificate(a: f64, b: f64, length: f64, n: usize) -> Result<SpectralCertificate> {
    let fine = spectral_lemma_test(a, b, length, n)?;
    let coarse = spectral_lemma_test(a, b, length, n / 2)?;
    let threshold = 10.0 * (fine.min_residual - coarse.min_residual).abs();
    Ok(SpectralCertificate {
        fine,
        coarse,
        threshold,
        pass: fine.min_residual > threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSweep {
    pub results: Vec<SpectralResult>,
    /// Lengths at local minima of the residual curve below 5% of its median.
    pub critical_candidates: Vec<f64>,
}

/// Residual curve over `lengths` (computed in parallel, returned in input order).
pub fn spectral_sweep(a: f64, b: f64, lengths: &[f64], n: usize) -> Result<SpectralSweep> {
    let results = lengths
        .par_iter()
        .map(|&l| spectral_lemma_test(a, b, l, n))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<f64> = results.iter().map(|r| r.min_residual).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let critical_candidates = (0..results.len())
        .filter(|&i| {
            let r = results[i].min_residual;
            let left = i == 0 || results[i - 1].min_residual >= r;
            let right = i + 1 == results.len() || results[i + 1].min_residual >= r;
            left && right && r < 0.05 * median
        })
        .map(|i| results[i].length)
        .collect();
    Ok(SpectralSweep {
        results,
        critical_candidates,
    })
}
