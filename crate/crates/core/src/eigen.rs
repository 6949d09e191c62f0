//! Extreme eigenpairs of a [`WeightedOperator`].
//!
//! The generalized problem `(−S + MP) v = μ M v` is symmetrized as
//! `B = −D S D + P` with `D = M^{−1/2}`, then solved by a restarted block
//! Krylov method with Rayleigh–Ritz extraction. Small problems go straight
//! to a dense symmetric eigensolver, which also serves as the reference.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::operators::WeightedOperator;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhichEnd {
    Largest,
    Smallest,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ordered from the requested end inward.
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖(K − μM)v‖ / ‖Mv‖` in the `M⁻¹` norm, with `K = −S + MP`.
    pub residuals: Vec<f64>,
    pub which_end: WhichEnd,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_restarts: usize,
    pub krylov_depth: usize,
    pub extra_block: usize,
    pub seed: u64,
    /// Problems up to this size are solved densely.
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_restarts: 300,
            krylov_depth: 20,
            extra_block: 8,
            seed: 0x5eed,
            dense_limit: 300,
        }
    }
}

struct Symmetrized<'a> {
    op: &'a WeightedOperator,
    d: Vec<f64>,
    sign: f64,
}

impl<'a> Symmetrized<'a> {
    fn new(op: &'a WeightedOperator, end: WhichEnd) -> Self {
        Self {
            op,
            d: op.mass.iter().map(|m| 1.0 / m.sqrt()).collect(),
            sign: if end == WhichEnd::Largest { 1.0 } else { -1.0 },
        }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let dy: Vec<f64> = y.iter().zip(&self.d).map(|(a, b)| a * b).collect();
        let s = self.op.stiffness_apply(&dy);
        (0..y.len())
            .map(|i| self.sign * (-self.d[i] * s[i] + self.op.potential[i] * y[i]))
            .collect()
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.d.len();
        let mut b = DMatrix::zeros(n, n);
        let s = &self.op.stiffness;
        for i in 0..n {
            let row = s.row(i);
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                b[(i, j)] -= self.sign * self.d[i] * v * self.d[j];
            }
            b[(i, i)] += self.sign * self.op.potential[i];
        }
        b
    }

    /// Relative residual in the generalized sense for a unit `y`.
    fn residual(&self, y: &[f64], theta: f64) -> f64 {
        let by = self.apply(y);
        // M^{1/2}(B − θ)y over M^{1/2}y
        let num: f64 = (0..y.len())
            .map(|i| (by[i] - theta * y[i]).powi(2) / (self.d[i] * self.d[i]))
            .sum::<f64>()
            .sqrt();
        let den: f64 = (0..y.len()).map(|i| y[i] * y[i] / (self.d[i] * self.d[i])).sum::<f64>().sqrt();
        num / den
    }

    fn finish(&self, thetas: Vec<f64>, ys: Vec<Vec<f64>>, end: WhichEnd, restarts: usize) -> Spectrum {
        let residuals = thetas.iter().zip(&ys).map(|(t, y)| self.residual(y, *t)).collect();
        let eigenvectors = ys
            .into_iter()
            .map(|y| {
                let mut v: Vec<f64> = y.iter().zip(&self.d).map(|(a, b)| a * b).collect();
                let weighted: f64 = v.iter().zip(&self.op.mass).map(|(a, m)| a * m).sum();
                let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                let flip = if weighted.abs() > 1e-8 { weighted < 0.0 } else { pivot < 0.0 };
                if flip {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Spectrum {
            eigenvalues: thetas.into_iter().map(|t| self.sign * t).collect(),
            eigenvectors,
            residuals,
            which_end: end,
            restarts,
        }
    }
}

fn top_k(eig: &SymmetricEigen<f64, nalgebra::Dyn>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    idx.truncate(k);
    idx
}

/// Dense reference solver for the `k` extreme eigenpairs.
pub fn dense_spectrum(op: &WeightedOperator, k: usize, end: WhichEnd) -> Result<Spectrum> {
    check_k(op, k)?;
    let sym = Symmetrized::new(op, end);
    let eig = SymmetricEigen::new(sym.dense());
    let idx = top_k(&eig, k);
    let thetas = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let ys = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    Ok(sym.finish(thetas, ys, end, 0))
}

fn check_k(op: &WeightedOperator, k: usize) -> Result<()> {
    if k == 0 || k >= op.dim() {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k < {}, got {k}", op.dim())));
    }
    Ok(())
}

/// Append `v` to the orthonormal column set if it survives two passes of
/// Gram–Schmidt; returns whether it was kept.
fn push_orthonormal(basis: &mut Vec<DVector<f64>>, mut v: DVector<f64>) -> bool {
    let start = v.norm();
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in basis.iter() {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
    }
    let n = v.norm();
    if n <= 1e-10 * start {
        return false;
    }
    basis.push(v / n);
    true
}

pub fn spectrum(op: &WeightedOperator, k: usize, end: WhichEnd) -> Result<Spectrum> {
    spectrum_with(op, k, end, &EigenOptions::default())
}

pub fn spectrum_with(op: &WeightedOperator, k: usize, end: WhichEnd, opts: &EigenOptions) -> Result<Spectrum> {
    check_k(op, k)?;
    let n = op.dim();
    let block = (k + opts.extra_block).min(n);
    if n <= opts.dense_limit.max(block * opts.krylov_depth) {
        return dense_spectrum(op, k, end);
    }
    let sym = Symmetrized::new(op, end);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<DVector<f64>> = (0..block)
        .map(|_| DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0))))
        .collect();
    let mut worst = f64::INFINITY;

    for restart in 0..opts.max_restarts {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(block * opts.krylov_depth);
        let mut images: Vec<DVector<f64>> = Vec::with_capacity(block * opts.krylov_depth);
        let mut current: Vec<DVector<f64>> = Vec::new();
        for v in start.drain(..) {
            if push_orthonormal(&mut basis, v) {
                current.push(basis.last().unwrap().clone());
            }
        }
        for depth in 0..opts.krylov_depth {
            let mut next = Vec::with_capacity(current.len());
            for q in &current {
                let bq = DVector::from_vec(sym.apply(q.as_slice()));
                images.push(bq.clone());
                next.push(bq);
            }
            if depth + 1 == opts.krylov_depth {
                break;
            }
            current.clear();
            for v in next {
                if push_orthonormal(&mut basis, v) {
                    current.push(basis.last().unwrap().clone());
                }
            }
            if current.is_empty() {
                break;
            }
        }
        // images may lag the basis by the last block; complete them
        while images.len() < basis.len() {
            let q = &basis[images.len()];
            images.push(DVector::from_vec(sym.apply(q.as_slice())));
        }
        let m = basis.len();
        let q = DMatrix::from_columns(&basis);
        let bq = DMatrix::from_columns(&images);
        let t = q.transpose() * &bq;
        let t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::new(t);
        let idx = top_k(&eig, block.min(m));

        let ritz: Vec<DVector<f64>> = idx.iter().map(|&i| &q * eig.eigenvectors.column(i)).collect();
        let thetas: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let res: Vec<f64> = (0..k).map(|j| sym.residual(ritz[j].as_slice(), thetas[j])).collect();
        worst = res
            .iter()
            .zip(&thetas)
            .map(|(r, t)| r / t.abs().max(1.0))
            .fold(0.0f64, f64::max);
        log::debug!("eigensolver restart {restart}: basis {m}, worst relative residual {worst:.3e}");
        if worst <= opts.tol {
            let ys = ritz.iter().take(k).map(|y| y.iter().copied().collect()).collect();
            return Ok(sym.finish(thetas[..k].to_vec(), ys, end, restart + 1));
        }
        start = ritz;
    }
    Err(Error::EigenNoConvergence {
        iterations: opts.max_restarts,
        residual: worst,
    })
}
