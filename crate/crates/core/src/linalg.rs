//! Sparse LU solves of the assembled systems and `l2` condition numbers.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{CsrMatrix, LinearSystem};
use crate::fe::FeFunction;
use crate::{Error, Result};

/// Relative residual required of every solve.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Largest size handled by the dense condition-number path.
pub const DENSE_LIMIT: usize = 4000;

/// Sparse LU factorization with partial pivoting.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

fn to_faer(matrix: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let triplets: Vec<_> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(matrix.n_rows, matrix.n_cols, &triplets)
        .map_err(|e| Error::Solver(format!("invalid sparse matrix: {e:?}")))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl SparseLu {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        if matrix.n_rows != matrix.n_cols {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected square",
                matrix.n_rows, matrix.n_cols
            )));
        }
        let lu = to_faer(matrix)?.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            LuError::Generic(e) => Error::Solver(format!("factorization failed: {e:?}")),
        })?;
        Ok(Self { n: matrix.n_rows, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Solves `matrix x = b` with up to three steps of iterative refinement.
/// Returns the solution and its relative residual.
pub fn solve_sparse(matrix: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let lu = SparseLu::factor(matrix)?;
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let mut x = lu.solve(b);
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        let ax = matrix.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        residual = norm(&r) / b_norm;
        if !residual.is_finite() {
            return Err(Error::Solver("numerically singular matrix (non-finite solution)".into()));
        }
        if residual < RESIDUAL_TOL * 1e-2 {
            break;
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    let ax = matrix.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    residual = residual.min(norm(&r) / b_norm);
    if residual > RESIDUAL_TOL {
        return Err(Error::Accuracy {
            residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    Ok((x, residual))
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub velocity: FeFunction,
    pub pressure: FeFunction,
    /// Zero-mean multiplier, present for pure-Neumann problems.
    pub multiplier: Option<f64>,
    pub residual: f64,
}

/// Solves an assembled system and splits the unknowns into fields.
pub fn solve(system: &LinearSystem) -> Result<Solution> {
    let (x, residual) = solve_sparse(&system.matrix, &system.rhs)?;
    let velocity = system.space.velocity_function(x[system.velocity_range()].to_vec());
    let pressure = system.space.pressure_function(x[system.pressure_range()].to_vec());
    let multiplier = system.mean_constraint.then(|| x[x.len() - 1]);
    Ok(Solution {
        velocity,
        pressure,
        multiplier,
        residual,
    })
}

/// `sigma_max / sigma_min`, dense for `n <= DENSE_LIMIT` and by Lanczos
/// iteration otherwise. Singular matrices give `f64::INFINITY`.
pub fn condition_number_l2(matrix: &CsrMatrix) -> Result<f64> {
    if matrix.n_rows <= DENSE_LIMIT {
        condition_number_dense(matrix)
    } else {
        condition_number_iterative(matrix)
    }
}

fn ratio(max: f64, min: f64) -> f64 {
    if min < 1e-300 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Dense path: symmetric eigenvalues when the matrix is symmetric, singular
/// values otherwise.
pub fn condition_number_dense(matrix: &CsrMatrix) -> Result<f64> {
    let n = matrix.n_rows;
    if n != matrix.n_cols || n == 0 {
        return Err(Error::invalid("condition number needs a non-empty square matrix"));
    }
    let mut dense = Mat::<f64>::zeros(n, n);
    for (i, j, v) in matrix.triplets() {
        dense[(i, j)] = v;
    }
    let symmetric = matrix.asymmetry() <= 1e-14 * matrix.max_abs();
    let (max, min) = if symmetric {
        let eig = dense
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(format!("eigenvalue solver failed: {e:?}")))?;
        let abs = eig.iter().map(|v| v.abs());
        (abs.clone().fold(0.0, f64::max), abs.fold(f64::INFINITY, f64::min))
    } else {
        let s = dense
            .singular_values()
            .map_err(|e| Error::Solver(format!("SVD failed: {e:?}")))?;
        (s[0], s[n - 1])
    };
    Ok(ratio(max, min))
}

/// Largest eigenvalue of a symmetric positive operator by Lanczos with full
/// reorthogonalization, to relative accuracy `tol`.
fn lanczos_max(n: usize, op: impl Fn(&[f64]) -> Vec<f64>, tol: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q_norm = norm(&q);
    q.iter_mut().for_each(|v| *v /= q_norm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut estimate = 0.0;
    let max_steps = n.min(300);
    for step in 0..max_steps {
        let mut w = op(&basis[step]);
        let a: f64 = w.iter().zip(&basis[step]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let t = DMatrix::from_fn(alpha.len(), alpha.len(), |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let next = SymmetricEigen::new(t).eigenvalues.max();
        let converged = step > 3 && (next - estimate).abs() <= tol * next.abs();
        estimate = next;
        let b = norm(&w);
        if converged || b <= 1e-14 * estimate.abs() {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    estimate
}

/// Iterative path: `sigma_max^2` from Lanczos on `S^T S`, `sigma_min^-2` from
/// Lanczos on `(S^T S)^-1` applied through the LU factors.
pub fn condition_number_iterative(matrix: &CsrMatrix) -> Result<f64> {
    let n = matrix.n_rows;
    let lu = match SparseLu::factor(matrix) {
        Ok(lu) => lu,
        Err(Error::Singular { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let tol = 1e-7;
    let max_sq = lanczos_max(n, |x| matrix.mul_transpose_vec(&matrix.mul_vec(x)), tol, 1);
    let inv_sq = lanczos_max(n, |x| lu.solve(&lu.solve_transpose(x)), tol, 2);
    if !inv_sq.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(ratio(max_sq.sqrt(), 1.0 / inv_sq.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::TripletBuilder;

    fn diag(values: &[f64]) -> CsrMatrix {
        let mut b = TripletBuilder::new(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            b.add(i, i, v);
        }
        b.build()
    }

    #[test]
    fn diagonal_solve() {
        let (x, r) = solve_sparse(&diag(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(r < 1e-15);
        let (x, _) = solve_sparse(&diag(&[2.0, 4.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn structurally_singular_reports_pivot() {
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(1, 0, 1.0);
        match SparseLu::factor(&b.build()) {
            Err(Error::Singular { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn condition_of_simple_matrices() {
        assert!((condition_number_l2(&diag(&[1.0; 5])).unwrap() - 1.0).abs() < 1e-12);
        assert!((condition_number_l2(&diag(&[1.0, 10.0])).unwrap() - 10.0).abs() < 1e-12);
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 1, 3.0);
        b.add(1, 0, 1.0);
        assert!((condition_number_dense(&b.build()).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_matches_dense_on_tridiagonal() {
        let n = 400;
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 2.0 + (i as f64) / n as f64);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -0.5);
            }
        }
        let m = b.build();
        let dense = condition_number_dense(&m).unwrap();
        let iter = condition_number_iterative(&m).unwrap();
        assert!((dense - iter).abs() / dense < 1e-3, "{dense} vs {iter}");
    }
}
