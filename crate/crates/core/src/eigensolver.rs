//! Lowest eigenpair of a sparse symmetric operator by Davidson iteration.
//!
//! Jacobi (diagonal) preconditioning, a bounded search space that collapses
//! onto the current Ritz vector, and a dense fallback for small problems.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::slater_condon::SparseInteractionMatrix;

/// A real symmetric linear operator.
pub trait SymmetricOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn diagonal(&self) -> Vec<T>;
    /// `y = A x`
    fn apply(&self, x: &[T], y: &mut [T]);
    /// Column-major dense copy, used by the small-matrix path.
    fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut m = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply(&e, &mut col);
            m[j * n..(j + 1) * n].copy_from_slice(&col);
            e[j] = T::zero();
        }
        m
    }
}

impl<T: Real> SymmetricOperator<T> for SparseInteractionMatrix<T> {
    fn dim(&self) -> usize {
        SparseInteractionMatrix::dim(self)
    }

    fn diagonal(&self) -> Vec<T> {
        SparseInteractionMatrix::diagonal(self).to_vec()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        SparseInteractionMatrix::apply(self, x, y)
    }

    fn to_dense(&self) -> Vec<T> {
        SparseInteractionMatrix::to_dense(self)
    }
}

/// Dense column-major symmetric matrix, mostly for tests and oracles.
#[derive(Clone, Debug)]
pub struct DenseSymmetric<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> SymmetricOperator<T> for DenseSymmetric<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.data[i * self.n + i]).collect()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for j in 0..self.n {
                acc += self.data[j * self.n + i] * x[j];
            }
            *yi = acc;
        }
    }

    fn to_dense(&self) -> Vec<T> {
        self.data.clone()
    }
}

/// Ritz vectors retained when the search space is collapsed.
const RESTART_VECTORS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct DavidsonOptions {
    /// Convergence threshold on `||Hv - Ev||_2`.
    pub tolerance: f64,
    /// Search-space size that triggers a collapse.
    pub max_subspace: usize,
    pub max_iterations: usize,
    /// Problems at or below this dimension are diagonalized densely.
    pub dense_threshold: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_subspace: 20, max_iterations: 1000, dense_threshold: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult<T> {
    pub energy: T,
    /// Unit-norm eigenvector.
    pub vector: Vec<T>,
    pub iterations: usize,
    pub residual_norm: T,
    /// Ritz value after each Davidson iteration (one entry on the dense path).
    pub ritz_history: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn residual<T: Real>(op: &impl SymmetricOperator<T>, v: &[T], e: T) -> T {
    let mut hv = vec![T::zero(); v.len()];
    op.apply(v, &mut hv);
    hv.iter().zip(v).map(|(&h, &x)| (h - e * x) * (h - e * x)).sum::<T>().sqrt()
}

/// Fix the overall sign so the largest-magnitude component is positive.
fn canonical_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dense_lowest<T: Real>(op: &impl SymmetricOperator<T>) -> EigenResult<T> {
    let n = op.dim();
    let (values, vectors) = T::symmetric_eigen(n, &op.to_dense());
    let mut vector = vectors[..n].to_vec();
    canonical_sign(&mut vector);
    let energy = values[0];
    let residual_norm = residual(op, &vector, energy);
    EigenResult { energy, vector, iterations: 1, residual_norm, ritz_history: vec![energy] }
}

/// Orthogonalize `t` against the columns of `basis` (two Gram-Schmidt
/// passes) and normalize. Returns false when `t` lies in their span.
fn orthonormalize<T: Real>(t: &mut [T], basis: &[Vec<T>]) -> bool {
    let start = norm(t);
    if start == T::zero() {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(t, b);
            t.iter_mut().zip(b).for_each(|(x, &y)| *x -= c * y);
        }
    }
    let n = norm(t);
    if n <= start * T::of(1e-10) || n < T::min_positive_value().sqrt() {
        return false;
    }
    t.iter_mut().for_each(|x| *x /= n);
    true
}

/// Algebraically lowest eigenpair of `op`.
///
/// `guess` is a warm start (it need not be normalized and may contain padded
/// zeros); without one the unit vector on the smallest diagonal entry is
/// used. The result is deterministic for a given operator, guess and options.
pub fn davidson_lowest<T: Real>(
    op: &impl SymmetricOperator<T>,
    guess: Option<&[T]>,
    options: &DavidsonOptions,
) -> Result<EigenResult<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Dimension("eigenproblem of dimension 0".into()));
    }
    if let Some(g) = guess {
        if g.len() != n {
            return Err(Error::Dimension(format!(
                "initial vector has length {}, matrix dimension {n}",
                g.len()
            )));
        }
    }
    if n <= options.dense_threshold.max(1) {
        return Ok(dense_lowest(op));
    }

    let tol = T::of(options.tolerance);
    let max_sub = options.max_subspace.max(RESTART_VECTORS + 2).min(n);
    let diag = op.diagonal();

    let mut v0 = match guess {
        Some(g) if norm(g) > T::zero() => g.to_vec(),
        _ => {
            let mut e = vec![T::zero(); n];
            let mut best = 0;
            for i in 1..n {
                if diag[i] < diag[best] {
                    best = i;
                }
            }
            e[best] = T::one();
            e
        }
    };
    let nv = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<T>> = vec![v0];
    let mut images: Vec<Vec<T>> = Vec::new();
    let mut projected: Vec<Vec<T>> = Vec::new(); // rows of V^T A V
    let mut history = Vec::new();
    let mut best: Option<(T, Vec<T>, T)> = None;

    for iteration in 1..=options.max_iterations {
        // images for any new basis vectors, and the new row/column of V^T A V
        while images.len() < basis.len() {
            let k = images.len();
            let mut w = vec![T::zero(); n];
            op.apply(&basis[k], &mut w);
            let mut row: Vec<T> = (0..=k).map(|j| dot(&basis[j], &w)).collect();
            for (j, r) in projected.iter_mut().enumerate() {
                r.push(row[j]);
            }
            row.truncate(k + 1);
            projected.push(row);
            images.push(w);
        }

        let m = basis.len();
        let mut dense = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                // symmetrize the small matrix against round-off
                let a = projected[i][j];
                let b = projected[j][i];
                dense[j * m + i] = (a + b) * T::of(0.5);
            }
        }
        let (values, vectors) = T::symmetric_eigen(m, &dense);
        let theta = values[0];
        let coeffs = &vectors[..m];

        let mut x = vec![T::zero(); n];
        let mut ax = vec![T::zero(); n];
        for (c, (b, w)) in coeffs.iter().zip(basis.iter().zip(&images)) {
            for i in 0..n {
                x[i] += *c * b[i];
                ax[i] += *c * w[i];
            }
        }
        let r: Vec<T> = ax.iter().zip(&x).map(|(&a, &xi)| a - theta * xi).collect();
        let rnorm = norm(&r);
        history.push(theta);

        if best.as_ref().map_or(true, |b| rnorm < b.2) {
            best = Some((theta, x.clone(), rnorm));
        }

        if rnorm <= tol {
            let xn = norm(&x);
            x.iter_mut().for_each(|v| *v /= xn);
            canonical_sign(&mut x);
            let residual_norm = residual(op, &x, theta);
            return Ok(EigenResult {
                energy: theta,
                vector: x,
                iterations: iteration,
                residual_norm,
                ritz_history: history,
            });
        }

        // Jacobi-preconditioned correction
        let floor = T::of(1e-8);
        let mut t: Vec<T> = r
            .iter()
            .zip(&diag)
            .map(|(&ri, &di)| {
                let mut denom = theta - di;
                if denom.abs() < floor {
                    denom = if denom < T::zero() { -floor } else { floor };
                }
                -ri / denom
            })
            .collect();

        if basis.len() >= max_sub {
            // thick restart on the lowest few Ritz vectors, so a ground-state
            // component hiding behind an excited iterate is not thrown away
            let keep = RESTART_VECTORS.min(m);
            let mut new_basis = Vec::with_capacity(keep);
            let mut new_images = Vec::with_capacity(keep);
            for k in 0..keep {
                let c = &vectors[k * m..(k + 1) * m];
                let mut xk = vec![T::zero(); n];
                let mut wk = vec![T::zero(); n];
                for (cj, (b, w)) in c.iter().zip(basis.iter().zip(&images)) {
                    for i in 0..n {
                        xk[i] += *cj * b[i];
                        wk[i] += *cj * w[i];
                    }
                }
                new_basis.push(xk);
                new_images.push(wk);
            }
            projected = (0..keep)
                .map(|i| (0..keep).map(|j| dot(&new_basis[i], &new_images[j])).collect())
                .collect();
            basis = new_basis;
            images = new_images;
        }

        if !orthonormalize(&mut t, &basis) {
            let mut fallback = r.clone();
            if !orthonormalize(&mut fallback, &basis) {
                break;
            }
            t = fallback;
        }
        basis.push(t);
    }

    let (energy, vector, residual) = best.expect("at least one iteration ran");
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        residual: residual.as_f64(),
        energy: energy.as_f64(),
        vector: vector.iter().map(|v| v.as_f64()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn force_iterative() -> DavidsonOptions {
        DavidsonOptions { dense_threshold: 0, ..Default::default() }
    }

    #[test]
    fn scalar_case() {
        let m = DenseSymmetric { n: 1, data: vec![-0.75f64] };
        let r = davidson_lowest(&m, None, &DavidsonOptions::default()).unwrap();
        assert_eq!(r.energy, -0.75);
        assert_eq!(r.vector, vec![1.0]);
    }

    #[test]
    fn diagonal_matrix() {
        let mut data = vec![0.0f64; 9];
        data[0] = 3.0;
        data[4] = 1.0;
        data[8] = 2.0;
        let m = DenseSymmetric { n: 3, data };
        for opts in [DavidsonOptions::default(), force_iterative()] {
            let r = davidson_lowest(&m, None, &opts).unwrap();
            assert!((r.energy - 1.0).abs() < 1e-12);
            assert!((r.vector[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let m = DenseSymmetric::<f64> { n: 0, data: vec![] };
        assert!(matches!(
            davidson_lowest(&m, None, &DavidsonOptions::default()),
            Err(Error::Dimension(_))
        ));
        let m = DenseSymmetric { n: 2, data: vec![1.0f64, 0.0, 0.0, 2.0] };
        assert!(matches!(
            davidson_lowest(&m, Some(&[1.0]), &DavidsonOptions::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 120;
        let mut data = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                data[j * n + i] = v;
                data[i * n + j] = v;
            }
        }
        let m = DenseSymmetric { n, data };
        let opts = DavidsonOptions { max_iterations: 2, ..force_iterative() };
        match davidson_lowest(&m, None, &opts) {
            Err(Error::NotConverged { vector, .. }) => assert_eq!(vector.len(), n),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn f32_instantiation() {
        let data = vec![2.0f32, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let m = DenseSymmetric { n: 3, data };
        let opts = DavidsonOptions { tolerance: 1e-5, ..force_iterative() };
        let r = davidson_lowest(&m, None, &opts).unwrap();
        // eigenvalues 2 - 2cos(k pi / 4)
        assert!((r.energy - (2.0 - std::f32::consts::SQRT_2)).abs() < 1e-5);
    }
}
