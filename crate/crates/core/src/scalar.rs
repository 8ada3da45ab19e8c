//! Floating-point abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::DMatrix;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the solvers are generic over (`f32` or `f64`).
///
/// On top of the usual arithmetic bounds the trait carries a dense symmetric
/// eigen-decomposition, used for Rayleigh-Ritz projections inside Davidson
/// and for the small-matrix fallback path.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Full eigen-decomposition of a dense symmetric `n x n` matrix stored
    /// column-major. Returns eigenvalues in ascending order and the matching
    /// eigenvectors as columns of a column-major `n x n` buffer.
    fn symmetric_eigen(n: usize, column_major: &[Self]) -> (Vec<Self>, Vec<Self>);

    /// Lossy conversion from `f64`; every supported type can represent the
    /// constants the crate uses, so this never fails.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn symmetric_eigen(n: usize, column_major: &[Self]) -> (Vec<Self>, Vec<Self>) {
                assert_eq!(column_major.len(), n * n, "dense matrix has wrong size");
                if n == 0 {
                    return (Vec::new(), Vec::new());
                }
                let m = DMatrix::<$t>::from_column_slice(n, n, column_major);
                let eig = m.symmetric_eigen();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    eig.eigenvalues[a]
                        .partial_cmp(&eig.eigenvalues[b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
                let mut vectors = Vec::with_capacity(n * n);
                for &i in &order {
                    vectors.extend(eig.eigenvectors.column(i).iter().copied());
                }
                (values, vectors)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_2x2_sorted() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let (vals, vecs) = f64::symmetric_eigen(2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((vecs[0] + vecs[1]).abs() < 1e-14);
    }

    #[test]
    fn f32_path_agrees() {
        let (vals, _) = f32::symmetric_eigen(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }
}
