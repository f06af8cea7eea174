//! Degree and Laplacian construction, the generalized eigensolver, conjugate
//! gradient and k-means.

mod cg;
mod eigen;
mod kmeans;

use nalgebra::DMatrix;

use crate::graph_io::SparseSymMatrix;

pub use cg::{conjugate_gradient, CgOutcome};
pub use eigen::{
    smallest_generalized_eigenpairs, smallest_generalized_eigenpairs_with, EigenMethod, EigenOptions, EigenSolution,
};
pub use kmeans::{kmeans, kmeans_with, KMeansOptions, KMeansResult};

/// `n x K` matrix whose columns are the embedding vectors.
pub type Embedding = DMatrix<f64>;

/// Row sums of a symmetric matrix.
pub fn degree(a: &SparseSymMatrix) -> Vec<f64> {
    a.row_sums()
}

/// `L = diag(A 1) - A`.
pub fn laplacian(a: &SparseSymMatrix) -> SparseSymMatrix {
    let d = degree(a);
    let diag = d.iter().enumerate().map(|(i, &v)| (i, i, v));
    let off = a.entries().iter().filter(|e| e.0 != e.1).map(|&(i, j, v)| (i, j, -v));
    // a nonzero diagonal in A cancels against its own row-sum contribution
    let own = a.entries().iter().filter(|e| e.0 == e.1).map(|&(i, _, v)| (i, i, -v));
    SparseSymMatrix::from_triplets(a.n(), diag.chain(off).chain(own))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k3() -> SparseSymMatrix {
        SparseSymMatrix::from_triplets(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
    }

    #[test]
    fn degrees() {
        assert_eq!(degree(&k3()), vec![2.0, 2.0, 2.0]);
        let k4m33 = SparseSymMatrix::from_triplets(4, (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 2.0))));
        assert_eq!(degree(&k4m33), vec![6.0; 4]);
        assert_eq!(degree(&SparseSymMatrix::zeros(3)), vec![0.0; 3]);
    }

    #[test]
    fn laplacian_of_triangle() {
        let l = laplacian(&k3()).to_dense();
        let want = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        assert_eq!(l, want);
        assert_eq!(laplacian(&SparseSymMatrix::zeros(4)).nnz(), 0);
    }

    fn arb_sym() -> impl Strategy<Value = SparseSymMatrix> {
        (2usize..12).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 0.0f64..5.0), 0..40)
                .prop_map(move |t| SparseSymMatrix::from_triplets(n, t.into_iter().filter(|e| e.0 != e.1)))
        })
    }

    proptest! {
        #[test]
        fn laplacian_is_psd_with_constant_kernel(
            a in arb_sym(),
            xs in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 12), 100),
        ) {
            let l = laplacian(&a).to_dense();
            let n = a.n();
            let ones = DMatrix::from_element(n, 1, 1.0);
            prop_assert!((&l * ones).amax() < 1e-12);
            for x in xs {
                let x = DMatrix::from_column_slice(n, 1, &x[..n]);
                let q = (x.transpose() * &l * &x)[(0, 0)];
                prop_assert!(q >= -1e-10);
            }
        }
    }
}
