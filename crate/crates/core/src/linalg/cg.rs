use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||A x - b|| / ||b||` (zero when `b = 0`).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for a symmetric positive definite operator given as a
/// matvec closure `apply(x, out)`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged("conjugate gradient (operator not positive definite)", it));
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / b_norm;
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged("conjugate gradient", max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(a: &DMatrix<f64>) -> impl Fn(&[f64], &mut [f64]) + '_ {
        move |x, out| {
            let y = a * DVector::from_column_slice(x);
            out.copy_from_slice(y.as_slice());
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = [1.0, -2.0, 3.5];
        let out = conjugate_gradient(|x, y| y.copy_from_slice(x), &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b.to_vec());
    }

    #[test]
    fn diagonal_system() {
        let out = conjugate_gradient(
            |x, y| {
                for i in 0..5 {
                    y[i] = (i + 1) as f64 * x[i];
                }
            },
            &[1.0; 5],
            1e-14,
            10,
        )
        .unwrap();
        for (i, v) in out.x.iter().enumerate() {
            assert!((v - 1.0 / (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn random_spd_matches_cholesky() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let a = &g * g.transpose() + DMatrix::identity(20, 20);
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = conjugate_gradient(dense_apply(&a), &b, 1e-13, 200).unwrap();
        let want = a.clone().cholesky().unwrap().solve(&DVector::from_vec(b));
        for (x, w) in out.x.iter().zip(want.iter()) {
            assert!((x - w).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_and_indefinite_operator() {
        let out = conjugate_gradient(|x, y| y.copy_from_slice(x), &[0.0; 3], 1e-12, 5).unwrap();
        assert_eq!(out.x, vec![0.0; 3]);
        let neg = conjugate_gradient(|x, y| y.iter_mut().zip(x).for_each(|(o, v)| *o = -v), &[1.0], 1e-12, 5);
        assert!(neg.is_err());
        let capped = conjugate_gradient(dense_apply(&DMatrix::from_diagonal_element(50, 50, 1.0)), &[1.0; 50], 0.0, 0);
        assert!(capped.is_err());
    }
}
