use nalgebra::{Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CMatrix, CVector};

/// Reciprocal-condition threshold below which a solve is refused.
pub const RCOND_THRESHOLD: f64 = 1e-12;

fn norm_1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization (partial pivoting) with its 1-norm reciprocal condition number.
pub struct Factorized {
    lu: LU<Complex64, Dyn, Dyn>,
    rcond: f64,
}

impl Factorized {
    pub fn new(a: CMatrix, context: &str) -> Result<Self> {
        assert!(a.is_square(), "factorized matrix must be square");
        let n = a.nrows();
        let a_norm = norm_1(&a);
        let lu = a.lu();
        let rcond = match lu.solve(&CMatrix::identity(n, n)) {
            Some(inv) if a_norm > 0.0 => {
                let r = 1.0 / (a_norm * norm_1(&inv));
                if r.is_finite() { r } else { 0.0 }
            }
            _ => 0.0,
        };
        // written so that a NaN condition also counts as singular
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(rcond >= RCOND_THRESHOLD) {
            return Err(Error::SingularSystem {
                context: context.to_string(),
                rcond,
                threshold: RCOND_THRESHOLD,
            });
        }
        Ok(Factorized { lu, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.lu.solve(b).expect("factorization checked nonsingular")
    }

    pub fn solve_vector(&self, b: &CVector) -> CVector {
        self.lu.solve(b).expect("factorization checked nonsingular")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_perfectly_conditioned() {
        let f = Factorized::new(CMatrix::identity(4, 4), "test").unwrap();
        assert!((f.rcond() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let one = Complex64::new(1.0, 0.0);
        let a = CMatrix::from_element(3, 3, one);
        match Factorized::new(a, "ones") {
            Err(Error::SingularSystem { context, rcond, .. }) => {
                assert_eq!(context, "ones");
                assert!(rcond < RCOND_THRESHOLD);
            }
            _ => panic!("expected singular system"),
        }
    }

    #[test]
    fn nearly_singular_is_rejected() {
        let mut a = CMatrix::identity(2, 2);
        a[(1, 1)] = Complex64::new(1e-14, 0.0);
        assert!(Factorized::new(a, "tiny pivot").is_err());
    }
}
