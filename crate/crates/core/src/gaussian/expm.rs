use nalgebra::DMatrix;

use crate::{Error, Result};

// After scaling, ‖B‖₁ ≤ 1/2 and a Taylor sum truncated at MAX_TERMS has
// remainder below 0.5^31 / 31!, far under double precision.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 30;

fn norm_1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(scale · a)` by scaling and squaring with a Taylor kernel.
pub fn matrix_exponential(a: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if !scale.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix exponential needs finite entries".into(),
        ));
    }
    let n = rows;
    let b = a * scale;
    let norm = norm_1(&b);
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let b = b * 0.5_f64.powi(squarings);

    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=MAX_TERMS {
        term = &term * &b / k as f64;
        sum += &term;
        if norm_1(&term) <= f64::EPSILON * 1e-2 * norm_1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::symplectic_matrix;

    #[test]
    fn zero_matrix_gives_identity() {
        let e = matrix_exponential(&DMatrix::zeros(4, 4), 1.0).unwrap();
        assert_eq!(e, DMatrix::identity(4, 4));
    }

    #[test]
    fn rotation_closed_form() {
        let om = symplectic_matrix(1);
        for &theta in &[0.1, 1.0, 2.5, 40.0, -7.3] {
            let e = matrix_exponential(&om, theta).unwrap();
            let (s, c) = f64::sin_cos(theta);
            let expected = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
            assert!((e - expected).amax() < 1e-12, "theta = {theta}");
        }
    }

    #[test]
    fn inverse_identity() {
        let d = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 1.0, 0.0, 0.3, -2.0, 0.0, -0.4, 0.0, 0.0, 0.3, 0.0, 1.0, -0.4, 0.0, -1.5, 0.0],
        );
        let fwd = matrix_exponential(&d, 0.37).unwrap();
        let back = matrix_exponential(&d, -0.37).unwrap();
        assert!((fwd * back - DMatrix::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn agrees_with_nalgebra_exp() {
        let a = DMatrix::from_row_slice(3, 3, &[0.2, -1.1, 3.0, 0.5, 0.0, -2.0, 1.7, 0.4, -0.3]);
        for &s in &[0.01, 1.0, 5.0] {
            let ours = matrix_exponential(&a, s).unwrap();
            let reference = (&a * s).exp();
            let rel = (&ours - &reference).norm() / reference.norm();
            assert!(rel < 1e-12, "scale {s}: rel {rel:e}");
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            matrix_exponential(&DMatrix::zeros(2, 3), 1.0),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matrix_exponential(&a, 1.0).is_err());
    }
}
