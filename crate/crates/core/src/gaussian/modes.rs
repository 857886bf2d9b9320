use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{thermal_factor, CovarianceMatrix, QuadraticHamiltonian, TAU_SYM};
use crate::{Error, Result};

/// Orthogonal-symplectic change of basis `Q = G R` to uncoupled normal modes,
/// together with the mode frequencies `ω̃_m`.
///
/// `G` acts identically on positions and momenta: row `2m` of `G` holds the
/// position eigenvector of mode `m` on the even columns, row `2m + 1` the same
/// vector on the odd columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeDecomposition {
    transform: DMatrix<f64>,
    frequencies: Vec<f64>,
}

impl NormalModeDecomposition {
    /// Builds `G` from an orthonormal set of position eigenvectors, one per
    /// row of `position_modes`.
    pub fn from_position_modes(position_modes: &DMatrix<f64>, frequencies: Vec<f64>) -> Result<Self> {
        let n = position_modes.nrows();
        if position_modes.ncols() != n || frequencies.len() != n {
            return Err(Error::DimensionMismatch {
                context: "normal-mode transform",
                expected: n,
                found: frequencies.len(),
            });
        }
        if let Some((mode, &w)) = frequencies
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::UnstableMode {
                mode: mode + 1,
                omega_sq: w * w.abs(),
            });
        }
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        for m in 0..n {
            for i in 0..n {
                g[(2 * m, 2 * i)] = position_modes[(m, i)];
                g[(2 * m + 1, 2 * i + 1)] = position_modes[(m, i)];
            }
        }
        Ok(Self {
            transform: g,
            frequencies,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Full `2n × 2n` transform `G`.
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// The `n × n` matrix `G_{mi}` acting on positions alone.
    pub fn position_transform(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        DMatrix::from_fn(n, n, |m, i| self.transform[(2 * m, 2 * i)])
    }

    /// Site weights projected onto the modes, `w̃_m = Σ_i G_{mi} w_i`.
    pub fn project(&self, site_weights: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_modes();
        if site_weights.len() != n {
            return Err(Error::DimensionMismatch {
                context: "site weights",
                expected: n,
                found: site_weights.len(),
            });
        }
        Ok((0..n)
            .map(|m| {
                (0..n)
                    .map(|i| self.transform[(2 * m, 2 * i)] * site_weights[i])
                    .sum()
            })
            .collect())
    }

    /// Covariance of the thermal state in the normal-mode basis.
    pub fn mode_covariance(&self, temperature: f64) -> Result<CovarianceMatrix> {
        if temperature < 0.0 {
            return Err(Error::NegativeTemperature(temperature));
        }
        let n = self.n_modes();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for (m, &w) in self.frequencies.iter().enumerate() {
            let c = thermal_factor(w, temperature);
            s[(2 * m, 2 * m)] = c / (2.0 * w);
            s[(2 * m + 1, 2 * m + 1)] = w * c / 2.0;
        }
        CovarianceMatrix::new(s)
    }

    /// Thermal covariance in the original basis, `Gᵀ σ̃ G`.
    pub fn thermal_covariance(&self, temperature: f64) -> Result<CovarianceMatrix> {
        self.mode_covariance(temperature)?.congruence(&self.transform)
    }
}

/// Flip an eigenvector so its largest-magnitude entry (first one, on ties) is
/// positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if let Some(first) = v.iter().position(|x| x.abs() >= max - 1e-12 * max.max(1.0)) {
        if v[first] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Numerical normal modes of a Hamiltonian with identity momentum block and
/// no position-momentum cross terms.
///
/// Modes are sorted by ascending frequency. Within a degenerate subspace the
/// eigenvectors are re-orthonormalized; every vector then gets the
/// largest-entry-positive sign convention.
pub fn normal_mode_decomposition(h: &QuadraticHamiltonian) -> Result<NormalModeDecomposition> {
    let m = h.matrix();
    let n = h.n_modes();
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if m[(2 * i, 2 * j + 1)].abs() > TAU_SYM * scale {
                return Err(Error::UnsupportedHamiltonian(
                    "position-momentum cross terms".into(),
                ));
            }
            let expected = if i == j { 1.0 } else { 0.0 };
            if (m[(2 * i + 1, 2 * j + 1)] - expected).abs() > TAU_SYM * scale {
                return Err(Error::UnsupportedHamiltonian(
                    "momentum block is not the identity".into(),
                ));
            }
        }
    }
    let k = DMatrix::from_fn(n, n, |i, j| m[(2 * i, 2 * j)]);
    let eig = k.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    if let Some((mode, &omega_sq)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::UnstableMode {
            mode: mode + 1,
            omega_sq,
        });
    }
    let mut vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();

    // Gram-Schmidt inside each cluster of (numerically) equal eigenvalues.
    let cluster_tol = 1e-9 * values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[start] <= cluster_tol {
            end += 1;
        }
        for a in start..end {
            for b in start..a {
                let dot: f64 = vectors[a].iter().zip(&vectors[b]).map(|(x, y)| x * y).sum();
                let (head, tail) = vectors.split_at_mut(a);
                tail[0]
                    .iter_mut()
                    .zip(&head[b])
                    .for_each(|(x, y)| *x -= dot * y);
            }
            let norm = vectors[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            vectors[a].iter_mut().for_each(|x| *x /= norm);
        }
        start = end;
    }
    vectors.iter_mut().for_each(|v| canonical_sign(v));

    let position = DMatrix::from_fn(n, n, |row, col| vectors[row][col]);
    NormalModeDecomposition::from_position_modes(&position, values.iter().map(|v| v.sqrt()).collect())
}

/// Coefficient multiplying `λ_I` in `ω̃_m²` for each ring mode `m = 1..N_E`.
fn ring_coefficients(n_oscillators: usize, force_ring: bool) -> Vec<f64> {
    if n_oscillators == 2 && !force_ring {
        // Two oscillators joined by a single spring.
        return vec![0.0, 4.0];
    }
    (0..n_oscillators)
        .map(|q| {
            let s = (PI * q as f64 / n_oscillators as f64).sin();
            8.0 * s * s
        })
        .collect()
}

/// Smallest `λ_I` that would make some ring mode unstable: all modes are real
/// iff `λ_I` is strictly above this value.
pub fn ring_critical_coupling(n_oscillators: usize, omega_e: f64, force_ring: bool) -> f64 {
    let max_coeff = ring_coefficients(n_oscillators, force_ring)
        .into_iter()
        .fold(0.0, f64::max);
    -omega_e * omega_e / max_coeff
}

/// Closed-form ring spectrum `ω̃_m = √(ω_E² + 8 λ_I sin²[π(m-1)/N_E])`.
///
/// `N_E = 2` uses the single-spring line, `ω̃ = {ω_E, √(ω_E² + 4λ_I)}`.
pub fn ring_mode_frequencies(n_oscillators: usize, omega_e: f64, lambda_i: f64) -> Result<Vec<f64>> {
    ring_mode_frequencies_with(n_oscillators, omega_e, lambda_i, false)
}

/// [`ring_mode_frequencies`] with the option of closing the `N_E = 2` ring,
/// which counts the single spring twice.
pub fn ring_mode_frequencies_with(
    n_oscillators: usize,
    omega_e: f64,
    lambda_i: f64,
    force_ring: bool,
) -> Result<Vec<f64>> {
    if n_oscillators < 2 {
        return Err(Error::InvalidArgument(format!(
            "a ring needs at least two oscillators, got {n_oscillators}"
        )));
    }
    let coeffs = ring_coefficients(n_oscillators, force_ring);
    let mut out = Vec::with_capacity(n_oscillators);
    for c in coeffs {
        let radicand = omega_e * omega_e + lambda_i * c;
        if radicand <= 0.0 {
            return Err(Error::UnstableRing {
                n_oscillators,
                lambda_i,
                critical: ring_critical_coupling(n_oscillators, omega_e, force_ring),
            });
        }
        out.push(radicand.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_h(n: usize, w: f64, lam: f64) -> QuadraticHamiltonian {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(2 * i, 2 * i)] = w * w + 4.0 * lam;
            m[(2 * i + 1, 2 * i + 1)] = 1.0;
            let j = (i + 1) % n;
            m[(2 * i, 2 * j)] -= 2.0 * lam;
            m[(2 * j, 2 * i)] -= 2.0 * lam;
        }
        QuadraticHamiltonian::new(m).unwrap()
    }

    #[test]
    fn decoupled_ring_has_unit_frequencies() {
        let d = normal_mode_decomposition(&ring_h(4, 1.0, 0.0)).unwrap();
        assert!(d.frequencies().iter().all(|w| (w - 1.0).abs() < 1e-14));
    }

    #[test]
    fn unit_coupled_ring_of_four() {
        let d = normal_mode_decomposition(&ring_h(4, 1.0, 1.0)).unwrap();
        let expected = [1.0, 5.0_f64.sqrt(), 5.0_f64.sqrt(), 3.0];
        for (a, b) in d.frequencies().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut closed = ring_mode_frequencies(4, 1.0, 1.0).unwrap();
        closed.sort_by(f64::total_cmp);
        for (a, b) in closed.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_is_orthogonal_and_symplectic() {
        let d = normal_mode_decomposition(&ring_h(5, 1.3, 0.4)).unwrap();
        let g = d.transform();
        let om = crate::gaussian::symplectic_matrix(5);
        assert!((g.transpose() * g - DMatrix::identity(10, 10)).amax() < 1e-10);
        assert!((g.transpose() * &om * g - &om).amax() < 1e-10);
    }

    #[test]
    fn transform_diagonalizes() {
        let h = ring_h(6, 0.8, 0.3);
        let d = normal_mode_decomposition(&h).unwrap();
        let mt = d.transform() * h.matrix() * d.transform().transpose();
        for m in 0..6 {
            let w = d.frequencies()[m];
            assert!((mt[(2 * m, 2 * m)] - w * w).abs() < 1e-10);
            assert!((mt[(2 * m + 1, 2 * m + 1)] - 1.0).abs() < 1e-10);
        }
        let mut off = mt.clone();
        for m in 0..12 {
            off[(m, m)] = 0.0;
        }
        assert!(off.amax() < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let d = normal_mode_decomposition(&ring_h(4, 1.0, 0.5)).unwrap();
        let o = d.position_transform();
        for m in 0..4 {
            let row: Vec<f64> = o.row(m).iter().copied().collect();
            let max = row.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            let first = row.iter().position(|x| x.abs() >= max - 1e-12).unwrap();
            assert!(row[first] > 0.0);
        }
    }

    #[test]
    fn unstable_position_block() {
        assert!(matches!(
            normal_mode_decomposition(&ring_h(4, 1.0, -0.2)),
            Err(Error::UnstableMode { .. })
        ));
    }

    #[test]
    fn cross_terms_rejected() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.3;
        m[(1, 0)] = 0.3;
        let h = QuadraticHamiltonian::new(m).unwrap();
        assert!(matches!(
            normal_mode_decomposition(&h),
            Err(Error::UnsupportedHamiltonian(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        for n in 2..8 {
            assert!((ring_mode_frequencies(n, 1.3, 0.7).unwrap()[0] - 1.3).abs() < 1e-15);
        }
        let f = ring_mode_frequencies(4, 1.0, 1.0).unwrap();
        assert!((f.iter().cloned().fold(0.0, f64::max) - 3.0).abs() < 1e-14);
        let f = ring_mode_frequencies(3, 1.0, 1.0).unwrap();
        let expected = (1.0 + 8.0 * (PI / 6.0).cos().powi(2)).sqrt();
        assert!((expected - 7.0_f64.sqrt()).abs() < 1e-14);
        assert!((f.iter().cloned().fold(0.0, f64::max) - expected).abs() < 1e-14);
    }

    #[test]
    fn two_oscillator_conventions() {
        let line = ring_mode_frequencies(2, 1.0, 1.0).unwrap();
        assert!((line[1] - 5.0_f64.sqrt()).abs() < 1e-15);
        let ring = ring_mode_frequencies_with(2, 1.0, 1.0, true).unwrap();
        assert!((ring[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn unstable_ring_names_critical_coupling() {
        match ring_mode_frequencies(4, 1.0, -0.2) {
            Err(Error::UnstableRing { critical, .. }) => assert!((critical + 0.125).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        match ring_mode_frequencies(2, 2.0, -1.5) {
            Err(Error::UnstableRing { critical, .. }) => assert!((critical + 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(ring_mode_frequencies(1, 1.0, 0.0).is_err());
    }
}
