//! Symplectic linear algebra for zero-mean Gaussian states.
//!
//! All matrices use the interleaved quadrature ordering
//! `R = (x1, p1, x2, p2, ..., xn, pn)`.

mod expm;
mod modes;

use nalgebra::DMatrix;

use crate::{Error, Result};

pub use expm::matrix_exponential;
pub(crate) use modes::canonical_sign;
pub use modes::{
    normal_mode_decomposition, ring_critical_coupling, ring_mode_frequencies,
    ring_mode_frequencies_with, NormalModeDecomposition,
};

/// Symmetry tolerance for covariance and coefficient matrices.
pub const TAU_SYM: f64 = 1e-10;
/// Allowed violation of the uncertainty relation.
pub const TAU_PHYS: f64 = 1e-9;
/// Agreement tolerance between numerical and closed-form spectra.
pub const TAU_NUM: f64 = 1e-10;
/// Maximum mismatch inside a pair of symplectic eigenvalues.
pub const TAU_PAIR: f64 = 1e-8;
/// Temperatures below this are treated as zero.
pub const ZERO_TEMPERATURE: f64 = 1e-12;

pub(crate) fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// `coth(ω / 2T)`, the thermal enhancement of a mode's zero-point variance.
/// Returns exactly 1 in the `T -> 0` limit.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    if temperature < ZERO_TEMPERATURE {
        1.0
    } else {
        coth(omega / (2.0 * temperature))
    }
}

fn omega_matrix(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub(crate) fn symplectic_matrix(n_modes: usize) -> DMatrix<f64> {
    omega_matrix(n_modes)
}

/// Direct sum `a ⊕ b`.
pub fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn scale_of(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

fn check_square_even(a: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if rows == 0 || rows % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "quadrature matrices need even positive dimension, got {rows}"
        )));
    }
    Ok(rows / 2)
}

fn symmetrized(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let deviation = asymmetry(&a);
    if deviation > TAU_SYM * scale_of(&a) {
        return Err(Error::NotSymmetric { deviation });
    }
    Ok((&a + a.transpose()) * 0.5)
}

/// The canonical symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument(
                "symplectic form needs at least one mode".into(),
            ));
        }
        Ok(Self {
            n_modes,
            matrix: omega_matrix(n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    SymplecticForm::new(n_modes)
}

/// Symmetric coefficient matrix `M` of a quadratic Hamiltonian `H = ½ RᵀMR`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    matrix: DMatrix<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_even(&matrix)?;
        Ok(Self {
            matrix: symmetrized(matrix)?,
        })
    }

    /// Uncoupled oscillators `½ Σ (ω_k² x_k² + p_k²)`.
    pub fn oscillators(frequencies: &[f64]) -> Result<Self> {
        let n = frequencies.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for (k, w) in frequencies.iter().enumerate() {
            m[(2 * k, 2 * k)] = w * w;
            m[(2 * k + 1, 2 * k + 1)] = 1.0;
        }
        Self::new(m)
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Drift matrix `D = Ω M` of the Heisenberg equations `d⟨R⟩/dt = D⟨R⟩`.
    pub fn drift(&self) -> DMatrix<f64> {
        omega_matrix(self.n_modes()) * &self.matrix
    }

    /// `⟨H⟩ = ½ Tr[σ M]` for a zero-mean state.
    pub fn expectation(&self, sigma: &CovarianceMatrix) -> Result<f64> {
        if sigma.dim() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian expectation",
                expected: self.matrix.nrows(),
                found: sigma.dim(),
            });
        }
        Ok(0.5 * sigma.matrix().component_mul(&self.matrix).sum())
    }
}

/// Second-moment matrix `σ_ij = ½⟨R_i R_j + R_j R_i⟩` of a zero-mean
/// Gaussian state. Stored exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Accepts matrices symmetric within `TAU_SYM` (relative to the largest
    /// entry) and symmetrizes them. Physicality is checked separately.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_even(&matrix)?;
        Ok(Self {
            matrix: symmetrized(matrix)?,
        })
    }

    /// Single-mode state from `(⟨x²⟩, ⟨xp⟩_sym, ⟨p²⟩)`.
    pub fn single_mode(xx: f64, xp: f64, pp: f64) -> Self {
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[xx, xp, xp, pp]),
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        CovarianceMatrix {
            matrix: direct_sum(&self.matrix, &other.matrix),
        }
    }

    /// Leading `2k × 2k` block, i.e. the reduced state of the first `k` modes.
    pub fn leading_block(&self, k: usize) -> Result<CovarianceMatrix> {
        if k == 0 || 2 * k > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "cannot take {k} modes out of {}",
                self.n_modes()
            )));
        }
        Ok(CovarianceMatrix {
            matrix: self.matrix.view((0, 0), (2 * k, 2 * k)).into_owned(),
        })
    }

    /// `Gᵀ σ G`.
    pub fn congruence(&self, g: &DMatrix<f64>) -> Result<CovarianceMatrix> {
        if g.nrows() != self.dim() || g.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "congruence transform",
                expected: self.dim(),
                found: g.nrows(),
            });
        }
        CovarianceMatrix::new(g.transpose() * &self.matrix * g)
    }

    /// Smallest eigenvalue of the Hermitian matrix `σ + iΩ/2`.
    ///
    /// Uses the real embedding `[[A, -B], [B, A]]` of `A + iB`, whose spectrum
    /// is that of `A + iB` with every eigenvalue doubled.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let b = omega_matrix(self.n_modes()) * 0.5;
        let mut embed = DMatrix::zeros(2 * n, 2 * n);
        embed.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        embed.view_mut((n, n), (n, n)).copy_from(&self.matrix);
        embed.view_mut((0, n), (n, n)).copy_from(&(-&b));
        embed.view_mut((n, 0), (n, n)).copy_from(&b);
        embed.symmetric_eigenvalues().min()
    }

    pub fn check_physical(&self) -> Result<()> {
        let min_eigenvalue = self.min_uncertainty_eigenvalue();
        if min_eigenvalue < -TAU_PHYS {
            Err(Error::Unphysical { min_eigenvalue })
        } else {
            Ok(())
        }
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }
}

/// Thermal state of `h` at temperature `temperature`.
///
/// Each normal mode `m` gets `diag(coth(ω̃/2T)/(2ω̃), ω̃ coth(ω̃/2T)/2)`,
/// which is then mapped back with `σ = Gᵀ σ̃ G`.
pub fn thermal_covariance(h: &QuadraticHamiltonian, temperature: f64) -> Result<CovarianceMatrix> {
    if temperature < 0.0 {
        return Err(Error::NegativeTemperature(temperature));
    }
    normal_mode_decomposition(h)?.thermal_covariance(temperature)
}

/// Symplectic eigenvalues `ν_k`, sorted in descending order.
///
/// These are the moduli of the eigenvalues of `iΩσ`, which come in pairs;
/// one member of each pair is kept.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    // A = σ^½ Ω σ^½ is antisymmetric with eigenvalues ±iν_k, so AᵀA is
    // symmetric with each ν_k² appearing twice. This avoids a general
    // (non-symmetric) eigensolver on Ωσ.
    let eig = sigma.matrix().clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(Error::Unphysical {
            min_eigenvalue: min,
        });
    }
    let root_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * root_diag * eig.eigenvectors.transpose();
    let a = &root * omega_matrix(sigma.n_modes()) * &root;
    let mut moduli: Vec<f64> = (a.transpose() * &a)
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(moduli.len() / 2);
    for pair in moduli.chunks(2) {
        let gap = (pair[0] - pair[1]).abs();
        if gap > TAU_PAIR * pair[0].max(1.0) {
            return Err(Error::PairingFailure { gap });
        }
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(out)
}
