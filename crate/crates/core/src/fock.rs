//! Truncated Fock-space kernel: dimension policy, displacement operators from
//! the associated-Laguerre closed form, density-matrix constructors and the
//! Uhlmann fidelity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    check_finite, check_square, hermitian_defect, hermitian_eig, hermitize, CMatrix,
};

pub const MAX_DISPLACEMENT: f64 = 10.0;

/// Reconstruction dimension `n_tr` plus the padded working dimension `n_work`
/// in which operators are assembled before truncation.
///
/// `truncated` (n_work = n_tr) reproduces the hard-truncation convention used
/// for the transfer-function spectra; `padded` picks a working dimension large
/// enough that the retained block of a displaced operator is accurate to
/// better than 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionPolicy {
    n_tr: usize,
    n_work: usize,
}

impl DimensionPolicy {
    pub fn new(n_tr: usize, n_work: usize) -> Result<Self> {
        if n_tr == 0 {
            return Err(Error::DimensionPolicy {
                reason: "n_tr must be at least 1".into(),
            });
        }
        if n_work < n_tr {
            return Err(Error::DimensionPolicy {
                reason: format!("n_work = {n_work} is smaller than n_tr = {n_tr}"),
            });
        }
        Ok(Self { n_tr, n_work })
    }

    /// No padding: operators are assembled directly in the truncated space.
    pub fn truncated(n_tr: usize) -> Result<Self> {
        Self::new(n_tr, n_tr)
    }

    /// Padding calibrated so that the `n_tr` block of a displaced operator
    /// with `|gamma| <= max_abs_gamma` carries a truncation defect below 1e-8.
    pub fn padded(n_tr: usize, max_abs_gamma: f64) -> Result<Self> {
        if n_tr == 0 {
            return Err(Error::DimensionPolicy {
                reason: "n_tr must be at least 1".into(),
            });
        }
        if !(max_abs_gamma.is_finite() && max_abs_gamma >= 0.0) {
            return Err(Error::DimensionPolicy {
                reason: "max_abs_gamma must be finite and nonnegative".into(),
            });
        }
        Self::new(n_tr, n_tr + Self::calibrated_padding(n_tr, max_abs_gamma))
    }

    /// Minimum padding floor `ceil(4 |gamma|^2 + 10)`.
    pub fn padding_floor(abs_gamma: f64) -> usize {
        (4.0 * abs_gamma * abs_gamma + 10.0).ceil() as usize
    }

    /// Calibrated padding; always at least the floor. The linear-in-`gamma`
    /// term tracks the spread of displaced number distributions, measured so
    /// the block defect stays below 1e-9 for n_tr <= 64, |gamma| <= 4.
    pub fn calibrated_padding(n_tr: usize, abs_gamma: f64) -> usize {
        let g = abs_gamma;
        let calibrated =
            (0.5 * g * g + g * (2.2 * (n_tr as f64).sqrt() + 6.0) + 10.0).ceil() as usize;
        calibrated.max(Self::padding_floor(g))
    }

    pub fn meets_padding_floor(&self, abs_gamma: f64) -> bool {
        self.n_work >= self.n_tr + Self::padding_floor(abs_gamma)
    }

    pub fn n_tr(&self) -> usize {
        self.n_tr
    }

    pub fn n_work(&self) -> usize {
        self.n_work
    }
}

/// Matrix elements of the displacement operator `D(gamma)` on the working
/// space, from the associated-Laguerre closed form. Each entry equals the
/// infinite-dimensional matrix element; only products of truncated operators
/// pick up a padding-dependent error.
pub fn displacement_operator(gamma: Complex64, policy: &DimensionPolicy) -> Result<CMatrix> {
    if !(gamma.re.is_finite() && gamma.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let abs = gamma.norm();
    if abs > MAX_DISPLACEMENT {
        return Err(Error::DisplacementOutOfRange { abs });
    }
    let dim = policy.n_work;
    let x = abs * abs;
    let pref = (-x / 2.0).exp();
    let mut d = CMatrix::zeros(dim, dim);

    // Closed form, filled one subdiagonal offset at a time:
    //   <n+k|D|n> =  sqrt(n!/(n+k)!) gamma^k      e^{-x/2} L_n^{(k)}(x)
    //   <n|D|n+k> =  sqrt(n!/(n+k)!) (-gamma^*)^k e^{-x/2} L_n^{(k)}(x)
    let mut laguerre = vec![0.0f64; dim];
    let mut gamma_pow = Complex64::new(1.0, 0.0);
    let mut neg_conj_pow = Complex64::new(1.0, 0.0);
    let mut inv_sqrt_kfact = 1.0f64;
    for k in 0..dim {
        if k > 0 {
            gamma_pow *= gamma;
            neg_conj_pow *= -gamma.conj();
            inv_sqrt_kfact /= (k as f64).sqrt();
        }
        // L_n^{(k)}(x) for n = 0..dim-1-k by the three-term recurrence.
        let count = dim - k;
        laguerre[0] = 1.0;
        if count > 1 {
            laguerre[1] = 1.0 + k as f64 - x;
        }
        for n in 1..count.saturating_sub(1) {
            let nf = n as f64;
            laguerre[n + 1] = ((2.0 * nf + 1.0 + k as f64 - x) * laguerre[n]
                - (nf + k as f64) * laguerre[n - 1])
                / (nf + 1.0);
        }
        // ratio(n) = sqrt(n! / (n+k)!), updated multiplicatively in n.
        let mut ratio = inv_sqrt_kfact;
        for n in 0..count {
            if n > 0 {
                ratio *= ((n as f64) / ((n + k) as f64)).sqrt();
            }
            let base = ratio * pref * laguerre[n];
            d[(n + k, n)] = gamma_pow * base;
            if k > 0 {
                d[(n, n + k)] = neg_conj_pow * base;
            }
        }
    }
    Ok(d)
}

/// Complex Hermitian unit-trace positive-semidefinite matrix on the
/// truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

const STATE_HERMITIAN_TOL: f64 = 1e-12;
const STATE_TRACE_TOL: f64 = 1e-10;
const STATE_PSD_TOL: f64 = -1e-10;

impl DensityMatrix {
    /// Validate Hermiticity (1e-12 relative), unit trace (1e-10) and
    /// positivity (smallest eigenvalue >= -1e-10).
    pub fn new(mat: CMatrix) -> Result<Self> {
        check_square(&mat)?;
        check_finite(&mat)?;
        let defect = hermitian_defect(&mat);
        if defect > STATE_HERMITIAN_TOL {
            return Err(Error::InvalidState {
                reason: format!("Hermiticity defect {defect:.3e} exceeds 1e-12"),
            });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > STATE_TRACE_TOL || trace.im.abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState {
                reason: format!("trace {trace} deviates from 1"),
            });
        }
        let mat = hermitize(&mat);
        let eig = hermitian_eig(&mat)?;
        let min = *eig.eigenvalues.last().expect("non-empty");
        if min < STATE_PSD_TOL {
            return Err(Error::InvalidState {
                reason: format!("smallest eigenvalue {min:.3e} below -1e-10"),
            });
        }
        Ok(Self { mat })
    }

    /// Pure state from unnormalized amplitudes in the Fock basis.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::InvalidState {
                reason: "pure-state amplitudes must be finite and nonzero".into(),
            });
        }
        let dim = amplitudes.len();
        let mut mat = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = amplitudes[i] * amplitudes[j].conj() / norm_sqr;
            }
        }
        Self::new(mat)
    }

    /// Fock state `|n><n|`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidState {
                reason: format!("Fock index {n} outside dimension {dim}"),
            });
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::from_pure(&amps)
    }

    /// Coherent state `|alpha>` truncated to `dim` and renormalized.
    pub fn coherent(alpha: Complex64, dim: usize) -> Result<Self> {
        let mut amps = vec![Complex64::default(); dim];
        let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for (n, slot) in amps.iter_mut().enumerate() {
            if n > 0 {
                amp *= alpha / (n as f64).sqrt();
            }
            *slot = amp;
        }
        Self::from_pure(&amps)
    }

    /// Superposition of Fock components `(n, amplitude)`, normalized.
    pub fn superposition(components: &[(usize, Complex64)], dim: usize) -> Result<Self> {
        let mut amps = vec![Complex64::default(); dim];
        for &(n, a) in components {
            if n >= dim {
                return Err(Error::InvalidState {
                    reason: format!("Fock index {n} outside dimension {dim}"),
                });
            }
            amps[n] += a;
        }
        Self::from_pure(&amps)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidState {
                reason: "dimension must be at least 1".into(),
            });
        }
        let mat = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self::new(mat)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }
}

/// Eigenvalues this far below the top (relative) are treated as zero before
/// square roots, so rounding junk is not amplified by the sqrt.
const SQRT_SPECTRUM_FLOOR: f64 = 1e-14;

/// Hermitian PSD square root via eigendecomposition.
fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let dim = eig.eigenvalues.len();
    let floor = eig.eigenvalues[0].max(0.0) * SQRT_SPECTRUM_FLOOR;
    let mut scaled = eig.eigenvectors.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if *lambda > floor { lambda.sqrt() } else { 0.0 };
        for i in 0..dim {
            scaled[(i, k)] *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to [0, 1].
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let sa = psd_sqrt(a.matrix())?;
    let inner = &sa * b.matrix() * &sa;
    let eig = hermitian_eig(&hermitize(&inner))?;
    let floor = eig.eigenvalues[0].max(0.0) * SQRT_SPECTRUM_FLOOR;
    let root_sum: f64 = eig
        .eigenvalues
        .iter()
        .map(|l| if *l > floor { l.sqrt() } else { 0.0 })
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Frobenius distance helper used by tests and diagnostics.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    let eig = hermitian_eig(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}
