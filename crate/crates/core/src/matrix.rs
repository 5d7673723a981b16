//! Dense complex-matrix kernel: Hermitian eigendecomposition with a fixed
//! ordering/phase convention, whitening maps, and full-precision JSON
//! serialization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};

/// Dense complex matrix in the Fock basis; entry `(m, n)` is `<m|M|n>`.
pub type CMatrix = DMatrix<Complex64>;

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative Hermiticity defect `|M - M^dag|_F / |M|_F` (zero matrix gives 0).
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let norm = frobenius_norm(m);
    if norm == 0.0 {
        return 0.0;
    }
    let mut defect = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            defect += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    defect.sqrt() / norm
}

/// Symmetrize to the nearest Hermitian matrix, `(M + M^dag) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }
    out
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are real and sorted descending (ties broken by the original
/// index); the matching eigenvector columns are orthonormal, each with its
/// largest-magnitude component made real positive so the decomposition is
/// deterministic.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEigensystem {
    /// Rebuild `V diag(lambda) V^dag`.
    pub fn reconstruct(&self) -> CMatrix {
        let dim = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..dim {
                scaled[(i, k)] *= *lambda;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }
}

const HERMITIAN_INPUT_TOL: f64 = 1e-10;
const EIG_RESIDUAL_TOL: f64 = 1e-10;

/// Hermitian eigendecomposition with the crate's ordering and phase fixing.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigensystem> {
    let dim = check_square(m)?;
    check_finite(m)?;
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let sym = hermitize(m);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::EigenFailure)?;

    // Sort descending; ties keep the backend's original index order.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut eigenvalues = Vec::with_capacity(dim);
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // Fix the global phase: largest-magnitude component real positive.
        let mut imax = 0;
        let mut amax = 0.0f64;
        for i in 0..dim {
            let a = col[i].norm_sqr();
            if a > amax {
                amax = a;
                imax = i;
            }
        }
        let pivot = col[imax];
        let phase = if pivot.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            pivot.conj() / pivot.norm()
        };
        for i in 0..dim {
            eigenvectors[(i, dst)] = col[i] * phase;
        }
    }

    let out = HermitianEigensystem {
        eigenvalues,
        eigenvectors,
    };
    let norm = frobenius_norm(m).max(f64::MIN_POSITIVE);
    if frobenius_norm(&(out.reconstruct() - m)) > EIG_RESIDUAL_TOL * norm {
        return Err(Error::EigenFailure);
    }
    Ok(out)
}

/// Whitening map for a Hermitian PSD matrix `g`.
///
/// Returns `(B, k)` where the columns of the `n x k` matrix `B` are
/// `v_i / sqrt(lambda_i)` over the eigenpairs with
/// `lambda_i > rel_threshold * lambda_max`, so that `B^dag g B = I_k`.
pub fn inv_sqrt_projected(g: &CMatrix, rel_threshold: f64) -> Result<(CMatrix, usize)> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidConfig {
            reason: format!("rel_threshold must lie in (0, 1), got {rel_threshold}"),
        });
    }
    let dim = check_square(g)?;
    let eig = hermitian_eig(g)?;
    let lambda_max = eig.eigenvalues[0];
    if lambda_max <= 0.0 {
        return Err(Error::EmptySubspace);
    }
    let lambda_min = *eig.eigenvalues.last().expect("dim >= 1");
    if lambda_min < -1e-10 * lambda_max {
        return Err(Error::NotPositive {
            min_eigenvalue: lambda_min,
        });
    }
    let kept = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| l > rel_threshold * lambda_max)
        .count();
    if kept == 0 {
        return Err(Error::EmptySubspace);
    }
    let mut basis = CMatrix::zeros(dim, kept);
    for k in 0..kept {
        let scale = 1.0 / eig.eigenvalues[k].sqrt();
        for i in 0..dim {
            basis[(i, k)] = eig.eigenvectors[(i, k)] * scale;
        }
    }
    Ok((basis, kept))
}

/// JSON form of a complex matrix: row-major real and imaginary parts,
/// written with 17 significant digits so values round-trip exactly.
#[derive(Serialize, Deserialize)]
pub struct MatrixRepr {
    pub dim: usize,
    pub re: Vec<Vec<Box<RawValue>>>,
    pub im: Vec<Vec<Box<RawValue>>>,
}

fn raw_f64(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite float formats as valid JSON")
}

fn parse_f64(raw: &RawValue) -> Result<f64> {
    raw.get()
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig {
            reason: format!("invalid number in matrix JSON: {}", raw.get()),
        })
}

pub fn matrix_to_repr(m: &CMatrix) -> MatrixRepr {
    let dim = m.nrows();
    let mut re = Vec::with_capacity(dim);
    let mut im = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut row_re = Vec::with_capacity(m.ncols());
        let mut row_im = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            row_re.push(raw_f64(m[(i, j)].re));
            row_im.push(raw_f64(m[(i, j)].im));
        }
        re.push(row_re);
        im.push(row_im);
    }
    MatrixRepr { dim, re, im }
}

pub fn matrix_from_repr(repr: &MatrixRepr) -> Result<CMatrix> {
    let dim = repr.dim;
    let shape_ok = repr.re.len() == dim
        && repr.im.len() == dim
        && repr.re.iter().all(|r| r.len() == dim)
        && repr.im.iter().all(|r| r.len() == dim);
    if !shape_ok {
        return Err(Error::InvalidConfig {
            reason: "matrix JSON shape does not match dim".into(),
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = Complex64::new(parse_f64(&repr.re[i][j])?, parse_f64(&repr.im[i][j])?);
        }
    }
    check_finite(&m)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let raw = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        hermitize(&raw)
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eig(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_descending() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            hermitian_eig(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn round_trip_residual_small() {
        let mut rng = StdRng::seed_from_u64(7);
        for dim in [2usize, 10, 64] {
            let m = random_hermitian(dim, &mut rng);
            let eig = hermitian_eig(&m).unwrap();
            let resid = frobenius_norm(&(eig.reconstruct() - &m));
            assert!(
                resid <= 1e-10 * frobenius_norm(&m),
                "dim {dim}: residual {resid:.3e}"
            );
            let vtv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
            assert!(frobenius_norm(&(vtv - CMatrix::identity(dim, dim))) <= 1e-10);
        }
    }

    #[test]
    fn eig_is_deterministic() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = random_hermitian(12, &mut rng);
        let a = hermitian_eig(&m).unwrap();
        let b = hermitian_eig(&m).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn inv_sqrt_identity_keeps_all() {
        let (basis, k) = inv_sqrt_projected(&CMatrix::identity(4, 4), 1e-6).unwrap();
        assert_eq!(k, 4);
        let gram = basis.adjoint() * &basis;
        assert!(frobenius_norm(&(gram - CMatrix::identity(4, 4))) <= 1e-12);
    }

    #[test]
    fn inv_sqrt_discards_below_threshold() {
        let g = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-8, 0.0),
        ]));
        let (basis, k) = inv_sqrt_projected(&g, 1e-6).unwrap();
        assert_eq!(k, 1);
        assert_eq!(basis.ncols(), 1);
    }

    #[test]
    fn inv_sqrt_whitens() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_hermitian(6, &mut rng);
        let g = &a * a.adjoint();
        let (basis, k) = inv_sqrt_projected(&g, 1e-9).unwrap();
        let white = basis.adjoint() * &g * &basis;
        assert!(frobenius_norm(&(white - CMatrix::identity(k, k))) <= 1e-10);
    }

    #[test]
    fn inv_sqrt_zero_matrix_fails() {
        assert!(matches!(
            inv_sqrt_projected(&CMatrix::zeros(3, 3), 1e-6),
            Err(Error::EmptySubspace)
        ));
    }

    #[test]
    fn matrix_json_round_trip_exact() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = random_hermitian(5, &mut rng);
        let repr = matrix_to_repr(&m);
        let text = serde_json::to_string(&repr).unwrap();
        let back: MatrixRepr = serde_json::from_str(&text).unwrap();
        let m2 = matrix_from_repr(&back).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn defect_measures_asymmetry() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        assert_relative_eq!(hermitian_defect(&m), 2.0 / 2.0f64.sqrt(), epsilon = 1e-12);
    }
}
