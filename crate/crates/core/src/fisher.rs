//! Element-wise Fisher information for the reconstructed density matrix and
//! the variance table `sigma(rho_mn) = (F(rho_mn) N_mes)^{-1/2}`.
//!
//! Parameters are the unconstrained real and imaginary parts of the matrix
//! elements; no trace or positivity projection is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::povm::{probability, PovmElement};

/// Which real coordinate of `rho_mn` a derivative refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// `d p_j / d theta` for `theta = Re(rho_mn)` or `Im(rho_mn)` under the
/// Hermiticity-preserving perturbation.
pub fn dprob(element: &PovmElement, m: usize, n: usize, part: Part) -> Result<f64> {
    let dim = element.dim();
    if m >= dim || n >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.max(n) + 1,
        });
    }
    let a = element.matrix();
    match part {
        Part::Re => {
            if m == n {
                Ok(a[(m, m)].re)
            } else {
                Ok(2.0 * a[(m, n)].re)
            }
        }
        Part::Im => {
            if m == n {
                Err(Error::InvalidConfig {
                    reason: "Im(rho_mm) is not a parameter of a Hermitian matrix".into(),
                })
            } else {
                Ok(2.0 * a[(m, n)].im)
            }
        }
    }
}

/// Fisher information of the normalized model `q_j = p_j / sum p` for one
/// matrix-element coordinate:
/// `F = sum_j (sum_j' p_j' / p_j) [d q_j / d theta]^2`.
pub fn fisher_information(
    rho: &DensityMatrix,
    elements: &[PovmElement],
    m: usize,
    n: usize,
    part: Part,
) -> Result<f64> {
    if elements.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let p: Vec<f64> = elements
        .iter()
        .map(|e| probability(rho, e))
        .collect::<Result<_>>()?;
    let p_sum: f64 = p.iter().sum();
    if p.iter().any(|&pj| pj <= 0.0) {
        return Err(Error::NonPhysicalProbability {
            value: p.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    let dp: Vec<f64> = elements
        .iter()
        .map(|e| dprob(e, m, n, part))
        .collect::<Result<_>>()?;
    let dp_sum: f64 = dp.iter().sum();
    let mut f = 0.0;
    for j in 0..p.len() {
        let q_j = p[j] / p_sum;
        let dq_j = (dp[j] - q_j * dp_sum) / p_sum;
        f += (p_sum / p[j]) * dq_j * dq_j;
    }
    Ok(f)
}

/// Per-element standard deviations; `sigma_re` covers `m <= n`, `sigma_im`
/// covers `m > n` (diagonal entries of `sigma_im` are not parameters and are
/// stored as NaN). Entries with zero Fisher information are infinite and
/// listed in `infinite_entries`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceTable {
    pub dim: usize,
    pub sigma_re: Vec<Vec<f64>>,
    pub sigma_im: Vec<Vec<f64>>,
    pub n_mes: u64,
    pub infinite_entries: Vec<(usize, usize, Part)>,
}

impl VarianceTable {
    pub fn sigma(&self, m: usize, n: usize, part: Part) -> f64 {
        match part {
            Part::Re => self.sigma_re[m][n],
            Part::Im => self.sigma_im[m][n],
        }
    }
}

pub fn variance_table(
    rho: &DensityMatrix,
    elements: &[PovmElement],
    n_mes: u64,
) -> Result<VarianceTable> {
    if n_mes == 0 {
        return Err(Error::InvalidConfig {
            reason: "n_mes must be positive".into(),
        });
    }
    let dim = rho.dim();
    let mut sigma_re = vec![vec![0.0f64; dim]; dim];
    let mut sigma_im = vec![vec![f64::NAN; dim]; dim];
    let mut infinite_entries = Vec::new();
    for m in 0..dim {
        for n in m..dim {
            let f = fisher_information(rho, elements, m, n, Part::Re)?;
            let s = sigma_from_fisher(f, n_mes);
            sigma_re[m][n] = s;
            sigma_re[n][m] = s;
            if s.is_infinite() {
                infinite_entries.push((m, n, Part::Re));
            }
            if m != n {
                let f = fisher_information(rho, elements, m, n, Part::Im)?;
                let s = sigma_from_fisher(f, n_mes);
                sigma_im[m][n] = s;
                sigma_im[n][m] = s;
                if s.is_infinite() {
                    infinite_entries.push((m, n, Part::Im));
                }
            }
        }
    }
    Ok(VarianceTable {
        dim,
        sigma_re,
        sigma_im,
        n_mes,
        infinite_entries,
    })
}

fn sigma_from_fisher(f: f64, n_mes: u64) -> f64 {
    if f <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (f * n_mes as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DimensionPolicy;
    use crate::povm::{build_elements, Setting};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn gamma_zero_elements(nu: f64) -> Vec<PovmElement> {
        let policy = DimensionPolicy::padded(4, 0.0).unwrap();
        build_elements(&[Setting::new(nu, Complex64::default(), 0).unwrap()], &policy).unwrap()
    }

    #[test]
    fn dprob_diagonal_element_at_gamma_zero() {
        let elements = gamma_zero_elements(0.5);
        assert_abs_diff_eq!(
            dprob(&elements[0], 2, 2, Part::Re).unwrap(),
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dprob_off_diagonal_vanishes_at_gamma_zero() {
        let elements = gamma_zero_elements(0.5);
        assert_abs_diff_eq!(dprob(&elements[0], 0, 2, Part::Re).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dprob(&elements[0], 0, 2, Part::Im).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dprob_rejects_imaginary_diagonal() {
        let elements = gamma_zero_elements(0.5);
        assert!(dprob(&elements[0], 1, 1, Part::Im).is_err());
    }

    #[test]
    fn dprob_matches_finite_differences() {
        let policy = DimensionPolicy::padded(4, 0.8).unwrap();
        let settings = vec![
            Setting::new(0.35, Complex64::new(0.5, -0.3), 0).unwrap(),
            Setting::new(0.75, Complex64::new(-0.2, 0.6), 0).unwrap(),
        ];
        let elements = build_elements(&settings, &policy).unwrap();
        let rho = DensityMatrix::superposition(
            &[
                (0, Complex64::new(0.7, 0.0)),
                (1, Complex64::new(0.2, 0.4)),
                (3, Complex64::new(-0.1, 0.3)),
            ],
            4,
        )
        .unwrap();
        let h = 1e-6;
        for element in &elements {
            for m in 0..4 {
                for n in m..4 {
                    for part in [Part::Re, Part::Im] {
                        if m == n && part == Part::Im {
                            continue;
                        }
                        let analytic = dprob(element, m, n, part).unwrap();
                        let numeric = {
                            let mut plus = rho.matrix().clone();
                            let mut minus = rho.matrix().clone();
                            let delta = match part {
                                Part::Re => Complex64::new(h, 0.0),
                                Part::Im => Complex64::new(0.0, h),
                            };
                            plus[(m, n)] += delta;
                            minus[(m, n)] -= delta;
                            if m != n {
                                plus[(n, m)] += delta.conj();
                                minus[(n, m)] -= delta.conj();
                            }
                            let a = element.matrix();
                            let tr = |mat: &crate::matrix::CMatrix| {
                                let mut acc = 0.0;
                                for i in 0..4 {
                                    for j in 0..4 {
                                        acc += (a[(i, j)] * mat[(j, i)]).re;
                                    }
                                }
                                acc
                            };
                            (tr(&plus) - tr(&minus)) / (2.0 * h)
                        };
                        let scale = analytic.abs().max(1e-3);
                        assert!(
                            (analytic - numeric).abs() <= 1e-6 * scale,
                            "element mismatch at ({m},{n},{part:?}): {analytic} vs {numeric}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_zero_plan_is_blind_to_off_diagonals() {
        let policy = DimensionPolicy::padded(3, 0.0).unwrap();
        let settings: Vec<Setting> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&nu| Setting::new(nu, Complex64::default(), 0).unwrap())
            .collect();
        let elements = build_elements(&settings, &policy).unwrap();
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let f = fisher_information(&rho, &elements, 0, 2, Part::Re).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-15);

        let table = variance_table(&rho, &elements, 1000).unwrap();
        assert!(table.sigma(0, 2, Part::Re).is_infinite());
        assert!(table
            .infinite_entries
            .iter()
            .any(|&(m, n, p)| (m, n) == (0, 2) && p == Part::Re));
    }

    #[test]
    fn sigma_scales_inverse_sqrt_n() {
        let policy = DimensionPolicy::padded(3, 0.5).unwrap();
        let settings = vec![
            Setting::new(0.4, Complex64::new(0.5, 0.0), 0).unwrap(),
            Setting::new(0.7, Complex64::new(0.0, 0.5), 0).unwrap(),
            Setting::new(0.9, Complex64::default(), 0).unwrap(),
        ];
        let elements = build_elements(&settings, &policy).unwrap();
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let t1 = variance_table(&rho, &elements, 1000).unwrap();
        let t4 = variance_table(&rho, &elements, 4000).unwrap();
        for m in 0..3 {
            for n in 0..3 {
                let a = t1.sigma(m, n, Part::Re);
                let b = t4.sigma(m, n, Part::Re);
                if a.is_finite() {
                    assert_abs_diff_eq!(a, 2.0 * b, epsilon = 1e-12 * a.abs());
                }
            }
        }
    }

    #[test]
    fn fisher_invariant_under_setting_permutation() {
        let policy = DimensionPolicy::padded(3, 0.6).unwrap();
        let settings = vec![
            Setting::new(0.4, Complex64::new(0.6, 0.0), 0).unwrap(),
            Setting::new(0.7, Complex64::new(0.0, -0.6), 0).unwrap(),
            Setting::new(0.2, Complex64::new(-0.4, 0.2), 0).unwrap(),
        ];
        let mut reversed = settings.clone();
        reversed.reverse();
        let a = build_elements(&settings, &policy).unwrap();
        let b = build_elements(&reversed, &policy).unwrap();
        let rho = DensityMatrix::coherent(Complex64::new(0.3, 0.1), 3).unwrap();
        let fa = fisher_information(&rho, &a, 0, 1, Part::Re).unwrap();
        let fb = fisher_information(&rho, &b, 0, 1, Part::Re).unwrap();
        assert_abs_diff_eq!(fa, fb, epsilon = 1e-12 * fa.abs().max(1.0));
    }
}
