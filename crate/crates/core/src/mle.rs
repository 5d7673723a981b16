//! Maximum-likelihood reconstruction by the EM fixed-point iteration
//! `rho_G <- R_G rho_G R_G` in the whitened subspace retained by the
//! transfer function, with diluted steps restoring likelihood monotonicity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::matrix::{frobenius_norm, hermitize, CMatrix};
use crate::povm::{check_consistent, PovmElement, TransferFunction};

/// Tolerances and budgets for the EM solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    pub max_iterations: usize,
    /// Absolute log-likelihood change that declares convergence.
    pub likelihood_tolerance: f64,
    /// Retention threshold used when the caller builds the transfer function.
    pub rel_threshold: f64,
    /// Initial dilution strength for non-monotone steps.
    pub dilution_epsilon: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            likelihood_tolerance: 1e-10,
            rel_threshold: 1e-6,
            dilution_epsilon: 0.1,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.likelihood_tolerance >= 0.0
            && self.likelihood_tolerance.is_finite()
            && self.rel_threshold > 0.0
            && self.rel_threshold < 1.0
            && self.dilution_epsilon > 0.0
            && self.dilution_epsilon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                reason: "reconstruction config fields must be positive and finite".into(),
            })
        }
    }
}

/// Result of one EM reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Recovered state on the full reconstruction space.
    pub rho: DensityMatrix,
    /// Final iterate in the whitened kept subspace.
    pub rho_g: CMatrix,
    /// Log-likelihood after the initial guess and after every accepted step.
    pub loglik_trace: Vec<f64>,
    pub iterations_used: usize,
    /// `|R rho - G rho|_F / |G rho|_F` at the returned state.
    pub extremal_residual: f64,
    pub converged: bool,
}

/// Largest per-step likelihood decrease tolerated before dilution engages.
const MONOTONICITY_TOL: f64 = 1e-9;
const MAX_DILUTION_HALVINGS: usize = 60;

fn validate_counts(counts: &[f64], elements: &[PovmElement]) -> Result<()> {
    if counts.len() != elements.len() {
        return Err(Error::DimensionMismatch {
            expected: elements.len(),
            found: counts.len(),
        });
    }
    if elements.is_empty() {
        return Err(Error::EmptyPlan);
    }
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidCounts {
            reason: "counts must be finite and nonnegative".into(),
        });
    }
    if counts.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidCounts {
            reason: "total counts must be positive".into(),
        });
    }
    Ok(())
}

fn probabilities(rho: &DensityMatrix, elements: &[PovmElement]) -> Result<Vec<f64>> {
    elements
        .iter()
        .map(|e| crate::povm::probability(rho, e))
        .collect()
}

/// `log L = sum_j N_j log(p_j / sum_j' p_j')`.
pub fn log_likelihood(
    rho: &DensityMatrix,
    counts: &[f64],
    elements: &[PovmElement],
) -> Result<f64> {
    validate_counts(counts, elements)?;
    let p = probabilities(rho, elements)?;
    let total: f64 = p.iter().sum();
    let mut ll = 0.0;
    for (j, (&c, &pj)) in counts.iter().zip(&p).enumerate() {
        if c == 0.0 {
            continue;
        }
        if pj <= 0.0 {
            return Err(Error::IncompatibleData { index: j });
        }
        ll += c * (pj.ln() - total.ln());
    }
    Ok(ll)
}

/// `R = sum_j (sum p / sum N) (N_j / p_j) A_j`.
pub fn r_operator(
    rho: &DensityMatrix,
    counts: &[f64],
    elements: &[PovmElement],
) -> Result<CMatrix> {
    validate_counts(counts, elements)?;
    let p = probabilities(rho, elements)?;
    let p_sum: f64 = p.iter().sum();
    let n_sum: f64 = counts.iter().sum();
    let dim = rho.dim();
    let mut r = CMatrix::zeros(dim, dim);
    for (j, (&c, &pj)) in counts.iter().zip(&p).enumerate() {
        if c == 0.0 {
            continue;
        }
        if pj <= 0.0 {
            return Err(Error::IncompatibleData { index: j });
        }
        let w = Complex64::new((p_sum / n_sum) * (c / pj), 0.0);
        r += elements[j].matrix() * w;
    }
    Ok(hermitize(&r))
}

/// Relative defect of the extremal equation, `|R rho - G rho|_F / |G rho|_F`.
pub fn extremal_residual(
    rho: &DensityMatrix,
    counts: &[f64],
    elements: &[PovmElement],
) -> Result<f64> {
    let r = r_operator(rho, counts, elements)?;
    let dim = rho.dim();
    let mut g = CMatrix::zeros(dim, dim);
    for e in elements {
        g += e.matrix();
    }
    let g_rho = &g * rho.matrix();
    let r_rho = &r * rho.matrix();
    let denom = frobenius_norm(&g_rho).max(1e-300);
    Ok(frobenius_norm(&(r_rho - g_rho)) / denom)
}

struct EmState {
    /// Projected elements `B^dag A_j B`, flattened row-major (k x k each).
    proj: Vec<Vec<Complex64>>,
    /// `B^dag B`, row-major; physical trace of `B rho_g B^dag` is
    /// `Re Tr[rho_g W]`.
    weight: Vec<Complex64>,
    counts: Vec<f64>,
    n_sum: f64,
    k: usize,
}

impl EmState {
    fn probs_into(&self, rho_g: &[Complex64], out: &mut [f64]) {
        // Tr[A rho] = sum_{ab} A[a,b] rho[b,a].
        for (j, a) in self.proj.iter().enumerate() {
            let mut acc = 0.0f64;
            for row in 0..self.k {
                for col in 0..self.k {
                    let z = a[row * self.k + col] * rho_g[col * self.k + row];
                    acc += z.re;
                }
            }
            out[j] = acc;
        }
    }

    fn log_likelihood(&self, p: &[f64]) -> f64 {
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let log_total = total.ln();
        let mut ll = 0.0;
        for (&c, &pj) in self.counts.iter().zip(p) {
            if c == 0.0 {
                continue;
            }
            if pj <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += c * (pj.ln() - log_total);
        }
        ll
    }

    /// `R~ = (sum p / sum N) * sum_j (N_j / p_j) A~_j`, hermitized.
    fn r_projected_into(&self, p: &[f64], out: &mut [Complex64]) {
        let k = self.k;
        let k2 = k * k;
        out.iter_mut().for_each(|z| *z = Complex64::default());
        let p_sum: f64 = p.iter().sum();
        for (j, a) in self.proj.iter().enumerate() {
            let c = self.counts[j];
            if c == 0.0 {
                continue;
            }
            let w = (p_sum / self.n_sum) * (c / p[j]);
            for idx in 0..k2 {
                out[idx] += a[idx] * w;
            }
        }
        hermitize_flat(out, k);
    }

    fn physical_trace(&self, rho_g: &[Complex64]) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for a in 0..k {
            for b in 0..k {
                acc += (rho_g[a * k + b] * self.weight[b * k + a]).re;
            }
        }
        acc
    }
}

fn hermitize_flat(m: &mut [Complex64], k: usize) {
    for a in 0..k {
        for b in (a + 1)..k {
            let avg = (m[a * k + b] + m[b * k + a].conj()) * 0.5;
            m[a * k + b] = avg;
            m[b * k + a] = avg.conj();
        }
        let d = m[a * k + a];
        m[a * k + a] = Complex64::new(d.re, 0.0);
    }
}

fn matmul_flat(a: &[Complex64], b: &[Complex64], out: &mut [Complex64], k: usize) {
    for i in 0..k {
        for j in 0..k {
            let mut acc = Complex64::default();
            for l in 0..k {
                acc += a[i * k + l] * b[l * k + j];
            }
            out[i * k + j] = acc;
        }
    }
}

/// EM fixed-point reconstruction in the transfer function's kept subspace.
///
/// Starts from the maximally mixed iterate, applies `rho_g <- R~ rho_g R~`
/// with trace renormalization, dilutes the map whenever the likelihood would
/// drop by more than 1e-9, and stops when the likelihood change falls below
/// `config.likelihood_tolerance` or the iteration budget is spent.
pub fn em_reconstruct(
    counts: &[f64],
    elements: &[PovmElement],
    tf: &TransferFunction,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    validate_counts(counts, elements)?;
    check_consistent(tf, elements)?;
    let k = tf.kept_count();
    let n_tr = tf.dim();
    let basis = tf.basis_map();

    // Project elements into the whitened subspace; sum_j proj_j = I_k.
    let proj: Vec<Vec<Complex64>> = elements
        .iter()
        .map(|e| {
            let m = basis.adjoint() * e.matrix() * basis;
            m.as_slice().to_vec() // column-major
        })
        .map(|col_major| transpose_flat(&col_major, k))
        .collect();
    let weight = transpose_flat((basis.adjoint() * basis).as_slice(), k);

    let state = EmState {
        proj,
        weight,
        counts: counts.to_vec(),
        n_sum: counts.iter().sum(),
        k,
    };

    let k2 = k * k;
    let mut rho_g = vec![Complex64::default(); k2];
    for a in 0..k {
        rho_g[a * k + a] = Complex64::new(1.0 / k as f64, 0.0);
    }
    let tr = state.physical_trace(&rho_g);
    rho_g.iter_mut().for_each(|z| *z /= tr);

    let mut p = vec![0.0f64; elements.len()];
    state.probs_into(&rho_g, &mut p);
    for (j, (&c, &pj)) in counts.iter().zip(&p).enumerate() {
        if c > 0.0 && pj <= 0.0 {
            return Err(Error::IncompatibleData { index: j });
        }
    }
    let mut ll = state.log_likelihood(&p);
    if ll == f64::NEG_INFINITY {
        return Err(Error::InvalidCounts {
            reason: "initial likelihood is degenerate".into(),
        });
    }

    let mut loglik_trace = Vec::with_capacity(config.max_iterations.min(1 << 20) + 1);
    loglik_trace.push(ll);

    let mut r_map = vec![Complex64::default(); k2];
    let mut r_step = vec![Complex64::default(); k2];
    let mut tmp = vec![Complex64::default(); k2];
    let mut cand = vec![Complex64::default(); k2];
    let mut p_cand = vec![0.0f64; elements.len()];

    let mut converged = false;
    let mut iterations_used = 0;

    'outer: for iter in 1..=config.max_iterations {
        state.r_projected_into(&p, &mut r_map);

        // Full step first, then progressively diluted maps on decrease.
        let mut epsilon: Option<f64> = None;
        let mut halvings = 0;
        let mut undiluted_decrease = f64::INFINITY;
        let ll_new = loop {
            let map: &[Complex64] = match epsilon {
                None => &r_map,
                Some(eps) => {
                    let scale = 1.0 / (1.0 + eps);
                    for idx in 0..k2 {
                        r_step[idx] = r_map[idx] * (eps * scale);
                    }
                    for a in 0..k {
                        r_step[a * k + a] += scale;
                    }
                    &r_step
                }
            };
            matmul_flat(map, &rho_g, &mut tmp, k);
            matmul_flat(&tmp, map, &mut cand, k);
            hermitize_flat(&mut cand, k);
            let tr = state.physical_trace(&cand);
            if tr > 0.0 && tr.is_finite() {
                cand.iter_mut().for_each(|z| *z /= tr);
                state.probs_into(&cand, &mut p_cand);
                let ll_cand = state.log_likelihood(&p_cand);
                if ll_cand >= ll - MONOTONICITY_TOL {
                    break Some(ll_cand);
                }
                if epsilon.is_none() {
                    undiluted_decrease = ll - ll_cand;
                }
            }
            match epsilon {
                None => epsilon = Some(config.dilution_epsilon),
                Some(eps) => {
                    halvings += 1;
                    if halvings > MAX_DILUTION_HALVINGS {
                        break None;
                    }
                    epsilon = Some(eps / 2.0);
                }
            }
        };

        let Some(ll_new) = ll_new else {
            // Even a vanishing step cannot keep the measured likelihood from
            // dipping: the change is below the floating-point resolution of
            // the likelihood sum. A decrease that is large on that scale is a
            // genuine failure; otherwise this is a fixed point.
            let resolution = 64.0 * f64::EPSILON * ll.abs().max(1.0);
            if undiluted_decrease > resolution.max(1e-6) {
                return Err(Error::MonotonicityFailure {
                    iteration: iter,
                    decrease: undiluted_decrease,
                });
            }
            converged = true;
            iterations_used = iter;
            break 'outer;
        };

        std::mem::swap(&mut rho_g, &mut cand);
        std::mem::swap(&mut p, &mut p_cand);
        loglik_trace.push(ll_new);
        iterations_used = iter;
        let delta = ll_new - ll;
        ll = ll_new;
        if delta.abs() < config.likelihood_tolerance {
            converged = true;
            break 'outer;
        }
    }

    // Back to the full space: rho = B rho_g B^dag, unit trace.
    let rho_g_mat = flat_to_matrix(&rho_g, k);
    let mut rho_full = basis * &rho_g_mat * basis.adjoint();
    let tr = rho_full.trace().re;
    rho_full /= Complex64::new(tr, 0.0);
    let rho_full = hermitize(&rho_full);
    let rho = DensityMatrix::new(rho_full).map_err(|e| Error::InvalidState {
        reason: format!("EM produced an invalid state ({e}); n_tr = {n_tr}"),
    })?;
    let residual = extremal_residual(&rho, counts, elements)?;

    Ok(ReconstructionResult {
        rho,
        rho_g: rho_g_mat,
        loglik_trace,
        iterations_used,
        extremal_residual: residual,
        converged,
    })
}

fn transpose_flat(col_major: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); k * k];
    for col in 0..k {
        for row in 0..k {
            out[row * k + col] = col_major[col * k + row];
        }
    }
    out
}

fn flat_to_matrix(flat: &[Complex64], k: usize) -> CMatrix {
    CMatrix::from_fn(k, k, |i, j| flat[i * k + j])
}
