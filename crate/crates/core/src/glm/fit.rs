use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::design::{Covariates, DesignMatrix, Encoding};
use super::GlmError;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
/// Any |β| above this after fitting is reported as likely separation.
pub const SEPARATION_BOUND: f64 = 15.0;

/// Residual variance (relative to the column's own scale) below which a
/// column counts as a linear combination of the preceding ones.
const RANK_TOLERANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitWarning {
    /// Coefficients whose magnitude exceeded [`SEPARATION_BOUND`].
    Separation { terms: Vec<String> },
    /// Iteration budget exhausted; `last_step` is the final max |Δβ|.
    NotConverged { iterations: usize, last_step: f64 },
    /// No step length along the Newton direction increased the likelihood.
    LineSearchFailed { iteration: usize },
    /// The weighted information matrix became singular, typically under
    /// separation; the fit stops at the last iterate.
    WeightsVanished { iteration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub beta: DVector<f64>,
    pub vcov: DMatrix<f64>,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted iteration, starting at β = 0.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
    pub n_obs: usize,
    pub encoding: Option<Encoding>,
}

impl FitResult {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coefficients.iter().map(|c| c.name.as_str())
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.coefficient(name).map(|c| c.estimate)
    }

    pub fn has_separation(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, FitWarning::Separation { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldStat {
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^η) without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Binomial log-likelihood Σ yη − ln(1 + e^η).
pub fn log_likelihood(design: &DesignMatrix, beta: &DVector<f64>) -> f64 {
    let eta = &design.x * beta;
    eta.iter().zip(design.y.iter()).map(|(e, y)| y * e - softplus(*e)).sum()
}

/// Gradient of the log-likelihood, Xᵀ(y − p).
pub fn score(design: &DesignMatrix, beta: &DVector<f64>) -> DVector<f64> {
    let eta = &design.x * beta;
    let resid = DVector::from_iterator(
        eta.len(),
        eta.iter().zip(design.y.iter()).map(|(e, y)| y - logistic(*e)),
    );
    design.x.tr_mul(&resid)
}

/// Two-sided normal p-value for a Wald statistic.
pub fn wald_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

fn information(x: &DMatrix<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
    let mut wx = x.clone();
    for (i, e) in eta.iter().enumerate() {
        let p = logistic(*e);
        let w = p * (1.0 - p);
        wx.row_mut(i).scale_mut(w);
    }
    x.tr_mul(&wx)
}

/// Greedy left-to-right scan of a Gram matrix: a column is dependent when its
/// scaled residual after projecting out the kept columns is ~0.
fn dependent_columns(gram: &DMatrix<f64>) -> Vec<usize> {
    let p = gram.nrows();
    let scale: Vec<f64> = (0..p).map(|j| gram[(j, j)].max(0.0).sqrt()).collect();
    let mut kept: Vec<usize> = Vec::new();
    // Rows of the lower Cholesky factor of the kept, scaled sub-matrix.
    let mut l: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..p {
        if scale[j] == 0.0 {
            dependent.push(j);
            continue;
        }
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (a, &k) in kept.iter().enumerate() {
            let c = gram[(k, j)] / (scale[k] * scale[j]);
            let s: f64 = (0..a).map(|b| l[a][b] * row[b]).sum();
            row.push((c - s) / l[a][a]);
        }
        let d = 1.0 - row.iter().map(|v| v * v).sum::<f64>();
        if d < RANK_TOLERANCE {
            dependent.push(j);
        } else {
            row.push(d.sqrt());
            l.push(row);
            kept.push(j);
        }
    }
    dependent
}

fn rank_error(design: &DesignMatrix, gram: &DMatrix<f64>) -> Option<GlmError> {
    let dependent = dependent_columns(gram);
    if dependent.is_empty() {
        None
    } else {
        Some(GlmError::RankDeficiency {
            dependent: dependent.into_iter().map(|j| design.names[j].clone()).collect(),
        })
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood logistic fit by IRLS (Newton–Raphson) with step
/// halving whenever a full step would lower the likelihood.
///
/// Converges when the Newton step satisfies max |Δβ| < `tolerance`. A fit
/// that exhausts `max_iterations` is returned with `converged = false`.
pub fn fit_logistic(design: &DesignMatrix, tolerance: f64, max_iterations: usize) -> Result<FitResult, GlmError> {
    let (n, p) = (design.nrows(), design.ncols());
    if n == 0 {
        return Err(GlmError::Empty);
    }
    if design.y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(GlmError::NonBinaryResponse);
    }
    if let Some(err) = rank_error(design, &design.x.tr_mul(&design.x)) {
        return Err(err);
    }

    let mut beta = DVector::<f64>::zeros(p);
    let mut ll = log_likelihood(design, &beta);
    let mut trace = vec![ll];
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;

    while iterations < max_iterations {
        iterations += 1;
        let eta = &design.x * &beta;
        let info = information(&design.x, &eta);
        let grad = score(design, &beta);
        // X has full column rank, so a singular information matrix here
        // means the weights have collapsed (fitted probabilities at 0 or 1).
        let Some(chol) = info.cholesky() else {
            warnings.push(FitWarning::WeightsVanished { iteration: iterations });
            break;
        };
        let step = chol.solve(&grad);
        last_step = max_abs(&step);

        // Near the optimum the predicted gain ½gᵀΔ is below the rounding
        // error of the summed likelihood; the Newton step is then taken as is.
        let predicted_gain = 0.5 * grad.dot(&step);
        if last_step < tolerance || predicted_gain < 1e-11 * (1.0 + ll.abs()) {
            beta += &step;
            ll = log_likelihood(design, &beta);
            trace.push(ll);
            if last_step < tolerance {
                converged = true;
                break;
            }
            continue;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &beta + &step * t;
            let cand_ll = log_likelihood(design, &candidate);
            if cand_ll.is_finite() && cand_ll >= ll {
                accepted = Some((candidate, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((b, l)) = accepted else {
            warnings.push(FitWarning::LineSearchFailed { iteration: iterations });
            break;
        };
        beta = b;
        ll = l;
        trace.push(ll);
    }
    if !converged && warnings.is_empty() {
        warnings.push(FitWarning::NotConverged { iterations, last_step });
    }

    let eta = &design.x * &beta;
    let info = information(&design.x, &eta);
    let vcov = match info.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => info
            .pseudo_inverse(f64::EPSILON)
            .map_err(|e| GlmError::InvalidSpec(e.to_string()))?,
    };
    let separated: Vec<String> = beta
        .iter()
        .zip(&design.names)
        .filter(|(b, _)| b.abs() > SEPARATION_BOUND)
        .map(|(_, name)| name.clone())
        .collect();
    if !separated.is_empty() {
        warnings.push(FitWarning::Separation { terms: separated });
    }

    let coefficients = (0..p)
        .map(|j| {
            let std_error = vcov[(j, j)].max(0.0).sqrt();
            let z = if beta[j] == 0.0 { 0.0 } else { beta[j] / std_error };
            Coefficient {
                name: design.names[j].clone(),
                estimate: beta[j],
                std_error,
                z,
                p_value: wald_p_value(z),
            }
        })
        .collect();

    Ok(FitResult {
        coefficients,
        beta,
        vcov,
        log_likelihood: ll,
        log_likelihood_trace: trace,
        iterations,
        converged,
        warnings,
        n_obs: n,
        encoding: design.encoding.clone(),
    })
}

/// Standard error, z and two-sided p per coefficient, in design order.
pub fn wald_stats(fit: &FitResult) -> Result<Vec<WaldStat>, GlmError> {
    if !fit.converged {
        return Err(GlmError::NotConverged {
            iterations: fit.iterations,
        });
    }
    Ok(fit
        .coefficients
        .iter()
        .map(|c| WaldStat {
            std_error: c.std_error,
            z: c.z,
            p_value: c.p_value,
        })
        .collect())
}

pub fn predict_linear(fit: &FitResult, covariates: &Covariates) -> Result<f64, GlmError> {
    let encoding = fit
        .encoding
        .as_ref()
        .ok_or_else(|| GlmError::InvalidSpec("fit has no encoding (built from a raw matrix)".into()))?;
    let row = encoding.encode(covariates)?;
    Ok(row.iter().zip(fit.beta.iter()).map(|(x, b)| x * b).sum())
}

/// Fitted probability for one covariate set, logistic(xᵀβ).
pub fn predict_probability(fit: &FitResult, covariates: &Covariates) -> Result<f64, GlmError> {
    predict_linear(fit, covariates).map(logistic)
}
