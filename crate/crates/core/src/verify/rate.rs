use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeResult;
use crate::error::{Error, Result};
use crate::newton::SweepResult;
use crate::torus::{real_hessian_lambda1, GridField, Spectral};

/// Errors against a reference envelope and the constants `c_beta = beta e_beta / log beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub betas: Vec<f64>,
    /// `sup |u_beta - u_ref|`.
    pub errors: Vec<f64>,
    pub constants: Vec<f64>,
    /// `max c_beta`.
    pub kappa: f64,
    /// `max c_beta / c_{beta_min}`; bounded growth means at most 2.
    pub growth: f64,
    /// Whether `errors` is strictly decreasing.
    pub decreasing: bool,
}

impl RateFit {
    pub fn bounded(&self) -> bool {
        self.growth <= 2.0
    }

    /// Contact constant derived from the fit: twice the largest measured constant.
    pub fn calibrated_kappa(&self) -> f64 {
        2.0 * self.kappa
    }
}

/// What the sweep is compared against.
#[derive(Debug, Clone, Copy)]
pub enum RateReference<'a> {
    /// `u_theta` of an independent envelope, normally the complementarity oracle.
    Envelope(&'a EnvelopeResult),
    /// The last sweep entry, which is then left out of its own fit.
    LastEntry,
}

/// Measure `e_beta` and `c_beta` over a sweep.
///
/// Entries with `beta <= 1` are skipped since `log beta` vanishes there; at least three
/// entries must remain.
pub fn rate_fit(sweep: &SweepResult, reference: RateReference<'_>) -> Result<RateFit> {
    let (target, entries) = match reference {
        RateReference::Envelope(env) => (&env.u_theta, &sweep.solutions[..]),
        RateReference::LastEntry => {
            let (last, rest) = sweep
                .solutions
                .split_last()
                .expect("sweeps are never empty");
            (&last.u_beta, rest)
        }
    };
    let mut betas = Vec::new();
    let mut errors = Vec::new();
    for s in entries.iter().filter(|s| s.beta > 1.0) {
        betas.push(s.beta);
        errors.push(s.u_beta.sup_distance(target)?);
    }
    if betas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 entries with beta > 1, got {}",
            betas.len()
        )));
    }
    let constants: Vec<f64> = betas
        .iter()
        .zip(&errors)
        .map(|(b, e)| b * e / b.ln())
        .collect();
    let kappa = constants.iter().copied().fold(0.0, f64::max);
    let growth = if constants[0] > 0.0 {
        kappa / constants[0]
    } else if kappa == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(RateFit {
        betas,
        errors,
        constants,
        kappa,
        growth,
        decreasing,
    })
}

/// Second and third derivative sizes of `u_beta` along a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSeries {
    pub betas: Vec<f64>,
    /// `sup lambda_1(D^2 u_beta)`.
    pub sup_lambda1: Vec<f64>,
    /// `sup |D^3 u_beta|` over all third partials. Reported for contrast only.
    pub sup_third: Vec<f64>,
    /// Beta where the plateau comparison starts.
    pub plateau_beta: f64,
    /// Last `sup_lambda1` over its value at `plateau_beta`.
    pub plateau_ratio: f64,
    /// Last `sup_third` over its value at `plateau_beta`.
    pub third_growth: f64,
}

impl HessianSeries {
    pub fn plateau_holds(&self) -> bool {
        self.plateau_ratio <= 1.15
    }
}

/// `sup lambda_1` and `sup |D^3|` of every `u_beta`, compared between `plateau_beta`
/// (default: the middle entry) and the last entry.
pub fn hessian_uniformity(sweep: &SweepResult, plateau_beta: Option<f64>) -> Result<HessianSeries> {
    let sols = &sweep.solutions;
    if sols.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "hessian uniformity needs a sweep of length >= 4, got {}",
            sols.len()
        )));
    }
    let start = match plateau_beta {
        Some(b) => sols.iter().position(|s| s.beta == b).ok_or_else(|| {
            Error::InvalidArgument(format!("beta {b} is not in the sweep"))
        })?,
        None => sols.len() / 2,
    };
    let betas: Vec<f64> = sols.iter().map(|s| s.beta).collect();
    let sup_lambda1: Vec<f64> = sols
        .iter()
        .map(|s| real_hessian_lambda1(&s.u_beta).max())
        .collect();
    let sup_third: Vec<f64> = sols.iter().map(|s| sup_third_derivative(&s.u_beta)).collect();
    let last = sols.len() - 1;
    Ok(HessianSeries {
        plateau_beta: betas[start],
        plateau_ratio: ratio(sup_lambda1[last], sup_lambda1[start]),
        third_growth: ratio(sup_third[last], sup_third[start]),
        betas,
        sup_lambda1,
        sup_third,
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b != 0.0 {
        a / b
    } else if a == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Largest absolute third partial derivative over all nodes (spectral).
pub fn sup_third_derivative(u: &GridField) -> f64 {
    Spectral::new(u.grid())
        .third_derivatives(u.values())
        .iter()
        .flat_map(|(_, vals)| vals.iter())
        .fold(0.0, |m: f64, x| m.max(x.abs()))
}
