//! The envelope `P(v) = sup { u omega-psh : u <= v }`, computed three ways.
//!
//! * [`envelope_beta_limit`]: `v + u_beta` at the largest beta of a continuation sweep, clipped at `v`.
//! * [`envelope_psor`]: the complementarity oracle, complex dimension one only.
//! * [`rooftop`]: the envelope of `min_j v_j` by either of the above.
//!
//! Every result carries `u_theta = P(v) - v <= 0`, a contact mask and the density of
//! `(theta + i ddbar u_theta)^n` relative to `omega^n`, with `theta = omega + i ddbar v`.

mod archive;
mod psor;

use serde::{Deserialize, Serialize};

pub use archive::{read_dir, write_dir, MANIFEST_FILE};
pub use psor::{psor_solve, PsorOptions, PsorSolution};

use crate::error::{Error, Result};
use crate::newton::{continuation_sweep, BetaSolution, NewtonOptions, SweepResult};
use crate::torus::{complex_hessian_with, mollify, Differentiation, GridField};

/// Fallback contact constant when no calibration against the oracle is available.
pub const DEFAULT_KAPPA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    BetaLimit,
    PsorOracle,
    Rooftop,
}

/// Solver used by [`rooftop`] on the min obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RooftopPath {
    BetaLimit,
    Psor,
}

/// How the contact mask was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum ContactPolicy {
    /// Active set of the complementarity solve.
    ActiveSet,
    /// `v - phi <= kappa log(beta) / beta`.
    Threshold { kappa: f64, beta: f64, threshold: f64 },
}

impl ContactPolicy {
    pub fn describe(&self) -> String {
        match self {
            ContactPolicy::ActiveSet => "active set of the complementarity solve".into(),
            ContactPolicy::Threshold { kappa, beta, threshold } => {
                format!("v - phi <= kappa log(beta)/beta = {threshold:.3e} (kappa={kappa}, beta={beta})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub beta_used: Option<f64>,
    pub newton_residual: Option<f64>,
    pub psor_iterations: Option<usize>,
    pub psor_residual: Option<f64>,
    /// `kappa log(beta) / beta` on the beta-limit path.
    pub error_estimate: Option<f64>,
    pub kappa: Option<f64>,
    /// Rooftop only: solver used on the min obstacle and its mollification radius.
    pub rooftop_path: Option<RooftopPath>,
    pub epsilon: Option<f64>,
    pub obstacle_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub obstacle: GridField,
    pub envelope: GridField,
    /// `envelope - obstacle`, nonpositive.
    pub u_theta: GridField,
    pub method: MethodTag,
    pub contact_mask: Vec<bool>,
    pub contact_policy: ContactPolicy,
    /// `det(g + i ddbar P(v)) / det g`, central differences.
    pub ma_density: GridField,
    pub provenance: Provenance,
}

impl EnvelopeResult {
    fn assemble(
        obstacle: GridField,
        envelope: GridField,
        method: MethodTag,
        contact_mask: Vec<bool>,
        contact_policy: ContactPolicy,
        provenance: Provenance,
    ) -> Result<Self> {
        let u_theta = envelope.sub(&obstacle)?;
        let ma_density = monge_ampere_density(&envelope);
        Ok(EnvelopeResult {
            obstacle,
            envelope,
            u_theta,
            method,
            contact_mask,
            contact_policy,
            ma_density,
            provenance,
        })
    }

    pub fn contact_count(&self) -> usize {
        self.contact_mask.iter().filter(|&&c| c).count()
    }

    /// The mask as a 0/1 field.
    pub fn contact_field(&self) -> GridField {
        let values = self.contact_mask.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        GridField::new(self.obstacle.grid().clone(), values).expect("mask matches its grid")
    }
}

/// `det(g + i ddbar u) / det g` with central-difference second derivatives.
///
/// `u` is at best `C^{1,1}` across the free boundary, where spectral derivatives ring.
pub fn monge_ampere_density(u: &GridField) -> GridField {
    let h = complex_hessian_with(u, Differentiation::CentralDifference);
    GridField::new(u.grid().clone(), h.relative_det_shifted()).expect("finite for a finite field")
}

/// Smallest eigenvalue of `g + i ddbar u` over nodes, central differences.
pub fn psh_margin(u: &GridField) -> f64 {
    let h = complex_hessian_with(u, Differentiation::CentralDifference);
    h.min_eigenvalue_shifted().into_iter().fold(f64::INFINITY, f64::min)
}

/// `{ v - phi <= kappa log(beta) / beta }` for one solve.
pub fn contact_mask_from_beta(sol: &BetaSolution, kappa: f64) -> Result<(Vec<bool>, ContactPolicy)> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let beta = sol.beta;
    if !(beta > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "contact thresholding needs beta > 1, got {beta}"
        )));
    }
    let threshold = kappa * beta.ln() / beta;
    let mask = sol.u_beta.values().iter().map(|&u| -u <= threshold).collect();
    Ok((mask, ContactPolicy::Threshold { kappa, beta, threshold }))
}

/// Envelope from the last entry of a sweep: `v + min(u_beta, 0)`.
pub fn envelope_beta_limit(sweep: &SweepResult, kappa: f64) -> Result<EnvelopeResult> {
    let last = sweep.last();
    let (mask, policy) = contact_mask_from_beta(last, kappa)?;
    let v = &last.obstacle;
    let envelope = last.phi.pointwise_min(v)?;
    let provenance = Provenance {
        beta_used: Some(last.beta),
        newton_residual: Some(last.residual_sup),
        error_estimate: Some(kappa * last.beta.ln() / last.beta),
        kappa: Some(kappa),
        ..Provenance::default()
    };
    EnvelopeResult::assemble(v.clone(), envelope, MethodTag::BetaLimit, mask, policy, provenance)
}

/// Envelope from the complementarity oracle (`n = 1`).
pub fn envelope_psor(v: &GridField, opts: &PsorOptions) -> Result<EnvelopeResult> {
    let sol = psor_solve(v, opts)?;
    let provenance = Provenance {
        psor_iterations: Some(sol.sweeps),
        psor_residual: Some(sol.residual),
        ..Provenance::default()
    };
    EnvelopeResult::assemble(
        v.clone(),
        sol.u,
        MethodTag::PsorOracle,
        sol.active,
        ContactPolicy::ActiveSet,
        provenance,
    )
}

/// Controls shared by the envelope computations that run a solver internally.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeOptions {
    pub psor: PsorOptions,
    pub newton: NewtonOptions,
    pub schedule: Vec<f64>,
    pub kappa: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            psor: PsorOptions::default(),
            newton: NewtonOptions::default(),
            schedule: crate::newton::default_schedule(),
            kappa: DEFAULT_KAPPA,
        }
    }
}

/// Pointwise minimum of a nonempty list of fields on one grid.
pub fn pointwise_min(fields: &[GridField]) -> Result<GridField> {
    let (first, rest) = fields
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("rooftop needs at least one obstacle".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| acc.pointwise_min(f))
}

/// Envelope of `min_j v_j`.
///
/// The psor path works on the raw minimum. The beta path solves against `mollify(min_j v_j, eps)`
/// (default `eps = 2 / N`) and clips the result at the raw minimum.
pub fn rooftop(
    fields: &[GridField],
    path: RooftopPath,
    eps: Option<f64>,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeResult> {
    let obstacle = pointwise_min(fields)?;
    let mut result = match path {
        RooftopPath::Psor => {
            let mut r = envelope_psor(&obstacle, &opts.psor)?;
            r.provenance.epsilon = None;
            r
        }
        RooftopPath::BetaLimit => {
            let eps = eps.unwrap_or(2.0 / obstacle.grid().res() as f64);
            let smooth = mollify(&obstacle, eps)?;
            let sweep = continuation_sweep(&smooth, &opts.schedule, &opts.newton)?;
            let inner = envelope_beta_limit(&sweep, opts.kappa)?;
            let envelope = inner.envelope.pointwise_min(&obstacle)?;
            let mut provenance = inner.provenance;
            provenance.epsilon = Some(eps);
            EnvelopeResult::assemble(
                obstacle,
                envelope,
                MethodTag::Rooftop,
                inner.contact_mask,
                inner.contact_policy,
                provenance,
            )?
        }
    };
    result.method = MethodTag::Rooftop;
    result.provenance.rooftop_path = Some(path);
    result.provenance.obstacle_count = Some(fields.len());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{Grid, TorusGeometry};
    use std::f64::consts::PI;

    fn grid(res: usize) -> Grid {
        Grid::new(TorusGeometry::flat(1).unwrap(), res).unwrap()
    }

    #[test]
    fn constant_obstacle_everywhere() {
        let g = grid(16);
        let v = g.constant(-0.2);
        let p = envelope_psor(&v, &PsorOptions::default()).unwrap();
        assert_eq!(p.envelope, v);
        assert_eq!(p.contact_count(), g.len());
        let sweep = continuation_sweep(&v, &[2.0, 4.0, 8.0], &NewtonOptions::default()).unwrap();
        let b = envelope_beta_limit(&sweep, 1.0).unwrap();
        assert!(b.envelope.sup_distance(&v).unwrap() < 1e-10);
        assert_eq!(b.contact_count(), g.len());
        assert!(b.ma_density.values().iter().all(|d| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn subcritical_obstacle_is_its_own_envelope() {
        let g = grid(32);
        let v = g.sample(|x| 0.05 * (2.0 * PI * x[0]).cos()).unwrap();
        let p = envelope_psor(&v, &PsorOptions::default()).unwrap();
        assert!(p.u_theta.sup_norm() < 1e-8);
        assert!(p.contact_mask.iter().all(|&c| c));
    }

    #[test]
    fn threshold_rejects_small_beta() {
        let g = grid(8);
        let v = g.constant(0.0);
        let sweep = continuation_sweep(&v, &[1.0], &NewtonOptions::default()).unwrap();
        assert!(contact_mask_from_beta(sweep.last(), 5.0).is_err());
        assert!(envelope_beta_limit(&sweep, 5.0).is_err());
    }

    #[test]
    fn rooftop_of_duplicates_and_shifts() {
        let g = grid(32);
        let v = g.sample(|x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
        let opts = EnvelopeOptions::default();
        let base = envelope_psor(&v, &opts.psor).unwrap();
        for list in [vec![v.clone(), v.add_scalar(1.0)], vec![v.clone(), v.clone()]] {
            let r = rooftop(&list, RooftopPath::Psor, None, &opts).unwrap();
            assert_eq!(r.method, MethodTag::Rooftop);
            assert!(r.envelope.sup_distance(&base.envelope).unwrap() < 1e-12);
        }
        assert!(rooftop(&[], RooftopPath::Psor, None, &opts).is_err());
    }

    /// The thresholded mask covers the active set and exceeds it by a band whose width is set
    /// by the quadratic growth of `v - P(v)` off contact, `tau = a d^2`.
    #[test]
    fn threshold_band_width() {
        let res = 128;
        let g = grid(res);
        let amp = 0.3;
        let v = g.sample(|x| amp * (2.0 * PI * x[0]).cos()).unwrap();
        let sweep = continuation_sweep(&v, &crate::newton::doubling_schedule(16.0, 4096.0), &NewtonOptions::default()).unwrap();
        let oracle = envelope_psor(&v, &PsorOptions::default()).unwrap();
        let kappa = 0.816;
        let beta = envelope_beta_limit(&sweep, kappa).unwrap();
        assert!(oracle.contact_mask.iter().zip(&beta.contact_mask).all(|(&o, &b)| !o || b));

        let columns = |mask: &[bool]| (0..res).filter(|&i| mask[i * g.stride(0)]).count();
        let extra_per_side = (columns(&beta.contact_mask) - columns(&oracle.contact_mask)) as f64 / 2.0;
        // Off contact P'' = -4 along x_1, so (v - P)'' = 4 + amp (2 pi)^2 |cos| at the free boundary.
        let fb = 0.36107_f64;
        let a = 0.5 * (4.0 + amp * (2.0 * PI).powi(2) * (2.0 * PI * fb).cos().abs());
        let tau = kappa * 4096f64.ln() / 4096.0;
        let bound = (tau / a).sqrt() * res as f64 + 2.0;
        assert!(extra_per_side <= bound, "{extra_per_side} > {bound}");
    }
}
