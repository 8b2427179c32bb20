use std::io::Write;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::krylov::{gmres, GmresOptions};
use super::system::{MaState, MaSystem};
use crate::error::{Error, Result};
use crate::torus::{complex_hessian, GridField};

/// Newton controls for one beta solve.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    /// Target for `sup |det(g~)/det g - exp(beta (phi - v))|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Margin reported as healthy; converged solutions below it are still accepted.
    pub margin_min: f64,
    /// A converged solution is rejected when the smallest eigenvalue of `g~` is below
    /// `-(margin_slack + tol)`. Where the target density is tiny the residual bound lets `g~`
    /// dip below zero by up to `tol`.
    pub margin_slack: f64,
    /// Smallest step length tried by the backtracking search.
    pub step_floor: f64,
    pub krylov_restart: usize,
    pub krylov_max_iter: usize,
    /// Largest increase of `beta (phi - v)` at any node in one step.
    ///
    /// `exp` is convex, so a full Newton step from below overshoots by up to `exp(beta dphi)`;
    /// capping the first trial step keeps the overshoot bounded.
    pub growth_cap: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 80,
            margin_min: 1e-6,
            margin_slack: 1e-8,
            step_floor: 1.0 / 1024.0 / 1024.0,
            krylov_restart: 80,
            krylov_max_iter: 1000,
            growth_cap: 2.0,
        }
    }
}

/// One Newton iteration, as written to the convergence log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub beta: f64,
    pub iteration: usize,
    pub residual: f64,
    /// Step length accepted to reach this iterate (0 for the initial guess).
    pub step: f64,
    pub positivity_margin: f64,
    pub krylov_iterations: usize,
}

/// Bounds on `u_beta = phi - v` from the maximum principle applied at its extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleBox {
    /// `log(min det(I + H(v))) / beta`, absent when `v` itself is not psh everywhere.
    pub lower: Option<f64>,
    /// `log(max det(I + H(v))) / beta`.
    pub upper: f64,
}

impl MaxPrincipleBox {
    pub fn for_obstacle(v: &GridField, beta: f64) -> Self {
        let dets = complex_hessian(v).relative_det_shifted();
        let hi = dets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = dets.iter().copied().fold(f64::INFINITY, f64::min);
        MaxPrincipleBox {
            lower: (lo > 0.0).then(|| lo.ln() / beta),
            upper: hi.ln() / beta,
        }
    }

    pub fn contains(&self, u_beta: &GridField, slack: f64) -> bool {
        let above = u_beta.max() <= self.upper + slack;
        let below = self.lower.is_none_or(|lo| u_beta.min() >= lo - slack);
        above && below
    }
}

/// One solve of `det(g + phi_{j kbar}) = det(g) exp(beta (phi - v))`.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub beta: f64,
    pub obstacle: GridField,
    pub phi: GridField,
    /// `phi - v`.
    pub u_beta: GridField,
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// Smallest eigenvalue of `g + phi_{j kbar}` over nodes.
    pub positivity_margin: f64,
    pub residual_history: Vec<f64>,
    pub log: Vec<ConvergenceRecord>,
    pub bounds: MaxPrincipleBox,
}

impl BetaSolution {
    /// Write the convergence log as one JSON object per line.
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.log {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn validate(v: &GridField, beta: f64, opts: &NewtonOptions) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty obstacle".into()));
    }
    Ok(())
}

/// Damped Newton for the beta equation.
///
/// Each step solves `(Re tr(adj(g~) d_{j kbar}) - beta E) dphi = -F` with GMRES, right
/// preconditioned by the constant-coefficient operator inverted in Fourier space. The step is
/// halved until the residual L2 norm passes an Armijo test; convergence is judged on the sup
/// norm, and only the final iterate must satisfy `margin >= -(margin_slack + tol)`.
pub fn solve_beta(
    v: &GridField,
    beta: f64,
    init: Option<&GridField>,
    opts: &NewtonOptions,
) -> Result<BetaSolution> {
    validate(v, beta, opts)?;
    let sys = MaSystem::new(v, beta);
    let mut phi: Vec<f64> = match init {
        Some(f) => {
            f.grid().ensure_same(v.grid())?;
            f.values().to_vec()
        }
        None => vec![v.min(); v.len()],
    };
    let mut state = sys.evaluate(&phi);
    let mut history = vec![state.residual_sup];
    let mut log = vec![ConvergenceRecord {
        beta,
        iteration: 0,
        residual: state.residual_sup,
        step: 0.0,
        positivity_margin: state.margin,
        krylov_iterations: 0,
    }];
    let mut iters = 0;
    while state.residual_sup > opts.tol {
        if iters >= opts.max_iter {
            return Err(Error::Stagnation {
                iterations: iters,
                history,
            });
        }
        let (dir, krylov) = newton_direction(&sys, &state, opts);
        let ls = line_search(&sys, &phi, &state, &dir, opts);
        let (next_phi, next_state, step) = ls
            .ok_or_else(|| Error::Stagnation {
                iterations: iters,
                history: history.clone(),
            })?;
        iters += 1;
        phi = next_phi;
        state = next_state;
        history.push(state.residual_sup);
        debug!(
            "beta={beta} it={iters} residual={:.3e} step={step} margin={:.3e} krylov={krylov}",
            state.residual_sup, state.margin
        );
        log.push(ConvergenceRecord {
            beta,
            iteration: iters,
            residual: state.residual_sup,
            step,
            positivity_margin: state.margin,
            krylov_iterations: krylov,
        });
    }
    if !(state.margin >= -(opts.margin_slack + opts.tol)) {
        return Err(Error::NotKahler {
            node: state.margin_node,
            eigenvalue: state.margin,
        });
    }
    let phi = GridField::new(v.grid().clone(), phi)?;
    let u_beta = phi.sub(v)?;
    Ok(BetaSolution {
        beta,
        obstacle: v.clone(),
        u_beta,
        phi,
        residual_sup: state.residual_sup,
        newton_iters: iters,
        positivity_margin: state.margin,
        residual_history: history,
        log,
        bounds: MaxPrincipleBox::for_obstacle(v, beta),
    })
}

fn newton_direction(sys: &MaSystem<'_>, state: &MaState, opts: &NewtonOptions) -> (Vec<f64>, usize) {
    let rhs: Vec<f64> = state.residual.iter().map(|r| -r).collect();
    let pre = sys.flat_preconditioner(state);
    // Relative forcing tied to the current residual: superlinear far out, quadratic in the tail.
    let forcing = state.residual_sup.clamp(1e-8, 1e-1);
    let norm = rhs.iter().map(|r| r * r).sum::<f64>().sqrt();
    let gm = GmresOptions {
        restart: opts.krylov_restart,
        max_iter: opts.krylov_max_iter,
        abs_tol: (forcing * norm).max(0.01 * opts.tol),
    };
    let out = gmres(
        |x, y| sys.apply_jacobian(state, x, y),
        |x, y| pre.apply(x, y),
        &rhs,
        &gm,
    );
    if !out.converged {
        debug!(
            "krylov stopped at residual {:.3e} after {} iterations",
            out.residual, out.iterations
        );
    }
    (out.x, out.iterations)
}

fn line_search(
    sys: &MaSystem<'_>,
    phi: &[f64],
    state: &MaState,
    dir: &[f64],
    opts: &NewtonOptions,
) -> Option<(Vec<f64>, MaState, f64)> {
    let rise = dir.iter().copied().fold(0.0_f64, f64::max) * sys.beta();
    let mut t: f64 = if rise > opts.growth_cap { opts.growth_cap / rise } else { 1.0 };
    let base = l2(&state.residual);
    while t >= opts.step_floor {
        let trial: Vec<f64> = phi.iter().zip(dir).map(|(p, d)| p + t * d).collect();
        let st = sys.evaluate(&trial);
        if l2(&st.residual) <= (1.0 - 1e-4 * t) * base {
            return Some((trial, st, t));
        }
        t *= 0.5;
    }
    None
}

fn l2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Ordered solutions over an increasing beta schedule, each warm-started from its predecessor.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub solutions: Vec<BetaSolution>,
    /// `sup |u_{beta_{i+1}} - u_{beta_i}|` for consecutive entries.
    pub successive_distances: Vec<f64>,
}

impl SweepResult {
    pub fn betas(&self) -> Vec<f64> {
        self.solutions.iter().map(|s| s.beta).collect()
    }

    pub fn last(&self) -> &BetaSolution {
        self.solutions.last().expect("sweeps are never empty")
    }

    pub fn at_beta(&self, beta: f64) -> Option<&BetaSolution> {
        self.solutions.iter().find(|s| s.beta == beta)
    }

    pub fn obstacle(&self) -> &GridField {
        &self.solutions[0].obstacle
    }

    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.solutions {
            s.write_log(&mut out)?;
        }
        Ok(())
    }
}

/// Depth of geometric bisection between two schedule entries before a solve is given up.
const MAX_BISECTIONS: usize = 6;

/// Solve at `beta` from the solution at `prev`, inserting `sqrt(prev * beta)` when the
/// warm start is outside Newton's basin. Without `prev` the fallback is a cold solve at `beta / 4`.
fn solve_continued(
    v: &GridField,
    beta: f64,
    prev: Option<(f64, &GridField)>,
    opts: &NewtonOptions,
    depth: usize,
) -> Result<BetaSolution> {
    let first = solve_beta(v, beta, prev.map(|p| p.1), opts);
    let err = match first {
        Ok(sol) => return Ok(sol),
        Err(e @ (Error::Stagnation { .. } | Error::NotKahler { .. })) if depth > 0 => e,
        Err(e) => return Err(e),
    };
    let mid = match prev {
        Some((b0, _)) => (b0 * beta).sqrt(),
        None => beta / 4.0,
    };
    info!("beta={beta}: {err}; inserting beta={mid:.6}");
    let inner = solve_continued(v, mid, prev, opts, depth - 1)?;
    solve_continued(v, beta, Some((mid, &inner.phi)), opts, depth - 1)
}

/// Doubling schedule `start, 2 start, ..., stop`.
pub fn doubling_schedule(start: f64, stop: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut b = start;
    while b <= stop * (1.0 + 1e-12) {
        out.push(b);
        b *= 2.0;
    }
    out
}

/// Default schedule: doubling from 1 to 4096.
pub fn default_schedule() -> Vec<f64> {
    doubling_schedule(1.0, 4096.0)
}

pub fn continuation_sweep(v: &GridField, schedule: &[f64], opts: &NewtonOptions) -> Result<SweepResult> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty beta schedule".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "beta schedule must be strictly increasing: {schedule:?}"
        )));
    }
    let mut solutions: Vec<BetaSolution> = Vec::with_capacity(schedule.len());
    for &beta in schedule {
        let prev = solutions.last().map(|s| (s.beta, &s.phi));
        let sol = solve_continued(v, beta, prev, opts, MAX_BISECTIONS).map_err(|e| e.at_beta(beta))?;
        solutions.push(sol);
    }
    let successive_distances = solutions
        .windows(2)
        .map(|w| w[1].u_beta.sup_distance(&w[0].u_beta))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        solutions,
        successive_distances,
    })
}
