//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is a named constant below.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psh_envelope::envelope::{envelope_psor, psh_margin, rooftop, EnvelopeOptions, EnvelopeResult, PsorOptions, RooftopPath};
use psh_envelope::newton::{continuation_sweep, doubling_schedule, NewtonOptions, SweepResult};
use psh_envelope::presets::random_band_limited;
use psh_envelope::torus::{kernel_first_moment, Grid, GridField, TorusGeometry};
use psh_envelope::verify::{
    contact_hessian_check, contact_hessian_tolerance, hessian_uniformity, ma_concentration_check,
    ma_mass_check, q_diagnostic, rate_fit, run_suite, RateReference, SuiteInputs, SuiteOptions, DEFAULT_A,
};

// Criterion 1
const REFERENCE_RES: usize = 256;
const REFERENCE_AMP: f64 = 0.3;
const RATE_GROWTH_MAX: f64 = 2.0;
const REFERENCE_RUNTIME_MAX: Duration = Duration::from_secs(120);
// Criterion 2
const PLATEAU_FROM: f64 = 512.0;
const PLATEAU_RATIO_MAX: f64 = 1.15;
const THIRD_GROWTH_MIN: f64 = 2.0;
// Criterion 3
const MASS_ERROR_MAX: f64 = 0.02;
const REFINEMENT_SLACK: f64 = 1.2;
// Criterion 4
const CONCENTRATION_MAX: f64 = 0.01;
// Criterion 6
const CONST_RES: usize = 32;
const EXACT_TOL: f64 = 1e-10;
const CONST_NEWTON_MAX: usize = 2;
// Criterion 7
const SUBCRITICAL_AMP: f64 = 0.05;
const SUBCRITICAL_ENVELOPE_TOL: f64 = 1e-6;
const SUBCRITICAL_BETA_SLACK: f64 = 1e-9;
// Criterion 8
const NEWTON_FINAL_MAX: f64 = 1e-10;
const QUADRATIC_C: f64 = 10.0;
/// Residuals below this are at the round-off level of the N = 256 residual evaluation.
const ROUNDOFF_FLOOR: f64 = 1e-11;
// Criterion 9
const LAW_TRIALS: u64 = 20;
const LAW_RES: usize = 32;
const LAW_TOL: f64 = 1e-8;
const LAW_SEED: u64 = 20_240_601;
// Criterion 10
const ROOFTOP_RES: usize = 64;
const ROOFTOP_TOL: f64 = 1e-8;
// Criterion 11
const N2_RES: usize = 16;
const N2_STOP: f64 = 1024.0;
const N2_NEWTON_TOL: f64 = 1e-8;
const N2_RUNTIME_MAX: Duration = Duration::from_secs(600);
const N2_SEPARABLE_TOL: f64 = 1e-6;
// Criterion 12
const Q_SLACK: f64 = 0.5;
const H_IDENTITY_TOL: f64 = 1e-12;

fn grid(n: usize, res: usize) -> Grid {
    Grid::new(TorusGeometry::flat(n).unwrap(), res).unwrap()
}

fn cos_x(g: &Grid, amp: f64) -> GridField {
    g.sample(|x| amp * (2.0 * PI * x[0]).cos()).unwrap()
}

fn schedule() -> Vec<f64> {
    doubling_schedule(16.0, 4096.0)
}

struct Reference {
    sweep: SweepResult,
    oracle: EnvelopeResult,
    elapsed: Duration,
}

static REFERENCE: Lazy<Reference> = Lazy::new(|| {
    let start = Instant::now();
    let v = cos_x(&grid(1, REFERENCE_RES), REFERENCE_AMP);
    let sweep = continuation_sweep(&v, &schedule(), &NewtonOptions::default()).unwrap();
    let oracle = envelope_psor(&v, &PsorOptions::default()).unwrap();
    Reference { sweep, oracle, elapsed: start.elapsed() }
});

/// `2 max c_beta` on the reference run.
static KAPPA: Lazy<f64> = Lazy::new(|| {
    rate_fit(&REFERENCE.sweep, RateReference::Envelope(&REFERENCE.oracle)).unwrap().calibrated_kappa()
});

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn criterion_1() -> Verdict {
    let r = &*REFERENCE;
    let fit = rate_fit(&r.sweep, RateReference::Envelope(&r.oracle)).unwrap();
    let pass = fit.decreasing && fit.growth <= RATE_GROWTH_MAX && r.elapsed <= REFERENCE_RUNTIME_MAX;
    verdict(
        pass,
        format!(
            "e_beta strictly decreasing = {}, max c / c_16 = {:.4} (<= {RATE_GROWTH_MAX}), runtime {:.1}s (<= {}s); e = {}",
            fit.decreasing,
            fit.growth,
            r.elapsed.as_secs_f64(),
            REFERENCE_RUNTIME_MAX.as_secs(),
            sci(&fit.errors)
        ),
    )
}

fn criterion_2() -> Verdict {
    let h = hessian_uniformity(&REFERENCE.sweep, Some(PLATEAU_FROM)).unwrap();
    verdict(
        h.plateau_ratio <= PLATEAU_RATIO_MAX && h.third_growth >= THIRD_GROWTH_MIN,
        format!(
            "sup lambda_1 ratio 4096/512 = {:.4} (<= {PLATEAU_RATIO_MAX}), sup |D^3| growth = {:.3} (>= {THIRD_GROWTH_MIN})",
            h.plateau_ratio, h.third_growth
        ),
    )
}

fn criterion_3() -> Verdict {
    let coarse = ma_mass_check(&REFERENCE.oracle).unwrap();
    let v = cos_x(&grid(1, 2 * REFERENCE_RES), REFERENCE_AMP);
    let fine = ma_mass_check(&envelope_psor(&v, &PsorOptions::default()).unwrap()).unwrap();
    verdict(
        coarse <= MASS_ERROR_MAX && fine <= REFINEMENT_SLACK * coarse,
        format!(
            "mass error {coarse:.4e} at N = {REFERENCE_RES} (<= {MASS_ERROR_MAX}), {fine:.4e} at N = {} (<= {REFINEMENT_SLACK} x coarse)",
            2 * REFERENCE_RES
        ),
    )
}

fn criterion_4() -> Verdict {
    let f = ma_concentration_check(&REFERENCE.oracle).unwrap();
    verdict(f <= CONCENTRATION_MAX, format!("off-contact mass fraction {f:.3e} (<= {CONCENTRATION_MAX})"))
}

fn criterion_5() -> Verdict {
    let env = &REFERENCE.oracle;
    let worst = contact_hessian_check(env).unwrap();
    let tol = contact_hessian_tolerance(&env.obstacle);
    verdict(worst <= tol, format!("sup |D^2 u_theta| on interior contact = {worst:.3e} (<= {tol:.4e})"))
}

fn criterion_6() -> Verdict {
    let v = grid(1, CONST_RES).constant(0.2);
    let sweep = continuation_sweep(&v, &schedule(), &NewtonOptions::default()).unwrap();
    let phi_err = sweep.solutions.iter().map(|s| s.phi.sup_distance(&v).unwrap()).fold(0.0, f64::max);
    let iters = sweep.solutions.iter().map(|s| s.newton_iters).max().unwrap();
    let oracle = envelope_psor(&v, &PsorOptions::default()).unwrap();
    let env_err = oracle.envelope.sup_distance(&v).unwrap();
    let inputs = SuiteInputs { sweep: &sweep, oracle: Some(&oracle), envelope: &oracle };
    let outcome = run_suite(&inputs, &SuiteOptions::default()).unwrap();
    let failed: Vec<&str> = outcome
        .report
        .records
        .iter()
        .filter(|r| r.status == psh_envelope::verify::CheckStatus::Failed)
        .map(|r| r.name.as_str())
        .collect();
    verdict(
        phi_err <= EXACT_TOL && iters <= CONST_NEWTON_MAX && env_err <= EXACT_TOL && failed.is_empty(),
        format!(
            "sup |phi - v| = {phi_err:.1e}, max Newton iterations {iters} (<= {CONST_NEWTON_MAX}), sup |P(v) - v| = {env_err:.1e}, failed checks {failed:?}"
        ),
    )
}

fn criterion_7() -> Verdict {
    let v = cos_x(&grid(1, REFERENCE_RES), SUBCRITICAL_AMP);
    let env_err = envelope_psor(&v, &PsorOptions::default()).unwrap().envelope.sup_distance(&v).unwrap();
    let sweep = continuation_sweep(&v, &schedule(), &NewtonOptions::default()).unwrap();
    let bound_const = (1.0 + SUBCRITICAL_AMP * PI * PI).ln();
    let violations: Vec<String> = sweep
        .solutions
        .iter()
        .filter_map(|s| {
            let sup = s.u_beta.sup_norm();
            let bound = bound_const / s.beta + SUBCRITICAL_BETA_SLACK;
            (sup > bound).then(|| format!("beta {}: {sup:.4e} > {bound:.4e}", s.beta))
        })
        .collect();
    verdict(
        env_err <= SUBCRITICAL_ENVELOPE_TOL && violations.is_empty(),
        format!(
            "sup |P(v) - v| = {env_err:.1e} (<= {SUBCRITICAL_ENVELOPE_TOL:e}); beta bound violations: {violations:?}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let sol = REFERENCE.sweep.last();
    let r = &sol.residual_history;
    let tail = &r[r.len().saturating_sub(4)..];
    let quadratic = tail.len() == 4
        && tail.windows(2).all(|w| w[1] <= QUADRATIC_C * w[0] * w[0] || w[1] <= ROUNDOFF_FLOOR);
    let last = *r.last().unwrap();
    verdict(
        last <= NEWTON_FINAL_MAX && quadratic,
        format!(
            "beta {}: final residual {last:.2e} (<= {NEWTON_FINAL_MAX:e}), tail {} (r_k+1 <= {QUADRATIC_C} r_k^2 or <= {ROUNDOFF_FLOOR:e})",
            sol.beta,
            sci(tail)
        ),
    )
}

fn criterion_9() -> Verdict {
    let g = grid(1, LAW_RES);
    let mut rng = ChaCha8Rng::seed_from_u64(LAW_SEED);
    let opts = PsorOptions::default();
    let p = |u: &GridField| envelope_psor(u, &opts).unwrap().envelope;
    let mut failures = Vec::new();
    for trial in 0..LAW_TRIALS {
        let v = random_band_limited(&g, 0.3, 3, &mut rng).unwrap();
        let w = random_band_limited(&g, 0.3, 3, &mut rng).unwrap();
        let (pv, pw) = (p(&v), p(&w));
        if pv.sup_distance(&pw).unwrap() > v.sup_distance(&w).unwrap() + LAW_TOL {
            failures.push(format!("{trial}: contraction"));
        }
        let above = v.zip_with(&w, f64::max).unwrap();
        if pv.sub(&p(&above)).unwrap().max() > LAW_TOL || pw.sub(&p(&above)).unwrap().max() > LAW_TOL {
            failures.push(format!("{trial}: monotonicity"));
        }
        if p(&v.add_scalar(0.7)).sup_distance(&pv.add_scalar(0.7)).unwrap() > LAW_TOL {
            failures.push(format!("{trial}: shift"));
        }
        if p(&pv).sup_distance(&pv).unwrap() > LAW_TOL {
            failures.push(format!("{trial}: idempotence"));
        }
    }
    verdict(failures.is_empty(), format!("{LAW_TRIALS} trials, failures {failures:?}"))
}

fn criterion_10() -> Verdict {
    let g = grid(1, ROOFTOP_RES);
    let v = cos_x(&g, 0.3);
    let w = g.sample(|x| 0.3 * (2.0 * PI * x[1]).cos()).unwrap();
    let opts = EnvelopeOptions {
        schedule: schedule(),
        kappa: *KAPPA,
        ..EnvelopeOptions::default()
    };
    let psor = |fields: &[GridField]| rooftop(fields, RooftopPath::Psor, None, &opts).unwrap().envelope;
    let p_v = envelope_psor(&v, &opts.psor).unwrap().envelope;
    let plus_one = psor(&[v.clone(), v.add_scalar(1.0)]).sup_distance(&p_v).unwrap();
    let vw = psor(&[v.clone(), w.clone()]);
    let swapped = psor(&[w.clone(), v.clone()]);
    let order = vw.sup_distance(&swapped).unwrap();
    let transposed = vw.swap_axes(0, 1).unwrap().sup_distance(&vw).unwrap();

    let eps = 2.0 / ROOFTOP_RES as f64;
    let beta = rooftop(&[v, w], RooftopPath::BetaLimit, Some(eps), &opts).unwrap();
    let beta_max = *opts.schedule.last().unwrap();
    let lip = 0.3 * 2.0 * PI;
    let bound = *KAPPA * beta_max.ln() / beta_max + lip * eps * kernel_first_moment(2);
    let gap = beta.envelope.sup_distance(&vw).unwrap();
    verdict(
        plus_one <= ROOFTOP_TOL && order <= ROOFTOP_TOL && transposed <= ROOFTOP_TOL && gap <= bound,
        format!(
            "P(v, v+1) vs P(v) {plus_one:.1e}, swap {order:.1e}, transpose {transposed:.1e} (<= {ROOFTOP_TOL:e}); beta-limit vs psor {gap:.3e} (<= {bound:.3e}, kappa {:.3})",
            *KAPPA
        ),
    )
}

fn criterion_11() -> Verdict {
    let start = Instant::now();
    let g2 = grid(2, N2_RES);
    let v = g2.sample(|x| 0.3 * ((2.0 * PI * x[0]).cos() + (2.0 * PI * x[2]).cos())).unwrap();
    let opts = NewtonOptions { tol: N2_NEWTON_TOL, ..NewtonOptions::default() };
    let betas = doubling_schedule(16.0, N2_STOP);
    let sweep = continuation_sweep(&v, &betas, &opts).unwrap();
    let elapsed = start.elapsed();
    let d = &sweep.successive_distances;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let fit = rate_fit(&sweep, RateReference::LastEntry).unwrap();

    // phi(z) = phi_1(z_1) + phi_1(z_2) with phi_1 the one-variable solution.
    let g1 = grid(1, N2_RES);
    let one = continuation_sweep(&cos_x(&g1, 0.3), &betas, &NewtonOptions::default()).unwrap();
    let separable = sweep
        .solutions
        .iter()
        .zip(&one.solutions)
        .map(|(s2, s1)| {
            let p1 = s1.phi.values();
            let stride = g1.stride(0);
            (0..g2.len())
                .map(|i| {
                    let expect = p1[g2.axis_index(i, 0) * stride] + p1[g2.axis_index(i, 2) * stride];
                    (s2.phi.values()[i] - expect).abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    verdict(
        decreasing && fit.growth <= RATE_GROWTH_MAX && elapsed <= N2_RUNTIME_MAX && separable <= N2_SEPARABLE_TOL,
        format!(
            "successive distances {} decreasing = {decreasing}, max c / c_16 = {:.3} (<= {RATE_GROWTH_MAX}), separable solution gap {separable:.1e} (<= {N2_SEPARABLE_TOL:e}), runtime {:.1}s",
            sci(d),
            fit.growth,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_12() -> Verdict {
    let sweep = &REFERENCE.sweep;
    let q0 = q_diagnostic(sweep.at_beta(PLATEAU_FROM).unwrap(), DEFAULT_A);
    let q1 = q_diagnostic(sweep.last(), DEFAULT_A);
    let defect = sweep
        .solutions
        .iter()
        .map(|s| q_diagnostic(s, DEFAULT_A).h_identity_defect)
        .fold(0.0, f64::max);
    let (a, b) = (q0.sup_q.unwrap(), q1.sup_q.unwrap());
    verdict(
        b <= a + Q_SLACK && defect <= H_IDENTITY_TOL,
        format!("sup Q {a:.4} at beta 512, {b:.4} at beta 4096 (<= +{Q_SLACK}); h-identity defect {defect:.1e} (<= {H_IDENTITY_TOL:e})"),
    )
}

fn main() {
    let criteria: [(usize, fn() -> Verdict); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let mut failed = Vec::new();
    for (k, f) in criteria {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        println!("criterion {k}: {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(k);
        }
    }
    println!("acceptance: {} of 12 criteria passed; failed {failed:?}", 12 - failed.len());
    // The reference psh margin is part of every envelope; keep it visible.
    println!("reference envelope psh margin {:.2e}", psh_margin(&REFERENCE.oracle.envelope));
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
