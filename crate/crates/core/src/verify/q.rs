use serde::{Deserialize, Serialize};

use crate::newton::BetaSolution;
use crate::torus::{gradient_norm_sq, real_hessian_lambda1, GridField};

/// Default weight of `phi` in `Q`.
pub const DEFAULT_A: f64 = 10.0;

/// `h(s) = -(lambda/2) log(1 + S - s)` with `S = sup |d phi|^2`, defined for `s <= S`.
///
/// `h' = (lambda/2) / (1 + S - s)` lies in `[lambda / (2 + 2S), lambda / 2]` and
/// `h'' = (2/lambda) h'^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFunction {
    pub lambda: f64,
    pub sup_grad: f64,
}

impl HFunction {
    pub fn h(&self, s: f64) -> f64 {
        -0.5 * self.lambda * (1.0 + self.sup_grad - s).ln()
    }

    pub fn h1(&self, s: f64) -> f64 {
        0.5 * self.lambda / (1.0 + self.sup_grad - s)
    }

    pub fn h2(&self, s: f64) -> f64 {
        let w = 1.0 + self.sup_grad - s;
        0.5 * self.lambda / (w * w)
    }
}

/// Pointwise `Q = log lambda_1(D^2 phi) + h(|d phi|^2) - A phi` for one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub beta: f64,
    pub a: f64,
    pub h: HFunction,
    #[serde(skip)]
    pub lambda1_field: Option<GridField>,
    /// `Q` on `{lambda_1 > 0}`, `None` elsewhere.
    #[serde(skip)]
    pub q_field: Vec<Option<f64>>,
    pub sup_lambda1: f64,
    /// `None` when `lambda_1 <= 0` at every node.
    pub sup_q: Option<f64>,
    pub sup_q_node: Option<usize>,
    /// `max |h'' - (2/lambda) h'^2|` over nodes.
    pub h_identity_defect: f64,
    /// `|lambda (1 + 2 sup |d v|^2) - 1|`.
    pub lambda_defect: f64,
    /// Whether `lambda / (2 + 2S) <= h' <= lambda / 2` at every node.
    pub h1_in_bounds: bool,
    pub note: Option<String>,
}

pub fn q_diagnostic(sol: &BetaSolution, a: f64) -> DiagnosticsReport {
    // lambda = 1 / (1 + 2 sup |d v|^2)
    let grad_v = gradient_norm_sq(&sol.obstacle).max();
    let lambda = 1.0 / (1.0 + 2.0 * grad_v);
    let grad = gradient_norm_sq(&sol.phi);
    let h = HFunction {
        lambda,
        sup_grad: grad.max(),
    };
    let lam1 = real_hessian_lambda1(&sol.phi);
    let phi = sol.phi.values();
    let mut q_field = Vec::with_capacity(phi.len());
    let mut sup_q: Option<(f64, usize)> = None;
    let mut defect = 0.0_f64;
    let mut in_bounds = true;
    let (lo, hi) = (lambda / (2.0 + 2.0 * h.sup_grad), lambda / 2.0);
    for (i, (&l, &s)) in lam1.values().iter().zip(grad.values()).enumerate() {
        let h1 = h.h1(s);
        defect = defect.max((h.h2(s) - 2.0 / lambda * h1 * h1).abs());
        in_bounds &= h1 >= lo * (1.0 - 1e-14) && h1 <= hi * (1.0 + 1e-14);
        if l > 0.0 {
            let q = l.ln() + h.h(s) - a * phi[i];
            if sup_q.is_none_or(|(m, _)| q > m) {
                sup_q = Some((q, i));
            }
            q_field.push(Some(q));
        } else {
            q_field.push(None);
        }
    }
    let note = sup_q
        .is_none()
        .then(|| "lambda_1 <= 0 at every node; Q has empty domain".to_string());
    DiagnosticsReport {
        beta: sol.beta,
        a,
        h,
        sup_lambda1: lam1.max(),
        lambda1_field: Some(lam1),
        q_field,
        sup_q: sup_q.map(|p| p.0),
        sup_q_node: sup_q.map(|p| p.1),
        h_identity_defect: defect,
        lambda_defect: (lambda * (1.0 + 2.0 * grad_v) - 1.0).abs(),
        h1_in_bounds: in_bounds,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{solve_beta, NewtonOptions};
    use crate::torus::{Grid, TorusGeometry};
    use std::f64::consts::PI;

    #[test]
    fn constant_obstacle_has_empty_domain() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 8).unwrap();
        let sol = solve_beta(&g.constant(0.2), 8.0, None, &NewtonOptions::default()).unwrap();
        let r = q_diagnostic(&sol, DEFAULT_A);
        assert!(r.sup_q.is_none());
        assert!(r.note.is_some());
        assert_eq!(r.h.lambda, 1.0);
    }

    #[test]
    fn h_chain_identities() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 64).unwrap();
        let v = g.sample(|x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
        let sol = solve_beta(&v, 16.0, None, &NewtonOptions::default()).unwrap();
        let r = q_diagnostic(&sol, DEFAULT_A);
        assert!(r.sup_q.is_some());
        assert!(r.h_identity_defect <= 1e-12);
        assert!(r.lambda_defect <= 1e-12);
        assert!(r.h1_in_bounds);
        assert!(r.h.lambda > 0.0 && r.h.lambda <= 1.0);
    }
}
