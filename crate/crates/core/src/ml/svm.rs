//! One-vs-rest soft-margin SVM with an RBF kernel, trained by sequential
//! minimal optimization.
//!
//! Each iteration solves the two-variable dual subproblem in closed form for
//! the maximal-violating pair: the two examples bounding the feasible bias
//! interval from opposite sides. Selection is a deterministic O(n) scan, a
//! cached bias-free error vector makes each accepted step cost two kernel
//! columns, and the duality gap shrinks until it crosses the tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::niosh::RiskLabel;

pub(crate) type Sample = [f64; FEATURE_DIM];

#[derive(Debug, Clone, Copy)]
pub(crate) struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    /// Duality-gap tolerance; also bounds any residual KKT violation.
    pub tol: f64,
    /// Budget in full-sweep equivalents (n pair updates each); exceeding it
    /// is a convergence error.
    pub max_passes: usize,
}

/// Step-by-step record of one binary SMO run, for optimizer verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoDiagnostics {
    /// Which class this machine separates from the rest.
    pub class: RiskLabel,
    /// Dual objective value after each accepted pair update.
    pub objective_trace: Vec<f64>,
    /// Smallest and largest dual coefficient seen across all steps.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Accepted pair updates until convergence.
    pub iterations: usize,
}

/// A trained binary machine: support vectors with signed weights
/// (alpha_i * y_i) and the bias.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BinarySvm {
    pub support: Vec<Sample>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &Sample) -> f64 {
        let mut acc = 0.0;
        for (sv, w) in self.support.iter().zip(&self.weights) {
            acc += w * rbf(self.gamma, sv, x);
        }
        acc + self.bias
    }
}

/// One machine per class present in the training data, in label order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SvmOneVsRest {
    pub classes: Vec<RiskLabel>,
    pub machines: Vec<BinarySvm>,
}

impl SvmOneVsRest {
    pub fn predict(&self, x: &Sample) -> RiskLabel {
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (i, machine) in self.machines.iter().enumerate() {
            let score = machine.decision(x);
            // Strict comparison keeps ties on the earlier (lower) class.
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        self.classes[best]
    }
}

pub(crate) fn rbf(gamma: f64, a: &Sample, b: &Sample) -> f64 {
    let mut d = 0.0;
    for i in 0..FEATURE_DIM {
        let diff = a[i] - b[i];
        d += diff * diff;
    }
    (-gamma * d).exp()
}

/// Train the one-vs-rest ensemble. `collect_diagnostics` switches on the
/// per-step objective trace (quadratic in support count, so off by default).
pub(crate) fn train_one_vs_rest(
    xs: &[Sample],
    ys: &[RiskLabel],
    classes: &[RiskLabel],
    params: SmoParams,
    collect_diagnostics: bool,
) -> Result<(SvmOneVsRest, Vec<SmoDiagnostics>)> {
    let mut machines = Vec::with_capacity(classes.len());
    let mut diagnostics = Vec::new();
    for &class in classes {
        let targets: Vec<f64> =
            ys.iter().map(|&y| if y == class { 1.0 } else { -1.0 }).collect();
        let mut solver = Solver::new(xs, &targets, params, collect_diagnostics);
        let machine = solver.run().map_err(|e| match e {
            Error::Convergence(msg) => {
                Error::Convergence(format!("{}-vs-rest: {msg}", class.as_str()))
            }
            other => other,
        })?;
        if collect_diagnostics {
            diagnostics.push(SmoDiagnostics {
                class,
                objective_trace: std::mem::take(&mut solver.objective_trace),
                alpha_min: solver.alpha_min,
                alpha_max: solver.alpha_max,
                iterations: solver.iterations,
            });
        }
        machines.push(machine);
    }
    Ok((SvmOneVsRest { classes: classes.to_vec(), machines }, diagnostics))
}

struct Solver<'a> {
    xs: &'a [Sample],
    ys: &'a [f64],
    params: SmoParams,
    alpha: Vec<f64>,
    /// Bias-free errors F_i = sum_j alpha_j y_j K_ij - y_i.
    errors: Vec<f64>,
    trace: bool,
    objective_trace: Vec<f64>,
    alpha_min: f64,
    alpha_max: f64,
    iterations: usize,
}

impl<'a> Solver<'a> {
    fn new(xs: &'a [Sample], ys: &'a [f64], params: SmoParams, trace: bool) -> Self {
        let n = xs.len();
        Solver {
            xs,
            ys,
            params,
            alpha: vec![0.0; n],
            errors: ys.iter().map(|y| -y).collect(), // alpha = 0
            trace,
            objective_trace: Vec::new(),
            alpha_min: 0.0,
            alpha_max: 0.0,
            iterations: 0,
        }
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        rbf(self.params.gamma, &self.xs[i], &self.xs[j])
    }

    /// Dual objective: sum alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
    /// Only nonzero coefficients contribute.
    fn dual_objective(&self) -> f64 {
        let active: Vec<usize> =
            (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect();
        let mut linear = 0.0;
        let mut quad = 0.0;
        for &i in &active {
            linear += self.alpha[i];
            for &j in &active {
                quad += self.alpha[i] * self.alpha[j] * self.ys[i] * self.ys[j] * self.kernel(i, j);
            }
        }
        linear - 0.5 * quad
    }

    /// The feasible-bias bracket and the examples attaining it.
    ///
    /// `up` are examples whose F bounds the bias from above (y = +1 with
    /// alpha < C, or y = -1 with alpha > 0); `low` bounds it from below.
    /// The duality gap is `f_low - f_up`; at the optimum it is non-positive.
    fn violating_pair(&self) -> Option<(usize, f64, usize, f64)> {
        let c = self.params.c;
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for i in 0..self.alpha.len() {
            let (a, y, f) = (self.alpha[i], self.ys[i], self.errors[i]);
            let in_up = (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
            let in_low = (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);
            if in_up && up.is_none_or(|(_, best)| f < best) {
                up = Some((i, f));
            }
            if in_low && low.is_none_or(|(_, best)| f > best) {
                low = Some((i, f));
            }
        }
        match (up, low) {
            (Some((iu, fu)), Some((il, fl))) => Some((iu, fu, il, fl)),
            _ => None,
        }
    }

    fn run(&mut self) -> Result<BinarySvm> {
        let n = self.xs.len();
        let max_iterations = self.params.max_passes.saturating_mul(n);
        let mut bias = 0.0;
        // The bracket is absent only for degenerate problems (all one target).
        while let Some((i_up, f_up, i_low, f_low)) = self.violating_pair() {
            bias = -(f_up + f_low) / 2.0;
            if f_low - f_up <= self.params.tol {
                break;
            }
            if self.iterations >= max_iterations {
                return Err(Error::Convergence(format!(
                    "SMO exceeded {} full-sweep equivalents ({} pair updates)",
                    self.params.max_passes, max_iterations
                )));
            }
            if !self.take_step(i_low, i_up) {
                // No representable progress on the worst pair; the gap is at
                // numerical resolution.
                break;
            }
            self.iterations += 1;
        }

        let support: Vec<Sample> =
            (0..n).filter(|&i| self.alpha[i] > 0.0).map(|i| self.xs[i]).collect();
        let weights: Vec<f64> =
            (0..n).filter(|&i| self.alpha[i] > 0.0).map(|i| self.alpha[i] * self.ys[i]).collect();
        Ok(BinarySvm { support, weights, bias, gamma: self.params.gamma })
    }

    /// Closed-form update of the pair (i1, i2); returns false when the
    /// feasible segment admits no representable step.
    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (y1, y2) = (self.ys[i1], self.ys[i2]);
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (f1, f2) = (self.errors[i1], self.errors[i2]);
        let c = self.params.c;
        let s = y1 * y2;

        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
        } else {
            ((a1_old + a2_old - c).max(0.0), (a1_old + a2_old).min(c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.kernel(i1, i1);
        let k12 = self.kernel(i1, i2);
        let k22 = self.kernel(i2, i2);
        // Floor keeps duplicate points (eta = 0 under RBF) from stalling the
        // solver; the clip below still bounds the step.
        let eta = (k11 + k22 - 2.0 * k12).max(1e-12);
        let a2 = (a2_old + y2 * (f1 - f2) / eta).clamp(lo, hi);
        // Snap to the box corners: arithmetic residue like 7e-18 would
        // otherwise masquerade as a movable multiplier and stall selection
        // on a segment of zero effective length.
        let snap = 1e-12 * c;
        let clean = |a: f64| {
            if a < snap {
                0.0
            } else if a > c - snap {
                c
            } else {
                a
            }
        };
        let a2 = clean(a2);
        if a2 == a2_old {
            return false;
        }
        let a1 = clean(a1_old + s * (a2_old - a2));

        self.alpha[i1] = a1;
        self.alpha[i2] = a2;

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        for k in 0..self.errors.len() {
            self.errors[k] += d1 * self.kernel(i1, k) + d2 * self.kernel(i2, k);
        }

        if self.trace {
            self.objective_trace.push(self.dual_objective());
            for &a in &[a1, a2] {
                self.alpha_min = self.alpha_min.min(a);
                self.alpha_max = self.alpha_max.max(a);
            }
        }
        true
    }

    /// Signed KKT violation of example `i` under bias `b`; positive means
    /// the condition is broken by that amount.
    #[cfg(test)]
    fn kkt_violation(&self, i: usize, b: f64) -> f64 {
        let margin = self.ys[i] * (self.errors[i] + b);
        if self.alpha[i] <= 0.0 {
            (-margin).max(0.0) // require margin >= 0
        } else if self.alpha[i] >= self.params.c {
            margin.max(0.0) // require margin <= 0
        } else {
            margin.abs()
        }
    }
}
