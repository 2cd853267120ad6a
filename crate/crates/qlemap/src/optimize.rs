//! Derivative-free minimization used by both trainers, backed by a COBYLA
//! implementation (linear interpolation models over a trust region).
//!
//! The wrapper records every objective evaluation and always returns the best
//! point ever evaluated, so the result can never be worse than the starting
//! point even when the underlying run stops on an interpolation failure.

use std::cell::RefCell;

use cobyla::{minimize as cobyla_minimize, RhoBeg, StopTols, SuccessStatus};

use crate::{Error, Result};

/// Stopping and step-size settings for one optimizer run.
///
/// `seed` is carried along so run manifests can record the full provenance of
/// a training call; the method itself is deterministic and never consumes it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizeConfig {
    pub max_iter: usize,
    pub initial_step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> OptimizeConfig {
        OptimizeConfig {
            max_iter: 2000,
            initial_step: 0.5,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl OptimizeConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                value: "0".into(),
                reason: "must be at least 1",
            });
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "initial_step",
                value: self.initial_step.to_string(),
                reason: "must be positive",
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                value: self.tolerance.to_string(),
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    /// Best point ever evaluated.
    pub x_opt: Vec<f64>,
    /// Objective at `x_opt`.
    pub f_opt: f64,
    /// Total objective evaluations consumed.
    pub evaluations: usize,
    /// Best-so-far curve: one `(evaluation index, best f)` entry per
    /// improvement, starting at the first evaluation. Nonincreasing in f.
    pub trace: Vec<(usize, f64)>,
    /// False when the run stopped only because `max_iter` was exhausted or
    /// the backend gave up before reaching the tolerance.
    pub converged: bool,
}

struct EvalLog {
    count: usize,
    best_f: f64,
    best_x: Vec<f64>,
    trace: Vec<(usize, f64)>,
    first_non_finite: Option<usize>,
}

/// Minimizes `objective` from `x0` without derivatives. Deterministic for a
/// fixed `(objective, x0, cfg)` triple. Angles are treated as unbounded
/// (rotation periodicity makes box constraints redundant).
pub fn minimize(
    objective: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    cfg: &OptimizeConfig,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: "[]".into(),
            reason: "needs at least one coordinate",
        });
    }

    let log = RefCell::new(EvalLog {
        count: 0,
        best_f: f64::INFINITY,
        best_x: x0.to_vec(),
        trace: Vec::new(),
        first_non_finite: None,
    });

    let wrapped = |x: &[f64], _: &mut ()| -> f64 {
        let mut log = log.borrow_mut();
        log.count += 1;
        let f = objective(x);
        if !f.is_finite() {
            if log.first_non_finite.is_none() {
                log.first_non_finite = Some(log.count);
            }
            // The backend offers no abort channel, so steer it with a huge
            // finite value and report the failure after it returns.
            return 1e300;
        }
        if f < log.best_f {
            log.best_f = f;
            log.best_x = x.to_vec();
            let count = log.count;
            log.trace.push((count, f));
        }
        f
    };

    let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); x0.len()];
    let stop = StopTols {
        xtol_abs: vec![cfg.tolerance; x0.len()],
        ..StopTols::default()
    };
    let cons: Vec<fn(&[f64], &mut ()) -> f64> = Vec::new();
    let outcome = cobyla_minimize(
        wrapped,
        x0,
        &bounds,
        &cons,
        (),
        cfg.max_iter,
        RhoBeg::All(cfg.initial_step),
        Some(stop),
    );

    let log = log.into_inner();
    if let Some(eval) = log.first_non_finite {
        return Err(Error::NonFiniteObjective { eval });
    }
    let converged = matches!(
        outcome,
        Ok((
            SuccessStatus::Success
                | SuccessStatus::StopValReached
                | SuccessStatus::FtolReached
                | SuccessStatus::XtolReached,
            _,
            _,
        ))
    );
    Ok(OptimizeResult {
        x_opt: log.best_x,
        f_opt: log.best_f,
        evaluations: log.count,
        trace: log.trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn sphere_reaches_tolerance() {
        let cfg = OptimizeConfig {
            tolerance: 1e-6,
            ..OptimizeConfig::default()
        };
        let result = minimize(sphere, &[1.0, 1.0], &cfg).unwrap();
        assert!(result.f_opt < 1e-6, "f_opt = {}", result.f_opt);
        assert!(result.converged);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        // Global minimum f = 0 at (1, 1); a coarse grid scan near that point
        // confirms no lower value exists in the neighborhood the optimizer
        // converges to. Linear-model trust-region methods descend the curved
        // valley slowly, so the default 2000-evaluation budget lands near the
        // minimum and a larger budget closes in on it.
        let mut grid_min = f64::INFINITY;
        for i in -20..=20 {
            for j in -20..=20 {
                let x = [1.0 + i as f64 * 0.05, 1.0 + j as f64 * 0.05];
                grid_min = grid_min.min(rosenbrock(&x));
            }
        }
        assert_eq!(grid_min, 0.0);

        let cfg = OptimizeConfig {
            tolerance: 1e-7,
            ..OptimizeConfig::default()
        };
        let result = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(result.f_opt < 5e-2, "f_opt = {}", result.f_opt);
        assert!(result.evaluations <= 2000);
        assert!(result.f_opt >= grid_min);
        assert!((result.x_opt[0] - 1.0).abs() < 0.2);
        assert!((result.x_opt[1] - 1.0).abs() < 0.2);

        let cfg_long = OptimizeConfig {
            max_iter: 8000,
            tolerance: 1e-9,
            ..OptimizeConfig::default()
        };
        let long = minimize(rosenbrock, &[-1.2, 1.0], &cfg_long).unwrap();
        assert!(long.f_opt < 1e-3, "long f_opt = {}", long.f_opt);
    }

    #[test]
    fn constant_objective_returns_start() {
        let result = minimize(|_| 3.5, &[0.2, -0.7], &OptimizeConfig::default()).unwrap();
        assert_eq!(result.f_opt, 3.5);
        assert_eq!(result.x_opt, vec![0.2, -0.7]);
        assert!(result.converged);
    }

    #[test]
    fn trace_is_monotone_and_consistent() {
        let result = minimize(rosenbrock, &[-1.2, 1.0], &OptimizeConfig::default()).unwrap();
        assert!(!result.trace.is_empty());
        assert_eq!(result.trace[0].0, 1);
        for pair in result.trace.windows(2) {
            assert!(pair[1].1 < pair[0].1);
            assert!(pair[1].0 > pair[0].0);
        }
        let trace_min = result.trace.last().unwrap().1;
        assert_eq!(result.f_opt, trace_min);
        assert!(result.f_opt <= rosenbrock(&[-1.2, 1.0]));
        assert!(result.trace.last().unwrap().0 <= result.evaluations);
    }

    #[test]
    fn identical_inputs_give_identical_results() {
        let a = minimize(rosenbrock, &[0.3, 0.9], &OptimizeConfig::default()).unwrap();
        let b = minimize(rosenbrock, &[0.3, 0.9], &OptimizeConfig::default()).unwrap();
        assert_eq!(a.x_opt, b.x_opt);
        assert_eq!(a.f_opt, b.f_opt);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn never_worse_than_start_even_with_tiny_budget() {
        for budget in [1usize, 2, 5, 10] {
            let cfg = OptimizeConfig {
                max_iter: budget,
                ..OptimizeConfig::default()
            };
            let result = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
            assert!(result.f_opt <= rosenbrock(&[-1.2, 1.0]));
            assert!(result.evaluations <= budget);
        }
    }

    #[test]
    fn exhausted_budget_reports_not_converged() {
        let cfg = OptimizeConfig {
            max_iter: 20,
            tolerance: 1e-12,
            ..OptimizeConfig::default()
        };
        let result = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!result.converged);
    }

    #[test]
    fn non_finite_objective_aborts_with_diagnostic() {
        let result = minimize(
            |x| if x[0] < -2.0 { f64::NAN } else { (x[0] + 5.0).powi(2) },
            &[-1.9, 0.0],
            &OptimizeConfig::default(),
        );
        assert!(matches!(result, Err(Error::NonFiniteObjective { .. })));
    }

    #[test]
    fn config_validation() {
        let bad_iter = OptimizeConfig {
            max_iter: 0,
            ..OptimizeConfig::default()
        };
        assert!(minimize(sphere, &[1.0], &bad_iter).is_err());
        let bad_step = OptimizeConfig {
            initial_step: 0.0,
            ..OptimizeConfig::default()
        };
        assert!(minimize(sphere, &[1.0], &bad_step).is_err());
        let bad_tol = OptimizeConfig {
            tolerance: -1.0,
            ..OptimizeConfig::default()
        };
        assert!(minimize(sphere, &[1.0], &bad_tol).is_err());
        assert!(minimize(sphere, &[], &OptimizeConfig::default()).is_err());
    }

    #[test]
    fn high_dimensional_angle_problem() {
        // Shape matching the embedding trainer: 14 angles, cosine landscape
        // with minimum -14 at all angles = π.
        let objective =
            |x: &[f64]| -> f64 { x.iter().map(|t| t.cos()).sum::<f64>() };
        let x0 = vec![2.5; 14];
        let result = minimize(objective, &x0, &OptimizeConfig::default()).unwrap();
        assert!(result.f_opt < -13.9, "f_opt = {}", result.f_opt);
    }
}
