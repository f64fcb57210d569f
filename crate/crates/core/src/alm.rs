//! Outer augmented Lagrangian loop: residual-based inner tolerances,
//! multiplier updates through the Moreau envelope gradient, penalty update
//! rules, and convergence-rate estimation.

use nalgebra::DVector;
use std::io::Write;

use crate::error::{Error, Result};
use crate::inner::{solve_subproblem, InnerConfig, InnerStatus};
use crate::poly::Polyhedron;
use crate::problem::{CompositeProblem, PrimalDualPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    Fixed,
    Geometric {
        factor: f64,
    },
    /// Keep ρ while the auxiliary value decreases fast enough, otherwise
    /// multiply by `factor`.
    VRule {
        theta_v: f64,
        factor: f64,
    },
}

#[derive(Debug, Clone)]
pub struct AlmConfig {
    pub rho0: f64,
    pub rule: PenaltyRule,
    /// ε_k = R_k^tol_exponent, with tol_exponent > 1.
    pub tol_exponent: f64,
    pub stop_tol: f64,
    pub max_outer: usize,
    pub inner: InnerConfig,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            rho0: 10.0,
            rule: PenaltyRule::VRule {
                theta_v: 0.5,
                factor: 10.0,
            },
            tol_exponent: 1.5,
            stop_tol: 1e-9,
            max_outer: 200,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub rho: f64,
    pub r_residual: f64,
    pub eps: f64,
    pub inner_iters: usize,
    pub step_norm: f64,
    pub dual_step_norm: f64,
    pub v_value: f64,
    pub dist_to_solution: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    KktReached,
    MaxOuter,
    InnerFailure,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    /// Iterates (x^k, λ^k), k = 0, 1, …, including the start.
    pub trajectory: Vec<PrimalDualPoint>,
    pub final_point: PrimalDualPoint,
    pub final_residual: f64,
    pub status: RunStatus,
    pub q_factor: Option<f64>,
    pub superlinear: Option<bool>,
    /// Max over iterations of (‖x^{k+1} − x^k‖ + ‖λ^{k+1} − λ^k‖)/R_k.
    pub kappa_hat: Option<f64>,
}

impl RunReport {
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "k,rho,R,eps,inner_iters,step_norm,dual_step_norm,V,dist_to_solution"
        )?;
        for rec in &self.records {
            let dist = rec
                .dist_to_solution
                .map(|d| format!("{:.17e}", d))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{}",
                rec.k,
                rec.rho,
                rec.r_residual,
                rec.eps,
                rec.inner_iters,
                rec.step_norm,
                rec.dual_step_norm,
                rec.v_value,
                dist
            )?;
        }
        Ok(())
    }
}

/// λ⁺ = ∇e_{1/ρ}g(Φ(x⁺) + ρ⁻¹λ).
pub fn update_multiplier(
    p: &CompositeProblem,
    x_next: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
) -> Result<DVector<f64>> {
    let shifted = p.oracle.eval_map(x_next) + lambda / rho;
    p.g.moreau_env_grad(&shifted, rho)
}

/// V(x, λ, ρ) = dist(−∇_x𝓛, rge B*) + ‖Φ(x) − prox_{g/ρ}(Φ(x) + ρ⁻¹λ)‖.
pub fn v_value(
    p: &CompositeProblem,
    x_next: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
) -> Result<f64> {
    let violation = p.theta.violation(x_next);
    if violation > crate::problem::THETA_FEAS_TOL {
        return Err(Error::InfeasibleForTheta { violation });
    }
    let grad = p.auglag_grad_x(x_next, lambda, rho)?;
    let dual = p.auglag_grad_lambda(x_next, lambda, rho)?;
    Ok(p.theta.dist_to_range_bstar(&grad) + dual.norm())
}

pub fn penalty_update(rule: &PenaltyRule, rho: f64, v_new: f64, v_old: f64, k: usize) -> f64 {
    match rule {
        PenaltyRule::Fixed => rho,
        PenaltyRule::Geometric { factor } => factor * rho,
        PenaltyRule::VRule { theta_v, factor } => {
            if k == 0 || v_new <= theta_v * v_old {
                rho
            } else {
                factor * rho
            }
        }
    }
}

/// Q-factor estimate from error norms against the run's own limit: q is the
/// max of the last (up to 5) consecutive ratios; superlinear requires the last
/// 4 ratios strictly decreasing with the final one at most half the first.
pub fn estimate_qfactor(errors: &[f64]) -> Result<(f64, bool)> {
    if errors.len() < 3 {
        return Err(Error::DegenerateSamples);
    }
    if errors.contains(&0.0) {
        return Ok((0.0, true));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len().saturating_sub(5)..];
    let q = tail.iter().cloned().fold(0.0_f64, f64::max);
    let superlinear = if ratios.len() >= 4 {
        let last4 = &ratios[ratios.len() - 4..];
        last4.windows(2).all(|w| w[1] < w[0]) && last4[3] <= 0.5 * last4[0]
    } else {
        false
    };
    Ok((q, superlinear))
}

fn pair_norm(dx: &DVector<f64>, dl: &DVector<f64>) -> f64 {
    (dx.norm_squared() + dl.norm_squared()).sqrt()
}

pub fn alm_solve(
    p: &CompositeProblem,
    start: &PrimalDualPoint,
    cfg: &AlmConfig,
) -> Result<RunReport> {
    let violation = p.theta.violation(&start.x);
    if violation > crate::problem::THETA_FEAS_TOL {
        return Err(Error::InfeasibleForTheta { violation });
    }
    // Λ(x̄), materialized once for distance reporting when available.
    let multiplier_set: Option<Polyhedron> = p
        .known_solution
        .as_ref()
        .and_then(|ks| p.multiplier_set_polyhedron(&ks.x).ok());
    let dist_to_solution = |x: &DVector<f64>, lambda: &DVector<f64>| -> Option<f64> {
        let ks = p.known_solution.as_ref()?;
        let lam_dist = multiplier_set
            .as_ref()
            .and_then(|set| set.distance(lambda).ok())
            .unwrap_or_else(|| (lambda - &ks.lambda).norm());
        Some((x - &ks.x).norm() + lam_dist)
    };

    let mut x = start.x.clone();
    let mut lambda = start.lambda.clone();
    let mut rho = cfg.rho0;
    let mut v_old = f64::INFINITY;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut trajectory = vec![PrimalDualPoint::new(x.clone(), lambda.clone())];
    let mut status = RunStatus::MaxOuter;
    let mut final_residual = f64::INFINITY;
    let mut stall_streak = 0usize;
    let mut streak_start_r = f64::INFINITY;

    for k in 0.. {
        let r_k = p.kkt_residual(&x, &lambda)?;
        final_residual = r_k;
        // ε_k = R_k^α, capped at R_k/10 so the inner solve makes progress even
        // while R_k ≥ 1 (the cap is inactive once R_k^{α-1} < 1/10).
        let eps = r_k.powf(cfg.tol_exponent).min(0.1 * r_k);
        if r_k <= cfg.stop_tol {
            status = RunStatus::KktReached;
            records.push(IterationRecord {
                k,
                rho,
                r_residual: r_k,
                eps,
                inner_iters: 0,
                step_norm: 0.0,
                dual_step_norm: 0.0,
                v_value: r_k,
                dist_to_solution: dist_to_solution(&x, &lambda),
            });
            break;
        }
        if k >= cfg.max_outer {
            status = RunStatus::MaxOuter;
            break;
        }

        let inner = solve_subproblem(p, &lambda, rho, &x, eps, &cfg.inner)?;
        let x_next = inner.x;
        let v_new = v_value(p, &x_next, &lambda, rho)?;
        let lambda_next = update_multiplier(p, &x_next, &lambda, rho)?;
        let step_norm = (&x_next - &x).norm();
        let dual_step_norm = (&lambda_next - &lambda).norm();

        records.push(IterationRecord {
            k,
            rho,
            r_residual: r_k,
            eps,
            inner_iters: inner.iters,
            step_norm,
            dual_step_norm,
            v_value: v_new,
            dist_to_solution: dist_to_solution(&x_next, &lambda_next),
        });

        // Stalled or capped inner solves are tolerated as long as the outer
        // residual keeps moving; persistent stagnation is an inner failure.
        if inner.status == InnerStatus::Converged || r_k < 0.9 * streak_start_r {
            stall_streak = 0;
            streak_start_r = f64::INFINITY;
        } else {
            if stall_streak == 0 {
                streak_start_r = r_k;
            }
            stall_streak += 1;
        }

        rho = penalty_update(&cfg.rule, rho, v_new, v_old, k);
        v_old = v_new;
        x = x_next;
        lambda = lambda_next;
        trajectory.push(PrimalDualPoint::new(x.clone(), lambda.clone()));

        if stall_streak >= 5 {
            status = RunStatus::InnerFailure;
            final_residual = p.kkt_residual(&x, &lambda)?;
            break;
        }
    }

    let final_point = PrimalDualPoint::new(x, lambda);

    // Rate estimate against (x̄, λ̂), using the run's final λ as the λ̂ proxy.
    let (q_factor, superlinear) = match &p.known_solution {
        Some(ks) if trajectory.len() >= 4 => {
            let errors: Vec<f64> = trajectory[..trajectory.len() - 1]
                .iter()
                .map(|pt| pair_norm(&(&pt.x - &ks.x), &(&pt.lambda - &final_point.lambda)))
                .collect();
            match estimate_qfactor(&errors) {
                Ok((q, s)) => (Some(q), Some(s)),
                Err(_) => (None, None),
            }
        }
        _ => (None, None),
    };

    let kappa_hat = records
        .iter()
        .filter(|r| r.r_residual > 0.0 && (r.step_norm > 0.0 || r.dual_step_norm > 0.0))
        .map(|r| (r.step_norm + r.dual_step_norm) / r.r_residual)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });

    Ok(RunReport {
        records,
        trajectory,
        final_point,
        final_residual,
        status,
        q_factor,
        superlinear,
        kappa_hat,
    })
}
