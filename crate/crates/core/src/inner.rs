//! Inner subproblem solver: minimizes the augmented Lagrangian in x over the
//! affine set Θ by eliminating the constraint through an orthonormal kernel
//! basis and running limited-memory BFGS with Armijo backtracking on the
//! reduced coordinates.

use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, THETA_FEAS_TOL};

/// Orthonormal basis of ker B as columns of an n×k matrix, from the SVD with
/// singular values below 1e-10·‖B‖ treated as zero. An empty B gives the
/// identity.
pub fn kernel_basis(b_mat: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if b_mat.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad with zero rows so the SVD exposes all n right singular vectors.
    let rows = b_mat.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (b_mat.nrows(), n)).copy_from(b_mat);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let tol = 1e-10 * svd.singular_values.max().max(1.0);
    let null_cols: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values.get(i).copied().unwrap_or(0.0) <= tol)
        .collect();
    let mut z = DMatrix::zeros(n, null_cols.len());
    for (j, &i) in null_cols.iter().enumerate() {
        z.set_column(j, &v_t.row(i).transpose());
    }
    z
}

#[derive(Debug, Clone)]
pub struct InnerConfig {
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init_step: f64,
    pub memory: usize,
    /// The solver never insists on stationarity below this floor.
    pub grad_tol_floor: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            max_iters: 5000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_step: 1.0,
            memory: 10,
            grad_tol_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    IterationCap,
    /// Objective decrease fell below floating-point resolution while the
    /// reduced gradient was still above tolerance.
    Stall,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub x: DVector<f64>,
    /// Achieved dist(−∇_x𝓛, rge B*) = ‖Zᵀ∇_x𝓛‖.
    pub stationarity: f64,
    pub iters: usize,
    pub status: InnerStatus,
}

/// Minimizes 𝓛(·, λ, ρ) over Θ from a Θ-feasible start to reduced-gradient
/// tolerance ε (floored at `grad_tol_floor`).
pub fn solve_subproblem(
    problem: &CompositeProblem,
    lambda: &DVector<f64>,
    rho: f64,
    x_init: &DVector<f64>,
    eps: f64,
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    let violation = problem.theta.violation(x_init);
    if violation > THETA_FEAS_TOL {
        return Err(Error::InfeasibleForTheta { violation });
    }
    let z = problem.theta.kernel().clone();
    let k = z.ncols();
    let tol = eps.max(cfg.grad_tol_floor);

    let point = |y: &DVector<f64>| x_init + &z * y;
    let value = |y: &DVector<f64>| problem.auglag_value(&point(y), lambda, rho);
    let grad = |y: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(z.transpose() * problem.auglag_grad_x(&point(y), lambda, rho)?)
    };

    let mut y = DVector::zeros(k);
    let mut f = value(&y)?;
    let mut g = grad(&y)?;
    // Take at least one step unless already stationary: ε_k = R_k^α can
    // exceed the initial gradient norm early on, and returning the start
    // unchanged would stall the outer loop.
    if g.norm() <= cfg.grad_tol_floor || k == 0 {
        return Ok(InnerResult {
            x: point(&y),
            stationarity: g.norm(),
            iters: 0,
            status: InnerStatus::Converged,
        });
    }

    // L-BFGS pairs (s, y_diff, 1/⟨s, y_diff⟩), newest last.
    let mut pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut stalls = 0usize;

    for iter in 1..=cfg.max_iters {
        let mut d = two_loop_direction(&pairs, &g);
        // Safeguard: fall back to steepest descent on a bad direction.
        if d.dot(&g) > -1e-12 * d.norm() * g.norm() {
            d = -&g;
        }

        let slope = d.dot(&g);
        let noise = 1e-14 * (1.0 + f.abs());
        let mut t = cfg.init_step;
        let mut accepted = None;
        let mut grad_step: Option<DVector<f64>> = None;
        while t > 1e-20 {
            let y_trial = &y + &d * t;
            let f_trial = value(&y_trial)?;
            if f_trial <= f + cfg.armijo_c * t * slope {
                accepted = Some((y_trial, f_trial));
                break;
            }
            // Once the expected decrease is below function-value round-off the
            // Armijo comparison is meaningless; accept steps that shrink the
            // gradient norm instead so tight tolerances stay reachable.
            if cfg.armijo_c * t * (-slope) <= noise {
                let g_trial = grad(&y_trial)?;
                if g_trial.norm() <= 0.999 * g.norm() {
                    accepted = Some((y_trial, f_trial));
                    grad_step = Some(g_trial);
                    break;
                }
            }
            t *= cfg.backtrack_factor;
        }

        let (y_new, f_new) = match accepted {
            Some(pair) => pair,
            None => {
                return Ok(InnerResult {
                    x: point(&y),
                    stationarity: g.norm(),
                    iters: iter,
                    status: InnerStatus::Stall,
                });
            }
        };

        let grad_mode = grad_step.is_some();
        let g_new = match grad_step {
            Some(gt) => gt,
            None => grad(&y_new)?,
        };
        let s = &y_new - &y;
        let dg = &g_new - &g;
        let sy = s.dot(&dg);
        if sy > 1e-12 * s.norm() * dg.norm() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, dg, 1.0 / sy));
        }

        // Gradient-mode steps make progress even when f cannot resolve it.
        if !grad_mode && f - f_new <= 1e-16 * (1.0 + f.abs()) {
            stalls += 1;
        } else {
            stalls = 0;
        }

        y = y_new;
        f = f_new;
        g = g_new;

        if g.norm() <= tol {
            return Ok(InnerResult {
                x: point(&y),
                stationarity: g.norm(),
                iters: iter,
                status: InnerStatus::Converged,
            });
        }
        if stalls >= 5 {
            return Ok(InnerResult {
                x: point(&y),
                stationarity: g.norm(),
                iters: iter,
                status: InnerStatus::Stall,
            });
        }
    }

    Ok(InnerResult {
        x: point(&y),
        stationarity: g.norm(),
        iters: cfg.max_iters,
        status: InnerStatus::IterationCap,
    })
}

fn two_loop_direction(
    pairs: &VecDeque<(DVector<f64>, DVector<f64>, f64)>,
    g: &DVector<f64>,
) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, dg, inv_sy) in pairs.iter().rev() {
        let alpha = inv_sy * s.dot(&q);
        q -= dg * alpha;
        alphas.push(alpha);
    }
    if let Some((s, dg, _)) = pairs.back() {
        let gamma = s.dot(dg) / dg.norm_squared();
        q *= gamma;
    }
    for ((s, dg, inv_sy), alpha) in pairs.iter().zip(alphas.into_iter().rev()) {
        let beta = inv_sy * dg.dot(&q);
        q += s * (alpha - beta);
    }
    -q
}
