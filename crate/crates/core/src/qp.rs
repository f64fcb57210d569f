//! Dense small-scale quadratic programming by active-set enumeration.
//!
//! Solves `min ½⟨Pv, v⟩ + ⟨q, v⟩` over a polyhedron by enumerating subsets of
//! inequality constraints, solving the corresponding KKT system and keeping
//! the best primal/dual feasible candidate. Exact for small descriptions,
//! which is all the desk-scale instances here need.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::Polyhedron;

/// Subset-enumeration cap shared by every enumeration-based routine.
pub const ENUM_CAP: usize = 1 << 18;

const KKT_CONSISTENCY_TOL: f64 = 1e-8;
const PRIMAL_FEAS_TOL: f64 = 1e-9;
const DUAL_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub point: DVector<f64>,
    pub value: f64,
}

/// Minimizes `½⟨Pv, v⟩ + ⟨q, v⟩` over `poly`. `pmat` must be positive
/// semidefinite for the enumeration to be exhaustive.
pub fn solve_qp(pmat: &DMatrix<f64>, q: &DVector<f64>, poly: &Polyhedron) -> Result<QpSolution> {
    let n = poly.dim();
    assert_eq!(pmat.nrows(), n);
    assert_eq!(q.len(), n);

    let n_ineq = poly.ineqs().len();
    if n_ineq < usize::BITS as usize && (1usize << n_ineq) > ENUM_CAP {
        return Err(Error::EnumerationCap {
            subsets: 1 << n_ineq,
            cap: ENUM_CAP,
        });
    }
    if n_ineq >= usize::BITS as usize {
        return Err(Error::EnumerationCap {
            subsets: usize::MAX,
            cap: ENUM_CAP,
        });
    }

    let mut best: Option<QpSolution> = None;
    for mask in 0..(1usize << n_ineq) {
        if let Some(cand) = try_active_set(pmat, q, poly, mask) {
            let better = match &best {
                None => true,
                Some(b) => cand.value < b.value - 1e-12,
            };
            if better {
                best = Some(cand);
            }
        }
    }

    match best {
        Some(sol) => Ok(sol),
        None => {
            // No KKT-consistent candidate: either the feasible set is empty or
            // the objective is unbounded below on it.
            if polyhedron_is_feasible(poly)? {
                Err(Error::UnboundedPiece)
            } else {
                Err(Error::Infeasible)
            }
        }
    }
}

/// Feasibility probe: projects the origin (P = I is always bounded below).
fn polyhedron_is_feasible(poly: &Polyhedron) -> Result<bool> {
    let n = poly.dim();
    let identity = DMatrix::identity(n, n);
    let zero = DVector::zeros(n);
    let n_ineq = poly.ineqs().len();
    for mask in 0..(1usize << n_ineq) {
        if try_active_set(&identity, &zero, poly, mask).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

fn try_active_set(
    pmat: &DMatrix<f64>,
    q: &DVector<f64>,
    poly: &Polyhedron,
    mask: usize,
) -> Option<QpSolution> {
    let n = poly.dim();
    let active: Vec<usize> = (0..poly.ineqs().len())
        .filter(|j| mask & (1 << j) != 0)
        .collect();
    let na = active.len();
    let ne = poly.eqs().len();
    let size = n + na + ne;

    // KKT system: Pv + q + Σ μ_j c_j + Σ ν_j d_j = 0, c_j·v = α_j (j active),
    // d_j·v = β_j, with μ ≥ 0.
    let mut kkt = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    kkt.view_mut((0, 0), (n, n)).copy_from(pmat);
    for i in 0..n {
        rhs[i] = -q[i];
    }
    for (k, &j) in active.iter().enumerate() {
        let c = &poly.ineqs()[j];
        for i in 0..n {
            kkt[(i, n + k)] = c.normal[i];
            kkt[(n + k, i)] = c.normal[i];
        }
        rhs[n + k] = c.offset;
    }
    for (k, e) in poly.eqs().iter().enumerate() {
        for i in 0..n {
            kkt[(i, n + na + k)] = e.normal[i];
            kkt[(n + na + k, i)] = e.normal[i];
        }
        rhs[n + na + k] = e.offset;
    }

    let svd = kkt.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let residual = (&kkt * &sol - &rhs).norm();
    if residual > KKT_CONSISTENCY_TOL * (1.0 + rhs.norm()) {
        return None;
    }

    let v = sol.rows(0, n).into_owned();

    // Dual feasibility on the chosen active set.
    for k in 0..na {
        if sol[n + k] < -DUAL_FEAS_TOL {
            return None;
        }
    }
    // Primal feasibility on the remaining inequalities.
    for (j, c) in poly.ineqs().iter().enumerate() {
        if active.contains(&j) {
            continue;
        }
        if c.normal.dot(&v) > c.offset + PRIMAL_FEAS_TOL {
            return None;
        }
    }

    let value = 0.5 * (pmat * &v).dot(&v) + q.dot(&v);
    Some(QpSolution { point: v, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polyhedron;
    use approx::assert_abs_diff_eq;

    fn vec(d: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(d)
    }

    #[test]
    fn unconstrained_quadratic() {
        let poly = Polyhedron::whole_space(2);
        let p = DMatrix::identity(2, 2) * 2.0;
        let q = vec(&[-2.0, -4.0]);
        let sol = solve_qp(&p, &q, &poly).unwrap();
        assert_abs_diff_eq!(sol.point[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.point[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn active_inequality() {
        // min ½‖v‖² s.t. v₁ + v₂ ≥ 1  (i.e. −v₁ − v₂ ≤ −1)
        let poly = Polyhedron::new(2, vec![(vec(&[-1.0, -1.0]), -1.0)], vec![]).unwrap();
        let p = DMatrix::identity(2, 2);
        let q = DVector::zeros(2);
        let sol = solve_qp(&p, &q, &poly).unwrap();
        assert_abs_diff_eq!(sol.point[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.point[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.value, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn infeasible_detected() {
        let poly =
            Polyhedron::new(1, vec![(vec(&[1.0]), -1.0), (vec(&[-1.0]), -1.0)], vec![]).unwrap();
        let p = DMatrix::identity(1, 1);
        let q = DVector::zeros(1);
        assert!(matches!(solve_qp(&p, &q, &poly), Err(Error::Infeasible)));
    }

    #[test]
    fn unbounded_detected() {
        // min v over v ≤ 0 with no curvature: unbounded below.
        let poly = Polyhedron::new(1, vec![(vec(&[1.0]), 0.0)], vec![]).unwrap();
        let p = DMatrix::zeros(1, 1);
        let q = vec(&[1.0]);
        assert!(matches!(
            solve_qp(&p, &q, &poly),
            Err(Error::UnboundedPiece)
        ));
    }

    #[test]
    fn equality_constrained() {
        // min ½‖v‖² s.t. v₁ + v₂ = 1
        let poly = Polyhedron::new(2, vec![], vec![(vec(&[1.0, 1.0]), 1.0)]).unwrap();
        let p = DMatrix::identity(2, 2);
        let q = DVector::zeros(2);
        let sol = solve_qp(&p, &q, &poly).unwrap();
        assert_abs_diff_eq!(sol.point[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.point[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn singular_hessian_on_polytope() {
        // max zy over y ∈ [0,1] with z = 3, written as min −3y.
        let poly =
            Polyhedron::new(1, vec![(vec(&[1.0]), 1.0), (vec(&[-1.0]), 0.0)], vec![]).unwrap();
        let p = DMatrix::zeros(1, 1);
        let q = vec(&[-3.0]);
        let sol = solve_qp(&p, &q, &poly).unwrap();
        assert_abs_diff_eq!(sol.point[0], 1.0, epsilon = 1e-10);
    }
}
