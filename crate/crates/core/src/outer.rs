//! Proximal mappings and Moreau envelopes for the catalog of outer functions:
//! orthant indicators, max, ℓ1, ℓ∞, extended linear-quadratic functions,
//! separable sums, and generic PLQ data (with a brute-force prox oracle).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plq::{self, PlqFunction};
use crate::poly::Polyhedron;
use crate::qp;

/// Default fixed-point tolerance of the VI inner solve.
pub const VI_TOL: f64 = 1e-10;
/// Iteration cap of the VI inner solve.
pub const VI_MAX_ITERS: usize = 100_000;

/// Largest dimension for which generated PLQ views are produced.
const MAX_VIEW_DIM: usize = 10;

/// The outer convex function g of the composite objective φ(x) + g(Φ(x)).
#[derive(Debug, Clone)]
pub enum OuterFunction {
    /// Indicator of {0}^s × ℝ₋^{m−s}.
    Orthant { s: usize, m: usize },
    /// z ↦ max{z₁, …, z_m}.
    Max { m: usize },
    /// z ↦ ‖z‖₁.
    L1 { m: usize },
    /// z ↦ ‖z‖_∞.
    LInf { m: usize },
    /// z ↦ sup_{y ∈ C} ⟨z, y⟩ − ½⟨y, By⟩ with B symmetric PSD.
    ExtendedLq { bmat: DMatrix<f64>, set: Polyhedron },
    /// Separable sum over consecutive blocks.
    SeparableSum { blocks: Vec<OuterFunction> },
    /// Explicit PLQ representation; prox by per-piece enumeration.
    GenericPlq { plq: PlqFunction },
}

impl OuterFunction {
    pub fn dim(&self) -> usize {
        match self {
            OuterFunction::Orthant { m, .. }
            | OuterFunction::Max { m }
            | OuterFunction::L1 { m }
            | OuterFunction::LInf { m } => *m,
            OuterFunction::ExtendedLq { bmat, .. } => bmat.nrows(),
            OuterFunction::SeparableSum { blocks } => blocks.iter().map(|b| b.dim()).sum(),
            OuterFunction::GenericPlq { plq } => plq.dim(),
        }
    }

    /// Structural validation: PSD matrices, coherent dimensions.
    pub fn validate(&self) -> Result<()> {
        match self {
            OuterFunction::Orthant { s, m } => {
                if s > m {
                    return Err(Error::InvalidInput("orthant: s exceeds m".into()));
                }
            }
            OuterFunction::ExtendedLq { bmat, set } => {
                if bmat.nrows() != bmat.ncols() || bmat.nrows() != set.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: bmat.nrows(),
                        got: set.dim(),
                    });
                }
                let sym = (bmat + bmat.transpose()) * 0.5;
                let eig = sym.symmetric_eigen();
                if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
                    return Err(Error::InvalidInput("extended-LQ matrix is not PSD".into()));
                }
            }
            OuterFunction::SeparableSum { blocks } => {
                for b in blocks {
                    b.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Function value, +∞ outside the domain.
    pub fn eval(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_dim(z)?;
        match self {
            OuterFunction::Orthant { s, m } => {
                let ok = Polyhedron::orthant(*s, *m).contains(z);
                Ok(if ok { 0.0 } else { f64::INFINITY })
            }
            OuterFunction::Max { .. } => Ok(z.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            OuterFunction::L1 { .. } => Ok(z.iter().map(|c| c.abs()).sum()),
            OuterFunction::LInf { .. } => Ok(z.iter().map(|c| c.abs()).fold(0.0, f64::max)),
            OuterFunction::ExtendedLq { bmat, set } => {
                // sup ⟨z, y⟩ − ½⟨y, By⟩ = −min ½⟨y, By⟩ − ⟨z, y⟩ over C.
                match qp::solve_qp(bmat, &(-z), set) {
                    Ok(sol) => Ok(-sol.value),
                    Err(Error::UnboundedPiece) => Ok(f64::INFINITY),
                    Err(e) => Err(e),
                }
            }
            OuterFunction::SeparableSum { blocks } => {
                let mut total = 0.0;
                for (block, zi) in self.split_blocks(z, blocks) {
                    total += block.eval(&zi)?;
                }
                Ok(total)
            }
            OuterFunction::GenericPlq { plq } => plq.eval(z),
        }
    }

    /// prox_{rg}(z) = argmin { g(v) + (1/2r)‖v − z‖² }.
    pub fn prox(&self, z: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        if r <= 0.0 {
            return Err(Error::InvalidInput(
                "prox parameter must be positive".into(),
            ));
        }
        match self {
            OuterFunction::Orthant { s, m } => Ok(DVector::from_fn(*m, |i, _| {
                if i < *s {
                    0.0
                } else {
                    z[i].min(0.0)
                }
            })),
            OuterFunction::Max { .. } => {
                let inner = project_simplex(&(z / r))?;
                Ok(z - inner * r)
            }
            OuterFunction::L1 { .. } => Ok(z.map(|c| soft_threshold(c, r))),
            OuterFunction::LInf { .. } => {
                let inner = project_l1_ball(&(z / r), 1.0)?;
                Ok(z - inner * r)
            }
            OuterFunction::ExtendedLq { bmat, set } => {
                // Moreau identity: prox_{rg}(z) = z − r·y with y solving the
                // strongly monotone VI for the conjugate at parameter 1/r.
                let y = prox_elq_vi(bmat, set, z, 1.0 / r, VI_TOL)?;
                Ok(z - y * r)
            }
            OuterFunction::SeparableSum { blocks } => {
                let mut out = DVector::zeros(z.len());
                let mut at = 0usize;
                for (block, zi) in self.split_blocks(z, blocks) {
                    let pi = block.prox(&zi, r)?;
                    for k in 0..pi.len() {
                        out[at + k] = pi[k];
                    }
                    at += pi.len();
                }
                Ok(out)
            }
            OuterFunction::GenericPlq { plq } => prox_generic_plq(plq, z, r),
        }
    }

    /// Moreau envelope value e_{1/ρ}g(z) = g(p) + (ρ/2)‖z − p‖² with
    /// p = prox_{g/ρ}(z).
    pub fn moreau_env_value(&self, z: &DVector<f64>, rho: f64) -> Result<f64> {
        self.check_dim(z)?;
        if rho <= 0.0 {
            return Err(Error::InvalidInput(
                "envelope parameter must be positive".into(),
            ));
        }
        match self {
            OuterFunction::SeparableSum { blocks } => {
                let mut total = 0.0;
                for (block, zi) in self.split_blocks(z, blocks) {
                    total += block.moreau_env_value(&zi, rho)?;
                }
                Ok(total)
            }
            OuterFunction::ExtendedLq { bmat, .. } => {
                // g(p) has the closed form ⟨p, y⟩ − ½⟨y, By⟩ at the conjugate
                // maximizer y = ρ(z − p).
                let p = self.prox(z, 1.0 / rho)?;
                let y = (z - &p) * rho;
                let gp = p.dot(&y) - 0.5 * (bmat * &y).dot(&y);
                Ok(gp + 0.5 * rho * (z - &p).norm_squared())
            }
            _ => {
                let p = self.prox(z, 1.0 / rho)?;
                let gp = self.eval(&p)?;
                let gp = if gp.is_finite() { gp } else { 0.0 };
                Ok(gp + 0.5 * rho * (z - &p).norm_squared())
            }
        }
    }

    /// ∇e_{1/ρ}g(z) = ρ(z − prox_{g/ρ}(z)).
    pub fn moreau_env_grad(&self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let p = self.prox(z, 1.0 / rho)?;
        Ok((z - p) * rho)
    }

    /// PLQ representation of the function when one is generated (desk-scale
    /// diagnostics only).
    pub fn plq_view(&self) -> Option<PlqFunction> {
        match self {
            OuterFunction::Orthant { s, m } => Some(plq::indicator(Polyhedron::orthant(*s, *m))),
            OuterFunction::Max { m } if *m <= MAX_VIEW_DIM => Some(plq::max_of_coords(*m)),
            OuterFunction::L1 { m } if *m <= MAX_VIEW_DIM => Some(plq::l1_norm(*m)),
            OuterFunction::LInf { m } if *m <= MAX_VIEW_DIM => Some(plq::linf_norm(*m)),
            OuterFunction::ExtendedLq { bmat, set } => elq_view_1d(bmat, set),
            OuterFunction::SeparableSum { blocks } => {
                let mut views = blocks.iter().map(|b| b.plq_view());
                let mut acc = views.next()??;
                for v in views {
                    acc = plq::product(&acc, &v?).ok()?;
                    if acc.pieces().len() > 1 << MAX_VIEW_DIM {
                        return None;
                    }
                }
                Some(acc)
            }
            OuterFunction::GenericPlq { plq } => Some(plq.clone()),
            _ => None,
        }
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    fn split_blocks<'a>(
        &self,
        z: &'a DVector<f64>,
        blocks: &'a [OuterFunction],
    ) -> Vec<(&'a OuterFunction, DVector<f64>)> {
        let mut out = vec![];
        let mut at = 0usize;
        for block in blocks {
            let d = block.dim();
            out.push((block, z.rows(at, d).into_owned()));
            at += d;
        }
        out
    }
}

fn soft_threshold(c: f64, r: f64) -> f64 {
    if c > r {
        c - r
    } else if c < -r {
        c + r
    } else {
        0.0
    }
}

/// Euclidean projection onto the unit simplex Δ_m.
pub fn project_simplex(z: &DVector<f64>) -> Result<DVector<f64>> {
    project_scaled_simplex(z, 1.0)
}

fn project_scaled_simplex(z: &DVector<f64>, total: f64) -> Result<DVector<f64>> {
    let m = z.len();
    if m == 0 {
        return Err(Error::InvalidInput("empty input".into()));
    }
    let mut u: Vec<f64> = z.iter().cloned().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    Ok(z.map(|c| (c - theta).max(0.0)))
}

/// Euclidean projection onto the ℓ1 ball of the given radius.
pub fn project_l1_ball(z: &DVector<f64>, radius: f64) -> Result<DVector<f64>> {
    if z.iter().map(|c| c.abs()).sum::<f64>() <= radius {
        return Ok(z.clone());
    }
    let abs = z.map(f64::abs);
    let w = project_scaled_simplex(&abs, radius)?;
    Ok(DVector::from_fn(z.len(), |i, _| w[i] * z[i].signum()))
}

/// Solves the strongly monotone VI of the extended-LQ conjugate: the unique
/// y ∈ C with z ∈ (B + r⁻¹I)y + N_C(y), by projected gradient descent with
/// fixed step 1/(λ_max(B) + 1/r).
pub fn prox_elq_vi(
    bmat: &DMatrix<f64>,
    set: &Polyhedron,
    z: &DVector<f64>,
    r: f64,
    tol: f64,
) -> Result<DVector<f64>> {
    let m = bmat.nrows();
    let eig = ((bmat + bmat.transpose()) * 0.5).symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let step = 1.0 / (lam_max + 1.0 / r);
    let op = bmat + DMatrix::identity(m, m) / r;

    let mut y = set.project(&DVector::zeros(m))?;
    for _ in 0..VI_MAX_ITERS {
        let next = set.project(&(&y - (&op * &y - z) * step))?;
        let residual = (&next - &y).norm();
        y = next;
        if residual <= tol {
            return Ok(y);
        }
    }
    Err(Error::ViNonconvergent {
        tol,
        iters: VI_MAX_ITERS,
    })
}

/// Brute-force prox oracle over the PLQ representation: per-piece QP solves
/// with a global comparison; ties broken by lowest piece index.
pub fn prox_generic_plq(g: &PlqFunction, z: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    if z.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: z.len(),
        });
    }
    let m = g.dim();
    let identity = DMatrix::identity(m, m);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for piece in g.pieces() {
        let pmat = &piece.quad + &identity / r;
        let q = &piece.lin - z / r;
        let sol = match qp::solve_qp(&pmat, &q, &piece.set) {
            Ok(sol) => sol,
            Err(Error::Infeasible) => continue,
            Err(e) => return Err(e),
        };
        let value = sol.value + piece.constant + z.norm_squared() / (2.0 * r);
        match &best {
            Some((bv, _)) if value >= bv - 1e-10 => {}
            _ => best = Some((value, sol.point)),
        }
    }
    best.map(|(_, p)| p).ok_or(Error::Infeasible)
}

/// One-dimensional extended-LQ view: g(z) = sup_{y ∈ [lo, hi]} zy − ½by².
fn elq_view_1d(bmat: &DMatrix<f64>, set: &Polyhedron) -> Option<PlqFunction> {
    if bmat.nrows() != 1 {
        return None;
    }
    let b = bmat[(0, 0)];
    if b < 0.0 {
        return None;
    }
    let (lo, hi) = interval_bounds(set)?;
    let scalar = |v: f64| DVector::from_element(1, v);
    let half_line = |sign: f64, bound: f64| {
        // sign = +1: {z ≥ bound}; sign = −1: {z ≤ bound}.
        Polyhedron::new(1, vec![(scalar(-sign), -sign * bound)], vec![]).unwrap()
    };
    let mut pieces = vec![];
    let push = |pieces: &mut Vec<plq::PlqPiece>, set: Polyhedron, a2: f64, a1: f64, a0: f64| {
        pieces.push(
            plq::PlqPiece::new(set, DMatrix::from_element(1, 1, a2), scalar(a1), a0).unwrap(),
        );
    };
    if b > 0.0 {
        match (lo, hi) {
            (f64::NEG_INFINITY, f64::INFINITY) => {
                push(&mut pieces, Polyhedron::whole_space(1), 1.0 / b, 0.0, 0.0);
            }
            _ => {
                if lo.is_finite() {
                    push(
                        &mut pieces,
                        half_line(-1.0, b * lo),
                        0.0,
                        lo,
                        -0.5 * b * lo * lo,
                    );
                }
                let mid_lo = if lo.is_finite() {
                    b * lo
                } else {
                    f64::NEG_INFINITY
                };
                let mid_hi = if hi.is_finite() {
                    b * hi
                } else {
                    f64::INFINITY
                };
                let mid = match (mid_lo.is_finite(), mid_hi.is_finite()) {
                    (true, true) => Polyhedron::bounded_box(&scalar(mid_lo), &scalar(mid_hi)),
                    (true, false) => half_line(1.0, mid_lo),
                    (false, true) => half_line(-1.0, mid_hi),
                    (false, false) => Polyhedron::whole_space(1),
                };
                push(&mut pieces, mid, 1.0 / b, 0.0, 0.0);
                if hi.is_finite() {
                    push(
                        &mut pieces,
                        half_line(1.0, b * hi),
                        0.0,
                        hi,
                        -0.5 * b * hi * hi,
                    );
                }
            }
        }
    } else {
        // b = 0: support function of [lo, hi].
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if (hi - lo).abs() <= 1e-14 {
                    push(&mut pieces, Polyhedron::whole_space(1), 0.0, lo, 0.0);
                } else {
                    push(&mut pieces, half_line(-1.0, 0.0), 0.0, lo, 0.0);
                    push(&mut pieces, half_line(1.0, 0.0), 0.0, hi, 0.0);
                }
            }
            (true, false) => push(&mut pieces, half_line(-1.0, 0.0), 0.0, lo, 0.0),
            (false, true) => push(&mut pieces, half_line(1.0, 0.0), 0.0, hi, 0.0),
            (false, false) => return None,
        }
    }
    PlqFunction::new(pieces).ok()
}

fn interval_bounds(set: &Polyhedron) -> Option<(f64, f64)> {
    if set.dim() != 1 {
        return None;
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for h in set.ineqs() {
        let n = h.normal[0];
        if n > 1e-14 {
            hi = hi.min(h.offset / n);
        } else if n < -1e-14 {
            lo = lo.max(h.offset / n);
        } else if h.offset < 0.0 {
            return None;
        }
    }
    for h in set.eqs() {
        let n = h.normal[0];
        if n.abs() > 1e-14 {
            let v = h.offset / n;
            lo = lo.max(v);
            hi = hi.min(v);
        }
    }
    if lo > hi {
        return None;
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vec(d: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(d)
    }

    #[test]
    fn simplex_projection_cases() {
        let p = project_simplex(&vec(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-12);

        let p = project_simplex(&vec(&[2.0, -3.0])).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);

        let inside = vec(&[0.3, 0.7]);
        let p = project_simplex(&inside).unwrap();
        assert_abs_diff_eq!((p - inside).norm(), 0.0, epsilon = 1e-12);

        assert!(project_simplex(&DVector::zeros(0)).is_err());
    }

    #[test]
    fn l1_prox_is_soft_threshold() {
        let g = OuterFunction::L1 { m: 2 };
        let p = g.prox(&vec(&[2.0, -0.5]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn max_prox_via_simplex() {
        let g = OuterFunction::Max { m: 2 };
        let p = g.prox(&vec(&[1.0, 0.0]), 2.0).unwrap();
        assert_abs_diff_eq!(p[0], -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], -0.5, epsilon = 1e-10);
    }

    #[test]
    fn orthant_prox_is_projection() {
        let g = OuterFunction::Orthant { s: 1, m: 2 };
        let p = g.prox(&vec(&[3.0, 2.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 0.0);
        assert_abs_diff_eq!(p[1], 0.0);
        let p = g.prox(&vec(&[3.0, -2.0]), 0.5).unwrap();
        assert_abs_diff_eq!(p[1], -2.0);
    }

    #[test]
    fn linf_prox_via_moreau() {
        let g = OuterFunction::LInf { m: 2 };
        let p = g.prox(&vec(&[3.0, 1.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn elq_prox_scalar_quadratic() {
        // B = [[1]], C = ℝ: g(z) = z²/2, prox = z/(1+r).
        let g = OuterFunction::ExtendedLq {
            bmat: DMatrix::from_element(1, 1, 1.0),
            set: Polyhedron::whole_space(1),
        };
        let p = g.prox(&vec(&[4.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn elq_vi_positive_part() {
        // B = 0, C = [0,1]: g(z) = max(0, z).
        let set = Polyhedron::bounded_box(&vec(&[0.0]), &vec(&[1.0]));
        let bmat = DMatrix::zeros(1, 1);
        let y = prox_elq_vi(&bmat, &set, &vec(&[2.0]), 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-8);
        let g = OuterFunction::ExtendedLq { bmat, set };
        let p = g.prox(&vec(&[2.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn elq_vi_singleton_zero() {
        let set = Polyhedron::singleton(&vec(&[0.0]));
        let bmat = DMatrix::zeros(1, 1);
        let y = prox_elq_vi(&bmat, &set, &vec(&[5.0]), 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-12);
        let g = OuterFunction::ExtendedLq { bmat, set };
        let p = g.prox(&vec(&[5.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn elq_vi_linear_equation() {
        let set = Polyhedron::whole_space(1);
        let bmat = DMatrix::identity(1, 1);
        let y = prox_elq_vi(&bmat, &set, &vec(&[3.0]), 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(y[0], 1.5, epsilon = 1e-8);
    }

    #[test]
    fn generic_prox_matches_soft_threshold() {
        let g = plq::abs_value();
        let p = prox_generic_plq(&g, &vec(&[2.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn generic_prox_of_point_indicator() {
        let g = plq::indicator(Polyhedron::singleton(&vec(&[0.0])));
        let p = prox_generic_plq(&g, &vec(&[7.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn generic_prox_of_quadratic() {
        let g = plq::one_piece_quadratic(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 0.0)
            .unwrap();
        let p = prox_generic_plq(&g, &vec(&[3.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn envelope_values() {
        let g = OuterFunction::L1 { m: 1 };
        assert_abs_diff_eq!(
            g.moreau_env_value(&vec(&[0.5]), 1.0).unwrap(),
            0.125,
            epsilon = 1e-12
        );
        let g = OuterFunction::GenericPlq { plq: plq::zero(2) };
        assert_abs_diff_eq!(g.moreau_env_value(&vec(&[1.0, 2.0]), 3.0).unwrap(), 0.0);
        let g = OuterFunction::GenericPlq {
            plq: plq::indicator(Polyhedron::singleton(&vec(&[0.0, 0.0]))),
        };
        assert_abs_diff_eq!(
            g.moreau_env_value(&vec(&[1.0, 2.0]), 2.0).unwrap(),
            5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn envelope_gradient_huber() {
        let g = OuterFunction::L1 { m: 2 };
        let grad = g.moreau_env_grad(&vec(&[2.0, -0.5]), 1.0).unwrap();
        assert_abs_diff_eq!(grad[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[1], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn views_agree_with_specialized_eval() {
        for g in [
            OuterFunction::L1 { m: 2 },
            OuterFunction::LInf { m: 2 },
            OuterFunction::Max { m: 3 },
            OuterFunction::Orthant { s: 1, m: 2 },
        ] {
            let view = g.plq_view().unwrap();
            let z = [0.3, -0.7, 1.1];
            let z = DVector::from_row_slice(&z[..g.dim()]);
            let gv = g.eval(&z).unwrap();
            let vv = view.eval(&z).unwrap();
            if gv.is_finite() {
                assert_abs_diff_eq!(gv, vv, epsilon = 1e-10);
            } else {
                assert!(vv.is_infinite());
            }
        }
    }

    #[test]
    fn elq_1d_view_matches_eval() {
        let g = OuterFunction::ExtendedLq {
            bmat: DMatrix::from_element(1, 1, 1.0),
            set: Polyhedron::bounded_box(&vec(&[0.0]), &vec(&[1.0])),
        };
        let view = g.plq_view().unwrap();
        for z in [-2.0, -0.5, 0.0, 0.3, 0.9, 1.5, 3.0] {
            let z = vec(&[z]);
            assert_abs_diff_eq!(g.eval(&z).unwrap(), view.eval(&z).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn separable_sum_prox_blockwise() {
        let g = OuterFunction::SeparableSum {
            blocks: vec![OuterFunction::L1 { m: 1 }, OuterFunction::Max { m: 2 }],
        };
        let p = g.prox(&vec(&[2.0, 1.0, 0.0]), 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-10);
        // Max block with r = 1, z = (1,0): z − P_Δ(z) = (1,0) − (1,0) = (0,0)?
        let inner = project_simplex(&vec(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(p[1], 1.0 - inner[0], epsilon = 1e-10);
        assert_abs_diff_eq!(p[2], 0.0 - inner[1], epsilon = 1e-10);
    }
}
