//! Convex piecewise linear-quadratic functions: evaluation, active pieces,
//! subdifferentials, critical cones, and second subderivatives.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::{ConeRep, Polyhedron, ACTIVE_TOL};

/// One piece: z ↦ ½⟨A z, z⟩ + ⟨a, z⟩ + α on the polyhedron `set`.
#[derive(Debug, Clone)]
pub struct PlqPiece {
    pub set: Polyhedron,
    pub quad: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub constant: f64,
}

impl PlqPiece {
    pub fn new(
        set: Polyhedron,
        quad: DMatrix<f64>,
        lin: DVector<f64>,
        constant: f64,
    ) -> Result<Self> {
        let m = set.dim();
        if quad.nrows() != m || quad.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: quad.nrows(),
            });
        }
        if lin.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: lin.len(),
            });
        }
        for i in 0..m {
            for j in 0..m {
                if (quad[(i, j)] - quad[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidInput("piece matrix is not symmetric".into()));
                }
            }
        }
        Ok(PlqPiece {
            set,
            quad,
            lin,
            constant,
        })
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        0.5 * (&self.quad * z).dot(z) + self.lin.dot(z) + self.constant
    }
}

/// A CPLQ function given by a nonempty list of pieces. Pieces may overlap;
/// their formulas must agree on intersections (checked probabilistically by
/// `consistency_probe`).
#[derive(Debug, Clone)]
pub struct PlqFunction {
    pieces: Vec<PlqPiece>,
    dim: usize,
}

impl PlqFunction {
    pub fn new(pieces: Vec<PlqPiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput(
                "PLQ function needs at least one piece".into(),
            ));
        };
        let dim = first.set.dim();
        if pieces.iter().any(|p| p.set.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: 0,
            });
        }
        Ok(PlqFunction { pieces, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[PlqPiece] {
        &self.pieces
    }

    /// Evaluates the function; +∞ outside the domain. Lowest-index piece wins.
    pub fn eval(&self, z: &DVector<f64>) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        for piece in &self.pieces {
            if piece.set.contains(z) {
                return Ok(piece.value(z));
            }
        }
        Ok(f64::INFINITY)
    }

    /// Active piece indices I(z) = { i : z ∈ C_i }.
    pub fn active_pieces(&self, z: &DVector<f64>) -> Result<Vec<usize>> {
        let active: Vec<usize> = self
            .pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.set.contains(z))
            .map(|(i, _)| i)
            .collect();
        if active.is_empty() {
            return Err(Error::OutsideDomain);
        }
        Ok(active)
    }

    /// v_i = v − A_i z − a_i, the shifted vector tested against N_{C_i}(z).
    fn shifted(&self, i: usize, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v - &self.pieces[i].quad * z - &self.pieces[i].lin
    }

    /// Tests v ∈ ∂g(z): for every active piece, v − A_i z − a_i ∈ N_{C_i}(z)
    /// within tol.
    pub fn subdifferential_contains(
        &self,
        z: &DVector<f64>,
        v: &DVector<f64>,
        tol: f64,
    ) -> Result<bool> {
        let active = self.active_pieces(z)?;
        for i in active {
            let vi = self.shifted(i, z, v);
            if !self.pieces[i].set.normal_cone_contains(z, &vi, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Tests w ∈ K_g(z, v) via the union over active pieces of
    /// K_{C_i}(z, v − A_i z − a_i).
    pub fn critical_cone_contains(
        &self,
        z: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<bool> {
        self.eligible_piece(z, v, w).map(|i| i.is_some())
    }

    /// Lowest active index i with w ∈ K_{C_i}(z, v_i), or None.
    fn eligible_piece(
        &self,
        z: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<Option<usize>> {
        if !self.subdifferential_contains(z, v, 1e-7)? {
            return Err(Error::NotASubgradient);
        }
        let tol = 1e-9 * (1.0 + w.norm());
        for i in self.active_pieces(z)? {
            let vi = self.shifted(i, z, v);
            let cone = self.pieces[i].set.critical_cone(z, &vi)?;
            if cone.contains_within(w, tol) {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Second subderivative d²g(z, v)(w): ⟨A_i w, w⟩ on the eligible piece,
    /// +∞ when w lies in none of the active critical cones.
    pub fn second_subderivative(
        &self,
        z: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<f64> {
        match self.eligible_piece(z, v, w)? {
            Some(i) => Ok((&self.pieces[i].quad * w).dot(w)),
            None => Ok(f64::INFINITY),
        }
    }

    /// The critical cone of piece i at (z, v), used by the second-order
    /// machinery in the diagnostics layer.
    pub fn piece_critical_cone(
        &self,
        i: usize,
        z: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<ConeRep> {
        let vi = self.shifted(i, z, v);
        self.pieces[i].set.critical_cone(z, &vi)
    }

    /// Materializes ∂g(z) as a polyhedron in v-space: the intersection over
    /// active pieces of { v : v − A_i z − a_i ∈ N_{C_i}(z) }, with each normal
    /// cone converted to inequality form through the generators of the
    /// corresponding tangent cone.
    pub fn subdifferential_polyhedron(&self, z: &DVector<f64>) -> Result<Polyhedron> {
        let active = self.active_pieces(z)?;
        let mut ineqs = vec![];
        let mut eqs = vec![];
        for i in active {
            let shift = &self.pieces[i].quad * z + &self.pieces[i].lin;
            let tangent = self.pieces[i].set.tangent_cone(z)?;
            let (lineality, rays) = tangent.generators()?;
            // v − shift ∈ N ⟺ ⟨v − shift, l⟩ = 0 and ⟨v − shift, r⟩ ≤ 0.
            for l in lineality {
                let offset = l.dot(&shift);
                eqs.push((l, offset));
            }
            for r in rays {
                let offset = r.dot(&shift);
                ineqs.push((r, offset));
            }
        }
        Polyhedron::new(self.dim, ineqs, eqs)
    }

    /// Draws a random point of the domain: picks a piece and projects a random
    /// box sample onto its set.
    pub fn sample_domain_point(&self, rng: &mut impl Rng) -> Result<DVector<f64>> {
        let i = rng.gen_range(0..self.pieces.len());
        let raw = DVector::from_fn(self.dim, |_, _| rng.gen_range(-2.0..2.0));
        self.pieces[i].set.project(&raw)
    }

    /// Midpoint-convexity probe on random domain pairs. Probabilistic, not a
    /// certificate.
    pub fn convexity_probe(&self, samples: usize, seed: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0usize;
        let mut attempts = 0usize;
        while checked < samples && attempts < 100 * samples.max(1) {
            attempts += 1;
            let z1 = self.sample_domain_point(&mut rng)?;
            let z2 = self.sample_domain_point(&mut rng)?;
            let mid = (&z1 + &z2) * 0.5;
            let gm = self.eval(&mid)?;
            if !gm.is_finite() {
                continue;
            }
            let g1 = self.eval(&z1)?;
            let g2 = self.eval(&z2)?;
            if gm > 0.5 * g1 + 0.5 * g2 + 1e-8 {
                return Ok(false);
            }
            checked += 1;
        }
        Ok(true)
    }

    /// Checks that overlapping pieces agree on sampled shared points.
    pub fn consistency_probe(&self, samples: usize, seed: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let z = self.sample_domain_point(&mut rng)?;
            let active = self.active_pieces(&z)?;
            let v0 = self.pieces[active[0]].value(&z);
            for &i in &active[1..] {
                if (self.pieces[i].value(&z) - v0).abs() > 1e-8 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

// Catalog constructors used across the crate and in tests.

/// |z| on ℝ as a two-piece PLQ function.
pub fn abs_value() -> PlqFunction {
    l1_norm(1)
}

/// ‖z‖₁ on ℝᵐ: one linear piece per orthant (2^m pieces).
pub fn l1_norm(m: usize) -> PlqFunction {
    let mut pieces = vec![];
    for mask in 0..(1usize << m) {
        let sign = DVector::from_fn(m, |i, _| if mask & (1 << i) != 0 { 1.0 } else { -1.0 });
        let ineqs = (0..m)
            .map(|i| {
                let mut n = DVector::zeros(m);
                n[i] = -sign[i];
                (n, 0.0)
            })
            .collect();
        let set = Polyhedron::new(m, ineqs, vec![]).unwrap();
        pieces.push(PlqPiece::new(set, DMatrix::zeros(m, m), sign, 0.0).unwrap());
    }
    PlqFunction::new(pieces).unwrap()
}

/// max{z₁, …, z_m}: m linear pieces.
pub fn max_of_coords(m: usize) -> PlqFunction {
    let mut pieces = vec![];
    for j in 0..m {
        let mut ineqs = vec![];
        for i in 0..m {
            if i == j {
                continue;
            }
            let mut n = DVector::zeros(m);
            n[i] = 1.0;
            n[j] = -1.0;
            ineqs.push((n, 0.0));
        }
        let set = Polyhedron::new(m, ineqs, vec![]).unwrap();
        let mut lin = DVector::zeros(m);
        lin[j] = 1.0;
        pieces.push(PlqPiece::new(set, DMatrix::zeros(m, m), lin, 0.0).unwrap());
    }
    PlqFunction::new(pieces).unwrap()
}

/// ‖z‖_∞: 2m pieces, one per (coordinate, sign) attaining the max.
pub fn linf_norm(m: usize) -> PlqFunction {
    let mut pieces = vec![];
    for j in 0..m {
        for sigma in [1.0, -1.0] {
            let mut ineqs = vec![];
            for i in 0..m {
                // |z_i| ≤ σ z_j, written as ±z_i − σ z_j ≤ 0.
                for s in [1.0, -1.0] {
                    let mut n = DVector::zeros(m);
                    n[i] += s;
                    n[j] -= sigma;
                    if n.norm() > 0.0 {
                        ineqs.push((n, 0.0));
                    }
                }
            }
            let set = Polyhedron::new(m, ineqs, vec![]).unwrap();
            let mut lin = DVector::zeros(m);
            lin[j] = sigma;
            pieces.push(PlqPiece::new(set, DMatrix::zeros(m, m), lin, 0.0).unwrap());
        }
    }
    PlqFunction::new(pieces).unwrap()
}

/// Indicator of a polyhedron.
pub fn indicator(set: Polyhedron) -> PlqFunction {
    let m = set.dim();
    let piece = PlqPiece::new(set, DMatrix::zeros(m, m), DVector::zeros(m), 0.0).unwrap();
    PlqFunction::new(vec![piece]).unwrap()
}

/// The zero function on ℝᵐ.
pub fn zero(m: usize) -> PlqFunction {
    indicator(Polyhedron::whole_space(m))
}

/// A single globally-defined quadratic piece ½⟨Az, z⟩ + ⟨a, z⟩ + α.
pub fn one_piece_quadratic(
    quad: DMatrix<f64>,
    lin: DVector<f64>,
    constant: f64,
) -> Result<PlqFunction> {
    let m = quad.nrows();
    let piece = PlqPiece::new(Polyhedron::whole_space(m), quad, lin, constant)?;
    PlqFunction::new(vec![piece])
}

/// Separable product g(z, z') = g₁(z) + g₂(z') via piece cross-products.
pub fn product(g1: &PlqFunction, g2: &PlqFunction) -> Result<PlqFunction> {
    let (m1, m2) = (g1.dim(), g2.dim());
    let m = m1 + m2;
    let lift = |normal: &DVector<f64>, at: usize| {
        let mut n = DVector::zeros(m);
        for i in 0..normal.len() {
            n[at + i] = normal[i];
        }
        n
    };
    let mut pieces = vec![];
    for p1 in g1.pieces() {
        for p2 in g2.pieces() {
            let mut ineqs = vec![];
            let mut eqs = vec![];
            for h in p1.set.ineqs() {
                ineqs.push((lift(&h.normal, 0), h.offset));
            }
            for h in p2.set.ineqs() {
                ineqs.push((lift(&h.normal, m1), h.offset));
            }
            for h in p1.set.eqs() {
                eqs.push((lift(&h.normal, 0), h.offset));
            }
            for h in p2.set.eqs() {
                eqs.push((lift(&h.normal, m1), h.offset));
            }
            let set = Polyhedron::new(m, ineqs, eqs)?;
            let mut quad = DMatrix::zeros(m, m);
            quad.view_mut((0, 0), (m1, m1)).copy_from(&p1.quad);
            quad.view_mut((m1, m1), (m2, m2)).copy_from(&p2.quad);
            let mut lin = DVector::zeros(m);
            for i in 0..m1 {
                lin[i] = p1.lin[i];
            }
            for i in 0..m2 {
                lin[m1 + i] = p2.lin[i];
            }
            pieces.push(PlqPiece::new(set, quad, lin, p1.constant + p2.constant)?);
        }
    }
    PlqFunction::new(pieces)
}

/// Second-order difference quotient Δ_t² g(z, v)(w); the oracle that the
/// second subderivative formula is checked against.
pub fn second_difference_quotient(
    g: &PlqFunction,
    z: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    if g.eval(z)?.is_infinite() {
        return Err(Error::OutsideDomain);
    }
    let zt = z + w * t;
    // Evaluate g(z + tw) − g(z) − t⟨v, w⟩ by expanding the piece active at
    // z + tw around z: the naive three-term subtraction loses all accuracy at
    // small t because the function values agree to within O(t).
    let at_zt = match g.pieces().iter().position(|p| p.set.contains(&zt)) {
        Some(i) => &g.pieces()[i],
        None => return Ok(f64::INFINITY),
    };
    let at_z = g
        .pieces()
        .iter()
        .find(|p| p.set.contains(z))
        .expect("z is in the domain");
    // Piece-value gap at z, computed from differenced coefficients so the
    // common O(1) value cancels exactly.
    let dq = at_zt.quad.clone() - &at_z.quad;
    let dl = &at_zt.lin - &at_z.lin;
    let gap = 0.5 * (&dq * z).dot(z) + dl.dot(z) + (at_zt.constant - at_z.constant);
    let slope = (&at_zt.quad * z + &at_zt.lin - v).dot(w);
    let curv = (&at_zt.quad * w).dot(w);
    Ok((gap + t * slope) / (0.5 * t * t) + curv)
}

/// Activity tolerance re-exported for callers matching piece boundaries.
pub const PIECE_TOL: f64 = ACTIVE_TOL;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vec(d: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(d)
    }

    #[test]
    fn abs_eval() {
        let g = abs_value();
        assert_abs_diff_eq!(g.eval(&vec(&[-2.0])).unwrap(), 2.0);
        assert_abs_diff_eq!(g.eval(&vec(&[0.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(g.eval(&vec(&[3.0])).unwrap(), 3.0);
    }

    #[test]
    fn indicator_outside_is_infinite() {
        let g = indicator(Polyhedron::singleton(&vec(&[0.0])));
        assert!(g.eval(&vec(&[1.0])).unwrap().is_infinite());
        assert_abs_diff_eq!(g.eval(&vec(&[0.0])).unwrap(), 0.0);
    }

    #[test]
    fn active_pieces_at_kink() {
        let g = abs_value();
        assert_eq!(g.active_pieces(&vec(&[0.0])).unwrap().len(), 2);
        assert_eq!(g.active_pieces(&vec(&[3.0])).unwrap().len(), 1);
        assert!(g.active_pieces(&vec(&[f64::NAN])).is_err());
    }

    #[test]
    fn abs_subdifferential_at_kink() {
        let g = abs_value();
        let z = vec(&[0.0]);
        assert!(g.subdifferential_contains(&z, &vec(&[0.5]), 1e-8).unwrap());
        assert!(g.subdifferential_contains(&z, &vec(&[1.0]), 1e-8).unwrap());
        assert!(!g.subdifferential_contains(&z, &vec(&[1.5]), 1e-8).unwrap());
    }

    #[test]
    fn smooth_quadratic_subdifferential() {
        // g(z) = z²: A = 2.
        let g =
            one_piece_quadratic(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 0.0).unwrap();
        let z = vec(&[3.0]);
        assert!(g.subdifferential_contains(&z, &vec(&[6.0]), 1e-8).unwrap());
        assert!(!g.subdifferential_contains(&z, &vec(&[5.0]), 1e-8).unwrap());
    }

    #[test]
    fn critical_cone_of_abs() {
        let g = abs_value();
        // Smooth region: cone is all of ℝ.
        let z = vec(&[2.0]);
        assert!(g
            .critical_cone_contains(&z, &vec(&[1.0]), &vec(&[7.0]))
            .unwrap());
        assert!(g
            .critical_cone_contains(&z, &vec(&[1.0]), &vec(&[-7.0]))
            .unwrap());
        // Kink, extreme subgradient v = 1: cone is ℝ₊.
        let z = vec(&[0.0]);
        assert!(g
            .critical_cone_contains(&z, &vec(&[1.0]), &vec(&[1.0]))
            .unwrap());
        assert!(!g
            .critical_cone_contains(&z, &vec(&[1.0]), &vec(&[-1.0]))
            .unwrap());
        // Kink, interior subgradient v = 0.5: cone is {0}.
        assert!(g
            .critical_cone_contains(&z, &vec(&[0.5]), &vec(&[0.0]))
            .unwrap());
        assert!(!g
            .critical_cone_contains(&z, &vec(&[0.5]), &vec(&[1.0]))
            .unwrap());
    }

    #[test]
    fn critical_cone_rejects_non_subgradient() {
        let g = abs_value();
        assert!(matches!(
            g.critical_cone_contains(&vec(&[0.0]), &vec(&[2.0]), &vec(&[1.0])),
            Err(Error::NotASubgradient)
        ));
    }

    #[test]
    fn second_subderivative_of_abs() {
        let g = abs_value();
        let z = vec(&[0.0]);
        assert_abs_diff_eq!(
            g.second_subderivative(&z, &vec(&[1.0]), &vec(&[1.0]))
                .unwrap(),
            0.0
        );
        assert!(g
            .second_subderivative(&z, &vec(&[0.5]), &vec(&[1.0]))
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn second_subderivative_of_smooth_quadratic() {
        let g =
            one_piece_quadratic(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 0.0).unwrap();
        let z = vec(&[3.0]);
        assert_abs_diff_eq!(
            g.second_subderivative(&z, &vec(&[6.0]), &vec(&[1.0]))
                .unwrap(),
            2.0
        );
    }

    #[test]
    fn subdifferential_polyhedron_of_abs_at_kink() {
        let g = abs_value();
        let p = g.subdifferential_polyhedron(&vec(&[0.0])).unwrap();
        assert!(p.contains(&vec(&[0.9])));
        assert!(p.contains(&vec(&[-1.0])));
        assert!(!p.contains(&vec(&[1.1])));
    }

    #[test]
    fn convexity_probe_accepts_abs_rejects_concave_kink() {
        assert!(abs_value().convexity_probe(100, 7).unwrap());
        // z² on ℝ₋ glued to −z on ℝ₊: nonconvex at 0.
        let neg = Polyhedron::new(1, vec![(vec(&[1.0]), 0.0)], vec![]).unwrap();
        let pos = Polyhedron::new(1, vec![(vec(&[-1.0]), 0.0)], vec![]).unwrap();
        let bad = PlqFunction::new(vec![
            PlqPiece::new(
                neg,
                DMatrix::from_element(1, 1, 2.0),
                DVector::zeros(1),
                0.0,
            )
            .unwrap(),
            PlqPiece::new(pos, DMatrix::zeros(1, 1), vec(&[-1.0]), 0.0).unwrap(),
        ])
        .unwrap();
        assert!(!bad.convexity_probe(200, 7).unwrap());
    }

    #[test]
    fn l1_matches_sum_of_abs() {
        let g = l1_norm(3);
        let z = vec(&[1.0, -2.0, 0.5]);
        assert_abs_diff_eq!(g.eval(&z).unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn max_and_linf_eval() {
        let g = max_of_coords(3);
        assert_abs_diff_eq!(g.eval(&vec(&[1.0, 3.0, -2.0])).unwrap(), 3.0);
        let g = linf_norm(2);
        assert_abs_diff_eq!(g.eval(&vec(&[1.0, -3.0])).unwrap(), 3.0);
    }

    #[test]
    fn product_is_separable_sum() {
        let g = product(&abs_value(), &abs_value()).unwrap();
        assert_abs_diff_eq!(g.eval(&vec(&[2.0, -3.0])).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn difference_quotient_matches_formula() {
        let g = abs_value();
        let z = vec(&[0.0]);
        let v = vec(&[1.0]);
        let w = vec(&[1.0]);
        let d2 = g.second_subderivative(&z, &v, &w).unwrap();
        for t in [1e-3, 1e-4, 1e-5] {
            let dq = second_difference_quotient(&g, &z, &v, &w, t).unwrap();
            assert_abs_diff_eq!(dq, d2, epsilon = 1e-6);
        }
    }
}
