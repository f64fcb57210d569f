//! Polyhedral sets in halfspace form, their tangent/normal cones, and exact
//! Euclidean projection by active-set enumeration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qp::{self, ENUM_CAP};

/// Tolerance for detecting an active constraint |⟨c, z⟩ − α| ≤ ACTIVE_TOL.
/// Cone generator description: (orthonormal lineality basis, unit extreme rays).
pub type ConeGenerators = (Vec<DVector<f64>>, Vec<DVector<f64>>);

pub const ACTIVE_TOL: f64 = 1e-9;
/// Membership slack for `contains`.
pub const FEAS_TOL: f64 = 1e-9;

/// One linear constraint ⟨normal, z⟩ ≤ offset (inequality) or = offset (equality).
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

/// A polyhedral convex set { z : ⟨c_j, z⟩ ≤ α_j, ⟨d_j, z⟩ = β_j }.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    ineqs: Vec<Halfspace>,
    eqs: Vec<Halfspace>,
    dim: usize,
}

impl Polyhedron {
    pub fn new(
        dim: usize,
        ineqs: Vec<(DVector<f64>, f64)>,
        eqs: Vec<(DVector<f64>, f64)>,
    ) -> Result<Self> {
        for (normal, _) in ineqs.iter().chain(eqs.iter()) {
            if normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: normal.len(),
                });
            }
        }
        let to_hs = |(normal, offset)| Halfspace { normal, offset };
        Ok(Polyhedron {
            ineqs: ineqs.into_iter().map(to_hs).collect(),
            eqs: eqs.into_iter().map(to_hs).collect(),
            dim,
        })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron {
            ineqs: vec![],
            eqs: vec![],
            dim,
        }
    }

    /// The singleton {z}.
    pub fn singleton(z: &DVector<f64>) -> Self {
        let dim = z.len();
        let eqs = (0..dim)
            .map(|i| {
                let mut e = DVector::zeros(dim);
                e[i] = 1.0;
                Halfspace {
                    normal: e,
                    offset: z[i],
                }
            })
            .collect();
        Polyhedron {
            ineqs: vec![],
            eqs,
            dim,
        }
    }

    /// {0}^s × ℝ₋^{m−s}: the first `s` coordinates pinned to zero, the rest
    /// nonpositive.
    pub fn orthant(s: usize, m: usize) -> Self {
        let mut ineqs = vec![];
        let mut eqs = vec![];
        for i in 0..m {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            if i < s {
                eqs.push(Halfspace {
                    normal: e,
                    offset: 0.0,
                });
            } else {
                ineqs.push(Halfspace {
                    normal: e,
                    offset: 0.0,
                });
            }
        }
        Polyhedron { ineqs, eqs, dim: m }
    }

    /// The box Π [lo_i, hi_i].
    pub fn bounded_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        let dim = lo.len();
        let mut ineqs = vec![];
        for i in 0..dim {
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            ineqs.push(Halfspace {
                normal: e.clone(),
                offset: hi[i],
            });
            ineqs.push(Halfspace {
                normal: -e,
                offset: -lo[i],
            });
        }
        Polyhedron {
            ineqs,
            eqs: vec![],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineqs(&self) -> &[Halfspace] {
        &self.ineqs
    }

    pub fn eqs(&self) -> &[Halfspace] {
        &self.eqs
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        self.contains_within(z, FEAS_TOL)
    }

    pub fn contains_within(&self, z: &DVector<f64>, tol: f64) -> bool {
        if z.len() != self.dim {
            return false;
        }
        self.ineqs.iter().all(|c| c.normal.dot(z) <= c.offset + tol)
            && self
                .eqs
                .iter()
                .all(|e| (e.normal.dot(z) - e.offset).abs() <= tol)
    }

    /// Indices of inequalities active at z.
    pub fn active_ineqs(&self, z: &DVector<f64>) -> Vec<usize> {
        self.ineqs
            .iter()
            .enumerate()
            .filter(|(_, c)| (c.normal.dot(z) - c.offset).abs() <= ACTIVE_TOL)
            .map(|(j, _)| j)
            .collect()
    }

    /// Tangent cone T_C(z): active inequalities and all equalities, homogenized.
    pub fn tangent_cone(&self, z: &DVector<f64>) -> Result<ConeRep> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain);
        }
        let ineqs = self
            .active_ineqs(z)
            .into_iter()
            .map(|j| Halfspace {
                normal: self.ineqs[j].normal.clone(),
                offset: 0.0,
            })
            .collect();
        let eqs = self
            .eqs
            .iter()
            .map(|e| Halfspace {
                normal: e.normal.clone(),
                offset: 0.0,
            })
            .collect();
        Ok(ConeRep(Polyhedron {
            ineqs,
            eqs,
            dim: self.dim,
        }))
    }

    /// Critical cone K_C(z, u) = T_C(z) ∩ [u]^⊥.
    pub fn critical_cone(&self, z: &DVector<f64>, u: &DVector<f64>) -> Result<ConeRep> {
        let mut cone = self.tangent_cone(z)?;
        if u.norm() > ACTIVE_TOL {
            cone.0.eqs.push(Halfspace {
                normal: u.clone(),
                offset: 0.0,
            });
        }
        Ok(cone)
    }

    /// Tests v ∈ N_C(z) by fitting v as a nonnegative combination of active
    /// inequality normals plus a span of equality normals; true when the fit
    /// residual is ≤ tol.
    pub fn normal_cone_contains(
        &self,
        z: &DVector<f64>,
        v: &DVector<f64>,
        tol: f64,
    ) -> Result<bool> {
        Ok(self.normal_cone_distance(z, v)? <= tol)
    }

    /// Distance from v to N_C(z).
    pub fn normal_cone_distance(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain);
        }
        let eq_basis = orthonormal_span(self.eqs.iter().map(|e| &e.normal), self.dim);
        let strip = |w: &DVector<f64>| {
            let mut out = w.clone();
            for b in &eq_basis {
                let t = b.dot(w);
                out -= b * t;
            }
            out
        };
        let v_perp = strip(v);
        let cols: Vec<DVector<f64>> = self
            .active_ineqs(z)
            .into_iter()
            .map(|j| strip(&self.ineqs[j].normal))
            .collect();
        if cols.is_empty() {
            return Ok(v_perp.norm());
        }
        let a = DMatrix::from_columns(&cols);
        let (_, residual) = nnls(&a, &v_perp);
        Ok(residual)
    }

    /// Exact Euclidean projection onto the polyhedron.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if self.contains(z) {
            return Ok(z.clone());
        }
        let identity = DMatrix::identity(self.dim, self.dim);
        let sol = qp::solve_qp(&identity, &(-z), self)?;
        Ok(sol.point)
    }

    /// Distance from z to the polyhedron.
    pub fn distance(&self, z: &DVector<f64>) -> Result<f64> {
        Ok((self.project(z)? - z).norm())
    }
}

/// A polyhedral cone: a `Polyhedron` whose constraint system is homogeneous.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeRep(Polyhedron);

impl ConeRep {
    pub fn new(poly: Polyhedron) -> Result<Self> {
        if poly
            .ineqs
            .iter()
            .chain(poly.eqs.iter())
            .any(|h| h.offset != 0.0)
        {
            return Err(Error::InvalidInput(
                "cone representation requires zero offsets".into(),
            ));
        }
        Ok(ConeRep(poly))
    }

    pub fn whole_space(dim: usize) -> Self {
        ConeRep(Polyhedron::whole_space(dim))
    }

    pub fn as_polyhedron(&self) -> &Polyhedron {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn contains(&self, w: &DVector<f64>) -> bool {
        self.0.contains(w)
    }

    pub fn contains_within(&self, w: &DVector<f64>, tol: f64) -> bool {
        self.0.contains_within(w, tol)
    }

    /// Lineality space {w : Gw = 0, Ew = 0} as an orthonormal basis.
    pub fn lineality_basis(&self) -> Vec<DVector<f64>> {
        let rows: Vec<&DVector<f64>> = self
            .0
            .ineqs
            .iter()
            .chain(self.0.eqs.iter())
            .map(|h| &h.normal)
            .collect();
        null_space_of_rows(&rows, self.0.dim)
    }

    /// Generator description: orthonormal lineality basis plus unit extreme
    /// rays (modulo lineality). Exact for small constraint systems.
    pub fn generators(&self) -> Result<ConeGenerators> {
        let dim = self.0.dim;
        let lineality = self.lineality_basis();
        if lineality.len() == dim {
            return Ok((lineality, vec![]));
        }
        let n_ineq = self.0.ineqs.len();
        if n_ineq >= usize::BITS as usize || (1usize << n_ineq) > ENUM_CAP {
            return Err(Error::EnumerationCap {
                subsets: usize::MAX,
                cap: ENUM_CAP,
            });
        }
        let eq_rows: Vec<&DVector<f64>> = self.0.eqs.iter().map(|h| &h.normal).collect();
        let mut rays: Vec<DVector<f64>> = vec![];
        for mask in 0..(1usize << n_ineq) {
            let mut rows = eq_rows.clone();
            for (j, c) in self.0.ineqs.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    rows.push(&c.normal);
                }
            }
            let null = null_space_of_rows(&rows, dim);
            if null.len() != lineality.len() + 1 {
                continue;
            }
            // Direction in the null space orthogonal to the lineality space.
            let mut dir = None;
            for cand in &null {
                let mut w = cand.clone();
                for b in &lineality {
                    let t = b.dot(cand);
                    w -= b * t;
                }
                if w.norm() > 1e-8 {
                    dir = Some(w.normalize());
                    break;
                }
            }
            let Some(w) = dir else { continue };
            for signed in [w.clone(), -w] {
                if self.contains_within(&signed, 1e-9)
                    && !rays.iter().any(|r| (r - &signed).norm() < 1e-7)
                {
                    rays.push(signed);
                }
            }
        }
        Ok((lineality, rays))
    }
}

/// Orthonormal basis of span of the given vectors.
pub fn orthonormal_span<'a, I>(vectors: I, dim: usize) -> Vec<DVector<f64>>
where
    I: Iterator<Item = &'a DVector<f64>>,
{
    let mut basis: Vec<DVector<f64>> = vec![];
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let t = b.dot(v);
            w -= b * t;
        }
        if w.norm() > 1e-10 {
            basis.push(w.normalize());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}

/// Orthonormal basis of the common null space of the given row vectors.
pub fn null_space_of_rows(rows: &[&DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    if rows.is_empty() {
        return (0..dim)
            .map(|i| {
                let mut e = DVector::zeros(dim);
                e[i] = 1.0;
                e
            })
            .collect();
    }
    // Padded to at least dim rows so the thin SVD exposes the full V factor.
    let mut a = DMatrix::zeros(rows.len().max(dim), dim);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..dim {
            a[(i, j)] = r[j];
        }
    }
    let scale = a.norm().max(1.0);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut basis = vec![];
    for i in 0..dim {
        let sigma = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if sigma <= 1e-10 * scale {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Lawson–Hanson nonnegative least squares: min ‖Ax − b‖ with x ≥ 0.
/// Returns the solution and the residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_iter = 4 * n.max(8);

    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if !passive[j] && w[j] > 1e-12 && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((j_star, _)) = best else { break };
        passive[j_star] = true;

        loop {
            let s = ls_on_passive(a, b, &passive);
            let mut alpha = 1.0f64;
            let mut blocked = false;
            for j in 0..n {
                if passive[j] && s[j] <= 1e-14 {
                    let denom = x[j] - s[j];
                    if denom.abs() > 1e-300 {
                        let t = x[j] / denom;
                        if t < alpha {
                            alpha = t;
                            blocked = true;
                        }
                    }
                }
            }
            if !blocked {
                x = s;
                break;
            }
            for j in 0..n {
                if passive[j] {
                    x[j] += alpha * (s[j] - x[j]);
                    if x[j] <= 1e-14 {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
            }
        }
    }
    let residual = (b - a * &x).norm();
    (x, residual)
}

fn ls_on_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let mut s = DVector::zeros(a.ncols());
    if cols.is_empty() {
        return s;
    }
    let sub = a.select_columns(cols.iter());
    let svd = sub.svd(true, true);
    if let Ok(sol) = svd.solve(b, 1e-12) {
        for (k, &j) in cols.iter().enumerate() {
            s[j] = sol[k];
        }
    }
    s
}
