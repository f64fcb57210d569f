//! The composite problem model: smooth oracles, the affine constraint set,
//! Lagrangian and augmented Lagrangian values and gradients, the KKT residual,
//! and distances to the multiplier set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::inner::kernel_basis;
use crate::outer::OuterFunction;
use crate::poly::Polyhedron;

/// Feasibility tolerance on ‖Bx − b‖ for residual evaluation.
pub const THETA_FEAS_TOL: f64 = 1e-8;

/// Twice continuously differentiable problem data: φ and Φ with first and
/// second derivatives. Implementations must be reentrant.
pub trait SmoothOracle: Send + Sync {
    fn dim_n(&self) -> usize;
    fn dim_m(&self) -> usize;
    fn eval_phi(&self, x: &DVector<f64>) -> f64;
    fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hess_phi(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Φ(x) ∈ ℝᵐ.
    fn eval_map(&self, x: &DVector<f64>) -> DVector<f64>;
    /// ∇Φ(x), m×n.
    fn jac_map(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Σ_i μ_i ∇²Φ_i(x), n×n.
    fn hess_map_contract(&self, x: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64>;

    /// Schema serialization hook: the quadratic data when this oracle is
    /// schema-representable.
    fn as_quadratic(&self) -> Option<&QuadraticOracle> {
        None
    }
}

/// φ or a component of Φ as ½⟨Qx, x⟩ + ⟨q, x⟩ + c.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub quad: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn affine(lin: DVector<f64>, constant: f64) -> Self {
        let n = lin.len();
        QuadraticForm {
            quad: DMatrix::zeros(n, n),
            lin,
            constant,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.quad * x).dot(x) + self.lin.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.quad * x + &self.lin
    }
}

/// Oracle for quadratic φ and quadratic/affine Φ components; derivatives are
/// exact.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    pub phi: QuadraticForm,
    pub components: Vec<QuadraticForm>,
}

impl QuadraticOracle {
    pub fn new(phi: QuadraticForm, components: Vec<QuadraticForm>) -> Result<Self> {
        let n = phi.lin.len();
        for c in &components {
            if c.lin.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.lin.len(),
                });
            }
        }
        Ok(QuadraticOracle { phi, components })
    }
}

impl SmoothOracle for QuadraticOracle {
    fn dim_n(&self) -> usize {
        self.phi.lin.len()
    }

    fn dim_m(&self) -> usize {
        self.components.len()
    }

    fn eval_phi(&self, x: &DVector<f64>) -> f64 {
        self.phi.value(x)
    }

    fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64> {
        self.phi.gradient(x)
    }

    fn hess_phi(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.phi.quad.clone()
    }

    fn eval_map(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.components.len(), |i, _| self.components[i].value(x))
    }

    fn jac_map(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim_n();
        let m = self.dim_m();
        let mut jac = DMatrix::zeros(m, n);
        for (i, c) in self.components.iter().enumerate() {
            let g = c.gradient(x);
            for j in 0..n {
                jac[(i, j)] = g[j];
            }
        }
        jac
    }

    fn hess_map_contract(&self, _x: &DVector<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim_n();
        let mut h = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            h += &c.quad * mu[i];
        }
        h
    }

    fn as_quadratic(&self) -> Option<&QuadraticOracle> {
        Some(self)
    }
}

/// The affine constraint Θ = { x : Bx = b }, with a precomputed feasibility
/// witness and orthonormal kernel basis.
#[derive(Debug, Clone)]
pub struct AffineSet {
    b_mat: DMatrix<f64>,
    b_vec: DVector<f64>,
    witness: DVector<f64>,
    kernel: DMatrix<f64>,
}

impl AffineSet {
    pub fn new(b_mat: DMatrix<f64>, b_vec: DVector<f64>) -> Result<Self> {
        let n = b_mat.ncols();
        if b_vec.len() != b_mat.nrows() {
            return Err(Error::DimensionMismatch {
                expected: b_mat.nrows(),
                got: b_vec.len(),
            });
        }
        let witness = if b_mat.nrows() == 0 {
            DVector::zeros(n)
        } else {
            let svd = b_mat.clone().svd(true, true);
            svd.solve(&b_vec, 1e-12).map_err(|_| Error::Infeasible)?
        };
        if b_mat.nrows() > 0 && (&b_mat * &witness - &b_vec).norm() > 1e-10 {
            return Err(Error::Infeasible);
        }
        let kernel = kernel_basis(&b_mat, n);
        Ok(AffineSet {
            b_mat,
            b_vec,
            witness,
            kernel,
        })
    }

    /// Θ = ℝⁿ.
    pub fn whole_space(n: usize) -> Self {
        AffineSet {
            b_mat: DMatrix::zeros(0, n),
            b_vec: DVector::zeros(0),
            witness: DVector::zeros(n),
            kernel: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.b_mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b_mat
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b_vec
    }

    pub fn witness(&self) -> &DVector<f64> {
        &self.witness
    }

    /// Orthonormal basis Z of ker B (n×k).
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        if self.b_mat.nrows() == 0 {
            0.0
        } else {
            (&self.b_mat * x - &self.b_vec).norm()
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.violation(x) <= THETA_FEAS_TOL
    }

    /// dist(v, rge B*) = ‖Zᵀv‖ (N_Θ = rge B* along Θ).
    pub fn dist_to_range_bstar(&self, v: &DVector<f64>) -> f64 {
        (self.kernel.transpose() * v).norm()
    }
}

/// A known stationary point, for benchmarking and diagnostics.
#[derive(Debug, Clone)]
pub struct KnownSolution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    /// Explicit Λ(x̄) when provided; otherwise materialized on demand.
    pub multiplier_set: Option<Polyhedron>,
}

/// The composite problem: minimize φ(x) + g(Φ(x)) subject to Bx = b.
pub struct CompositeProblem {
    pub oracle: Box<dyn SmoothOracle>,
    pub g: OuterFunction,
    pub theta: AffineSet,
    pub known_solution: Option<KnownSolution>,
}

/// A primal-dual pair (x, λ).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>) -> Self {
        PrimalDualPoint { x, lambda }
    }
}

impl CompositeProblem {
    pub fn new(
        oracle: Box<dyn SmoothOracle>,
        g: OuterFunction,
        theta: AffineSet,
        known_solution: Option<KnownSolution>,
    ) -> Result<Self> {
        if g.dim() != oracle.dim_m() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim_m(),
                got: g.dim(),
            });
        }
        if theta.dim() != oracle.dim_n() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim_n(),
                got: theta.dim(),
            });
        }
        g.validate()?;
        Ok(CompositeProblem {
            oracle,
            g,
            theta,
            known_solution,
        })
    }

    pub fn dim_n(&self) -> usize {
        self.oracle.dim_n()
    }

    pub fn dim_m(&self) -> usize {
        self.oracle.dim_m()
    }

    /// φ(x) + g(Φ(x)).
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.oracle.eval_phi(x) + self.g.eval(&self.oracle.eval_map(x))?)
    }

    /// L(x, λ) = φ(x) + ⟨Φ(x), λ⟩.
    pub fn lagrangian_value(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
        self.oracle.eval_phi(x) + self.oracle.eval_map(x).dot(lambda)
    }

    /// ∇_x L(x, λ) = ∇φ(x) + ∇Φ(x)*λ.
    pub fn lagrangian_grad_x(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        self.oracle.grad_phi(x) + self.oracle.jac_map(x).transpose() * lambda
    }

    /// ∇²_{xx} L(x, λ).
    pub fn lagrangian_hess_xx(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> DMatrix<f64> {
        self.oracle.hess_phi(x) + self.oracle.hess_map_contract(x, lambda)
    }

    /// 𝓛(x, λ, ρ) = φ(x) + e_{1/ρ}g(Φ(x) + ρ⁻¹λ) − ‖λ‖²/(2ρ).
    pub fn auglag_value(&self, x: &DVector<f64>, lambda: &DVector<f64>, rho: f64) -> Result<f64> {
        let shifted = self.oracle.eval_map(x) + lambda / rho;
        Ok(
            self.oracle.eval_phi(x) + self.g.moreau_env_value(&shifted, rho)?
                - lambda.norm_squared() / (2.0 * rho),
        )
    }

    /// ∇_x 𝓛(x, λ, ρ) = ∇φ(x) + ∇Φ(x)*∇e_{1/ρ}g(Φ(x) + ρ⁻¹λ).
    pub fn auglag_grad_x(
        &self,
        x: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
    ) -> Result<DVector<f64>> {
        let shifted = self.oracle.eval_map(x) + lambda / rho;
        let env_grad = self.g.moreau_env_grad(&shifted, rho)?;
        Ok(self.oracle.grad_phi(x) + self.oracle.jac_map(x).transpose() * env_grad)
    }

    /// ∇_λ 𝓛(x, λ, ρ) = Φ(x) − prox_{g/ρ}(Φ(x) + ρ⁻¹λ).
    pub fn auglag_grad_lambda(
        &self,
        x: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
    ) -> Result<DVector<f64>> {
        let map = self.oracle.eval_map(x);
        let prox = self.g.prox(&(&map + lambda / rho), 1.0 / rho)?;
        Ok(map - prox)
    }

    /// KKT residual R(x, λ) = dist(−∇_x L, rge B*) + ‖Φ(x) − prox_g(Φ(x) + λ)‖.
    /// Only defined along Θ-feasible x.
    pub fn kkt_residual(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> Result<f64> {
        let violation = self.theta.violation(x);
        if violation > THETA_FEAS_TOL {
            return Err(Error::InfeasibleForTheta { violation });
        }
        let grad = self.lagrangian_grad_x(x, lambda);
        let map = self.oracle.eval_map(x);
        let prox = self.g.prox(&(&map + lambda), 1.0)?;
        Ok(self.theta.dist_to_range_bstar(&grad) + (map - prox).norm())
    }

    /// Materializes Λ(x̄) = {λ : ∇φ(x̄) + ∇Φ(x̄)*λ ∈ rge B*, λ ∈ ∂g(Φ(x̄))} as a
    /// polyhedron in λ-space. Requires a PLQ view of g.
    pub fn multiplier_set_polyhedron(&self, x_bar: &DVector<f64>) -> Result<Polyhedron> {
        if let Some(known) = &self.known_solution {
            if let Some(set) = &known.multiplier_set {
                if (&known.x - x_bar).norm() <= 1e-12 {
                    return Ok(set.clone());
                }
            }
        }
        let view = self.g.plq_view().ok_or_else(|| {
            Error::InvalidInput("multiplier set needs a PLQ view of the outer function".into())
        })?;
        let map = self.oracle.eval_map(x_bar);
        let sub = view.subdifferential_polyhedron(&map)?;
        let mut ineqs: Vec<(DVector<f64>, f64)> = sub
            .ineqs()
            .iter()
            .map(|h| (h.normal.clone(), h.offset))
            .collect();
        let mut eqs: Vec<(DVector<f64>, f64)> = sub
            .eqs()
            .iter()
            .map(|h| (h.normal.clone(), h.offset))
            .collect();
        // Stationarity: Zᵀ(∇φ + ∇Φ*λ) = 0, linear equalities in λ.
        let grad_phi = self.oracle.grad_phi(x_bar);
        let jac = self.oracle.jac_map(x_bar);
        let z_basis = self.theta.kernel();
        for j in 0..z_basis.ncols() {
            let zj = z_basis.column(j).into_owned();
            let normal = &jac * &zj;
            let offset = -zj.dot(&grad_phi);
            if normal.norm() <= 1e-12 {
                if offset.abs() > 1e-9 {
                    return Err(Error::EmptyMultiplierSet);
                }
                continue;
            }
            eqs.push((normal, offset));
        }
        let _ = &mut ineqs;
        Polyhedron::new(self.dim_m(), ineqs, eqs)
    }

    /// dist(λ, Λ(x̄)) via projection onto the materialized multiplier set.
    pub fn multiplier_set_distance(
        &self,
        x_bar: &DVector<f64>,
        lambda: &DVector<f64>,
    ) -> Result<f64> {
        let set = self.multiplier_set_polyhedron(x_bar)?;
        match set.distance(lambda) {
            Ok(d) => Ok(d),
            Err(Error::Infeasible) => Err(Error::EmptyMultiplierSet),
            Err(e) => Err(e),
        }
    }
}

/// Central finite difference of a scalar function.
pub fn central_diff(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

#[cfg(test)]
pub(crate) fn lasso1d_problem() -> CompositeProblem {
    // φ(x) = ½(x − 3)², Φ(x) = x, g = |·|; solution (x̄, λ̄) = (2, 1).
    let phi = QuadraticForm {
        quad: DMatrix::from_element(1, 1, 1.0),
        lin: DVector::from_element(1, -3.0),
        constant: 4.5,
    };
    let comp = QuadraticForm::affine(DVector::from_element(1, 1.0), 0.0);
    let oracle = QuadraticOracle::new(phi, vec![comp]).unwrap();
    CompositeProblem::new(
        Box::new(oracle),
        OuterFunction::L1 { m: 1 },
        AffineSet::whole_space(1),
        Some(KnownSolution {
            x: DVector::from_element(1, 2.0),
            lambda: DVector::from_element(1, 1.0),
            multiplier_set: None,
        }),
    )
    .unwrap()
}
