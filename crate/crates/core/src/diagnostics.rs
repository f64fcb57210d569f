//! Second-order diagnostics at candidate solutions: KKT verification, the
//! SOSC probe over the cone 𝒟, the second-order epi-derivative of the
//! augmented Lagrangian, a quadratic-growth probe, and empirical error-bound
//! constant fitting.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::Polyhedron;
use crate::problem::CompositeProblem;

/// Verdict band half-width for the SOSC probe.
const SOSC_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoscVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct PieceSoscReport {
    pub piece: usize,
    /// Certified minimum of the quadratic form over the lineality space of
    /// the piece cone (unit sphere), when that subspace is nontrivial.
    pub lineality_min: Option<f64>,
    pub sampled_min: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct SoscReport {
    pub min_value_estimate: f64,
    pub samples_used: usize,
    pub verdict: SoscVerdict,
    pub pieces: Vec<PieceSoscReport>,
    /// Unit direction attaining the reported minimum, when one was found.
    pub witness: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub rho: f64,
    pub gamma: f64,
    /// Largest ℓ with 𝓛(x, λ, ρ) − φ(x̄) − g(Φ(x̄)) ≥ ℓ‖x − x̄‖² over samples.
    pub ell_hat: f64,
    pub violations: usize,
    pub samples_used: usize,
}

/// Tests the KKT system at (x, λ): Θ-feasibility, dist(−∇_xL, rge B*) ≤ tol,
/// and λ ∈ ∂g(Φ(x)).
pub fn check_kkt(
    p: &CompositeProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    if p.theta.violation(x) > tol {
        return Ok(false);
    }
    let grad = p.lagrangian_grad_x(x, lambda);
    if p.theta.dist_to_range_bstar(&grad) > tol {
        return Ok(false);
    }
    let map = p.oracle.eval_map(x);
    match p.g.plq_view() {
        Some(view) => match view.subdifferential_contains(&map, lambda, tol) {
            Ok(inside) => Ok(inside),
            Err(Error::OutsideDomain) => Ok(false),
            Err(e) => Err(e),
        },
        // No PLQ view: fall back to the prox fixed-point gap.
        None => Ok((&map - p.g.prox(&(&map + lambda), 1.0)?).norm() <= tol),
    }
}

/// Builds the piece cone 𝒟_i = { w : Bw = 0, ∇Φ(x̄)w ∈ K_{C_i} } in w-space.
fn compose_cone(
    piece_cone: &Polyhedron,
    jac: &DMatrix<f64>,
    b_mat: &DMatrix<f64>,
) -> Result<Polyhedron> {
    let n = jac.ncols();
    let mut ineqs = vec![];
    let mut eqs = vec![];
    for h in piece_cone.ineqs() {
        let normal = jac.transpose() * &h.normal;
        if normal.norm() > 1e-14 {
            ineqs.push((normal, 0.0));
        }
    }
    for h in piece_cone.eqs() {
        let normal = jac.transpose() * &h.normal;
        if normal.norm() > 1e-14 {
            eqs.push((normal, 0.0));
        }
    }
    for r in 0..b_mat.nrows() {
        let row = b_mat.row(r).transpose();
        if row.norm() > 1e-14 {
            eqs.push((row, 0.0));
        }
    }
    Polyhedron::new(n, ineqs, eqs)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0_f64);
    let u2: f64 = rng.gen_range(0.0..1.0_f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform sample of the closed ball of the given radius.
fn ball_sample(rng: &mut impl Rng, dim: usize, radius: f64) -> DVector<f64> {
    if dim == 0 {
        return DVector::zeros(0);
    }
    let dir = DVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = dir.norm();
    if norm <= 1e-14 {
        return DVector::zeros(dim);
    }
    let scale = radius * rng.gen_range(0.0..1.0_f64).powf(1.0 / dim as f64);
    dir * (scale / norm)
}

/// Probes the SOSC quadratic form Q(w) = ⟨∇²_{xx}L w, w⟩ + d²g(Φ(x̄), λ̄)(∇Φw)
/// over 𝒟 ∩ unit sphere: exact eigen-analysis on each piece cone's lineality
/// space plus seeded random rays for the conic part.
pub fn sosc_probe(
    p: &CompositeProblem,
    x_bar: &DVector<f64>,
    lambda_bar: &DVector<f64>,
    samples_per_piece: usize,
    seed: u64,
) -> Result<SoscReport> {
    if !check_kkt(p, x_bar, lambda_bar, 1e-7)? {
        return Err(Error::InvalidInput("sosc probe needs a KKT pair".into()));
    }
    let view = p.g.plq_view().ok_or_else(|| {
        Error::InvalidInput("sosc probe needs a PLQ view of the outer function".into())
    })?;
    let map = p.oracle.eval_map(x_bar);
    let jac = p.oracle.jac_map(x_bar);
    let hess = p.lagrangian_hess_xx(x_bar, lambda_bar);
    let n = p.dim_n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut min_value = f64::INFINITY;
    let mut witness: Option<DVector<f64>> = None;
    let mut pieces = Vec::new();
    let mut samples_used = 0usize;

    for i in view.active_pieces(&map)? {
        let piece_cone = view.piece_critical_cone(i, &map, lambda_bar)?;
        let cone_w = compose_cone(piece_cone.as_polyhedron(), &jac, p.theta.matrix())?;
        let a_i = &view.pieces()[i].quad;
        let m_form = &hess + jac.transpose() * a_i * &jac;
        let quad = |w: &DVector<f64>| (&m_form * w).dot(w);

        // Exact minimum over the lineality space of the cone.
        let rows: Vec<&DVector<f64>> = cone_w
            .ineqs()
            .iter()
            .chain(cone_w.eqs().iter())
            .map(|h| &h.normal)
            .collect();
        let lin_basis = crate::poly::null_space_of_rows(&rows, n);
        let lineality_min = if lin_basis.is_empty() {
            None
        } else {
            let mut z = DMatrix::zeros(n, lin_basis.len());
            for (j, v) in lin_basis.iter().enumerate() {
                z.set_column(j, v);
            }
            let reduced = z.transpose() * &m_form * &z;
            let sym = (&reduced + reduced.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let (mut best, mut best_j) = (f64::INFINITY, 0);
            for j in 0..eig.eigenvalues.len() {
                if eig.eigenvalues[j] < best {
                    best = eig.eigenvalues[j];
                    best_j = j;
                }
            }
            if best < min_value {
                min_value = best;
                witness = Some(&z * eig.eigenvectors.column(best_j).into_owned());
            }
            Some(best)
        };

        // Extreme rays, then random projections onto the cone.
        let mut candidates: Vec<DVector<f64>> = Vec::new();
        if let Ok((_, rays)) =
            crate::poly::ConeRep::new(cone_w.clone()).and_then(|c| c.generators())
        {
            candidates.extend(rays);
        }
        for _ in 0..samples_per_piece {
            let raw = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0_f64));
            candidates.push(cone_w.project(&raw)?);
        }
        let mut sampled_min = None;
        let mut count = 0usize;
        for c in candidates {
            let norm = c.norm();
            if norm <= 1e-10 {
                continue;
            }
            let w = c / norm;
            let value = quad(&w);
            count += 1;
            if sampled_min.is_none_or(|m| value < m) {
                sampled_min = Some(value);
            }
            if value < min_value {
                min_value = value;
                witness = Some(w);
            }
        }
        samples_used += count;
        pieces.push(PieceSoscReport {
            piece: i,
            lineality_min,
            sampled_min,
            samples: count,
        });
    }

    let verdict = if min_value > SOSC_BAND {
        SoscVerdict::Holds
    } else if min_value < -SOSC_BAND {
        SoscVerdict::Fails
    } else {
        SoscVerdict::Inconclusive
    };
    Ok(SoscReport {
        min_value_estimate: min_value,
        samples_used,
        verdict,
        pieces,
        witness,
    })
}

/// Second-order epi-derivative of the augmented Lagrangian in direction w:
/// ⟨∇²_{xx}L(x̄,λ̄)w, w⟩ + e_{1/2ρ}(d²g(Φ(x̄),λ̄))(∇Φ(x̄)w), with the envelope
/// term computed as the min over eligible pieces of a cone-constrained QP.
pub fn aug_epi_d2(
    p: &CompositeProblem,
    x_bar: &DVector<f64>,
    lambda_bar: &DVector<f64>,
    rho: f64,
    w: &DVector<f64>,
) -> Result<f64> {
    if !check_kkt(p, x_bar, lambda_bar, 1e-7)? {
        return Err(Error::InvalidInput("aug_epi_d2 needs a KKT pair".into()));
    }
    let view = p.g.plq_view().ok_or_else(|| {
        Error::InvalidInput("aug_epi_d2 needs a PLQ view of the outer function".into())
    })?;
    let map = p.oracle.eval_map(x_bar);
    let jac = p.oracle.jac_map(x_bar);
    let hess = p.lagrangian_hess_xx(x_bar, lambda_bar);
    let jw = &jac * w;
    let m = p.dim_m();

    let mut envelope = f64::INFINITY;
    for i in view.active_pieces(&map)? {
        let cone = view.piece_critical_cone(i, &map, lambda_bar)?;
        let a_i = &view.pieces()[i].quad;
        // min_{v ∈ K_i} ⟨A_i v, v⟩ + ρ‖v − ∇Φw‖².
        let pmat = a_i * 2.0 + DMatrix::identity(m, m) * (2.0 * rho);
        let q = -&jw * (2.0 * rho);
        let sol = crate::qp::solve_qp(&pmat, &q, cone.as_polyhedron())?;
        let value = sol.value + rho * jw.norm_squared();
        if value < envelope {
            envelope = value;
        }
    }
    Ok((&hess * w).dot(w) + envelope)
}

/// Samples 𝔹_γ(x̄) ∩ Θ and measures the quadratic growth of 𝓛(·, λ, ρ) above
/// the optimal value φ(x̄) + g(Φ(x̄)).
pub fn growth_probe(
    p: &CompositeProblem,
    x_bar: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if !check_kkt(p, x_bar, lambda, 1e-7)? {
        return Err(Error::NotASubgradient);
    }
    let base = p.objective(x_bar)?;
    let z_basis = p.theta.kernel();
    let k = z_basis.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut ell_hat = f64::INFINITY;
    let mut violations = 0usize;
    let mut used = 0usize;
    for _ in 0..samples {
        let u = ball_sample(&mut rng, k, gamma);
        let x = x_bar + z_basis * u;
        let dist = (&x - x_bar).norm();
        if dist < 1e-10 {
            continue;
        }
        used += 1;
        let numerator = p.auglag_value(&x, lambda, rho)? - base;
        if numerator < -1e-10 {
            violations += 1;
        }
        let ratio = numerator / (dist * dist);
        if ratio < ell_hat {
            ell_hat = ratio;
        }
    }
    if used == 0 {
        return Err(Error::DegenerateSamples);
    }
    Ok(GrowthReport {
        rho,
        gamma,
        ell_hat,
        violations,
        samples_used: used,
    })
}

/// Fits the KKT error-bound constant: max over sampled Θ-feasible (x, λ) near
/// (x̄, λ_ref) of (‖x − x̄‖ + dist(λ, Λ(x̄)))/R(x, λ), skipping draws with
/// R < 1e-12.
pub fn fit_error_bound_constant(
    p: &CompositeProblem,
    x_bar: &DVector<f64>,
    lambda_ref: &DVector<f64>,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let multiplier_set = p.multiplier_set_polyhedron(x_bar)?;
    let z_basis = p.theta.kernel();
    let k = z_basis.ncols();
    let m = p.dim_m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut kappa: Option<f64> = None;
    for _ in 0..samples {
        let x = x_bar + z_basis * ball_sample(&mut rng, k, radius);
        let lambda = lambda_ref + ball_sample(&mut rng, m, radius);
        let r = p.kkt_residual(&x, &lambda)?;
        if r < 1e-12 {
            continue;
        }
        let num = (&x - x_bar).norm() + multiplier_set.distance(&lambda)?;
        let ratio = num / r;
        kappa = Some(kappa.map_or(ratio, |v: f64| v.max(ratio)));
    }
    kappa.ok_or(Error::DegenerateSamples)
}
