//! End-to-end acceptance checks. Each test prints a single pass/fail line;
//! tolerances are pinned inline.

use almkit::alm::{alm_solve, AlmConfig, PenaltyRule, RunReport, RunStatus};
use almkit::diagnostics::{fit_error_bound_constant, growth_probe};
use almkit::harness::builtin;
use almkit::outer::{prox_generic_plq, OuterFunction};
use almkit::plq::second_difference_quotient;
use almkit::poly::Polyhedron;
use almkit::problem::{CompositeProblem, PrimalDualPoint};
use almkit::qp::solve_qp;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn vec(d: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(d)
}

fn verdict(name: &str, ok: bool) {
    println!("acceptance {}: {}", name, if ok { "pass" } else { "FAIL" });
    assert!(ok, "acceptance {} failed", name);
}

/// Catalog entries that expose a PLQ view at small dimension.
fn viewed_catalog() -> Vec<(&'static str, OuterFunction)> {
    let elq_set =
        Polyhedron::new(1, vec![(vec(&[-1.0]), 0.0), (vec(&[1.0]), 1.0)], vec![]).unwrap();
    vec![
        ("orthant", OuterFunction::Orthant { s: 1, m: 3 }),
        ("max", OuterFunction::Max { m: 3 }),
        ("l1", OuterFunction::L1 { m: 3 }),
        ("linf", OuterFunction::LInf { m: 3 }),
        (
            "elq",
            OuterFunction::ExtendedLq {
                bmat: DMatrix::from_element(1, 1, 2.0),
                set: elq_set,
            },
        ),
        (
            "sum",
            OuterFunction::SeparableSum {
                blocks: vec![OuterFunction::L1 { m: 1 }, OuterFunction::Max { m: 2 }],
            },
        ),
    ]
}

#[test]
fn criterion_01_prox_oracle_equivalence() {
    let started = Instant::now();
    let mut ok = true;
    for (name, g) in viewed_catalog() {
        let view = g.plq_view().expect(name);
        let m = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let z = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0_f64));
            let r = rng.gen_range(0.2..2.0_f64);
            let specialized = g.prox(&z, r).unwrap();
            let generic = prox_generic_plq(&view, &z, r).unwrap();
            if (&specialized - &generic).norm() > 1e-6 {
                eprintln!("{}: prox mismatch at z={:?} r={}", name, z.as_slice(), r);
                ok = false;
            }
        }
    }
    ok &= started.elapsed().as_secs() < 60;
    verdict("1 (prox oracle equivalence)", ok);
}

#[test]
fn criterion_02_envelope_calculus() {
    let mut ok = true;
    // Envelope gradient vs central differences, h = 1e-5, rel err <= 1e-4.
    for (name, g) in viewed_catalog() {
        let m = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0_f64));
            let rho = rng.gen_range(0.5..2.0_f64);
            let grad = g.moreau_env_grad(&z, rho).unwrap();
            let h = 1e-5;
            let fd = DVector::from_fn(m, |i, _| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                (g.moreau_env_value(&zp, rho).unwrap() - g.moreau_env_value(&zm, rho).unwrap())
                    / (2.0 * h)
            });
            if (&grad - &fd).norm() > 1e-4 * (1.0 + grad.norm()) {
                eprintln!(
                    "{}: envelope gradient mismatch at z={:?}",
                    name,
                    z.as_slice()
                );
                ok = false;
            }
        }
    }

    // Moreau identity for extended-LQ: prox_{rg}(z) + r prox_{g*/r}(z/r) = z,
    // residual <= 1e-8 over 50 draws; g* = delta_C + half-quadratic.
    let bmat = DMatrix::from_element(1, 1, 2.0);
    let set = Polyhedron::new(1, vec![(vec(&[-1.0]), 0.0), (vec(&[1.0]), 1.0)], vec![]).unwrap();
    let g = OuterFunction::ExtendedLq {
        bmat: bmat.clone(),
        set: set.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let z = DVector::from_fn(1, |_, _| rng.gen_range(-3.0..3.0_f64));
        let r = rng.gen_range(0.2..2.0_f64);
        let p = g.prox(&z, r).unwrap();
        // prox_{g*/r}(w) = argmin_{y in C} half y'By + (r/2)||y - w||^2.
        let w = &z / r;
        let pmat = &bmat + DMatrix::identity(1, 1) * r;
        let q = -&w * r;
        let y = solve_qp(&pmat, &q, &set).unwrap().point;
        if (&p + &y * r - &z).norm() > 1e-8 {
            eprintln!("moreau identity residual too large at z={:?}", z.as_slice());
            ok = false;
        }
    }

    // Prox optimality inclusion (z - p)/r in dg(p), residual <= 1e-8.
    for (name, g) in viewed_catalog() {
        let view = g.plq_view().unwrap();
        let m = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let z = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0_f64));
            let r = rng.gen_range(0.2..2.0_f64);
            let p = g.prox(&z, r).unwrap();
            let v = (&z - &p) / r;
            if !view.subdifferential_contains(&p, &v, 1e-8).unwrap() {
                eprintln!(
                    "{}: prox optimality inclusion fails at z={:?}",
                    name,
                    z.as_slice()
                );
                ok = false;
            }
        }
    }
    verdict("2 (envelope calculus)", ok);
}

#[test]
fn criterion_03_second_subderivative_quotients() {
    let mut ok = true;
    let gs: Vec<OuterFunction> = [
        "lasso1d",
        "degen2d",
        "minimax1d",
        "affine_l1",
        "elq1",
        "sosc_fail",
    ]
    .iter()
    .map(|id| builtin(id).unwrap().g)
    .collect();
    for g in gs {
        let view = match g.plq_view() {
            Some(v) => v,
            None => continue,
        };
        let m = g.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 50 && attempts < 5000 {
            attempts += 1;
            let y = DVector::from_fn(m, |_, _| rng.gen_range(-2.0..2.0_f64));
            let z = g.prox(&y, 1.0).unwrap();
            // Skip draws too close to (but not on) a piece boundary: the
            // quotient would straddle pieces at the largest t.
            let mut near_boundary = false;
            for piece in view.pieces() {
                for h in piece.set.ineqs() {
                    let margin = (h.normal.dot(&z) - h.offset).abs();
                    if margin > 1e-9 && margin < 1e-2 {
                        near_boundary = true;
                    }
                }
            }
            if near_boundary {
                continue;
            }
            let v = &y - &z;
            let w = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0_f64));
            if w.norm() < 0.1 {
                continue;
            }
            let d2 = match view.second_subderivative(&z, &v, &w) {
                Ok(d) => d,
                Err(_) => continue,
            };
            if !d2.is_finite() {
                // Keep only clearly non-critical directions: either the ray
                // leaves the domain, or the first-order gap g'(z; w) − ⟨v, w⟩
                // is bounded away from zero so the quotient blows up at t=1e-4.
                let tiny = 1e-6;
                let ahead = view.eval(&(&z + &w * tiny)).unwrap();
                if ahead.is_finite() {
                    let gap = (ahead - view.eval(&z).unwrap()) / tiny - v.dot(&w);
                    if gap < 0.1 {
                        continue;
                    }
                }
            }
            accepted += 1;
            if d2.is_finite() {
                for t in [1e-3, 1e-4, 1e-5] {
                    let quot = second_difference_quotient(&view, &z, &v, &w, t).unwrap();
                    if (quot - d2).abs() > 1e-6 {
                        eprintln!("quotient mismatch: d2={} quot={} t={}", d2, quot, t);
                        ok = false;
                    }
                }
            } else {
                let quot = second_difference_quotient(&view, &z, &v, &w, 1e-4).unwrap();
                if quot.is_nan() || quot < 1e3 {
                    eprintln!("infinite d2 but quotient {} at t=1e-4", quot);
                    ok = false;
                }
            }
        }
        ok &= accepted == 50;
    }
    verdict("3 (second subderivative formula)", ok);
}

#[test]
fn criterion_04_auglag_identities() {
    let mut ok = true;
    for id in [
        "lasso1d",
        "degen2d",
        "minimax1d",
        "affine_l1",
        "elq1",
        "sosc_fail",
    ] {
        let p = builtin(id).unwrap();
        let ks = p.known_solution.as_ref().unwrap();
        let optimal = p.objective(&ks.x).unwrap();
        for rho in [1.0, 10.0, 100.0] {
            // Value identity at the KKT pair.
            let val = p.auglag_value(&ks.x, &ks.lambda, rho).unwrap();
            if (val - optimal).abs() > 1e-8 {
                eprintln!(
                    "{}: value identity off by {:e} at rho={}",
                    id,
                    val - optimal,
                    rho
                );
                ok = false;
            }
            // Gradient identity: augmented and plain Lagrangian gradients agree.
            let ga = p.auglag_grad_x(&ks.x, &ks.lambda, rho).unwrap();
            let gl = p.lagrangian_grad_x(&ks.x, &ks.lambda);
            if (&ga - &gl).norm() > 1e-8 {
                eprintln!("{}: gradient identity fails at rho={}", id, rho);
                ok = false;
            }
        }
        // Monotonicity and concavity in rho at sampled points.
        let z_basis = p.theta.kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = DVector::from_fn(z_basis.ncols(), |_, _| rng.gen_range(-1.0..1.0_f64));
            let x = p.theta.witness() + z_basis * u;
            let lambda = DVector::from_fn(p.dim_m(), |_, _| rng.gen_range(-1.0..1.0_f64));
            let (r1, r2) = (1.0, 10.0);
            let v1 = p.auglag_value(&x, &lambda, r1).unwrap();
            let v2 = p.auglag_value(&x, &lambda, r2).unwrap();
            let vm = p.auglag_value(&x, &lambda, 0.5 * (r1 + r2)).unwrap();
            if v1 > v2 + 1e-10 {
                eprintln!("{}: monotonicity in rho fails", id);
                ok = false;
            }
            if vm < 0.5 * (v1 + v2) - 1e-10 {
                eprintln!("{}: concavity in rho fails", id);
                ok = false;
            }
        }
    }
    verdict("4 (augmented Lagrangian identities)", ok);
}

fn degen2d_run(rule: PenaltyRule, rho0: f64) -> (CompositeProblem, RunReport) {
    let p = builtin("degen2d").unwrap();
    let cfg = AlmConfig {
        rho0,
        rule,
        stop_tol: 1e-11,
        ..AlmConfig::default()
    };
    let start = PrimalDualPoint::new(vec(&[1.0, 1.0]), vec(&[0.0, 0.0]));
    let report = alm_solve(&p, &start, &cfg).unwrap();
    (p, report)
}

#[test]
fn criterion_05_linear_convergence_nonunique_multipliers() {
    let started = Instant::now();
    let (p, report) = degen2d_run(PenaltyRule::Fixed, 100.0);
    let mut ok = report.status == RunStatus::KktReached;
    ok &= report.q_factor.is_some_and(|q| q <= 0.5);
    let x_bar = vec(&[0.0, 0.0]);
    let dist = p
        .multiplier_set_distance(&x_bar, &report.final_point.lambda)
        .unwrap();
    ok &= dist <= 1e-8;
    // Non-singleton segment: two distinct multipliers both belong to it.
    ok &= p
        .multiplier_set_distance(&x_bar, &vec(&[1.0, 0.0]))
        .unwrap()
        <= 1e-8;
    ok &= p
        .multiplier_set_distance(&x_bar, &vec(&[0.0, 1.0]))
        .unwrap()
        <= 1e-8;
    ok &= started.elapsed().as_secs() < 5;
    verdict("5 (linear convergence, non-unique multipliers)", ok);
}

#[test]
fn criterion_06_superlinear_branch() {
    let started = Instant::now();
    let (_, report) = degen2d_run(PenaltyRule::Geometric { factor: 2.0 }, 2.0);
    let mut ok = report.status == RunStatus::KktReached;
    ok &= report.superlinear == Some(true);
    ok &= started.elapsed().as_secs() < 5;
    verdict("6 (superlinear branch)", ok);
}

#[test]
fn criterion_07_consecutive_iterate_bound() {
    let mut ok = true;
    for start in [vec(&[1.0, 1.0]), vec(&[0.5, 0.8]), vec(&[1.5, 0.2])] {
        let p = builtin("degen2d").unwrap();
        let cfg = AlmConfig {
            rho0: 100.0,
            rule: PenaltyRule::Fixed,
            stop_tol: 1e-11,
            ..AlmConfig::default()
        };
        let report = alm_solve(&p, &PrimalDualPoint::new(start, vec(&[0.0, 0.0])), &cfg).unwrap();
        let kappa = report.kappa_hat.unwrap_or(f64::INFINITY);
        if !(kappa.is_finite() && kappa <= 1e3) {
            eprintln!("kappa_hat = {:?}", report.kappa_hat);
            ok = false;
        }
    }
    verdict("7 (consecutive-iterate error bound)", ok);
}

#[test]
fn criterion_08_kkt_error_bound() {
    let mut ok = true;
    for id in ["lasso1d", "degen2d"] {
        let p = builtin(id).unwrap();
        let ks = p.known_solution.as_ref().unwrap();
        let kappa = fit_error_bound_constant(&p, &ks.x, &ks.lambda, 1e-2, 100, 42).unwrap();
        if !(kappa.is_finite() && kappa <= 1e3) {
            eprintln!("{}: kappa = {}", id, kappa);
            ok = false;
        }
    }
    verdict("8 (KKT error bound)", ok);
}

#[test]
fn criterion_09_penalty_boundedness() {
    let (_, report) = degen2d_run(
        PenaltyRule::VRule {
            theta_v: 0.5,
            factor: 10.0,
        },
        100.0,
    );
    let mut ok = report.status == RunStatus::KktReached;
    let tail = report.records.len().min(10);
    let rhos: Vec<f64> = report.records[report.records.len() - tail..]
        .iter()
        .map(|r| r.rho)
        .collect();
    ok &= rhos.windows(2).all(|w| w[0] == w[1]);
    verdict("9 (penalty boundedness with V-rule)", ok);
}

#[test]
fn criterion_10_growth_sosc_consistency() {
    let mut ok = true;
    let p = builtin("degen2d").unwrap();
    let x_bar = vec(&[0.0, 0.0]);
    for lambda in [vec(&[0.5, 0.5]), vec(&[0.6, 0.4]), vec(&[0.45, 0.55])] {
        let report = growth_probe(&p, &x_bar, &lambda, 100.0, 0.05, 500, 42).unwrap();
        if report.violations != 0 || report.ell_hat.is_nan() || report.ell_hat <= 0.0 {
            eprintln!(
                "degen2d lambda={:?}: violations={} ell={}",
                lambda.as_slice(),
                report.violations,
                report.ell_hat
            );
            ok = false;
        }
    }
    let p = builtin("sosc_fail").unwrap();
    for rho in [1e2, 1e3, 1e4] {
        let report = growth_probe(&p, &vec(&[0.0]), &vec(&[0.0]), rho, 0.05, 500, 42).unwrap();
        if report.violations == 0 {
            eprintln!("sosc_fail rho={}: no violations", rho);
            ok = false;
        }
    }
    verdict("10 (growth/SOSC consistency)", ok);
}

/// Multiplier-update inclusion and identity along a run.
fn run_satisfies_update_laws(p: &CompositeProblem, report: &RunReport) -> bool {
    let view = match p.g.plq_view() {
        Some(v) => v,
        None => return true,
    };
    for k in 0..report.trajectory.len() - 1 {
        let rec = &report.records[k];
        let prev = &report.trajectory[k];
        let next = &report.trajectory[k + 1];
        let map = p.oracle.eval_map(&next.x);
        let shifted = &map + &prev.lambda / rec.rho;
        let z_next = p.g.prox(&shifted, 1.0 / rec.rho).unwrap();
        if !view
            .subdifferential_contains(&z_next, &next.lambda, 1e-7)
            .unwrap_or(false)
        {
            return false;
        }
        let lhs = &map - &z_next;
        let rhs = (&next.lambda - &prev.lambda) / rec.rho;
        if (lhs - rhs).norm() > 1e-9 {
            return false;
        }
    }
    true
}

#[test]
fn criterion_11_multiplier_update_inclusion() {
    let mut ok = true;
    let (p, report) = degen2d_run(PenaltyRule::Fixed, 100.0);
    ok &= run_satisfies_update_laws(&p, &report);
    let (p, report) = degen2d_run(PenaltyRule::Geometric { factor: 2.0 }, 2.0);
    ok &= run_satisfies_update_laws(&p, &report);
    let (p, report) = degen2d_run(
        PenaltyRule::VRule {
            theta_v: 0.5,
            factor: 10.0,
        },
        100.0,
    );
    ok &= run_satisfies_update_laws(&p, &report);

    let p = builtin("lasso1d").unwrap();
    let report = alm_solve(
        &p,
        &PrimalDualPoint::new(vec(&[0.0]), vec(&[0.0])),
        &AlmConfig::default(),
    )
    .unwrap();
    ok &= run_satisfies_update_laws(&p, &report);
    verdict("11 (multiplier update inclusion)", ok);
}
