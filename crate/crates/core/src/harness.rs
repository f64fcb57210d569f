//! Problem schema ingestion (JSON syntax), the built-in test-problem library,
//! and the benchmark runner.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::alm::{alm_solve, AlmConfig, PenaltyRule, RunReport, RunStatus};
use crate::error::{Error, Result};
use crate::outer::OuterFunction;
use crate::plq::{PlqFunction, PlqPiece};
use crate::poly::Polyhedron;
use crate::problem::{
    central_diff, AffineSet, CompositeProblem, KnownSolution, PrimalDualPoint, QuadraticForm,
    QuadraticOracle,
};

// ---------------------------------------------------------------------------
// Schema documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfspaceDoc {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyhedronDoc {
    pub dim: usize,
    #[serde(default)]
    pub ineqs: Vec<HalfspaceDoc>,
    #[serde(default)]
    pub eqs: Vec<HalfspaceDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlqPieceDoc {
    #[serde(rename = "A")]
    pub a_mat: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub alpha: f64,
    pub set: PolyhedronDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GDoc {
    Orthant {
        s: usize,
        m: usize,
    },
    Max {
        m: usize,
    },
    L1 {
        m: usize,
    },
    Linf {
        m: usize,
    },
    Elq {
        #[serde(rename = "B")]
        b_mat: Vec<Vec<f64>>,
        set: PolyhedronDoc,
    },
    Sum {
        blocks: Vec<GDoc>,
    },
    Plq {
        dim: usize,
        pieces: Vec<PlqPieceDoc>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticDoc {
    #[serde(rename = "Q")]
    pub q_mat: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ComponentDoc {
    Affine { a: Vec<f64>, b: f64 },
    Quadratic(QuadraticDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaDoc {
    #[serde(rename = "B")]
    pub b_mat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownSolutionDoc {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_set: Option<PolyhedronDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub phi: QuadraticDoc,
    #[serde(rename = "Phi")]
    pub map: Vec<ComponentDoc>,
    pub g: GDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<KnownSolutionDoc>,
}

fn schema_err<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Schema {
        path: path.to_string(),
        message: message.into(),
    })
}

fn matrix_from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    path: &str,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return schema_err(path, format!("expected {} rows, got {}", nrows, rows.len()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return schema_err(
                &format!("{}[{}]", path, i),
                format!("expected {} entries, got {}", ncols, r.len()),
            );
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn symmetric_matrix(rows: &[Vec<f64>], dim: usize, path: &str) -> Result<DMatrix<f64>> {
    let m = matrix_from_rows(rows, dim, dim, path)?;
    for i in 0..dim {
        for j in 0..dim {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                return schema_err(path, "matrix not symmetric");
            }
        }
    }
    Ok(m)
}

fn vector_with_len(v: &[f64], len: usize, path: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return schema_err(path, format!("expected length {}, got {}", len, v.len()));
    }
    Ok(DVector::from_row_slice(v))
}

fn polyhedron_from_doc(doc: &PolyhedronDoc, path: &str) -> Result<Polyhedron> {
    let mut ineqs = vec![];
    for (i, h) in doc.ineqs.iter().enumerate() {
        let normal = vector_with_len(&h.normal, doc.dim, &format!("{}.ineqs[{}].normal", path, i))?;
        ineqs.push((normal, h.offset));
    }
    let mut eqs = vec![];
    for (i, h) in doc.eqs.iter().enumerate() {
        let normal = vector_with_len(&h.normal, doc.dim, &format!("{}.eqs[{}].normal", path, i))?;
        eqs.push((normal, h.offset));
    }
    Polyhedron::new(doc.dim, ineqs, eqs)
}

fn polyhedron_to_doc(poly: &Polyhedron) -> PolyhedronDoc {
    PolyhedronDoc {
        dim: poly.dim(),
        ineqs: poly
            .ineqs()
            .iter()
            .map(|h| HalfspaceDoc {
                normal: h.normal.iter().cloned().collect(),
                offset: h.offset,
            })
            .collect(),
        eqs: poly
            .eqs()
            .iter()
            .map(|h| HalfspaceDoc {
                normal: h.normal.iter().cloned().collect(),
                offset: h.offset,
            })
            .collect(),
    }
}

pub fn outer_from_doc(doc: &GDoc, path: &str) -> Result<OuterFunction> {
    let g = match doc {
        GDoc::Orthant { s, m } => OuterFunction::Orthant { s: *s, m: *m },
        GDoc::Max { m } => OuterFunction::Max { m: *m },
        GDoc::L1 { m } => OuterFunction::L1 { m: *m },
        GDoc::Linf { m } => OuterFunction::LInf { m: *m },
        GDoc::Elq { b_mat, set } => {
            let dim = b_mat.len();
            let bmat = symmetric_matrix(b_mat, dim, &format!("{}.B", path))?;
            let set = polyhedron_from_doc(set, &format!("{}.set", path))?;
            if set.dim() != dim {
                return schema_err(&format!("{}.set", path), "dimension differs from B");
            }
            OuterFunction::ExtendedLq { bmat, set }
        }
        GDoc::Sum { blocks } => {
            let mut parsed = vec![];
            for (i, b) in blocks.iter().enumerate() {
                parsed.push(outer_from_doc(b, &format!("{}.blocks[{}]", path, i))?);
            }
            OuterFunction::SeparableSum { blocks: parsed }
        }
        GDoc::Plq { dim, pieces } => {
            let mut parsed = vec![];
            for (i, piece) in pieces.iter().enumerate() {
                let ppath = format!("{}.pieces[{}]", path, i);
                let quad = symmetric_matrix(&piece.a_mat, *dim, &format!("{}.A", ppath))?;
                let lin = vector_with_len(&piece.a, *dim, &format!("{}.a", ppath))?;
                let set = polyhedron_from_doc(&piece.set, &format!("{}.set", ppath))?;
                parsed.push(PlqPiece::new(set, quad, lin, piece.alpha)?);
            }
            OuterFunction::GenericPlq {
                plq: PlqFunction::new(parsed)?,
            }
        }
    };
    g.validate()?;
    Ok(g)
}

pub fn outer_to_doc(g: &OuterFunction) -> GDoc {
    match g {
        OuterFunction::Orthant { s, m } => GDoc::Orthant { s: *s, m: *m },
        OuterFunction::Max { m } => GDoc::Max { m: *m },
        OuterFunction::L1 { m } => GDoc::L1 { m: *m },
        OuterFunction::LInf { m } => GDoc::Linf { m: *m },
        OuterFunction::ExtendedLq { bmat, set } => GDoc::Elq {
            b_mat: (0..bmat.nrows())
                .map(|i| bmat.row(i).iter().cloned().collect())
                .collect(),
            set: polyhedron_to_doc(set),
        },
        OuterFunction::SeparableSum { blocks } => GDoc::Sum {
            blocks: blocks.iter().map(outer_to_doc).collect(),
        },
        OuterFunction::GenericPlq { plq } => GDoc::Plq {
            dim: plq.dim(),
            pieces: plq
                .pieces()
                .iter()
                .map(|p| PlqPieceDoc {
                    a_mat: (0..plq.dim())
                        .map(|i| p.quad.row(i).iter().cloned().collect())
                        .collect(),
                    a: p.lin.iter().cloned().collect(),
                    alpha: p.constant,
                    set: polyhedron_to_doc(&p.set),
                })
                .collect(),
        },
    }
}

/// Parses an outer-function document from JSON text.
pub fn load_outer_str(text: &str) -> Result<OuterFunction> {
    let doc: GDoc = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: "g".into(),
        message: e.to_string(),
    })?;
    outer_from_doc(&doc, "g")
}

// ---------------------------------------------------------------------------
// Problem loading
// ---------------------------------------------------------------------------

fn quadratic_from_doc(doc: &QuadraticDoc, n: usize, path: &str) -> Result<QuadraticForm> {
    Ok(QuadraticForm {
        quad: symmetric_matrix(&doc.q_mat, n, &format!("{}.Q", path))?,
        lin: vector_with_len(&doc.q, n, &format!("{}.q", path))?,
        constant: doc.c,
    })
}

fn quadratic_to_doc(form: &QuadraticForm) -> QuadraticDoc {
    let n = form.lin.len();
    QuadraticDoc {
        q_mat: (0..n)
            .map(|i| form.quad.row(i).iter().cloned().collect())
            .collect(),
        q: form.lin.iter().cloned().collect(),
        c: form.constant,
    }
}

/// Verifies the oracle's first derivatives against central finite differences
/// at a handful of deterministic sample points.
fn validate_oracle(oracle: &QuadraticOracle) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let n = oracle.phi.lin.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5 {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0_f64));
        let grad = oracle.phi.gradient(&x);
        let fd = central_diff(|xx| oracle.phi.value(xx), &x, 1e-5);
        if (grad - fd).norm() > 1e-4 * (1.0 + x.norm()) {
            return Err(Error::OracleInvariant(
                "phi gradient disagrees with finite differences".into(),
            ));
        }
        for (i, comp) in oracle.components.iter().enumerate() {
            let grad = comp.gradient(&x);
            let fd = central_diff(|xx| comp.value(xx), &x, 1e-5);
            if (grad - fd).norm() > 1e-4 * (1.0 + x.norm()) {
                return Err(Error::OracleInvariant(format!(
                    "Phi[{}] gradient disagrees with finite differences",
                    i
                )));
            }
        }
    }
    Ok(())
}

pub fn load_problem_doc(doc: &ProblemDoc) -> Result<CompositeProblem> {
    let n = doc.n;
    let m = doc.m;
    let phi = quadratic_from_doc(&doc.phi, n, "phi")?;
    if doc.map.len() != m {
        return schema_err(
            "Phi",
            format!("expected {} components, got {}", m, doc.map.len()),
        );
    }
    let mut components = vec![];
    for (i, comp) in doc.map.iter().enumerate() {
        let path = format!("Phi[{}]", i);
        components.push(match comp {
            ComponentDoc::Affine { a, b } => {
                QuadraticForm::affine(vector_with_len(a, n, &format!("{}.a", path))?, *b)
            }
            ComponentDoc::Quadratic(q) => quadratic_from_doc(q, n, &path)?,
        });
    }
    let g = outer_from_doc(&doc.g, "g")?;
    if g.dim() != m {
        return schema_err("g", format!("dimension {} differs from m = {}", g.dim(), m));
    }
    let theta = match &doc.theta {
        None => {
            if doc.s != 0 {
                return schema_err("s", "nonzero s with theta absent");
            }
            AffineSet::whole_space(n)
        }
        Some(t) => {
            let b_mat = matrix_from_rows(&t.b_mat, doc.s, n, "theta.B")?;
            let b = vector_with_len(&t.b, doc.s, "theta.b")?;
            AffineSet::new(b_mat, b)?
        }
    };
    let known_solution = match &doc.known_solution {
        None => None,
        Some(ks) => Some(KnownSolution {
            x: vector_with_len(&ks.x, n, "known_solution.x")?,
            lambda: vector_with_len(&ks.lambda, m, "known_solution.lambda")?,
            multiplier_set: ks
                .multiplier_set
                .as_ref()
                .map(|p| polyhedron_from_doc(p, "known_solution.multiplier_set"))
                .transpose()?,
        }),
    };
    let oracle = QuadraticOracle::new(phi, components)?;
    validate_oracle(&oracle)?;
    CompositeProblem::new(Box::new(oracle), g, theta, known_solution)
}

pub fn load_problem_str(text: &str) -> Result<CompositeProblem> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    load_problem_doc(&doc)
}

/// Serializes a schema-compatible problem (quadratic oracle) back to a
/// document.
pub fn problem_to_doc(p: &CompositeProblem) -> Result<ProblemDoc> {
    let oracle = p.oracle.as_quadratic().ok_or_else(|| {
        Error::InvalidInput("only quadratic-oracle problems serialize to the schema".into())
    })?;
    Ok(ProblemDoc {
        n: p.dim_n(),
        m: p.dim_m(),
        s: p.theta.matrix().nrows(),
        phi: quadratic_to_doc(&oracle.phi),
        map: oracle
            .components
            .iter()
            .map(|c| {
                if c.quad.iter().all(|&v| v == 0.0) {
                    ComponentDoc::Affine {
                        a: c.lin.iter().cloned().collect(),
                        b: c.constant,
                    }
                } else {
                    ComponentDoc::Quadratic(quadratic_to_doc(c))
                }
            })
            .collect(),
        g: outer_to_doc(&p.g),
        theta: if p.theta.matrix().nrows() == 0 {
            None
        } else {
            Some(ThetaDoc {
                b_mat: (0..p.theta.matrix().nrows())
                    .map(|i| p.theta.matrix().row(i).iter().cloned().collect())
                    .collect(),
                b: p.theta.rhs().iter().cloned().collect(),
            })
        },
        known_solution: p.known_solution.as_ref().map(|ks| KnownSolutionDoc {
            x: ks.x.iter().cloned().collect(),
            lambda: ks.lambda.iter().cloned().collect(),
            multiplier_set: ks.multiplier_set.as_ref().map(polyhedron_to_doc),
        }),
    })
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

pub const BUILTIN_IDS: [&str; 6] = [
    "lasso1d",
    "degen2d",
    "minimax1d",
    "affine_l1",
    "elq1",
    "sosc_fail",
];

pub fn builtin(id: &str) -> Result<CompositeProblem> {
    let vec = |d: &[f64]| DVector::from_row_slice(d);
    match id {
        // φ = ½(x − 3)², Φ = x, g = ‖·‖₁; solution (2, 1).
        "lasso1d" => {
            let phi = QuadraticForm {
                quad: DMatrix::from_element(1, 1, 1.0),
                lin: vec(&[-3.0]),
                constant: 4.5,
            };
            let oracle = QuadraticOracle::new(phi, vec![QuadraticForm::affine(vec(&[1.0]), 0.0)])?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::L1 { m: 1 },
                AffineSet::whole_space(1),
                Some(KnownSolution {
                    x: vec(&[2.0]),
                    lambda: vec(&[1.0]),
                    multiplier_set: Some(Polyhedron::singleton(&vec(&[1.0]))),
                }),
            )
        }
        // φ = x₁² − x₂, Φ = (x₂, x₂), g = δ_{ℝ₋²}; x̄ = (0,0),
        // Λ = {λ ≥ 0 : λ₁ + λ₂ = 1}. SOSC holds despite degeneracy.
        "degen2d" => {
            let phi = QuadraticForm {
                quad: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]),
                lin: vec(&[0.0, -1.0]),
                constant: 0.0,
            };
            let comps = vec![
                QuadraticForm::affine(vec(&[0.0, 1.0]), 0.0),
                QuadraticForm::affine(vec(&[0.0, 1.0]), 0.0),
            ];
            let oracle = QuadraticOracle::new(phi, comps)?;
            let multiplier_set = Polyhedron::new(
                2,
                vec![(vec(&[-1.0, 0.0]), 0.0), (vec(&[0.0, -1.0]), 0.0)],
                vec![(vec(&[1.0, 1.0]), 1.0)],
            )?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::Orthant { s: 0, m: 2 },
                AffineSet::whole_space(2),
                Some(KnownSolution {
                    x: vec(&[0.0, 0.0]),
                    lambda: vec(&[0.5, 0.5]),
                    multiplier_set: Some(multiplier_set),
                }),
            )
        }
        // φ = (x − 1)², Φ = (x, −x), g = max; solution (0.5, (1, 0)).
        "minimax1d" => {
            let phi = QuadraticForm {
                quad: DMatrix::from_element(1, 1, 2.0),
                lin: vec(&[-2.0]),
                constant: 1.0,
            };
            let comps = vec![
                QuadraticForm::affine(vec(&[1.0]), 0.0),
                QuadraticForm::affine(vec(&[-1.0]), 0.0),
            ];
            let oracle = QuadraticOracle::new(phi, comps)?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::Max { m: 2 },
                AffineSet::whole_space(1),
                Some(KnownSolution {
                    x: vec(&[0.5]),
                    lambda: vec(&[1.0, 0.0]),
                    multiplier_set: Some(Polyhedron::singleton(&vec(&[1.0, 0.0]))),
                }),
            )
        }
        // φ = ‖x‖², Φ = x, g = ‖·‖₁, Θ = {x₁ + x₂ = 1};
        // solution ((0.5, 0.5), (1, 1)).
        "affine_l1" => {
            let phi = QuadraticForm {
                quad: DMatrix::identity(2, 2) * 2.0,
                lin: DVector::zeros(2),
                constant: 0.0,
            };
            let comps = vec![
                QuadraticForm::affine(vec(&[1.0, 0.0]), 0.0),
                QuadraticForm::affine(vec(&[0.0, 1.0]), 0.0),
            ];
            let oracle = QuadraticOracle::new(phi, comps)?;
            let theta = AffineSet::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), vec(&[1.0]))?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::L1 { m: 2 },
                theta,
                Some(KnownSolution {
                    x: vec(&[0.5, 0.5]),
                    lambda: vec(&[1.0, 1.0]),
                    multiplier_set: Some(Polyhedron::singleton(&vec(&[1.0, 1.0]))),
                }),
            )
        }
        // φ = ½(x − 2)², Φ = x, g extended-LQ with B = [1], C = [0, ∞):
        // g(z) = ½ max(z, 0)², solution (1, 1).
        "elq1" => {
            let phi = QuadraticForm {
                quad: DMatrix::from_element(1, 1, 1.0),
                lin: vec(&[-2.0]),
                constant: 2.0,
            };
            let oracle = QuadraticOracle::new(phi, vec![QuadraticForm::affine(vec(&[1.0]), 0.0)])?;
            let set = Polyhedron::new(1, vec![(vec(&[-1.0]), 0.0)], vec![])?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::ExtendedLq {
                    bmat: DMatrix::from_element(1, 1, 1.0),
                    set,
                },
                AffineSet::whole_space(1),
                Some(KnownSolution {
                    x: vec(&[1.0]),
                    lambda: vec(&[1.0]),
                    multiplier_set: Some(Polyhedron::singleton(&vec(&[1.0]))),
                }),
            )
        }
        // φ = −x², Φ = x, g = δ_{ℝ₋}; KKT at (0, 0) with SOSC failing.
        "sosc_fail" => {
            let phi = QuadraticForm {
                quad: DMatrix::from_element(1, 1, -2.0),
                lin: DVector::zeros(1),
                constant: 0.0,
            };
            let oracle = QuadraticOracle::new(phi, vec![QuadraticForm::affine(vec(&[1.0]), 0.0)])?;
            CompositeProblem::new(
                Box::new(oracle),
                OuterFunction::Orthant { s: 0, m: 1 },
                AffineSet::whole_space(1),
                Some(KnownSolution {
                    x: vec(&[0.0]),
                    lambda: vec(&[0.0]),
                    multiplier_set: None,
                }),
            )
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Benchmark runner
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum BenchAssertion {
    QFactorAtMost(f64),
    Superlinear,
    TargetPoint { x: DVector<f64>, tol: f64 },
    ResidualAtMost(f64),
}

#[derive(Debug, Clone)]
pub struct BenchEntry {
    pub id: String,
    pub label: String,
    pub config: AlmConfig,
    pub start: PrimalDualPoint,
    pub assertions: Vec<BenchAssertion>,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkSuite {
    pub entries: Vec<BenchEntry>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub id: String,
    pub label: String,
    pub report: Option<RunReport>,
    pub error: Option<String>,
    /// (assertion description, passed).
    pub assertion_results: Vec<(String, bool)>,
    pub passed: bool,
}

fn check_assertion(a: &BenchAssertion, report: &RunReport) -> (String, bool) {
    match a {
        BenchAssertion::QFactorAtMost(bound) => (
            format!("q_factor <= {}", bound),
            report.q_factor.is_some_and(|q| q <= *bound),
        ),
        BenchAssertion::Superlinear => (
            "superlinear".to_string(),
            report.superlinear.unwrap_or(false),
        ),
        BenchAssertion::TargetPoint { x, tol } => (
            format!("final x within {:.1e} of target", tol),
            (&report.final_point.x - x).norm() <= *tol,
        ),
        BenchAssertion::ResidualAtMost(bound) => (
            format!("final residual <= {:.1e}", bound),
            report.status == RunStatus::KktReached && report.final_residual <= *bound,
        ),
    }
}

fn run_entry(entry: &BenchEntry) -> BenchOutcome {
    match builtin(&entry.id).and_then(|p| alm_solve(&p, &entry.start, &entry.config)) {
        Ok(report) => {
            let assertion_results: Vec<(String, bool)> = entry
                .assertions
                .iter()
                .map(|a| check_assertion(a, &report))
                .collect();
            let passed = assertion_results.iter().all(|(_, ok)| *ok);
            BenchOutcome {
                id: entry.id.clone(),
                label: entry.label.clone(),
                report: Some(report),
                error: None,
                assertion_results,
                passed,
            }
        }
        Err(e) => BenchOutcome {
            id: entry.id.clone(),
            label: entry.label.clone(),
            report: None,
            error: Some(e.to_string()),
            assertion_results: vec![],
            passed: false,
        },
    }
}

/// Runs every suite entry; failures of individual runs are recorded, not
/// fatal. With `parallel`, entries run on scoped threads and results keep
/// suite order.
pub fn run_benchmark(suite: &BenchmarkSuite, parallel: bool) -> Vec<BenchOutcome> {
    if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = suite
                .entries
                .iter()
                .map(|e| scope.spawn(move || run_entry(e)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    } else {
        suite.entries.iter().map(run_entry).collect()
    }
}

/// The default builtin convergence suite.
pub fn builtin_suite() -> BenchmarkSuite {
    let vec = |d: &[f64]| DVector::from_row_slice(d);
    let fixed = |rho0: f64| AlmConfig {
        rho0,
        rule: PenaltyRule::Fixed,
        ..AlmConfig::default()
    };
    let entries = vec![
        BenchEntry {
            id: "lasso1d".into(),
            label: "lasso1d-fixed10".into(),
            config: fixed(10.0),
            start: PrimalDualPoint::new(vec(&[0.0]), vec(&[0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::TargetPoint {
                    x: vec(&[2.0]),
                    tol: 1e-7,
                },
            ],
        },
        BenchEntry {
            id: "degen2d".into(),
            label: "degen2d-fixed100".into(),
            config: fixed(100.0),
            start: PrimalDualPoint::new(vec(&[1.0, 1.0]), vec(&[0.0, 0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::QFactorAtMost(0.5),
            ],
        },
        BenchEntry {
            id: "degen2d".into(),
            label: "degen2d-geometric2".into(),
            config: AlmConfig {
                rho0: 2.0,
                rule: PenaltyRule::Geometric { factor: 2.0 },
                ..AlmConfig::default()
            },
            start: PrimalDualPoint::new(vec(&[1.0, 1.0]), vec(&[0.0, 0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::Superlinear,
            ],
        },
        BenchEntry {
            id: "minimax1d".into(),
            label: "minimax1d-vrule".into(),
            config: AlmConfig::default(),
            start: PrimalDualPoint::new(vec(&[0.0]), vec(&[0.0, 0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::TargetPoint {
                    x: vec(&[0.5]),
                    tol: 1e-7,
                },
            ],
        },
        BenchEntry {
            id: "affine_l1".into(),
            label: "affine_l1-vrule".into(),
            config: AlmConfig::default(),
            start: PrimalDualPoint::new(vec(&[0.5, 0.5]), vec(&[0.0, 0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::TargetPoint {
                    x: vec(&[0.5, 0.5]),
                    tol: 1e-7,
                },
            ],
        },
        BenchEntry {
            id: "elq1".into(),
            label: "elq1-fixed10".into(),
            config: fixed(10.0),
            start: PrimalDualPoint::new(vec(&[0.0]), vec(&[0.0])),
            assertions: vec![
                BenchAssertion::ResidualAtMost(1e-9),
                BenchAssertion::TargetPoint {
                    x: vec(&[1.0]),
                    tol: 1e-6,
                },
            ],
        },
    ];
    BenchmarkSuite { entries }
}
