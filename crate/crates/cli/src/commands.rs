//! Subcommand bodies. Each returns the report and an exit code derived from it.

use std::cell::RefCell;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use fockmult::counterexamples::{
    borderline_f, gaussian_domain_demo, shifted_g, sigma_domain_collapse, sigma_over_p_domain, DivergenceDiagnostic,
    FittedModel, GaussianDemo, LatticeSigma, Verdict,
};
use fockmult::operators::{
    annihilation_matrix, creation_matrix, harmonic_operator, mult_matrix, p_matrix, q_matrix, MatrixExport,
    TruncatedOperator,
};
use fockmult::oracle::{gauss_gram, AnnulusRule, QuadratureRule};
use fockmult::symbols::{
    classify_growth, eval_symbol, parse_symbol, FockVerdict, GrowthReport, LambdaVerdict, ParseError,
};
use fockmult::verify::{
    check_commute_rel, check_harmonic, check_remark5, check_thm4_a, check_thm4_a_operator, check_thm4_b, check_thm4_d,
    check_thm4_f, check_thm4_f_operator, CommutationReport, TestFamily,
};
use fockmult::{EntireSymbol, FockError, GaussWeight};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Family, Format, RunConfig};
use crate::output::to_json;

pub enum CliError {
    /// Bad flags, config, or symbol text.
    Input(String),
    Core(FockError),
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        CliError::Core(e)
    }
}

pub struct Outcome {
    pub body: String,
    pub summary: String,
    pub code: i32,
}

fn finish<T: Serialize>(command: &str, cfg: &RunConfig, result: &T, csv: impl FnOnce() -> String, summary: String, code: i32) -> Outcome {
    let body = match cfg.format {
        Format::Json => to_json(command, cfg, result),
        Format::Csv => csv(),
    };
    Outcome { body, summary, code }
}

fn symbol(spec: Option<&str>, what: &str, weight: GaussWeight) -> Result<EntireSymbol, CliError> {
    let spec = spec.ok_or_else(|| CliError::Input(format!("missing {what} symbol spec")))?;
    Ok(parse_symbol(spec, weight)?)
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct Classification {
    symbol: String,
    report: GrowthReport,
}

pub fn classify(spec: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let phi = parse_symbol(spec, cfg.weight())?;
    let report = classify_growth(&phi, cfg.weight(), cfg.depth)?;
    let unknown =
        report.lambda_verdict == LambdaVerdict::BoundaryUnknown || report.fock_verdict == FockVerdict::BoundaryUnknown;
    let summary = format!("{phi}: {:?}, {:?} ({:?})", report.lambda_verdict, report.fock_verdict, report.rule_used);
    let result = Classification { symbol: phi.spec(), report };
    let csv = || {
        let rep = &result.report;
        let mut out = String::from("field,value\n");
        let _ = writeln!(out, "symbol,{}", result.symbol);
        let _ = writeln!(out, "order_estimate,{}", e(rep.order_estimate));
        let _ = writeln!(out, "type_estimate,{}", e(rep.type_estimate));
        let _ = writeln!(out, "lambda_verdict,{:?}", rep.lambda_verdict);
        let _ = writeln!(out, "fock_verdict,{:?}", rep.fock_verdict);
        let _ = writeln!(out, "rule_used,{:?}", rep.rule_used);
        for (n, order) in &rep.evidence {
            let _ = writeln!(out, "order_at_{n},{}", e(*order));
        }
        out
    };
    Ok(finish("classify", cfg, &result, csv, summary, if unknown { 2 } else { 0 }))
}

/// Named ladder operators, or any symbol spec as its multiplication operator.
fn operator(name: &str, cfg: &RunConfig) -> Result<TruncatedOperator, CliError> {
    let (n, w) = (cfg.degree, cfg.weight());
    Ok(match name {
        "creation" => creation_matrix(n, w),
        "annihilation" => annihilation_matrix(n, w),
        "q" => q_matrix(n, w),
        "p" => p_matrix(n, w),
        "identity" => TruncatedOperator::identity(n, w),
        spec => mult_matrix(&parse_symbol(spec, w)?, n, w),
    })
}

/// The operator under test: `M_φ` from the positional spec or `--A`, not both.
fn subject(spec: Option<&str>, cfg: &RunConfig) -> Result<(TruncatedOperator, Option<EntireSymbol>), CliError> {
    match (spec, cfg.op_a.as_deref()) {
        (Some(_), Some(_)) => Err(CliError::Input("give either a symbol spec or --A, not both".into())),
        (Some(s), None) => {
            let phi = parse_symbol(s, cfg.weight())?;
            Ok((mult_matrix(&phi, cfg.degree, cfg.weight()), Some(phi)))
        }
        (None, Some(a)) => Ok((operator(a, cfg)?, None)),
        (None, None) => Err(CliError::Input("missing symbol spec or --A".into())),
    }
}

/// `N/4, N/2, N` without repeats.
fn degree_sequence(n: usize) -> Vec<usize> {
    let mut seq: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&d| d > 0).collect();
    seq.dedup();
    seq
}

#[derive(Serialize)]
struct Verification {
    condition: String,
    pass: bool,
    reports: Vec<CommutationReport>,
}

pub fn verify(condition: &str, spec: Option<&str>, spec2: Option<&str>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (n, w, tol) = (cfg.degree, cfg.weight(), cfg.tol);
    let grid = &cfg.grid;
    if spec2.is_some() && condition != "remark6" {
        return Err(CliError::Input(format!("{condition} takes one symbol spec")));
    }
    let reports = match condition {
        "thm4a" => match subject(spec, cfg)? {
            (_, Some(phi)) => vec![check_thm4_a(&phi, grid, grid, n, w, tol)?],
            (a, None) => vec![check_thm4_a_operator(&a, grid, grid, tol)?],
        },
        "thm4b" => {
            let (a, _) = subject(spec, cfg)?;
            let family = TestFamily::pk(grid.clone(), cfg.pk_powers, n, w)?;
            vec![check_thm4_b(&a, &family, tol)?]
        }
        "thm4d" => vec![check_thm4_d(&symbol(spec, "thm4d", w)?, grid, &degree_sequence(n), w, tol)?],
        "thm4f" => match subject(spec, cfg)? {
            (_, Some(phi)) => vec![check_thm4_f(&phi, grid, n, w, tol)?],
            (a, None) => vec![check_thm4_f_operator(&a, grid, tol)?],
        },
        "remark5" => check_remark5(&symbol(spec, "remark5", w)?, n, w, tol)?.to_vec(),
        "remark6" => {
            let big_phi = symbol(spec, "remark6 Φ", w)?;
            let big_psi = symbol(spec2, "remark6 Ψ", w)?;
            vec![check_harmonic(&big_phi, &big_psi, grid, n, w, tol)?]
        }
        "commute" => {
            if spec.is_some() {
                return Err(CliError::Input("commute takes --A and --B, not a symbol spec".into()));
            }
            let need = |o: &Option<String>, flag: &str| o.clone().ok_or_else(|| CliError::Input(format!("commute needs {flag}")));
            let a = operator(&need(&cfg.op_a, "--A")?, cfg)?;
            let b = operator(&need(&cfg.op_b, "--B")?, cfg)?;
            let family = match cfg.family {
                Family::K => TestFamily::kernels(grid.clone(), n, w)?,
                Family::Pk => TestFamily::pk(grid.clone(), cfg.pk_powers, n, w)?,
            };
            vec![check_commute_rel(&a, &b, &family, tol)?]
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown condition {other:?}; expected thm4a, thm4b, thm4d, thm4f, remark5, remark6 or commute"
            )))
        }
    };
    let pass = reports.iter().all(|r| r.pass);
    let summary = reports
        .iter()
        .map(|r| {
            let verdict = if r.pass { "pass" } else { "FAIL" };
            format!("{:?}: {verdict}, max residual {:.3e} (tol {:.1e}, tail {:.1e})", r.condition_id, r.max_residual, r.tol, r.truncation_tail)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let result = Verification { condition: condition.to_string(), pass, reports };
    let csv = || {
        let mut out = String::from("condition,label,residual,tol,pass\n");
        for rep in &result.reports {
            for res in &rep.residuals {
                let _ = writeln!(out, "{:?},\"{}\",{},{},{}", rep.condition_id, res.label, e(res.value), e(rep.tol), rep.pass);
            }
        }
        out
    };
    Ok(finish(&format!("verify {condition}"), cfg, &result, csv, summary, if pass { 0 } else { 1 }))
}

#[derive(Serialize)]
struct SeriesOutcome {
    predicted: Vec<Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    predicted_models: Vec<&'static str>,
    diagnostics: Vec<DivergenceDiagnostic>,
    matches: bool,
}

fn model_name(m: &FittedModel) -> &'static str {
    match m {
        FittedModel::Convergent { .. } => "convergent",
        FittedModel::Logarithmic { .. } => "logarithmic",
        FittedModel::Power { .. } => "power",
    }
}

fn series_csv(diags: &[DivergenceDiagnostic]) -> String {
    let mut out = String::from("label,x,partial_sum\n");
    for d in diags {
        for (x, s) in d.checkpoints.iter().zip(&d.partial_sums) {
            let _ = writeln!(out, "\"{}\",{x},{}", d.label, e(*s));
        }
    }
    out
}

fn series_outcome(
    name: &str,
    cfg: &RunConfig,
    predicted: Vec<Verdict>,
    predicted_models: Vec<&'static str>,
    diagnostics: Vec<DivergenceDiagnostic>,
) -> Outcome {
    let matches = diagnostics.iter().map(|d| d.verdict).eq(predicted.iter().copied())
        && (predicted_models.is_empty()
            || diagnostics.iter().map(|d| model_name(&d.fitted_model)).eq(predicted_models.iter().copied()));
    let summary = diagnostics
        .iter()
        .map(|d| format!("{}: {:?} ({}), last partial sum {:.6e}", d.label, d.verdict, model_name(&d.fitted_model), d.last()))
        .chain([format!("predicted {predicted:?}: {}", if matches { "match" } else { "MISMATCH" })])
        .collect::<Vec<_>>()
        .join("\n");
    let result = SeriesOutcome { predicted, predicted_models, diagnostics, matches };
    finish(&format!("counterexample {name}"), cfg, &result, || series_csv(&result.diagnostics), summary, if matches { 0 } else { 1 })
}

fn converges_iff(ok: bool) -> Verdict {
    if ok {
        Verdict::Converges
    } else {
        Verdict::Diverges
    }
}

pub fn counterexample(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let w = cfg.weight();
    let rule = AnnulusRule::default();
    Ok(match name {
        "borderline" => {
            let (f, zf) = borderline_f(w, cfg.terms)?;
            series_outcome(name, cfg, vec![Verdict::Converges, Verdict::Diverges], vec![], vec![f, zf])
        }
        "shifted" => {
            let d = shifted_g(cfg.k, cfg.j, w, cfg.terms)?;
            series_outcome(name, cfg, vec![converges_iff(cfg.j <= cfg.k)], vec![], vec![d])
        }
        "sigma" => {
            let d = sigma_domain_collapse(&LatticeSigma::new(w), &cfg.radii, &rule)?;
            series_outcome(name, cfg, vec![Verdict::Diverges], vec!["power"], vec![d])
        }
        "sigma-over-p" => {
            let d = sigma_over_p_domain(&LatticeSigma::new(w), cfg.k, cfg.j, &cfg.radii, &rule)?;
            // |σ/p|²|z|^{2j} ~ |z|^{2(j−k−2)} times a periodic factor, against area R dR
            let model = match cfg.j as i64 - cfg.k as i64 {
                d if d <= 0 => "convergent",
                1 => "logarithmic",
                _ => "power",
            };
            series_outcome(name, cfg, vec![converges_iff(cfg.j <= cfg.k)], vec![model], vec![d])
        }
        "gaussian" => gaussian(cfg, gaussian_domain_demo(cfg.w, cfg.a, w)?),
        other => {
            return Err(CliError::Input(format!(
                "unknown counterexample {other:?}; expected borderline, shifted, gaussian, sigma or sigma-over-p"
            )))
        }
    })
}

fn gaussian(cfg: &RunConfig, demo: GaussianDemo) -> Outcome {
    let mut summary = demo
        .checks
        .iter()
        .map(|c| format!("{} (c = {}): predicted in F {}, observed {:?}", c.label, c.c, c.predicted_in_f, c.observed.verdict))
        .collect::<Vec<_>>();
    summary.push(format!(
        "a = {} admissible: {}; interval {:?}{}",
        demo.a,
        demo.a_admissible,
        demo.admissible_interval,
        if demo.r_general { " (general-r threshold |c| < r/2)" } else { "" }
    ));
    let code = if demo.consistent { 0 } else { 1 };
    let csv = || {
        let mut out = String::from("label,c_re,c_im,predicted_in_f,observed,agrees\n");
        for c in &demo.checks {
            let _ = writeln!(out, "\"{}\",{},{},{},{:?},{}", c.label, e(c.c.re), e(c.c.im), c.predicted_in_f, c.observed.verdict, c.agrees());
        }
        out
    };
    finish("counterexample gaussian", cfg, &demo, csv, summary.join("\n"), code)
}

#[derive(Serialize)]
struct OracleCheck {
    radial_nodes: usize,
    angles: usize,
    entries_checked: usize,
    /// `max |entry − quadrature| / max(1, |quadrature|)` over exact entries.
    max_deviation: f64,
}

#[derive(Serialize)]
struct MatrixReport {
    kind: String,
    matrix: MatrixExport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_error: Option<String>,
}

/// Pointwise action of the operator on `u_0..u_N`, as a function of `z`.
enum Pointwise {
    Creation,
    Annihilation,
    Q,
    P,
    Mult(EntireSymbol),
}

fn basis_values(z: Complex64, degree: usize, r: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut u = Complex64::new(1.0, 0.0);
    for n in 0..=degree {
        out.push(u);
        u *= z * (r / (n + 1) as f64).sqrt();
    }
    out
}

impl Pointwise {
    fn apply(&self, z: Complex64, degree: usize, r: f64) -> fockmult::Result<Vec<Complex64>> {
        let u = basis_values(z, degree, r);
        let i = Complex64::new(0.0, 1.0);
        // quadrature nodes never sit at the origin
        let raise = |m: usize| z * u[m];
        let lower = |m: usize| u[m] * (m as f64) / (r * z);
        Ok(match self {
            Pointwise::Creation => (0..=degree).map(raise).collect(),
            Pointwise::Annihilation => (0..=degree).map(lower).collect(),
            Pointwise::Q => (0..=degree).map(|m| raise(m) + lower(m)).collect(),
            Pointwise::P => (0..=degree).map(|m| i * (raise(m) - lower(m))).collect(),
            Pointwise::Mult(phi) => {
                let v = eval_symbol(phi, z, 400)?;
                u.iter().map(|x| x * v).collect()
            }
        })
    }
}

/// Gram matrix `G[m][n] = ⟨T u_m, u_n⟩`.
fn pointwise_gram(t: &Pointwise, degree: usize, rule: &QuadratureRule) -> fockmult::Result<DMatrix<Complex64>> {
    let r = rule.weight().r();
    let failure = RefCell::new(None);
    let g = gauss_gram(
        |z| {
            t.apply(z, degree, r).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                vec![Complex64::new(0.0, 0.0); degree + 1]
            })
        },
        |z| basis_values(z, degree, r),
        rule,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

/// Compare the exact entries of `op` with `⟨T u_m, u_n⟩` by quadrature. For the
/// harmonic operator the adjoint part is `⟨u_m, Ψ u_n⟩ = conj G_Ψ[n][m]`.
fn oracle_check(op: &TruncatedOperator, parts: &[Pointwise], adjoint: Option<&Pointwise>, cfg: &RunConfig) -> fockmult::Result<OracleCheck> {
    let n = op.degree();
    let rule = QuadratureRule::new(op.weight(), cfg.radial_nodes, cfg.angles)?;
    let mut expected = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    for t in parts {
        expected += pointwise_gram(t, n, &rule)?.transpose();
    }
    if let Some(t) = adjoint {
        expected += pointwise_gram(t, n, &rule)?.map(|c| c.conj());
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for row in 0..=n {
        for col in 0..=n {
            if op.is_exact(row, col) {
                let want = expected[(row, col)];
                worst = worst.max((op.entry(row, col) - want).norm() / want.norm().max(1.0));
                checked += 1;
            }
        }
    }
    Ok(OracleCheck { radial_nodes: cfg.radial_nodes, angles: cfg.angles, entries_checked: checked, max_deviation: worst })
}

pub fn matrix(kind: &str, spec: Option<&str>, spec2: Option<&str>, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (n, w) = (cfg.degree, cfg.weight());
    if spec2.is_some() && kind != "harmonic" {
        return Err(CliError::Input(format!("matrix {kind} takes at most one symbol spec")));
    }
    if spec.is_some() && !matches!(kind, "mult" | "harmonic") {
        return Err(CliError::Input(format!("matrix {kind} takes no symbol spec")));
    }
    let (op, parts, adjoint) = match kind {
        "creation" => (creation_matrix(n, w), vec![Pointwise::Creation], None),
        "annihilation" => (annihilation_matrix(n, w), vec![Pointwise::Annihilation], None),
        "q" => (q_matrix(n, w), vec![Pointwise::Q], None),
        "p" => (p_matrix(n, w), vec![Pointwise::P], None),
        "mult" => {
            let phi = symbol(spec, "mult", w)?;
            (mult_matrix(&phi, n, w), vec![Pointwise::Mult(phi)], None)
        }
        "harmonic" => {
            let big_phi = symbol(spec, "harmonic Φ", w)?;
            let big_psi = symbol(spec2, "harmonic Ψ", w)?;
            (harmonic_operator(&big_phi, &big_psi, n, w), vec![Pointwise::Mult(big_phi)], Some(Pointwise::Mult(big_psi)))
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown matrix kind {other:?}; expected creation, annihilation, q, p, mult or harmonic"
            )))
        }
    };
    let (oracle, oracle_error) = match oracle_check(&op, &parts, adjoint.as_ref(), cfg) {
        Ok(check) => (Some(check), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = format!(
        "{}: {}x{}, exact columns through {}, oracle deviation {}",
        op.provenance(),
        n + 1,
        n + 1,
        op.exact_cols().map_or("none".to_string(), |m| m.to_string()),
        oracle.as_ref().map_or_else(|| oracle_error.clone().unwrap_or_default(), |o| format!("{:.3e}", o.max_deviation))
    );
    let result = MatrixReport { kind: kind.to_string(), matrix: op.export(), oracle, oracle_error };
    Ok(finish(&format!("matrix {kind}"), cfg, &result, || op.to_csv(), summary, 0))
}
