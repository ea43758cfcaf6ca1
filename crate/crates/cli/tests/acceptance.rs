//! Acceptance gate: fourteen criteria at their stated tolerances, one line each.
//! Runs without the libtest harness so every line prints even when some fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use fockmult::counterexamples::{
    borderline_f, gaussian_membership, shifted_g, sigma_over_p_domain, FittedModel, LatticeSigma, Verdict,
    DEFAULT_SIGMA_RADII,
};
use fockmult::fock::{embed_symbol, kernel_vector};
use fockmult::operators::{annihilation_matrix, commutator, creation_matrix, mult_matrix};
use fockmult::oracle::{gauss_inner, AnnulusRule, QuadratureRule};
use fockmult::symbols::{classify_growth, lambda_bound_witness, FockVerdict};
use fockmult::verify::{
    check_harmonic, check_remark5, check_thm4_a, check_thm4_a_operator, check_thm4_b, check_thm4_d, check_thm4_f,
    default_grid, hermite_difference_quotient, hermite_limit, TestFamily, DEFAULT_PK_POWERS,
};
use fockmult::{EntireSymbol, FockVector, GaussWeight};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn w(r: f64) -> GaussWeight {
    GaussWeight::new(r).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn orthonormality() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let rule = QuadratureRule::new(w(r), 40, 128).map_err(|e| e.to_string())?;
        let basis: Vec<FockVector> = (0..=30).map(|n| FockVector::basis(n, 30, w(r))).collect();
        for (n, un) in basis.iter().enumerate() {
            for (m, um) in basis.iter().enumerate() {
                let g = gauss_inner(|z| un.eval(z), |z| um.eval(z), &rule).map_err(|e| e.to_string())?;
                let delta = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((g - delta).norm());
            }
        }
    }
    ensure(worst <= 1e-10, format!("max |<u_n,u_m> - delta| = {worst:.2e} (bound 1e-10)"))
}

fn reproducing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let weight = w(1.0);
    let rule = QuadratureRule::with_defaults(weight);
    let (mut oracle_err, mut coeff_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let degree = rng.gen_range(0..=10);
        let p = EntireSymbol::polynomial((0..=degree).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
        let f = embed_symbol(&p, 10, weight);
        let at = Complex64::from_polar(2.0 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        let value = f.eval(at);
        let via_oracle = gauss_inner(|z| f.eval(z), |z| (weight.r() * z * at.conj()).exp(), &rule).map_err(|e| e.to_string())?;
        let via_kernel = f.inner(&kernel_vector(at, 10, weight)).map_err(|e| e.to_string())?;
        oracle_err = oracle_err.max((via_oracle - value).norm() / value.norm());
        coeff_err = coeff_err.max((via_kernel - value).norm() / value.norm());
    }
    ensure(
        oracle_err <= 1e-10 && coeff_err <= 1e-10,
        format!("relative error: quadrature {oracle_err:.2e}, coefficients {coeff_err:.2e} (bound 1e-10)"),
    )
}

fn ladder() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut adjoint_exact = true;
    let mut block = usize::MAX;
    for r in [0.5, 1.0, 2.0] {
        let (up, down) = (creation_matrix(64, w(r)), annihilation_matrix(64, w(r)));
        adjoint_exact &= up.adjoint().matrix() == down.matrix();
        let comm = commutator(&down, &up).map_err(|e| e.to_string())?;
        let m = comm.exact_cols().ok_or("commutator has no exact columns")?;
        block = block.min(m + 1);
        for i in 0..=m {
            for j in 0..=m {
                let want = if i == j { 1.0 / r } else { 0.0 };
                worst = worst.max((comm.entry(i, j) - want).norm());
            }
        }
    }
    ensure(
        adjoint_exact && worst <= 1e-12 && block >= 63,
        format!("adjoint exact: {adjoint_exact}; [a-,a+] - I/r = {worst:.2e} on {block}x{block} block (bound 1e-12)"),
    )
}

fn kernel_eigenvectors() -> Outcome {
    let symbols = [
        EntireSymbol::monomial(1),
        EntireSymbol::monomial(2),
        EntireSymbol::polynomial(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        EntireSymbol::exp_quadratic(c(0.2, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for phi in &symbols {
        let rep = check_thm4_d(phi, &default_grid(), &[16, 32, 64], w(1.0), 1e-8).map_err(|e| e.to_string())?;
        ok &= rep.max_residual <= 1e-8 && rep.monotone == Some(true);
        lines.push(format!("{phi}: {:.1e} monotone={:?}", rep.max_residual, rep.monotone));
    }
    ensure(ok, lines.join("; "))
}

fn commutation_chain() -> Outcome {
    let (weight, grid) = (w(1.0), default_grid());
    let phi = EntireSymbol::monomial(2);
    let a = mult_matrix(&phi, 64, weight);
    let pk = TestFamily::pk(grid.clone(), DEFAULT_PK_POWERS, 64, weight).map_err(|e| e.to_string())?;
    let reports = [
        check_thm4_a(&phi, &grid, &grid, 64, weight, 1e-8),
        check_thm4_b(&a, &pk, 1e-8),
        check_thm4_d(&phi, &grid, &[16, 32, 64], weight, 1e-8),
        check_thm4_f(&phi, &grid, 64, weight, 1e-8),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let control = check_thm4_a_operator(&annihilation_matrix(64, weight), &grid, &grid, 1e-8).map_err(|e| e.to_string())?;
    let all = reports.iter().all(|r| r.pass);
    let summary: Vec<String> = reports.iter().map(|r| format!("{:?} {:.1e}", r.condition_id, r.max_residual)).collect();
    ensure(
        all && !control.pass && control.max_residual >= 1e-3,
        format!("{}; annihilation control residual {:.2e} (needs >= 1e-3)", summary.join(", "), control.max_residual),
    )
}

fn symbol_commutators() -> Outcome {
    let mut worst: f64 = 0.0;
    for phi in [EntireSymbol::monomial(2), EntireSymbol::monomial(3)] {
        let [q, p] = check_remark5(&phi, 64, w(1.0), 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max(q.max_residual).max(p.max_residual);
    }
    ensure(worst <= 1e-12, format!("max entry residual {worst:.2e} (bound 1e-12)"))
}

fn harmonic_symbols() -> Outcome {
    let v = [c(0.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5)];
    let rep = check_harmonic(&EntireSymbol::monomial(2), &EntireSymbol::monomial(3), &v, 64, w(1.0), 1e-8)
        .map_err(|e| e.to_string())?;
    ensure(rep.pass, format!("max residual {:.2e}, tail {:.1e} (tol 1e-8)", rep.max_residual, rep.truncation_tail))
}

fn difference_quotient() -> Outcome {
    let weight = w(1.0);
    let hs = [1e-2, 1e-3, 1e-4];
    let mut lines = Vec::new();
    let mut ok = true;
    for n in 0..=3 {
        let target = hermite_limit(n, 32, weight);
        let errs = hs
            .iter()
            .map(|&h| Ok(hermite_difference_quotient(n, h, 32, weight)?.sub(&target)?.norm()))
            .collect::<Result<Vec<f64>, fockmult::FockError>>()
            .map_err(|e| e.to_string())?;
        let constant = errs.iter().zip(&hs).map(|(e, h)| e / h).fold(0.0, f64::max);
        if errs.iter().all(|&e| e == 0.0) {
            lines.push(format!("n={n}: exact"));
            continue;
        }
        // least-squares slope of ln err against ln h
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let order = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        ok &= order >= 0.9;
        lines.push(format!("n={n}: order {order:.3}, C {constant:.2}"));
    }
    ensure(ok, lines.join("; "))
}

fn borderline() -> Outcome {
    let start = Instant::now();
    let (f, _) = borderline_f(w(1.0), 10_000).map_err(|e| e.to_string())?;
    let basel = std::f64::consts::PI.powi(2) / 6.0;
    let gap = (f.last() - basel).abs();
    let mut ok = gap <= 1e-4 && f.verdict == Verdict::Converges;
    let mut lines = vec![format!("|f|^2 gap to pi^2/6 {gap:.5e}")];
    for r in [0.5, 1.0, 2.0] {
        let (_, zf) = borderline_f(w(r), 1_000_000).map_err(|e| e.to_string())?;
        match zf.fitted_model {
            FittedModel::Logarithmic { slope } => {
                let rel = (slope * r - 1.0).abs();
                ok &= rel <= 0.02 && zf.verdict == Verdict::Diverges;
                lines.push(format!("r={r}: slope {slope:.4} vs 1/r ({:.2}%)", 100.0 * rel));
            }
            other => {
                ok = false;
                lines.push(format!("r={r}: model {other:?}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(ok && secs <= 30.0, format!("{}; {secs:.1}s (limit 30s)", lines.join("; ")))
}

fn degree_grading() -> Outcome {
    let mut wrong = Vec::new();
    for k in 0..=4 {
        for j in 0..=4 {
            let d = shifted_g(k, j, w(1.0), 10_000).map_err(|e| e.to_string())?;
            if (d.verdict == Verdict::Converges) != (j <= k) {
                wrong.push(format!("(k={k}, j={j}) {:?}", d.verdict));
            }
        }
    }
    ensure(wrong.is_empty(), if wrong.is_empty() { "25/25 cases match j <= k".into() } else { wrong.join(", ") })
}

fn gaussian_boundary() -> Outcome {
    let weight = w(1.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for (cval, in_f) in [(0.4, true), (0.5, false), (0.6, false)] {
        let check = gaussian_membership(format!("exp({cval} z^2)"), c(cval, 0.0), weight).map_err(|e| e.to_string())?;
        let sym = EntireSymbol::exp_quadratic(c(cval, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let classified = classify_growth(&sym, weight, 400).map_err(|e| e.to_string())?.fock_verdict;
        let observed = check.observed.verdict == Verdict::Converges;
        let want = if in_f { FockVerdict::InF } else { FockVerdict::NotInF };
        ok &= check.predicted_in_f == in_f && observed == in_f && classified == want;
        lines.push(format!("c={cval}: series {:?}, classified {classified:?}", check.observed.verdict));
    }
    ensure(ok, lines.join("; "))
}

fn lambda_witness() -> Outcome {
    let weight = w(1.0);
    let mut samples = Vec::new();
    for i in 0..=20 {
        for j in 0..=20 {
            let z = c(-5.0 + 0.5 * i as f64, -5.0 + 0.5 * j as f64);
            if z.norm() <= 5.0 {
                samples.push(z);
            }
        }
    }
    let symbols = [EntireSymbol::constant(c(1.0, 0.0)), EntireSymbol::monomial(1), EntireSymbol::kernel(c(1.0, 0.0), weight)];
    let mut lines = Vec::new();
    let mut ok = true;
    for phi in &symbols {
        for n in [1.0, 2.0] {
            let wit = lambda_bound_witness(phi, n, weight, &samples).map_err(|e| e.to_string())?;
            ok &= wit.max_violation <= 1e-9 * wit.c;
            lines.push(format!("{phi} N={n}: violation/C {:.1e}", wit.max_violation / wit.c));
        }
    }
    ensure(ok, lines.join("; "))
}

fn sigma() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let s = LatticeSigma::new(w(r));
        let a = s.spacing();
        for i in 0..10 {
            for j in 0..10 {
                let z = c(a * (i as f64 + 0.37) / 10.0, a * (j as f64 + 0.61) / 10.0);
                let g = s.modulus_g(z);
                for shift in [c(a, 0.0), c(0.0, a), c(-2.0 * a, 3.0 * a)] {
                    worst = worst.max((s.modulus_g(z + shift) - g).abs() / g);
                }
            }
        }
    }
    let s = LatticeSigma::new(w(1.0));
    let rule = AnnulusRule::default();
    let mut lines = vec![format!("G periodicity {worst:.1e}")];
    let mut ok = worst <= 1e-8;
    for (k, j, want) in [(0, 0, "convergent"), (0, 1, "logarithmic"), (1, 3, "power")] {
        let d = sigma_over_p_domain(&s, k, j, &DEFAULT_SIGMA_RADII, &rule).map_err(|e| e.to_string())?;
        let got = match d.fitted_model {
            FittedModel::Convergent { .. } => "convergent",
            FittedModel::Logarithmic { .. } => "logarithmic",
            FittedModel::Power { .. } => "power",
        };
        ok &= got == want;
        lines.push(format!("(k={k}, j={j}) {got} q={:.2}", d.growth_exponent.unwrap_or(f64::NAN)));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(ok && secs <= 60.0, format!("{}; {secs:.1}s (limit 60s)", lines.join("; ")))
}

fn determinism() -> Outcome {
    let invocations: [&[&str]; 5] = [
        &["classify", "exp:0.3+0.1i,1,0"],
        &["verify", "thm4a", "poly:0,0,1", "--N", "32"],
        &["verify", "remark5", "poly:0,0,0,1"],
        &["counterexample", "sigma-over-p", "--k", "0", "--j", "1"],
        &["matrix", "mult", "kernel:0.5-0.5i", "--N", "16"],
    ];
    for args in invocations {
        let run = || Command::new(env!("CARGO_BIN_EXE_fockmult")).args(args).output().map_err(|e| e.to_string());
        let (first, second) = (run()?, run()?);
        if first.stdout.is_empty() || first.stdout != second.stdout || first.status != second.status {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
        let json: serde_json::Value = serde_json::from_slice(&first.stdout).map_err(|e| e.to_string())?;
        if json["schema"] != 1 {
            return Err(format!("`{}`: missing schema 1", args.join(" ")));
        }
    }
    Ok(format!("{} invocations byte-identical", invocations.len()))
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("orthonormality oracle", orthonormality),
        ("reproducing property", reproducing),
        ("ladder algebra", ladder),
        ("kernel eigenvectors of the adjoint", kernel_eigenvectors),
        ("commutation chain", commutation_chain),
        ("ladder commutators with symbols", symbol_commutators),
        ("harmonic symbols", harmonic_symbols),
        ("difference quotient", difference_quotient),
        ("borderline example", borderline),
        ("degree grading", degree_grading),
        ("Gaussian boundary", gaussian_boundary),
        ("growth-bound witness", lambda_witness),
        ("sigma function", sigma),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
