//! Order/type estimation and membership verdicts for F and Λ.
//!
//! Λ is the class of entire φ with `|φ(z)| = O(exp(r|z|²/2 - N|z|))` for
//! every `N > 0`. At order 2 the membership boundary for both F and Λ sits
//! at type `r/2`.

use num_complex::Complex64;
use serde::Serialize;

use super::{eval_symbol, ClosedForm, EntireSymbol, LogCoeff};
use crate::error::{FockError, Result};
use crate::fock::GaussWeight;
use crate::special::ln_monomial_norm_sq;

/// Order tolerance for asymptotic verdicts.
pub const ORDER_MARGIN: f64 = 0.1;
/// Type tolerance, in units of r.
pub const TYPE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LambdaVerdict {
    InLambda,
    NotInLambda,
    BoundaryUnknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FockVerdict {
    InF,
    NotInF,
    BoundaryUnknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRule {
    Asymptotic,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub order_estimate: f64,
    pub type_estimate: f64,
    pub lambda_verdict: LambdaVerdict,
    pub fock_verdict: FockVerdict,
    /// `(n, order estimate on the window [n/2, n])`
    pub evidence: Vec<(usize, f64)>,
    pub rule_used: GrowthRule,
}

/// Least-squares slope of y against x.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Order estimate from the coefficients on `[lo, hi]`.
///
/// For order ρ and type σ, `-ln|a_n|/n ≈ (ln n - ln(eσρ))/ρ`, so the slope
/// of `-ln|a_n|/n` against `ln n` is `1/ρ`. Block minima (largest
/// coefficients in runs of four) trace the limsup envelope through lacunary
/// sequences.
fn order_on_window(a: &[LogCoeff], lo: usize, hi: usize) -> f64 {
    let lo = lo.max(2);
    let mut points = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = (start + 4).min(hi + 1);
        let best = (start..end)
            .filter(|&n| !a[n].is_zero())
            .map(|n| (n, -a[n].ln_abs / n as f64))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((n, y)) = best {
            points.push(((n as f64).ln(), y));
        }
        start = end;
    }
    if points.len() < 3 {
        // finitely many nonzero coefficients: polynomial, order 0
        return 0.0;
    }
    match slope(&points) {
        Some(s) if s > 0.0 => (1.0 / s).max(0.0),
        _ => f64::INFINITY,
    }
}

/// `max n|a_n|^{2/n}/(2e)` over the tail window.
fn type_on_window(a: &[LogCoeff], lo: usize, hi: usize) -> f64 {
    (lo.max(1)..=hi)
        .filter(|&n| !a[n].is_zero())
        .map(|n| ((n as f64).ln() + 2.0 * a[n].ln_abs / n as f64 - (2.0 * std::f64::consts::E).ln()).exp())
        .fold(0.0, f64::max)
}

fn closed_form_verdict(phi: &EntireSymbol, r: f64) -> Option<(LambdaVerdict, FockVerdict)> {
    let inside = (LambdaVerdict::InLambda, FockVerdict::InF);
    let outside = (LambdaVerdict::NotInLambda, FockVerdict::NotInF);
    match phi.closed_form() {
        ClosedForm::Zero => Some(inside),
        ClosedForm::Exact(alpha) => Some(if alpha.norm() < r / 2.0 { inside } else { outside }),
        ClosedForm::AtMost(m) => (m < r / 2.0).then_some(inside),
        ClosedForm::Unknown => None,
    }
}

/// Growth classification of `φ` against F and Λ from its first `depth`
/// coefficients; closed-form rules override the asymptotic estimate.
pub fn classify_growth(phi: &EntireSymbol, weight: GaussWeight, depth: usize) -> Result<GrowthReport> {
    if depth < 50 {
        return Err(FockError::InvalidArgument(format!("classification depth {depth} < 50")));
    }
    let r = weight.r();
    let a = phi.log_coeffs(depth);
    let order = order_on_window(&a, depth / 2, depth);
    let sigma = type_on_window(&a, depth / 2, depth);
    let evidence = [depth / 4, depth / 2, 3 * depth / 4, depth]
        .into_iter()
        .filter(|&n| n >= 8)
        .map(|n| (n, order_on_window(&a, n / 2, n)))
        .collect();

    let asymptotic = if order < 2.0 - ORDER_MARGIN
        || ((order - 2.0).abs() <= ORDER_MARGIN && sigma < r / 2.0 - TYPE_MARGIN * r)
    {
        Some((LambdaVerdict::InLambda, FockVerdict::InF))
    } else if order > 2.0 + ORDER_MARGIN || sigma > r / 2.0 + TYPE_MARGIN * r {
        Some((LambdaVerdict::NotInLambda, FockVerdict::NotInF))
    } else {
        None
    };
    let (verdicts, rule_used) = match closed_form_verdict(phi, r) {
        Some(v) => (v, GrowthRule::ClosedForm),
        None => (
            asymptotic.unwrap_or((LambdaVerdict::BoundaryUnknown, FockVerdict::BoundaryUnknown)),
            GrowthRule::Asymptotic,
        ),
    };
    Ok(GrowthReport {
        order_estimate: order,
        type_estimate: sigma,
        lambda_verdict: verdicts.0,
        fock_verdict: verdicts.1,
        evidence,
        rule_used,
    })
}

/// Partial sums `S_n = Σ_{m≤n} |a_m|² m!/r^m`, n = 0..=N.
pub fn fock_norm_partial(phi: &EntireSymbol, weight: GaussWeight, degree: usize) -> Vec<f64> {
    let r = weight.r();
    let mut total = 0.0;
    phi.log_coeffs(degree)
        .iter()
        .enumerate()
        .map(|(n, a)| {
            if !a.is_zero() {
                total += (2.0 * a.ln_abs + ln_monomial_norm_sq(n, r)).exp();
            }
            total
        })
        .collect()
}

/// Constants from the bound `|φ(z)| ≤ C·exp(r|z|²/2 - N|z|)` with
/// `C = max_k ‖φ e_{w_k}‖`, `w_k = (√2 N/r) i^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaWitness {
    pub c: f64,
    pub max_violation: f64,
    pub nodes: Vec<Complex64>,
    pub product_norms: Vec<f64>,
}

const WITNESS_MAX_DEPTH: usize = 4096;

fn converged_norm(phi: &EntireSymbol, weight: GaussWeight) -> Result<f64> {
    let mut depth = 64;
    loop {
        let sums = fock_norm_partial(phi, weight, depth);
        let total = sums[depth];
        let tail = total - sums[depth - 16];
        let earlier = sums[depth - 16] - sums[depth - 32];
        if total.is_finite() && tail <= 1e-17 * total && tail <= earlier {
            return Ok(total.sqrt());
        }
        if depth >= WITNESS_MAX_DEPTH {
            return Err(FockError::NormNotConvergent {
                depth,
                detail: format!("‖{phi}‖² partial sum {total:e}, last block {tail:e}"),
            });
        }
        depth *= 2;
    }
}

pub fn lambda_bound_witness(
    phi: &EntireSymbol,
    n_param: f64,
    weight: GaussWeight,
    samples: &[Complex64],
) -> Result<LambdaWitness> {
    if n_param.is_nan() || n_param <= 0.0 {
        return Err(FockError::InvalidArgument(format!("bound parameter N = {n_param} must be positive")));
    }
    let r = weight.r();
    let radius = std::f64::consts::SQRT_2 * n_param / r;
    let nodes: Vec<Complex64> = (0..4)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::FRAC_PI_2 * k as f64))
        .collect();
    let product_norms = nodes
        .iter()
        .map(|&w| converged_norm(&EntireSymbol::product(vec![phi.clone(), EntireSymbol::kernel(w, weight)]), weight))
        .collect::<Result<Vec<f64>>>()?;
    let c = product_norms.iter().copied().fold(0.0, f64::max);
    let mut max_violation = f64::NEG_INFINITY;
    for &z in samples {
        let value = eval_symbol(phi, z, 400)?.norm();
        let s = z.norm();
        let bound = c * (r * s * s / 2.0 - n_param * s).exp();
        max_violation = max_violation.max(value - bound);
    }
    Ok(LambdaWitness { c, max_violation, nodes, product_norms })
}
