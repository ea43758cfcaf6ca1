//! Domain pathologies of unbounded multiplication operators, as finite diagnostics.
//!
//! Partial sums are sampled at geometric checkpoints `x_i`; the increment over
//! `[x_i, x_{i+1}]` divided by `ln(x_{i+1}/x_i)` is a density in `ln x`, and its
//! log-log slope `q` decides the model: `q < −1/4` convergent, `|q| ≤ 1/4`
//! logarithmic, `q > 1/4` power growth.

mod sigma;

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use sigma::{LatticeSigma, SQUARE_LATTICE_G4_SUM};

use crate::error::{FockError, Result};
use crate::fock::GaussWeight;
use crate::oracle::{gauss_log_norm_over_annulus, AnnulusRule};
use crate::special::ln_factorial;
use crate::symbols::{fock_norm_partial, EntireSymbol};

/// Converges needs `last term / S` below this for index sequences.
pub const CAUCHY_TAIL_TOL: f64 = 1e-6;

const EXPONENT_SPLIT: f64 = 0.25;
const FIT_INTERVALS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Convergent { limit: f64 },
    Logarithmic { slope: f64 },
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// Number of terms summed.
    Index,
    /// Outer radius of the annulus `1 < |z| < R`.
    Radius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDiagnostic {
    pub label: String,
    pub abscissa: Abscissa,
    pub checkpoints: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Log-log slope of the density; `None` when the increments vanish.
    pub growth_exponent: Option<f64>,
    /// `last term / S` for index sequences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy_tail: Option<f64>,
    pub fitted_model: FittedModel,
    pub verdict: Verdict,
}

impl DivergenceDiagnostic {
    /// `x,partial_sum` lines, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let head = match self.abscissa {
            Abscissa::Index => "index",
            Abscissa::Radius => "R",
        };
        let mut out = format!("{head},partial_sum\n");
        for (x, s) in self.checkpoints.iter().zip(&self.partial_sums) {
            let _ = writeln!(out, "{x},{s:.16e}");
        }
        out
    }

    pub fn last(&self) -> f64 {
        *self.partial_sums.last().expect("diagnostics are never empty")
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fit the growth model. `origin` is the abscissa where the sum is 0 (annuli start at
/// `|z| = 1`); `fit_from` drops pre-asymptotic intervals.
fn fit(
    label: String,
    abscissa: Abscissa,
    checkpoints: Vec<f64>,
    partial_sums: Vec<f64>,
    origin: Option<f64>,
    fit_from: f64,
    cauchy_tail: Option<f64>,
) -> Result<DivergenceDiagnostic> {
    let mut xs = Vec::new();
    let mut ss = Vec::new();
    if let Some(o) = origin {
        xs.push(o);
        ss.push(0.0);
    }
    xs.extend(&checkpoints);
    ss.extend(&partial_sums);
    if ss.windows(2).any(|p| p[1] < p[0]) {
        return Err(FockError::Inconclusive(format!("{label}: partial sums decrease")));
    }
    let intervals: Vec<(f64, f64)> = (0..xs.len() - 1)
        .filter(|&i| xs[i] >= fit_from)
        .map(|i| ((xs[i] * xs[i + 1]).sqrt(), (ss[i + 1] - ss[i]) / (xs[i + 1] / xs[i]).ln()))
        .collect();
    let total = *ss.last().expect("nonempty");
    let window = &intervals[intervals.len().saturating_sub(FIT_INTERVALS)..];
    let last_density = window.last().map(|w| w.1);
    let (model, q) = match last_density {
        Some(d) if d > 0.0 => {
            let pos: Vec<&(f64, f64)> = window.iter().filter(|w| w.1 > 0.0).collect();
            if pos.len() < 2 {
                return Err(FockError::Inconclusive(format!("{label}: fewer than two growing intervals to fit")));
            }
            let lx: Vec<f64> = pos.iter().map(|w| w.0.ln()).collect();
            let ly: Vec<f64> = pos.iter().map(|w| w.1.ln()).collect();
            let q = least_squares_slope(&lx, &ly);
            let model = if q < -EXPONENT_SPLIT {
                FittedModel::Convergent { limit: total + d / -q }
            } else if q <= EXPONENT_SPLIT {
                FittedModel::Logarithmic { slope: d }
            } else {
                FittedModel::Power { exponent: q }
            };
            (model, Some(q))
        }
        Some(_) => (FittedModel::Convergent { limit: total }, None),
        None => return Err(FockError::Inconclusive(format!("{label}: no intervals beyond {fit_from}"))),
    };
    let verdict = match model {
        FittedModel::Convergent { .. } => {
            if let Some(t) = cauchy_tail {
                if t >= CAUCHY_TAIL_TOL {
                    return Err(FockError::Inconclusive(format!(
                        "{label}: model is convergent but last term / sum = {t:e} ≥ {CAUCHY_TAIL_TOL:e}; increase M"
                    )));
                }
            }
            Verdict::Converges
        }
        _ => Verdict::Diverges,
    };
    Ok(DivergenceDiagnostic {
        label,
        abscissa,
        checkpoints,
        partial_sums,
        growth_exponent: q,
        cauchy_tail,
        fitted_model: model,
        verdict,
    })
}

/// `⌊M/2^i⌋` ascending, from 1 up to `M`.
fn index_checkpoints(m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(m), |&x| (x > 1).then_some(x / 2)).collect();
    out.reverse();
    out.dedup();
    out
}

/// Diagnostic for `Σ_{n<M} t_n` with nonnegative terms.
pub fn series_diagnostic(label: impl Into<String>, m: usize, term: impl Fn(usize) -> f64) -> Result<DivergenceDiagnostic> {
    let label = label.into();
    if m < 16 {
        return Err(FockError::InvalidArgument(format!("{label}: need at least 16 terms, got {m}")));
    }
    let cps = index_checkpoints(m);
    let mut sums = Vec::with_capacity(cps.len());
    let mut total = 0.0;
    let mut next = 0;
    let mut last_term = 0.0;
    for n in 0..m {
        last_term = term(n);
        if !(last_term >= 0.0 && last_term.is_finite()) {
            return Err(FockError::Inconclusive(format!("{label}: term {n} is {last_term}")));
        }
        total += last_term;
        while next < cps.len() && cps[next] == n + 1 {
            sums.push(total);
            next += 1;
        }
    }
    let tail = if total > 0.0 { last_term / total } else { 0.0 };
    fit(label, Abscissa::Index, cps.iter().map(|&x| x as f64).collect(), sums, None, 16.0, Some(tail))
}

/// `(‖f‖², ‖zf‖²)` partial sums for `c_n = 1/(n+1)` in the orthonormal basis.
pub fn borderline_f(weight: GaussWeight, m: usize) -> Result<(DivergenceDiagnostic, DivergenceDiagnostic)> {
    if m < 100 {
        return Err(FockError::InvalidArgument(format!("borderline example needs M ≥ 100, got {m}")));
    }
    let r = weight.r();
    let f = series_diagnostic("|f|^2", m, |n| 1.0 / ((n + 1) as f64).powi(2))?;
    // z u_n = √((n+1)/r) u_{n+1}
    let zf = series_diagnostic("|zf|^2", m, |n| 1.0 / (r * (n + 1) as f64))?;
    Ok((f, zf))
}

/// `‖z^j g‖²` partial sums, `g = Σ a_{n+k} z^n` with `a_n = (‖z^n‖ (n+1))^{-1}`:
/// term `n` is `(n+j)!/(n+k)! · r^{k−j} / (n+k+1)²`.
pub fn shifted_g(k: usize, j: usize, weight: GaussWeight, m: usize) -> Result<DivergenceDiagnostic> {
    let ln_r = weight.r().ln();
    series_diagnostic(format!("|z^{j} g_{k}|^2"), m, |n| {
        let ratio = if j.abs_diff(k) <= 64 {
            let (hi, lo, up) = if j >= k { (n + j, n + k, true) } else { (n + k, n + j, false) };
            let p: f64 = ((lo + 1)..=hi).map(|i| i as f64).product();
            if up { p } else { 1.0 / p }
        } else {
            (ln_factorial(n + j) - ln_factorial(n + k)).exp()
        };
        ratio * ((k as f64 - j as f64) * ln_r).exp() / ((n + k + 1) as f64).powi(2)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCheck {
    pub label: String,
    /// Symbol `e^{c z²}`.
    pub c: Complex64,
    pub predicted_in_f: bool,
    pub observed: DivergenceDiagnostic,
}

impl MembershipCheck {
    pub fn agrees(&self) -> bool {
        (self.observed.verdict == Verdict::Converges) == self.predicted_in_f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDemo {
    pub w: Complex64,
    pub a: f64,
    pub r: f64,
    /// `(1 − r/(2|w|), r/(2|w|))`; `None` when `w = 0` (every `a` works) or `|w| ≥ r`.
    pub admissible_interval: Option<[f64; 2]>,
    pub a_admissible: bool,
    /// The interval uses the general-`r` threshold `|c| < r/2`.
    pub r_general: bool,
    pub checks: Vec<MembershipCheck>,
    pub consistent: bool,
}

/// Number of coefficients keeping `‖e^{cz²}‖²` partial sums finite and resolved.
fn gaussian_depth(c: f64, r: f64) -> usize {
    let growth = (2.0 * c / r).ln();
    if growth <= 0.0 {
        1 << 16
    } else {
        ((600.0 / growth) as usize).clamp(64, 1 << 16)
    }
}

/// Membership of `e^{cz²}` from coefficient partial sums; predicted by `|c| < r/2`.
pub fn gaussian_membership(label: impl Into<String>, c: Complex64, weight: GaussWeight) -> Result<MembershipCheck> {
    let label = label.into();
    let r = weight.r();
    let depth = gaussian_depth(c.norm(), r);
    let sym = EntireSymbol::exp_quadratic(c, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let partial = fock_norm_partial(&sym, weight, depth - 1);
    let observed = series_diagnostic(label.clone(), depth, |n| partial[n] - if n == 0 { 0.0 } else { partial[n - 1] })?;
    Ok(MembershipCheck { label, c, predicted_in_f: c.norm() < r / 2.0, observed })
}

/// `(f e^{wz²})(g e^{−awz²}) = fg e^{(1−a)wz²}`: both factors' Gaussian parts and the
/// base `e^{wz²}`, with the admissible interval for `a`.
pub fn gaussian_domain_demo(w: Complex64, a: f64, weight: GaussWeight) -> Result<GaussianDemo> {
    let r = weight.r();
    let half = r / 2.0;
    let checks = vec![
        gaussian_membership("exp(-a w z^2)", w * -a, weight)?,
        gaussian_membership("exp((1-a) w z^2)", w * (1.0 - a), weight)?,
        gaussian_membership("exp(w z^2)", w, weight)?,
    ];
    let admissible_interval = if w.norm() == 0.0 {
        None
    } else {
        let hi = half / w.norm();
        let lo = 1.0 - hi;
        (lo < hi).then_some([lo, hi])
    };
    let a_admissible = (a * w).norm() < half && ((1.0 - a) * w).norm() < half;
    let consistent = checks.iter().all(MembershipCheck::agrees)
        && admissible_interval.is_none_or(|[lo, hi]| (lo < a && a < hi) == a_admissible);
    Ok(GaussianDemo { w, a, r, admissible_interval, a_admissible, r_general: r != 1.0, checks, consistent })
}

fn annulus_diagnostic(
    label: String,
    ln_abs_f: impl Fn(Complex64) -> f64 + Sync,
    weight: GaussWeight,
    power: i32,
    radii: &[f64],
    fit_from: f64,
    rule: &AnnulusRule,
) -> Result<DivergenceDiagnostic> {
    if radii.len() < 2 || radii[0] <= 1.0 || radii.windows(2).any(|p| p[1] <= p[0]) {
        return Err(FockError::InvalidArgument(format!("{label}: need at least two increasing radii above 1")));
    }
    let mut sums = Vec::with_capacity(radii.len());
    let mut total = 0.0;
    let mut inner = 1.0;
    for &outer in radii {
        total += gauss_log_norm_over_annulus(&ln_abs_f, weight, inner, outer, power, rule)?;
        sums.push(total);
        inner = outer;
    }
    fit(label, Abscissa::Radius, radii.to_vec(), sums, Some(1.0), fit_from, None)
}

/// `∫_{1<|z|<R} |f|² |z|^{2p} dμ` for a polynomial control symbol.
pub fn polynomial_annulus_control(
    coeffs: &[Complex64],
    weight: GaussWeight,
    radii: &[f64],
    rule: &AnnulusRule,
) -> Result<DivergenceDiagnostic> {
    let ln_f = |z: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c).norm().ln();
    annulus_diagnostic("polynomial control".into(), ln_f, weight, 0, radii, 2.0, rule)
}

/// `∫_{1<|z|<R} |σ|² dμ`: `G²` is periodic, so this grows like the area.
pub fn sigma_domain_collapse(s: &LatticeSigma, radii: &[f64], rule: &AnnulusRule) -> Result<DivergenceDiagnostic> {
    annulus_diagnostic("|sigma|^2 on 1<|z|<R".into(), |z| s.ln_abs(z), s.weight(), 0, radii, sigma_fit_start(s), rule)
}

/// Shells closer than a couple of lattice cells still see the zeros of `p` individually.
fn sigma_fit_start(s: &LatticeSigma) -> f64 {
    (2.0 * s.spacing()).max(4.0)
}

pub const DEFAULT_SIGMA_RADII: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

/// `∫_{1<|z|<R} |σ/p|² |z|^{2j} dμ` with `p` vanishing at the `k+2` lattice points
/// nearest the origin.
pub fn sigma_over_p_domain(s: &LatticeSigma, k: usize, j: usize, radii: &[f64], rule: &AnnulusRule) -> Result<DivergenceDiagnostic> {
    let zeros = s.nearest_lattice_points(k + 2);
    sigma_over_p_with_zeros(s, &zeros, j, radii, rule)
}

/// As [`sigma_over_p_domain`] with explicit zeros of `p`, which must be distinct lattice points.
pub fn sigma_over_p_with_zeros(
    s: &LatticeSigma,
    zeros: &[Complex64],
    j: usize,
    radii: &[f64],
    rule: &AnnulusRule,
) -> Result<DivergenceDiagnostic> {
    sigma::validate_zeros(s, zeros)?;
    let zs = zeros.to_vec();
    let ln_f = move |z: Complex64| s.ln_abs(z) - zs.iter().map(|w| (z - w).norm().ln()).sum::<f64>();
    let label = format!("|sigma/p|^2 |z|^{} (deg p = {})", 2 * j, zeros.len());
    annulus_diagnostic(label, ln_f, s.weight(), j as i32, radii, sigma_fit_start(s), rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(r: f64) -> GaussWeight {
        GaussWeight::new(r).unwrap()
    }

    #[test]
    fn checkpoints_halve_down_to_one() {
        assert_eq!(index_checkpoints(100), vec![1, 3, 6, 12, 25, 50, 100]);
        assert_eq!(index_checkpoints(16), vec![1, 2, 4, 8, 16]);
    }

    #[test]
    fn borderline_examples() {
        let (f, zf) = borderline_f(w(1.0), 10_000).unwrap();
        let basel = std::f64::consts::PI.powi(2) / 6.0;
        assert!((f.last() - basel).abs() < 1e-4);
        assert_eq!(f.verdict, Verdict::Converges);
        assert_eq!(zf.verdict, Verdict::Diverges);
        assert!((zf.last() - ((10_000f64).ln() + 0.577_215_664_9)).abs() < 1e-3);
        match zf.fitted_model {
            FittedModel::Logarithmic { slope } => assert!((slope - 1.0).abs() < 0.02),
            other => panic!("{other:?}"),
        }
        assert!(borderline_f(w(1.0), 50).is_err());
    }

    #[test]
    fn borderline_slope_scales_with_inverse_r() {
        for r in [0.5, 2.0] {
            let (_, zf) = borderline_f(w(r), 100_000).unwrap();
            match zf.fitted_model {
                FittedModel::Logarithmic { slope } => assert!((slope * r - 1.0).abs() < 0.02),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn shifted_table_is_the_degree_predicate() {
        for k in 0..=4 {
            for j in 0..=4 {
                let d = shifted_g(k, j, w(1.0), 10_000).unwrap();
                assert_eq!(d.verdict == Verdict::Converges, j <= k, "k={k} j={j}: {:?}", d.fitted_model);
            }
        }
        let d = shifted_g(2, 3, w(1.0), 10_000).unwrap();
        assert!(matches!(d.fitted_model, FittedModel::Logarithmic { .. }));
    }

    #[test]
    fn shifted_terms_match_direct_norms() {
        // term n = |a_{n+k}|² ‖z^{n+j}‖² computed from factorials directly
        let r = 1.7;
        let (k, j) = (2usize, 3usize);
        let d = shifted_g(k, j, w(r), 64).unwrap();
        let norm_sq = |m: usize| (ln_factorial(m) - m as f64 * r.ln()).exp();
        let direct: f64 = (0..64)
            .map(|n| norm_sq(n + j) / (norm_sq(n + k) * ((n + k + 1) as f64).powi(2)))
            .sum();
        assert!((d.last() - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn gaussian_demo_examples() {
        let demo = gaussian_domain_demo(Complex64::new(0.6, 0.0), 0.5, w(1.0)).unwrap();
        assert!(demo.consistent);
        assert_eq!(demo.checks[0].observed.verdict, Verdict::Converges);
        assert_eq!(demo.checks[1].observed.verdict, Verdict::Converges);
        assert_eq!(demo.checks[2].observed.verdict, Verdict::Diverges);
        let [lo, hi] = demo.admissible_interval.unwrap();
        assert!((lo - (1.0 - 1.0 / 1.2)).abs() < 1e-15 && (hi - 1.0 / 1.2).abs() < 1e-15);
        assert!(!demo.r_general);

        let demo = gaussian_domain_demo(Complex64::new(0.4, 0.0), 0.0, w(1.0)).unwrap();
        assert!(demo.consistent);
        assert_eq!(demo.checks[2].observed.verdict, Verdict::Converges);
        // a = 0: the second factor is the base itself
        assert_eq!(demo.checks[1].observed.verdict, demo.checks[2].observed.verdict);

        let demo = gaussian_domain_demo(Complex64::new(0.0, 1.5), 0.5, w(2.0)).unwrap();
        assert!(demo.consistent && demo.r_general);
    }

    #[test]
    fn gaussian_boundary_rule() {
        for (c, inside) in [(0.4, true), (0.5, false), (0.6, false)] {
            let m = gaussian_membership("g", Complex64::new(c, 0.0), w(1.0)).unwrap();
            assert_eq!(m.predicted_in_f, inside);
            assert!(m.agrees(), "c = {c}: {:?}", m.observed.fitted_model);
        }
        for r in [0.5, 2.0] {
            for (f, inside) in [(0.8, true), (1.0, false), (1.2, false)] {
                let m = gaussian_membership("g", Complex64::new(0.0, f * r / 2.0), w(r)).unwrap();
                assert_eq!(m.predicted_in_f, inside);
                assert!(m.agrees(), "r = {r}, factor {f}");
            }
        }
    }

    #[test]
    fn sigma_collapse_grows_with_area() {
        let s = LatticeSigma::new(w(1.0));
        let rule = AnnulusRule::default();
        let d = sigma_domain_collapse(&s, &[4.0, 8.0, 16.0], &rule).unwrap();
        assert_eq!(d.verdict, Verdict::Diverges);
        let ratio = d.partial_sums[1] / d.partial_sums[0];
        let area = (64.0 - 1.0) / (16.0 - 1.0);
        assert!((ratio / area - 1.0).abs() < 0.1, "{ratio} vs {area}");
        match d.fitted_model {
            FittedModel::Power { exponent } => assert!((exponent - 2.0).abs() < 0.3),
            other => panic!("{other:?}"),
        }
        let ctrl = polynomial_annulus_control(
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            w(1.0),
            &[2.0, 4.0, 8.0, 16.0],
            &rule,
        )
        .unwrap();
        assert_eq!(ctrl.verdict, Verdict::Converges);
    }

    #[test]
    fn sigma_over_p_growth_classes() {
        let s = LatticeSigma::new(w(1.0));
        let rule = AnnulusRule::default();
        let radii = DEFAULT_SIGMA_RADII;
        let bounded = sigma_over_p_domain(&s, 0, 0, &radii, &rule).unwrap();
        assert_eq!(bounded.verdict, Verdict::Converges, "{:?}", bounded.growth_exponent);
        let log = sigma_over_p_domain(&s, 0, 1, &radii, &rule).unwrap();
        assert!(matches!(log.fitted_model, FittedModel::Logarithmic { slope } if slope > 0.0), "{:?}", log.growth_exponent);
        let power = sigma_over_p_domain(&s, 1, 3, &radii, &rule).unwrap();
        assert!(matches!(power.fitted_model, FittedModel::Power { .. }), "{:?}", power.growth_exponent);
        let ok = sigma_over_p_domain(&s, 1, 1, &radii, &rule).unwrap();
        assert_eq!(ok.verdict, Verdict::Converges);
    }

    #[test]
    fn sigma_over_p_rejects_off_lattice_zeros() {
        let s = LatticeSigma::new(w(1.0));
        let err = sigma_over_p_with_zeros(&s, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 0, &[2.0, 4.0], &AnnulusRule::default());
        assert!(matches!(err, Err(FockError::InvalidArgument(_))));
    }

    #[test]
    fn csv_export() {
        let d = shifted_g(3, 0, w(1.0), 64).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("index,partial_sum\n1,"));
        assert_eq!(csv.lines().count(), 1 + d.checkpoints.len());
    }
}
