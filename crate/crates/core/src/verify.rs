//! Commutation-relation checks over finite test families.
//!
//! Every check reports `max_residual` and an a priori `truncation_tail`; a report
//! passes iff `max_residual ≤ tol + truncation_tail` (and, for N-sequence checks,
//! the residuals decrease). The tail only covers entries flagged inexact by the
//! operator masks plus kernel remainders, so residuals in exact entries must meet
//! `tol` on their own.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::fock::{embed_symbol, kernel_vector, monomial_times_kernel, FockVector, GaussWeight};
use crate::operators::{annihilation_matrix, commutator, creation_matrix, harmonic_operator, mult_matrix, q_matrix, p_matrix, TruncatedOperator};
use crate::special::ln_factorial;
use crate::symbols::{derivative, eval_symbol, format_complex, EntireSymbol};

/// Residuals this small are rounding noise in the monotonicity test.
pub const ROUNDING_FLOOR: f64 = 1e-14;

const EVAL_TERMS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConditionId {
    Def3,
    Thm4a,
    Thm4b,
    Thm4d,
    Thm4f,
    #[serde(rename = "remark5Q")]
    Remark5Q,
    #[serde(rename = "remark5P")]
    Remark5P,
    Remark6,
    Prop2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub condition_id: ConditionId,
    pub r: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub grid: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_grid: Option<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pk_powers: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degree_sequence: Vec<usize>,
    pub residuals: Vec<Residual>,
    pub max_residual: f64,
    pub truncation_tail: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
    pub pass: bool,
}

impl CommutationReport {
    fn new(condition_id: ConditionId, weight: GaussWeight, degree: usize, grid: Vec<Complex64>, tol: f64) -> Self {
        Self {
            condition_id,
            r: weight.r(),
            degree,
            grid,
            w_grid: None,
            pk_powers: None,
            degree_sequence: Vec::new(),
            residuals: Vec::new(),
            max_residual: 0.0,
            truncation_tail: 0.0,
            tol,
            monotone: None,
            pass: false,
        }
    }

    /// Pass verdict from the stored fields alone.
    pub fn verdict(&self) -> bool {
        self.max_residual <= self.tol + self.truncation_tail && self.monotone != Some(false)
    }

    fn finish(mut self) -> Self {
        self.pass = self.verdict();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FamilyKind {
    K,
    PK,
}

/// `K`: truncated kernels `e_w`; `PK`: truncated `z^j e_w` for `j ≤ max_power`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    kind: FamilyKind,
    grid: Vec<Complex64>,
    max_power: usize,
    degree: usize,
    weight: GaussWeight,
}

pub struct TestVector {
    pub label: String,
    pub vector: FockVector,
    /// `‖tail beyond N‖ / ‖truncation‖` of the untruncated member.
    pub tail_ratio: f64,
}

/// `{0, ±0.5, ±0.5i, 0.7+0.3i}`.
pub fn default_grid() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(0.5, 0.0),
        Complex64::new(-0.5, 0.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(0.0, -0.5),
        Complex64::new(0.7, 0.3),
    ]
}

pub const DEFAULT_PK_POWERS: usize = 3;

impl TestFamily {
    pub fn kernels(grid: Vec<Complex64>, degree: usize, weight: GaussWeight) -> Result<Self> {
        Self::build(FamilyKind::K, grid, 0, degree, weight)
    }

    pub fn pk(grid: Vec<Complex64>, max_power: usize, degree: usize, weight: GaussWeight) -> Result<Self> {
        Self::build(FamilyKind::PK, grid, max_power, degree, weight)
    }

    fn build(kind: FamilyKind, grid: Vec<Complex64>, max_power: usize, degree: usize, weight: GaussWeight) -> Result<Self> {
        if grid.is_empty() {
            return Err(FockError::InvalidArgument("test family grid is empty".into()));
        }
        if max_power > degree {
            return Err(FockError::InvalidArgument(format!("power {max_power} exceeds truncation degree {degree}")));
        }
        Ok(Self { kind, grid, max_power, degree, weight })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn grid(&self) -> &[Complex64] {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weight(&self) -> GaussWeight {
        self.weight
    }

    pub fn members(&self) -> Vec<TestVector> {
        let powers = match self.kind {
            FamilyKind::K => 0..=0,
            FamilyKind::PK => 0..=self.max_power,
        };
        let mut out = Vec::new();
        for w in &self.grid {
            for j in powers.clone() {
                let vector = monomial_times_kernel(j, *w, self.degree, self.weight);
                let extended = monomial_times_kernel(j, *w, 2 * self.degree + 32, self.weight);
                let tail: f64 = extended.coeffs()[self.degree + 1..].iter().map(|c| c.norm_sqr()).sum();
                let label = match self.kind {
                    FamilyKind::K => format!("e[{}]", format_complex(*w)),
                    FamilyKind::PK => format!("z^{j}e[{}]", format_complex(*w)),
                };
                out.push(TestVector { label, tail_ratio: tail.sqrt() / vector.norm(), vector });
            }
        }
        out
    }
}

fn to_dvec(f: &FockVector) -> DVector<Complex64> {
    DVector::from_column_slice(f.coeffs())
}

fn masked(op: &TruncatedOperator, keep_exact: bool) -> DMatrix<Complex64> {
    let mask = op.exact_mask();
    DMatrix::from_fn(op.matrix().nrows(), op.matrix().ncols(), |n, m| {
        if mask[(n, m)] == keep_exact {
            op.matrix()[(n, m)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn abs_vec(v: &DVector<Complex64>) -> DVector<f64> {
    v.map(|z| z.norm())
}

/// Relative-commutation residuals `|⟨Aη, B*ξ⟩ − ⟨Bη, A*ξ⟩| / (‖η‖‖ξ‖(1+‖A‖₂)(1+‖B‖₂))`.
/// Returns `(label, residual, tail)` per ordered pair.
fn def3_pairs(a: &TruncatedOperator, b: &TruncatedOperator, members: &[TestVector]) -> Result<Vec<(String, f64, f64)>> {
    // ⟨Aη, B*ξ⟩ − ⟨Bη, A*ξ⟩ = ξ^H (BA − AB) η
    let c = commutator(b, a)?;
    let scale = (1.0 + a.spectral_norm()) * (1.0 + b.spectral_norm());
    let c_norm = c.spectral_norm();
    let inexact_abs = masked(&c, false).map(|z| z.norm());
    let images: Vec<(DVector<Complex64>, DVector<f64>)> = members
        .iter()
        .map(|eta| {
            let v = to_dvec(&eta.vector);
            (c.matrix() * &v, &inexact_abs * abs_vec(&v))
        })
        .collect();
    let pairs: Vec<(usize, usize)> =
        (0..members.len()).flat_map(|i| (0..members.len()).map(move |j| (i, j))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| {
            let (eta, xi) = (&members[i], &members[j]);
            let xv = to_dvec(&xi.vector);
            let norm = eta.vector.norm() * xi.vector.norm() * scale;
            let value = xv.dotc(&images[i].0).norm() / norm;
            let contamination = abs_vec(&xv).dot(&images[i].1);
            let kernel_part = c_norm * eta.vector.norm() * xi.vector.norm() * (eta.tail_ratio + xi.tail_ratio);
            let label = format!("eta={},xi={}", eta.label, xi.label);
            (label, value, (contamination + kernel_part) / norm)
        })
        .collect())
}

fn absorb(report: &mut CommutationReport, rows: Vec<(String, f64, f64)>) {
    for (label, value, tail) in rows {
        report.max_residual = report.max_residual.max(value);
        report.truncation_tail = report.truncation_tail.max(tail);
        report.residuals.push(Residual { label, value });
    }
}

/// `A` and `B` commute relative to the family: `⟨Aη, B*ξ⟩ = ⟨Bη, A*ξ⟩` on all member pairs.
pub fn check_commute_rel(a: &TruncatedOperator, b: &TruncatedOperator, family: &TestFamily, tol: f64) -> Result<CommutationReport> {
    commute_as(ConditionId::Def3, a, b, family, tol)
}

fn commute_as(id: ConditionId, a: &TruncatedOperator, b: &TruncatedOperator, family: &TestFamily, tol: f64) -> Result<CommutationReport> {
    a.weight().ensure_same(family.weight())?;
    if a.degree() != family.degree() {
        return Err(FockError::SizeMismatch { left: a.degree() + 1, right: family.degree() + 1 });
    }
    let mut report = CommutationReport::new(id, family.weight(), family.degree(), family.grid().to_vec(), tol);
    if family.kind() == FamilyKind::PK {
        report.pk_powers = Some(family.max_power);
    }
    absorb(&mut report, def3_pairs(a, b, &family.members())?);
    Ok(report.finish())
}

/// `[A, M_z] = 0` relative to `PK`.
pub fn check_thm4_b(a: &TruncatedOperator, family: &TestFamily, tol: f64) -> Result<CommutationReport> {
    let mz = mult_matrix(&EntireSymbol::monomial(1), a.degree(), a.weight());
    commute_as(ConditionId::Thm4b, a, &mz, family, tol)
}

/// `[A, M_{e_w}] = 0` relative to `K(v_grid)` for an arbitrary operator,
/// for every `w` in `w_grid`.
pub fn check_thm4_a_operator(
    a: &TruncatedOperator,
    w_grid: &[Complex64],
    v_grid: &[Complex64],
    tol: f64,
) -> Result<CommutationReport> {
    let (degree, weight) = (a.degree(), a.weight());
    if w_grid.is_empty() {
        return Err(FockError::InvalidArgument("w grid is empty".into()));
    }
    let family = TestFamily::kernels(v_grid.to_vec(), degree, weight)?;
    let members = family.members();
    let mut report = CommutationReport::new(ConditionId::Thm4a, weight, degree, v_grid.to_vec(), tol);
    report.w_grid = Some(w_grid.to_vec());
    for w in w_grid {
        let mw = mult_matrix(&EntireSymbol::kernel(*w, weight), degree, weight);
        let rows = def3_pairs(a, &mw, &members)?
            .into_iter()
            .map(|(l, v, t)| (format!("w={},{l}", format_complex(*w)), v, t))
            .collect();
        absorb(&mut report, rows);
    }
    Ok(report.finish())
}

/// Kernel-multiplier commutation for `A = M_φ`, plus the closed form
/// `⟨M_{e_u} e_v, A* e_w⟩ = φ(w) e^{r(ū+v̄)w}` on grid triples.
pub fn check_thm4_a(
    phi: &EntireSymbol,
    w_grid: &[Complex64],
    v_grid: &[Complex64],
    degree: usize,
    weight: GaussWeight,
    tol: f64,
) -> Result<CommutationReport> {
    let a = mult_matrix(phi, degree, weight);
    let mut report = check_thm4_a_operator(&a, w_grid, v_grid, tol)?;
    let a_star = a.adjoint();
    let r = weight.r();
    let mut rows = Vec::new();
    for w in w_grid {
        let phi_w = eval_symbol(phi, *w, EVAL_TERMS)?;
        let a_star_ew = a_star.apply(&kernel_vector(*w, degree, weight))?;
        for u in v_grid {
            let mu = mult_matrix(&EntireSymbol::kernel(*u, weight), degree, weight);
            for v in v_grid {
                let lhs = mu.apply(&kernel_vector(*v, degree, weight))?.inner(&a_star_ew)?;
                let rhs = phi_w * (r * (u.conj() + v.conj()) * w).exp();
                let label = format!("closed-form u={},v={},w={}", format_complex(*u), format_complex(*v), format_complex(*w));
                rows.push((label, (lhs - rhs).norm() / rhs.norm().max(1.0), 0.0));
            }
        }
    }
    absorb(&mut report, rows);
    Ok(report.finish())
}

/// Kernels as eigenvectors of the adjoint: `‖M_φ* e_w − conj φ(w) e_w‖ / ‖e_w‖` along an increasing `N` sequence.
/// `max_residual` is taken at the largest `N`.
pub fn check_thm4_d(
    phi: &EntireSymbol,
    w_grid: &[Complex64],
    degrees: &[usize],
    weight: GaussWeight,
    tol: f64,
) -> Result<CommutationReport> {
    eigen_residuals(ConditionId::Thm4d, phi, w_grid, degrees, weight, tol)
}

/// The adjoint eigen-residual at a single truncation.
pub fn check_prop2(phi: &EntireSymbol, w_grid: &[Complex64], degree: usize, weight: GaussWeight, tol: f64) -> Result<CommutationReport> {
    eigen_residuals(ConditionId::Prop2, phi, w_grid, &[degree], weight, tol)
}

fn eigen_residuals(
    id: ConditionId,
    phi: &EntireSymbol,
    w_grid: &[Complex64],
    degrees: &[usize],
    weight: GaussWeight,
    tol: f64,
) -> Result<CommutationReport> {
    if w_grid.is_empty() || degrees.is_empty() {
        return Err(FockError::InvalidArgument("empty grid or degree sequence".into()));
    }
    if degrees.windows(2).any(|p| p[1] <= p[0]) {
        return Err(FockError::InvalidArgument("degree sequence must be increasing".into()));
    }
    let top = *degrees.last().expect("nonempty");
    let lambdas: Vec<Complex64> = w_grid.iter().map(|w| eval_symbol(phi, *w, EVAL_TERMS).map(|x| x.conj())).collect::<Result<_>>()?;
    let adjoints: Vec<TruncatedOperator> = degrees.iter().map(|&n| mult_matrix(phi, n, weight).adjoint()).collect();
    let mut report = CommutationReport::new(id, weight, top, w_grid.to_vec(), tol);
    report.degree_sequence = degrees.to_vec();
    let mut monotone = true;
    for (w, lambda) in w_grid.iter().zip(&lambdas) {
        let mut prev = f64::INFINITY;
        for (n, a_star) in degrees.iter().zip(&adjoints) {
            let e = kernel_vector(*w, *n, weight);
            let got = a_star.apply(&e)?;
            let value = got.sub(&e.scale(*lambda))?.norm() / e.norm();
            if value > prev + ROUNDING_FLOOR {
                monotone = false;
            }
            prev = value;
            if *n == top {
                report.max_residual = report.max_residual.max(value);
            }
            report.residuals.push(Residual { label: format!("w={},N={n}", format_complex(*w)), value });
        }
    }
    if degrees.len() > 1 {
        report.monotone = Some(monotone);
    }
    Ok(report.finish())
}

/// `[d/dz, A*] = 0` relative to `K` for an arbitrary `A`, with
/// `d/dz = r·a⁻`.
pub fn check_thm4_f_operator(a: &TruncatedOperator, w_grid: &[Complex64], tol: f64) -> Result<CommutationReport> {
    let (degree, weight) = (a.degree(), a.weight());
    let ddz = annihilation_matrix(degree, weight).scale(Complex64::new(weight.r(), 0.0));
    let family = TestFamily::kernels(w_grid.to_vec(), degree, weight)?;
    commute_as(ConditionId::Thm4f, &a.adjoint(), &ddz, &family, tol)
}

pub fn check_thm4_f(phi: &EntireSymbol, w_grid: &[Complex64], degree: usize, weight: GaussWeight, tol: f64) -> Result<CommutationReport> {
    check_thm4_f_operator(&mult_matrix(phi, degree, weight), w_grid, tol)
}

/// Stirling numbers of the second kind `S(m, n)` for `m ≤ m_max`.
fn stirling2_column(n: usize, m_max: usize) -> Vec<f64> {
    // table[k] = S(m, k) for the current m
    let mut table = vec![0.0; n + 1];
    table[0] = 1.0;
    let mut out = vec![0.0; m_max + 1];
    out[0] = table[n];
    for slot in out.iter_mut().skip(1) {
        for k in (1..=n).rev() {
            table[k] = k as f64 * table[k] + table[k - 1];
        }
        table[0] = 0.0;
        *slot = table[n];
    }
    out
}

/// `f_h = h^{-n} Σ_{k=0}^{n} (−1)^{n−k} C(n,k) e_{kh}`, truncated at `N`.
///
/// Computed per coefficient: `Σ_k (−1)^{n−k} C(n,k) k^m = n! S(m,n)`, so
/// `c_m = (r^m/m!)^{1/2} h^{m−n} n! S(m,n)` with no cancellation.
pub fn hermite_difference_quotient(n: usize, h: f64, degree: usize, weight: GaussWeight) -> Result<FockVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FockError::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let r = weight.r();
    let s = stirling2_column(n, degree);
    let coeffs = (0..=degree)
        .map(|m| {
            if m < n || s[m] == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let ln = 0.5 * (m as f64 * r.ln() - ln_factorial(m)) + (m - n) as f64 * h.ln() + ln_factorial(n) + s[m].ln();
            Complex64::new(ln.exp(), 0.0)
        })
        .collect();
    FockVector::from_coeffs(weight, coeffs)
}

/// Limit of the difference quotient: `(rz)^n`.
pub fn hermite_limit(n: usize, degree: usize, weight: GaussWeight) -> FockVector {
    let mono = EntireSymbol::monomial(n).scaled(Complex64::new(weight.r().powi(n as i32), 0.0));
    embed_symbol(&mono, degree, weight)
}

/// `[rQ, M_φ] = M_{φ′}` and `[−rP, M_φ] = M_{iφ′}` on the shared exactness window.
/// The P report also carries `[−rP, M_φ] − i[rQ, M_φ]`.
pub fn check_remark5(phi: &EntireSymbol, degree: usize, weight: GaussWeight, tol: f64) -> Result<[CommutationReport; 2]> {
    if degree == 0 {
        return Err(FockError::EmptyWindow { degree });
    }
    let r = Complex64::new(weight.r(), 0.0);
    let m = mult_matrix(phi, degree, weight);
    let dphi = derivative(phi);
    let cq = commutator(&q_matrix(degree, weight).scale(r), &m)?;
    let cp = commutator(&p_matrix(degree, weight).scale(-r), &m)?;
    let want_q = mult_matrix(&dphi, degree, weight);
    let want_p = mult_matrix(&dphi.scaled(Complex64::new(0.0, 1.0)), degree, weight);

    let window: Vec<(usize, usize)> = (0..=degree)
        .flat_map(|n| (0..=degree).map(move |k| (n, k)))
        .filter(|&(n, k)| cq.is_exact(n, k) && cp.is_exact(n, k) && want_q.is_exact(n, k) && want_p.is_exact(n, k))
        .collect();
    if window.is_empty() {
        return Err(FockError::EmptyWindow { degree });
    }
    let max_over = |x: &TruncatedOperator, y: &DMatrix<Complex64>| -> f64 {
        window.iter().map(|&(n, k)| (x.entry(n, k) - y[(n, k)]).norm()).fold(0.0, f64::max)
    };
    let mut q_report = CommutationReport::new(ConditionId::Remark5Q, weight, degree, Vec::new(), tol);
    absorb(&mut q_report, vec![("[rQ,M]-M'".into(), max_over(&cq, want_q.matrix()), 0.0)]);
    let mut p_report = CommutationReport::new(ConditionId::Remark5P, weight, degree, Vec::new(), tol);
    let combined = cq.matrix() * Complex64::new(0.0, 1.0);
    absorb(
        &mut p_report,
        vec![
            ("[-rP,M]-iM'".into(), max_over(&cp, want_p.matrix()), 0.0),
            ("[-rP,M]-i[rQ,M]".into(), max_over(&cp, &combined), 0.0),
        ],
    );
    Ok([q_report.finish(), p_report.finish()])
}

/// Harmonic symbols: `A = M_Φ + M_Ψ*`.
pub fn check_harmonic(
    big_phi: &EntireSymbol,
    big_psi: &EntireSymbol,
    v_grid: &[Complex64],
    degree: usize,
    weight: GaussWeight,
    tol: f64,
) -> Result<CommutationReport> {
    let a = harmonic_operator(big_phi, big_psi, degree, weight);
    check_harmonic_operator(&a, &derivative(big_phi), v_grid, tol)
}

/// `‖[M_z*, A] e_v − (1/r) M_{φ} e_v‖/‖e_v‖` and `‖[M_z, [M_z*, A]] e_v‖/‖e_v‖`,
/// where `phi` is the expected `Φ′`.
pub fn check_harmonic_operator(a: &TruncatedOperator, phi: &EntireSymbol, v_grid: &[Complex64], tol: f64) -> Result<CommutationReport> {
    let (degree, weight) = (a.degree(), a.weight());
    if v_grid.is_empty() {
        return Err(FockError::InvalidArgument("v grid is empty".into()));
    }
    let r = weight.r();
    let first = commutator(&annihilation_matrix(degree, weight), a)?;
    let d1 = first.sub(&mult_matrix(phi, degree, weight).scale(Complex64::new(1.0 / r, 0.0)))?;
    let d2 = commutator(&creation_matrix(degree, weight), &first)?;
    let family = TestFamily::kernels(v_grid.to_vec(), degree, weight)?;
    let members = family.members();
    let mut report = CommutationReport::new(ConditionId::Remark6, weight, degree, v_grid.to_vec(), tol);
    for (d, tag) in [(&d1, "first"), (&d2, "second")] {
        let inexact_abs = masked(d, false).map(|z| z.norm());
        let d_norm = d.spectral_norm();
        let rows = members
            .par_iter()
            .map(|e| {
                let v = to_dvec(&e.vector);
                let norm = e.vector.norm();
                let value = (d.matrix() * &v).norm() / norm;
                let tail = (&inexact_abs * abs_vec(&v)).norm() / norm + d_norm * e.tail_ratio;
                (format!("{tag} {}", e.label), value, tail)
            })
            .collect();
        absorb(&mut report, rows);
    }
    Ok(report.finish())
}

/// `⟨A e_v, e_v⟩ / ‖e_v‖²`.
pub fn rayleigh_eigenvalue(a: &TruncatedOperator, v: Complex64) -> Result<Complex64> {
    let e = kernel_vector(v, a.degree(), a.weight());
    Ok(a.apply(&e)?.inner(&e)? / e.norm_sq())
}
