//! Entire-function symbols as Taylor-coefficient generators.
//!
//! Coefficients are produced in log-magnitude/phase form ([`LogCoeff`]) so
//! that the super-exponential decay of order-2 symbols never underflows;
//! callers that want plain complex values go through [`EntireSymbol::taylor`].

mod growth;
mod parse;

pub use growth::{
    classify_growth, fock_norm_partial, lambda_bound_witness, FockVerdict, GrowthReport,
    GrowthRule, LambdaVerdict, LambdaWitness,
};
pub use parse::{parse_complex, parse_symbol, ParseError};

use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::fock::GaussWeight;
use crate::special::ln_factorial;

/// A complex number stored as `exp(ln_abs + i·phase)`; zero has
/// `ln_abs = -∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCoeff {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogCoeff {
    pub const ZERO: LogCoeff = LogCoeff { ln_abs: f64::NEG_INFINITY, phase: 0.0 };
    pub const ONE: LogCoeff = LogCoeff { ln_abs: 0.0, phase: 0.0 };

    pub fn new(ln_abs: f64, phase: f64) -> Self {
        Self { ln_abs, phase }
    }

    pub fn from_complex(c: Complex64) -> Self {
        if c.re == 0.0 && c.im == 0.0 {
            Self::ZERO
        } else {
            Self { ln_abs: c.norm().ln(), phase: c.arg() }
        }
    }

    /// `exp(w)` for complex `w`.
    pub fn exp_of(w: Complex64) -> Self {
        Self { ln_abs: w.re, phase: w.im }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.ln_abs.exp(), self.phase)
        }
    }

    /// Multiply by the positive real `exp(s)`.
    pub fn scale_ln(self, s: f64) -> LogCoeff {
        if self.is_zero() {
            self
        } else {
            Self { ln_abs: self.ln_abs + s, phase: self.phase }
        }
    }

    /// Mantissa relative to `exp(shift)`.
    fn scaled(self, shift: f64) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar((self.ln_abs - shift).exp(), self.phase)
        }
    }
}

impl std::ops::Mul for LogCoeff {
    type Output = LogCoeff;

    fn mul(self, other: LogCoeff) -> LogCoeff {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { ln_abs: self.ln_abs + other.ln_abs, phase: self.phase + other.phase }
    }
}

/// Sum of log-form terms without overflow or underflow.
pub fn log_sum(terms: &[LogCoeff]) -> LogCoeff {
    let shift = terms.iter().map(|t| t.ln_abs).fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return LogCoeff::ZERO;
    }
    let s: Complex64 = terms.iter().map(|t| t.scaled(shift)).sum();
    LogCoeff::from_complex(s).scale_ln(shift)
}

/// User-supplied coefficient sequence, given in log form.
#[derive(Clone)]
pub struct CustomRule {
    name: String,
    rule: Arc<dyn Fn(usize) -> LogCoeff + Send + Sync>,
}

impl CustomRule {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomRule({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum SymbolKind {
    Polynomial(Vec<Complex64>),
    /// `exp(α z² + β z + γ)`
    ExpQuadratic { alpha: Complex64, beta: Complex64, gamma: Complex64 },
    /// `e_w(z) = exp(r z conj(w))`
    Kernel { w: Complex64, weight: GaussWeight },
    Product(Vec<EntireSymbol>),
    Sum(Vec<EntireSymbol>),
    /// Coefficient sequence `a_{n+k}` of the base.
    Shifted { base: Box<EntireSymbol>, k: usize },
    Derivative(Box<EntireSymbol>),
    Antiderivative(Box<EntireSymbol>),
    Custom(CustomRule),
}

#[derive(Default)]
struct CoeffCache(RwLock<Vec<LogCoeff>>);

impl Clone for CoeffCache {
    fn clone(&self) -> Self {
        CoeffCache(RwLock::new(self.0.read().map(|v| v.clone()).unwrap_or_default()))
    }
}

impl fmt::Debug for CoeffCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let len = self.0.read().map(|v| v.len()).unwrap_or(0);
        write!(f, "CoeffCache({len})")
    }
}

/// Closed-form growth information: `φ = (exponential type) · exp(α z²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Zero,
    Exact(Complex64),
    /// Quadratic exponent bounded in modulus; cancellation possible.
    AtMost(f64),
    Unknown,
}

#[derive(Debug, Clone)]
pub struct EntireSymbol {
    kind: SymbolKind,
    cache: CoeffCache,
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl EntireSymbol {
    fn from_kind(kind: SymbolKind) -> Self {
        Self { kind, cache: CoeffCache::default() }
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Self::from_kind(SymbolKind::Polynomial(coeffs))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn zero() -> Self {
        Self::polynomial(vec![czero()])
    }

    /// `z^j`
    pub fn monomial(j: usize) -> Self {
        let mut c = vec![czero(); j + 1];
        c[j] = Complex64::new(1.0, 0.0);
        Self::polynomial(c)
    }

    pub fn exp_quadratic(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Self {
        Self::from_kind(SymbolKind::ExpQuadratic { alpha, beta, gamma })
    }

    pub fn kernel(w: Complex64, weight: GaussWeight) -> Self {
        Self::from_kind(SymbolKind::Kernel { w, weight })
    }

    pub fn product(factors: Vec<EntireSymbol>) -> Self {
        Self::from_kind(SymbolKind::Product(factors))
    }

    pub fn sum(terms: Vec<EntireSymbol>) -> Self {
        Self::from_kind(SymbolKind::Sum(terms))
    }

    pub fn shifted(base: EntireSymbol, k: usize) -> Self {
        Self::from_kind(SymbolKind::Shifted { base: Box::new(base), k })
    }

    pub fn custom<F>(name: impl Into<String>, rule: F) -> Self
    where
        F: Fn(usize) -> LogCoeff + Send + Sync + 'static,
    {
        Self::from_kind(SymbolKind::Custom(CustomRule { name: name.into(), rule: Arc::new(rule) }))
    }

    /// `c·φ`
    pub fn scaled(&self, c: Complex64) -> Self {
        Self::product(vec![Self::constant(c), self.clone()])
    }

    /// Taylor coefficients `a_0..=a_upto` in log form. Deterministic: the
    /// value at index n never depends on how far the cache has been filled.
    pub fn log_coeffs(&self, upto: usize) -> Vec<LogCoeff> {
        if let Ok(cached) = self.cache.0.read() {
            if cached.len() > upto {
                return cached[..=upto].to_vec();
            }
        }
        let fresh = self.compute(upto);
        if let Ok(mut cached) = self.cache.0.write() {
            if cached.len() < fresh.len() {
                *cached = fresh.clone();
            }
        }
        fresh
    }

    /// n-th Taylor coefficient at 0.
    pub fn taylor(&self, n: usize) -> Complex64 {
        if let SymbolKind::Polynomial(c) = &self.kind {
            return c.get(n).copied().unwrap_or_default();
        }
        self.log_coeffs(n)[n].to_complex()
    }

    fn compute(&self, upto: usize) -> Vec<LogCoeff> {
        match &self.kind {
            SymbolKind::Polynomial(c) => (0..=upto)
                .map(|n| c.get(n).map(|&x| LogCoeff::from_complex(x)).unwrap_or(LogCoeff::ZERO))
                .collect(),
            SymbolKind::ExpQuadratic { alpha, beta, gamma } => {
                exp_quadratic_coeffs(*alpha, *beta, *gamma, upto)
            }
            SymbolKind::Kernel { w, weight } => {
                if *w == czero() {
                    let mut out = vec![LogCoeff::ZERO; upto + 1];
                    out[0] = LogCoeff::ONE;
                    return out;
                }
                let x = w.conj() * weight.r();
                let (ln_x, arg_x) = (x.norm().ln(), x.arg());
                (0..=upto)
                    .map(|n| LogCoeff::new(n as f64 * ln_x - ln_factorial(n), n as f64 * arg_x))
                    .collect()
            }
            SymbolKind::Product(factors) => {
                let mut acc = vec![LogCoeff::ZERO; upto + 1];
                acc[0] = LogCoeff::ONE;
                for f in factors {
                    acc = cauchy_product(&acc, &f.log_coeffs(upto));
                }
                acc
            }
            SymbolKind::Sum(terms) => {
                let parts: Vec<Vec<LogCoeff>> = terms.iter().map(|t| t.log_coeffs(upto)).collect();
                (0..=upto)
                    .map(|n| log_sum(&parts.iter().map(|p| p[n]).collect::<Vec<_>>()))
                    .collect()
            }
            SymbolKind::Shifted { base, k } => base.log_coeffs(upto + k)[*k..].to_vec(),
            SymbolKind::Derivative(base) => {
                let a = base.log_coeffs(upto + 1);
                (0..=upto).map(|n| a[n + 1].scale_ln(((n + 1) as f64).ln())).collect()
            }
            SymbolKind::Antiderivative(base) => {
                let a = base.log_coeffs(upto);
                std::iter::once(LogCoeff::ZERO)
                    .chain((1..=upto).map(|n| a[n - 1].scale_ln(-(n as f64).ln())))
                    .collect()
            }
            SymbolKind::Custom(rule) => (0..=upto).map(|n| (rule.rule)(n)).collect(),
        }
    }

    /// Degree when the symbol is a polynomial.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match &self.kind {
            SymbolKind::Polynomial(c) => {
                Some(c.iter().rposition(|x| *x != czero()).unwrap_or(0))
            }
            SymbolKind::ExpQuadratic { alpha, beta, .. } => {
                (*alpha == czero() && *beta == czero()).then_some(0)
            }
            SymbolKind::Kernel { w, .. } => (*w == czero()).then_some(0),
            SymbolKind::Product(fs) => fs.iter().map(|f| f.polynomial_degree()).sum(),
            SymbolKind::Sum(ts) => ts
                .iter()
                .map(|t| t.polynomial_degree())
                .try_fold(0usize, |m, d| d.map(|d| m.max(d))),
            SymbolKind::Shifted { base, k } => base.polynomial_degree().map(|d| d.saturating_sub(*k)),
            SymbolKind::Derivative(b) => b.polynomial_degree().map(|d| d.saturating_sub(1)),
            SymbolKind::Antiderivative(b) => b.polynomial_degree().map(|d| d + 1),
            SymbolKind::Custom(_) => None,
        }
    }

    /// Quadratic growth exponent for the closed-form family.
    pub fn closed_form(&self) -> ClosedForm {
        match &self.kind {
            SymbolKind::Polynomial(c) => {
                if c.iter().all(|x| *x == czero()) {
                    ClosedForm::Zero
                } else {
                    ClosedForm::Exact(czero())
                }
            }
            SymbolKind::ExpQuadratic { alpha, .. } => ClosedForm::Exact(*alpha),
            SymbolKind::Kernel { .. } => ClosedForm::Exact(czero()),
            SymbolKind::Product(fs) => {
                let mut total = czero();
                let mut bound: Option<f64> = None;
                for f in fs {
                    match f.closed_form() {
                        ClosedForm::Zero => return ClosedForm::Zero,
                        ClosedForm::Unknown => return ClosedForm::Unknown,
                        ClosedForm::Exact(a) => total += a,
                        ClosedForm::AtMost(m) => *bound.get_or_insert(0.0) += m,
                    }
                }
                match bound {
                    None => ClosedForm::Exact(total),
                    Some(m) => ClosedForm::AtMost(m + total.norm()),
                }
            }
            SymbolKind::Sum(ts) => {
                let mut exact: Vec<Complex64> = Vec::new();
                let mut bound = 0.0f64;
                for t in ts {
                    match t.closed_form() {
                        ClosedForm::Zero => {}
                        ClosedForm::Unknown => return ClosedForm::Unknown,
                        ClosedForm::Exact(a) => exact.push(a),
                        ClosedForm::AtMost(m) => bound = bound.max(m),
                    }
                }
                let top = exact.iter().map(|a| a.norm()).fold(f64::NEG_INFINITY, f64::max);
                if exact.is_empty() {
                    return if bound > 0.0 { ClosedForm::AtMost(bound) } else { ClosedForm::Zero };
                }
                if bound >= top {
                    return ClosedForm::AtMost(bound);
                }
                let leaders: Vec<Complex64> =
                    exact.iter().copied().filter(|a| a.norm() == top).collect();
                let repeated = leaders.iter().enumerate().any(|(i, a)| leaders[..i].contains(a));
                if repeated {
                    ClosedForm::AtMost(top)
                } else {
                    ClosedForm::Exact(leaders[0])
                }
            }
            SymbolKind::Shifted { base, .. } => base.closed_form(),
            SymbolKind::Derivative(b) | SymbolKind::Antiderivative(b) => b.closed_form(),
            SymbolKind::Custom(_) => ClosedForm::Unknown,
        }
    }

    /// Mini-language rendering; custom symbols render as `custom:<name>`.
    pub fn spec(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EntireSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |parts: &[EntireSymbol], sep: &str| {
            parts.iter().map(|p| format!("({p})")).collect::<Vec<_>>().join(sep)
        };
        match &self.kind {
            SymbolKind::Polynomial(c) => {
                write!(f, "poly:{}", c.iter().map(|x| format_complex(*x)).collect::<Vec<_>>().join(","))
            }
            SymbolKind::ExpQuadratic { alpha, beta, gamma } => write!(
                f,
                "exp:{},{},{}",
                format_complex(*alpha),
                format_complex(*beta),
                format_complex(*gamma)
            ),
            SymbolKind::Kernel { w, .. } => write!(f, "kernel:{}", format_complex(*w)),
            SymbolKind::Product(fs) => write!(f, "prod:{}", join(fs, "*")),
            SymbolKind::Sum(ts) => write!(f, "sum:{}", join(ts, "+")),
            SymbolKind::Shifted { base, k } => write!(f, "shift:{k}:({base})"),
            SymbolKind::Derivative(b) => write!(f, "deriv:({b})"),
            SymbolKind::Antiderivative(b) => write!(f, "antideriv:({b})"),
            SymbolKind::Custom(rule) => write!(f, "custom:{}", rule.name),
        }
    }
}

/// `a+bi` with explicit sign; purely real values print without an imaginary part.
pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

fn complex_ln(c: Complex64) -> LogCoeff {
    LogCoeff::from_complex(c)
}

/// Coefficients of `exp(αz² + βz + γ) = e^γ Σ_k α^k β^{n-2k} / (k!(n-2k)!)`.
fn exp_quadratic_coeffs(alpha: Complex64, beta: Complex64, gamma: Complex64, upto: usize) -> Vec<LogCoeff> {
    let la = complex_ln(alpha);
    let lb = complex_ln(beta);
    let lg = LogCoeff::exp_of(gamma);
    let pow = |l: LogCoeff, k: usize| {
        if k == 0 {
            LogCoeff::ONE
        } else {
            LogCoeff::new(l.ln_abs * k as f64, l.phase * k as f64)
        }
    };
    let zero = Complex64::new(0.0, 0.0);
    if beta == zero {
        // α^k/k! at n = 2k
        return (0..=upto)
            .map(|n| if n % 2 == 1 { LogCoeff::ZERO } else { pow(la, n / 2).scale_ln(-ln_factorial(n / 2)) * lg })
            .collect();
    }
    if alpha == zero {
        return (0..=upto).map(|n| pow(lb, n).scale_ln(-ln_factorial(n)) * lg).collect();
    }
    let mut terms = Vec::with_capacity(upto / 2 + 1);
    (0..=upto)
        .map(|n| {
            terms.clear();
            for k in 0..=n / 2 {
                let t = (pow(la, k) * pow(lb, n - 2 * k))
                    .scale_ln(-(ln_factorial(k) + ln_factorial(n - 2 * k)));
                if !t.is_zero() {
                    terms.push(t);
                }
            }
            log_sum(&terms) * lg
        })
        .collect()
}

/// Cauchy product of two log-form sequences of equal length, iterating over
/// the nonzero entries of the sparser factor.
fn cauchy_product(a: &[LogCoeff], b: &[LogCoeff]) -> Vec<LogCoeff> {
    let len = a.len().min(b.len());
    let nz = |s: &[LogCoeff]| -> Vec<usize> { (0..len).filter(|&i| !s[i].is_zero()).collect() };
    let (na, nb) = (nz(a), nz(b));
    let (sparse, sidx, dense) = if na.len() <= nb.len() { (a, na, b) } else { (b, nb, a) };
    let mut shift = vec![f64::NEG_INFINITY; len];
    for &k in &sidx {
        for n in k..len {
            let t = sparse[k].ln_abs + dense[n - k].ln_abs;
            if t > shift[n] {
                shift[n] = t;
            }
        }
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for &k in &sidx {
        for n in k..len {
            if !dense[n - k].is_zero() {
                acc[n] += (sparse[k] * dense[n - k]).scaled(shift[n]);
            }
        }
    }
    acc.into_iter()
        .zip(shift)
        .map(|(s, sh)| if sh == f64::NEG_INFINITY { LogCoeff::ZERO } else { LogCoeff::from_complex(s).scale_ln(sh) })
        .collect()
}

/// `φ'`; closed-form kinds map to closed-form kinds.
pub fn derivative(phi: &EntireSymbol) -> EntireSymbol {
    match &phi.kind {
        SymbolKind::Polynomial(c) => {
            let d: Vec<Complex64> = c.iter().enumerate().skip(1).map(|(n, a)| a * n as f64).collect();
            EntireSymbol::polynomial(if d.is_empty() { vec![czero()] } else { d })
        }
        SymbolKind::ExpQuadratic { alpha, beta, .. } => EntireSymbol::product(vec![
            EntireSymbol::polynomial(vec![*beta, alpha * 2.0]),
            phi.clone(),
        ]),
        SymbolKind::Kernel { w, weight } => {
            EntireSymbol::product(vec![EntireSymbol::constant(w.conj() * weight.r()), phi.clone()])
        }
        SymbolKind::Product(fs) => EntireSymbol::sum(
            (0..fs.len())
                .map(|i| {
                    EntireSymbol::product(
                        fs.iter()
                            .enumerate()
                            .map(|(j, f)| if i == j { derivative(f) } else { f.clone() })
                            .collect(),
                    )
                })
                .collect(),
        ),
        SymbolKind::Sum(ts) => EntireSymbol::sum(ts.iter().map(derivative).collect()),
        SymbolKind::Antiderivative(base) => (**base).clone(),
        _ => EntireSymbol::from_kind(SymbolKind::Derivative(Box::new(phi.clone()))),
    }
}

/// Antiderivative vanishing at 0.
pub fn antiderivative(phi: &EntireSymbol) -> EntireSymbol {
    match &phi.kind {
        SymbolKind::Polynomial(c) => {
            let mut out = vec![czero()];
            out.extend(c.iter().enumerate().map(|(n, a)| a / (n + 1) as f64));
            EntireSymbol::polynomial(out)
        }
        _ => EntireSymbol::from_kind(SymbolKind::Antiderivative(Box::new(phi.clone()))),
    }
}

/// Value and a geometric-extrapolation estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

fn closed_form_eval(phi: &EntireSymbol, z: Complex64) -> Option<Complex64> {
    match &phi.kind {
        SymbolKind::Polynomial(c) => Some(c.iter().rev().fold(czero(), |acc, a| acc * z + a)),
        SymbolKind::ExpQuadratic { alpha, beta, gamma } => Some((alpha * z * z + beta * z + gamma).exp()),
        SymbolKind::Kernel { w, weight } => Some((z * w.conj() * weight.r()).exp()),
        SymbolKind::Product(fs) => {
            fs.iter().try_fold(Complex64::new(1.0, 0.0), |acc, f| closed_form_eval(f, z).map(|v| acc * v))
        }
        SymbolKind::Sum(ts) => ts.iter().try_fold(czero(), |acc, t| closed_form_eval(t, z).map(|v| acc + v)),
        _ => None,
    }
}

/// Evaluate `φ(z)`: closed forms directly, everything else by summing
/// `terms` Taylor terms with an extrapolated tail estimate.
pub fn eval_symbol_with_bound(phi: &EntireSymbol, z: Complex64, terms: usize) -> SeriesValue {
    if let Some(value) = closed_form_eval(phi, z) {
        return SeriesValue { value, tail_bound: 0.0 };
    }
    let coeffs = phi.log_coeffs(terms.max(1));
    let ln_z = z.norm().ln();
    let arg_z = z.arg();
    let mags: Vec<LogCoeff> = coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| {
            if n == 0 {
                *a
            } else if z == czero() {
                LogCoeff::ZERO
            } else {
                *a * LogCoeff::new(n as f64 * ln_z, n as f64 * arg_z)
            }
        })
        .collect();
    let value = log_sum(&mags).to_complex();
    let m = mags.len();
    let block_max = |lo: usize, hi: usize| {
        mags[lo..hi].iter().map(|t| t.ln_abs).fold(f64::NEG_INFINITY, f64::max).exp()
    };
    let tail_bound = if m < 17 {
        if polynomial_tail_is_zero(phi, m) { 0.0 } else { f64::INFINITY }
    } else {
        let last = block_max(m - 8, m);
        let prev = block_max(m - 16, m - 8);
        if last == 0.0 {
            0.0
        } else if prev == 0.0 || last >= prev {
            f64::INFINITY
        } else {
            let q = last / prev;
            8.0 * last * q / (1.0 - q)
        }
    };
    SeriesValue { value, tail_bound }
}

fn polynomial_tail_is_zero(phi: &EntireSymbol, terms: usize) -> bool {
    phi.polynomial_degree().is_some_and(|d| d < terms)
}

/// `φ(z)` with `terms` Taylor terms; fails when the estimated tail exceeds
/// `1e-10·max(1, |φ(z)|)`.
pub fn eval_symbol(phi: &EntireSymbol, z: Complex64, terms: usize) -> Result<Complex64> {
    let sv = eval_symbol_with_bound(phi, z, terms);
    if sv.tail_bound > 1e-10 * sv.value.norm().max(1.0) {
        return Err(FockError::SeriesNotConverged {
            symbol: phi.spec(),
            radius: z.norm(),
            tail: sv.tail_bound,
        });
    }
    Ok(sv.value)
}
