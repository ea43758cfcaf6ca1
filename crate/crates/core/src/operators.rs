//! Compressions `P_N T P_N` of ladder, multiplication and derived operators.
//!
//! Every operator carries three pieces of structural exactness data:
//! - `mask[(n, m)]`: the stored entry equals the entry of the untruncated operator;
//! - `col_full[m]`: `T u_m` lies in `V_N = span(u_0..u_N)`;
//! - `row_full[n]`: `⟨T u_m, u_n⟩ = 0` for all `m > N`.
//!
//! Products, sums and adjoints propagate these, so a composite knows which of its
//! entries are untouched by truncation.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::fock::{FockVector, GaussWeight};
use crate::special::ln_factorial;
use crate::symbols::{EntireSymbol, SymbolKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    weight: GaussWeight,
    matrix: DMatrix<Complex64>,
    mask: DMatrix<bool>,
    col_full: Vec<bool>,
    row_full: Vec<bool>,
    provenance: String,
    column_tail_sq: Option<Vec<f64>>,
}

/// Dense export; `exact_cols = -1` means no column is truncation-free.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixExport {
    #[serde(rename = "N")]
    pub degree: usize,
    pub r: f64,
    pub provenance: String,
    pub exact_cols: i64,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column_tail_sq: Option<Vec<f64>>,
}

impl TruncatedOperator {
    /// Operator whose entries are all exact, which raises degree by at most `raise`
    /// and lowers it by at most `lower` (`None` = unbounded raise).
    fn atomic(
        weight: GaussWeight,
        matrix: DMatrix<Complex64>,
        raise: Option<isize>,
        lower: isize,
        provenance: String,
    ) -> Self {
        let n_max = matrix.nrows() as isize - 1;
        let dim = matrix.nrows();
        let col_full = (0..dim as isize).map(|m| raise.is_some_and(|d| m + d <= n_max)).collect();
        let row_full = (0..dim as isize).map(|n| n + lower <= n_max).collect();
        Self {
            weight,
            mask: DMatrix::from_element(dim, dim, true),
            matrix,
            col_full,
            row_full,
            provenance,
            column_tail_sq: None,
        }
    }

    pub fn identity(degree: usize, weight: GaussWeight) -> Self {
        let dim = degree + 1;
        Self::atomic(weight, DMatrix::identity(dim, dim), Some(0), 0, "identity".into())
    }

    pub fn zero(degree: usize, weight: GaussWeight) -> Self {
        let dim = degree + 1;
        Self::atomic(weight, DMatrix::zeros(dim, dim), Some(0), 0, "zero".into())
    }

    pub fn weight(&self) -> GaussWeight {
        self.weight
    }

    /// Truncation degree `N`; the matrix is `(N+1)×(N+1)`.
    pub fn degree(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        self.matrix[(n, m)]
    }

    pub fn is_exact(&self, n: usize, m: usize) -> bool {
        self.mask[(n, m)]
    }

    pub fn exact_mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn column_is_full(&self, m: usize) -> bool {
        self.col_full[m]
    }

    pub fn row_is_full(&self, n: usize) -> bool {
        self.row_full[n]
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    /// `Σ_{n>N} |⟨T u_m, u_n⟩|²` per column, where known.
    pub fn column_tail_sq(&self) -> Option<&[f64]> {
        self.column_tail_sq.as_deref()
    }

    /// Largest `m*` such that every column `0..=m*` is truncation-free.
    pub fn exact_cols(&self) -> Option<usize> {
        let dim = self.matrix.ncols();
        let good = (0..dim)
            .take_while(|&m| self.col_full[m] && (0..dim).all(|n| self.mask[(n, m)]))
            .count();
        good.checked_sub(1)
    }

    fn ensure_compatible(&self, other: &TruncatedOperator) -> Result<()> {
        self.weight.ensure_same(other.weight)?;
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(FockError::SizeMismatch { left: self.matrix.nrows(), right: other.matrix.nrows() });
        }
        Ok(())
    }

    fn row_exact(&self, n: usize) -> bool {
        self.mask.row(n).iter().all(|&b| b)
    }

    fn col_exact(&self, m: usize) -> bool {
        self.mask.column(m).iter().all(|&b| b)
    }

    /// `self · other`.
    pub fn compose(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.ensure_compatible(other)?;
        let (t, s) = (self, other);
        let dim = t.matrix.nrows();
        let matrix = &t.matrix * &s.matrix;
        let row_ok: Vec<bool> = (0..dim).map(|n| t.row_exact(n)).collect();
        let col_ok: Vec<bool> = (0..dim).map(|m| s.col_exact(m)).collect();
        let mask = DMatrix::from_fn(dim, dim, |n, m| {
            row_ok[n] && col_ok[m] && (s.col_full[m] || t.row_full[n])
        });
        let col_full = (0..dim)
            .map(|m| s.col_full[m] && (0..dim).all(|k| s.matrix[(k, m)] == ZERO || t.col_full[k]))
            .collect();
        let row_full = (0..dim)
            .map(|n| t.row_full[n] && (0..dim).all(|k| t.matrix[(n, k)] == ZERO || s.row_full[k]))
            .collect();
        Ok(TruncatedOperator {
            weight: t.weight,
            matrix,
            mask,
            col_full,
            row_full,
            provenance: format!("({})*({})", t.provenance, s.provenance),
            column_tail_sq: None,
        })
    }

    fn combine(&self, other: &TruncatedOperator, sign: f64, op: &str) -> Result<TruncatedOperator> {
        self.ensure_compatible(other)?;
        let dim = self.matrix.nrows();
        Ok(TruncatedOperator {
            weight: self.weight,
            matrix: &self.matrix + &other.matrix * Complex64::new(sign, 0.0),
            mask: self.mask.zip_map(&other.mask, |a, b| a && b),
            col_full: (0..dim).map(|m| self.col_full[m] && other.col_full[m]).collect(),
            row_full: (0..dim).map(|n| self.row_full[n] && other.row_full[n]).collect(),
            provenance: format!("{}{op}{}", self.provenance, other.provenance),
            column_tail_sq: None,
        })
    }

    pub fn add(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.combine(other, 1.0, "+")
    }

    pub fn sub(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.combine(other, -1.0, "-")
    }

    pub fn scale(&self, c: Complex64) -> TruncatedOperator {
        let mut out = self.clone();
        out.matrix *= c;
        out.provenance = format!("{}*({})", crate::symbols::format_complex(c), self.provenance);
        out.column_tail_sq = self.column_tail_sq.as_ref().map(|t| t.iter().map(|x| x * c.norm_sqr()).collect());
        out
    }

    /// Conjugate transpose; an involution on all stored data.
    pub fn adjoint(&self) -> TruncatedOperator {
        TruncatedOperator {
            weight: self.weight,
            matrix: self.matrix.adjoint(),
            mask: self.mask.transpose(),
            col_full: self.row_full.clone(),
            row_full: self.col_full.clone(),
            provenance: match strip_wrapper(&self.provenance, "adjoint") {
                Some(inner) => inner.to_string(),
                None => format!("adjoint({})", self.provenance),
            },
            column_tail_sq: None,
        }
    }

    pub fn apply(&self, f: &FockVector) -> Result<FockVector> {
        self.weight.ensure_same(f.weight())?;
        if f.degree() != self.degree() {
            return Err(FockError::SizeMismatch { left: self.matrix.nrows(), right: f.degree() + 1 });
        }
        let v = nalgebra::DVector::from_column_slice(f.coeffs());
        let out = &self.matrix * v;
        Ok(FockVector::from_raw(self.weight, out.iter().copied().collect()))
    }

    /// Largest singular value of the stored matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix.singular_values().iter().copied().fold(0.0, f64::max)
    }

    pub fn export(&self) -> MatrixExport {
        let dim = self.matrix.nrows();
        MatrixExport {
            degree: self.degree(),
            r: self.weight.r(),
            provenance: self.provenance.clone(),
            exact_cols: self.exact_cols().map_or(-1, |m| m as i64),
            entries: (0..dim)
                .map(|n| (0..dim).map(|m| [self.matrix[(n, m)].re, self.matrix[(n, m)].im]).collect())
                .collect(),
            column_tail_sq: self.column_tail_sq.clone(),
        }
    }

    /// `row,col,re,im` lines, 17 significant digits, row-major.
    pub fn to_csv(&self) -> String {
        let dim = self.matrix.nrows();
        let mut out = String::from("row,col,re,im\n");
        for n in 0..dim {
            for m in 0..dim {
                let z = self.matrix[(n, m)];
                let _ = writeln!(out, "{n},{m},{:.16e},{:.16e}", z.re, z.im);
            }
        }
        out
    }
}

/// `inner` when `s == "{name}(inner)"` with the outer parentheses matching.
fn strip_wrapper<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    let body = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    let mut depth = 0i32;
    for c in body.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    (depth == 0).then_some(body)
}

/// `a⁺ = M_z`: entries `(n+1, n) = √((n+1)/r)`.
pub fn creation_matrix(degree: usize, weight: GaussWeight) -> TruncatedOperator {
    let dim = degree + 1;
    let r = weight.r();
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..degree {
        m[(n + 1, n)] = Complex64::new(((n + 1) as f64 / r).sqrt(), 0.0);
    }
    TruncatedOperator::atomic(weight, m, Some(1), -1, "creation".into())
}

/// `a⁻ = (1/r) d/dz`, built as the adjoint of the creation matrix.
pub fn annihilation_matrix(degree: usize, weight: GaussWeight) -> TruncatedOperator {
    creation_matrix(degree, weight).adjoint().with_provenance("annihilation")
}

/// `Q = a⁺ + a⁻`.
pub fn q_matrix(degree: usize, weight: GaussWeight) -> TruncatedOperator {
    creation_matrix(degree, weight)
        .add(&annihilation_matrix(degree, weight))
        .expect("same shape")
        .with_provenance("Q")
}

/// `P = i(a⁺ − a⁻)`.
pub fn p_matrix(degree: usize, weight: GaussWeight) -> TruncatedOperator {
    creation_matrix(degree, weight)
        .sub(&annihilation_matrix(degree, weight))
        .expect("same shape")
        .scale(Complex64::new(0.0, 1.0))
        .with_provenance("P")
}

/// `√(n!/(m! r^k))` with `k = n − m`; direct product for short bands so that
/// low-order entries agree bit-for-bit with the ladder formulas.
fn ladder_factor(n: usize, m: usize, r: f64) -> f64 {
    let k = n - m;
    if k <= 32 {
        let prod: f64 = ((m + 1)..=n).map(|i| i as f64).product();
        (prod / r.powi(k as i32)).sqrt()
    } else {
        (0.5 * (ln_factorial(n) - ln_factorial(m) - k as f64 * r.ln())).exp()
    }
}

const TAIL_EXTRA_MIN: usize = 256;

/// Compression of `M_φ`: entry `(n, m) = a_{n−m} √(n!/(m! r^{n−m}))` for `n ≥ m`.
pub fn mult_matrix(phi: &EntireSymbol, degree: usize, weight: GaussWeight) -> TruncatedOperator {
    let dim = degree + 1;
    let r = weight.r();
    let poly_deg = phi.polynomial_degree();
    let extra = match poly_deg {
        Some(d) => d,
        None => TAIL_EXTRA_MIN.max(4 * degree),
    };
    let logs = phi.log_coeffs(degree + extra);
    let exact_coeffs: Option<&Vec<Complex64>> = match phi.kind() {
        SymbolKind::Polynomial(c) => Some(c),
        _ => None,
    };
    let coeff = |k: usize| -> Complex64 {
        match exact_coeffs {
            Some(c) => c.get(k).copied().unwrap_or(ZERO),
            None => logs[k].to_complex(),
        }
    };
    let mut mat = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for n in m..dim {
            let k = n - m;
            let a = coeff(k);
            mat[(n, m)] = if a != ZERO && k <= 32 {
                a * ladder_factor(n, m, r)
            } else if logs[k].is_zero() {
                ZERO
            } else {
                logs[k]
                    .scale_ln(0.5 * (ln_factorial(n) - ln_factorial(m) - k as f64 * r.ln()))
                    .to_complex()
            };
        }
    }
    let tails = (0..dim)
        .map(|m| {
            let terms: Vec<f64> = (dim..=degree + extra)
                .map(|n| {
                    let l = logs[n - m];
                    if l.is_zero() {
                        0.0
                    } else {
                        (2.0 * l.ln_abs + ln_factorial(n) - ln_factorial(m) - (n - m) as f64 * r.ln()).exp()
                    }
                })
                .collect();
            let total: f64 = terms.iter().sum();
            let last = terms.iter().rev().take(8).copied().fold(0.0, f64::max);
            if poly_deg.is_none() && last > 1e-16 * total.max(f64::MIN_POSITIVE) {
                f64::INFINITY
            } else {
                total
            }
        })
        .collect();
    let raise = poly_deg.map(|d| d as isize);
    let mut op = TruncatedOperator::atomic(weight, mat, raise, 0, format!("mult({phi})"));
    op.column_tail_sq = Some(tails);
    op
}

/// `[T, S] = TS − ST`.
pub fn commutator(t: &TruncatedOperator, s: &TruncatedOperator) -> Result<TruncatedOperator> {
    let ts = t.compose(s)?;
    let st = s.compose(t)?;
    Ok(ts.sub(&st)?.with_provenance(format!("[{},{}]", t.provenance, s.provenance)))
}

/// `M_Φ + M_Ψ*`.
pub fn harmonic_operator(
    big_phi: &EntireSymbol,
    big_psi: &EntireSymbol,
    degree: usize,
    weight: GaussWeight,
) -> TruncatedOperator {
    mult_matrix(big_phi, degree, weight)
        .add(&mult_matrix(big_psi, degree, weight).adjoint())
        .expect("same shape")
        .with_provenance(format!("harmonic({big_phi};{big_psi})"))
}
