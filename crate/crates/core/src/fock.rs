//! Truncated Bargmann-Fock space.
//!
//! States are stored as coefficients in the orthonormal monomial basis
//! `u_n(z) = (r^n / n!)^{1/2} z^n`, so `‖z^n‖² = n!/r^n` and the reproducing
//! kernel `e_w(z) = exp(r z conj(w))` satisfies `⟨f, e_w⟩ = f(w)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::special::{ln_factorial, ln_monomial_norm_sq};
use crate::symbols::EntireSymbol;

/// Scale `r > 0` of the Gaussian measure `(r/π) e^{-r|z|²} dz`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GaussWeight(f64);

impl GaussWeight {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 {
            Ok(Self(r))
        } else {
            Err(FockError::InvalidWeight(r))
        }
    }

    #[inline]
    pub fn r(self) -> f64 {
        self.0
    }

    pub fn ensure_same(self, other: GaussWeight) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(FockError::WeightMismatch { left: self.0, right: other.0 })
        }
    }
}

impl TryFrom<f64> for GaussWeight {
    type Error = FockError;
    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<GaussWeight> for f64 {
    fn from(w: GaussWeight) -> f64 {
        w.0
    }
}

/// `‖z^n‖² = n!/r^n`.
pub fn basis_norm_sq(n: usize, weight: GaussWeight) -> f64 {
    if n <= 170 {
        let mut fact = 1.0f64;
        for k in 2..=n {
            fact *= k as f64;
        }
        fact / weight.r().powi(n as i32)
    } else {
        ln_monomial_norm_sq(n, weight.r()).exp()
    }
}

/// Finite coefficient vector `c_0..c_N` in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    weight: GaussWeight,
    coeffs: Vec<Complex64>,
}

impl FockVector {
    pub fn from_coeffs(weight: GaussWeight, coeffs: Vec<Complex64>) -> Result<Self> {
        if let Some(index) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(FockError::NonFinite { index });
        }
        if coeffs.is_empty() {
            return Err(FockError::InvalidArgument("empty coefficient vector".into()));
        }
        Ok(Self { weight, coeffs })
    }

    pub(crate) fn from_raw(weight: GaussWeight, coeffs: Vec<Complex64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { weight, coeffs }
    }

    pub fn zeros(degree: usize, weight: GaussWeight) -> Self {
        Self { weight, coeffs: vec![Complex64::new(0.0, 0.0); degree + 1] }
    }

    /// The basis vector `u_n` in a space truncated at `degree`.
    pub fn basis(n: usize, degree: usize, weight: GaussWeight) -> Self {
        let mut v = Self::zeros(degree.max(n), weight);
        v.coeffs[n] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn weight(&self) -> GaussWeight {
        self.weight
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ c_n(self) conj(c_n(other))`, zero-padding the shorter operand.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        self.weight.ensure_same(other.weight)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    /// Pointwise value of the truncated series, by Horner's rule on
    /// `c_0 + z√(r/1)(c_1 + z√(r/2)(c_2 + ...))`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let r = self.weight.r();
        let mut acc = self.coeffs[self.degree()];
        for n in (1..=self.degree()).rev() {
            acc = self.coeffs[n - 1] + z * (r / n as f64).sqrt() * acc;
        }
        acc
    }

    pub fn scale(&self, s: Complex64) -> FockVector {
        Self { weight: self.weight, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self + s·other`, zero-padded to the larger degree.
    pub fn add_scaled(&self, s: Complex64, other: &FockVector) -> Result<FockVector> {
        self.weight.ensure_same(other.weight)?;
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = (0..len)
            .map(|n| {
                self.coeffs.get(n).copied().unwrap_or(zero)
                    + s * other.coeffs.get(n).copied().unwrap_or(zero)
            })
            .collect();
        Ok(Self { weight: self.weight, coeffs })
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    /// Zero-pad or cut to `degree`.
    pub fn resized(&self, degree: usize) -> FockVector {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, Complex64::new(0.0, 0.0));
        Self { weight: self.weight, coeffs }
    }
}

/// Truncation of `e_w`: `c_n = (r^n/n!)^{1/2} conj(w)^n`.
pub fn kernel_vector(w: Complex64, degree: usize, weight: GaussWeight) -> FockVector {
    monomial_times_kernel(0, w, degree, weight)
}

/// Truncation of `z^j e_w`. The monomial coefficients of `z^j e_w` are
/// `(r conj w)^{n-j}/(n-j)!`, normalized by `(n!/r^n)^{1/2}`.
pub fn monomial_times_kernel(j: usize, w: Complex64, degree: usize, weight: GaussWeight) -> FockVector {
    let r = weight.r();
    let ln_r = r.ln();
    let wc = w.conj();
    let ln_abs_w = wc.norm().ln();
    let arg_w = wc.arg();
    let coeffs = (0..=degree)
        .map(|n| {
            if n < j {
                return Complex64::new(0.0, 0.0);
            }
            let k = n - j;
            if k == 0 {
                return Complex64::new((0.5 * ln_monomial_norm_sq(n, r)).exp(), 0.0);
            }
            if w == Complex64::new(0.0, 0.0) {
                return Complex64::new(0.0, 0.0);
            }
            let ln_mag = k as f64 * (ln_r + ln_abs_w) - ln_factorial(k)
                + 0.5 * (ln_factorial(n) - n as f64 * ln_r);
            Complex64::from_polar(ln_mag.exp(), k as f64 * arg_w)
        })
        .collect();
    FockVector::from_raw(weight, coeffs)
}

/// Squared norm of `e_w` beyond degree `N`: `Σ_{n>N} (r|w|²)^n/n!`.
pub fn kernel_tail_norm_sq(w: Complex64, degree: usize, weight: GaussWeight) -> f64 {
    let x = weight.r() * w.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    let mut n = degree + 1;
    let mut term = (n as f64 * x.ln() - ln_factorial(n)).exp();
    let mut total = 0.0;
    loop {
        total += term;
        n += 1;
        term *= x / n as f64;
        if term <= total * 1e-17 && (n as f64) > x {
            break;
        }
        if n > degree + 100_000 {
            break;
        }
    }
    total
}

/// Truncation of an entire symbol: `c_n = a_n (n!/r^n)^{1/2}`.
pub fn embed_symbol(symbol: &EntireSymbol, degree: usize, weight: GaussWeight) -> FockVector {
    let r = weight.r();
    let coeffs = symbol
        .log_coeffs(degree)
        .iter()
        .enumerate()
        .map(|(n, a)| a.scale_ln(0.5 * ln_monomial_norm_sq(n, r)).to_complex())
        .collect();
    FockVector::from_raw(weight, coeffs)
}

/// Gram matrix `G[i][j] = ⟨e_{w_i}, e_{w_j}⟩` of truncated kernels.
pub fn kernel_gram(nodes: &[Complex64], degree: usize, weight: GaussWeight) -> Result<DMatrix<Complex64>> {
    if nodes.len() > degree + 1 {
        return Err(FockError::TooManyNodes { nodes: nodes.len(), dim: degree + 1 });
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(FockError::DuplicateNode(a.to_string()));
        }
    }
    let kernels: Vec<FockVector> = nodes.iter().map(|w| kernel_vector(*w, degree, weight)).collect();
    let m = nodes.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = kernels[i].inner(&kernels[j])?;
        }
    }
    Ok(gram)
}

pub fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}
