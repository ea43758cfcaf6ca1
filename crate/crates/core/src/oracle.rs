//! Independent integration against `dμ = (r/π) e^{−r|z|²} dA`.
//!
//! Nothing here touches coefficient space: integrands are pointwise closures, so the
//! oracle cross-checks the coefficient arithmetic rather than restating it.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::fock::GaussWeight;

/// Polar product rule: Gauss–Laguerre in `t = r s²`, `K` uniform angles.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    weight: GaussWeight,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    angles: usize,
}

pub const DEFAULT_RADIAL_NODES: usize = 40;
pub const DEFAULT_ANGLES: usize = 128;

impl QuadratureRule {
    pub fn new(weight: GaussWeight, radial_nodes: usize, angles: usize) -> Result<Self> {
        if radial_nodes == 0 || angles == 0 {
            return Err(FockError::InvalidArgument("quadrature sizes must be positive".into()));
        }
        let (nodes, weights) = gauss_laguerre(radial_nodes)?;
        Ok(Self { weight, nodes, weights, angles })
    }

    pub fn with_defaults(weight: GaussWeight) -> Self {
        Self::new(weight, DEFAULT_RADIAL_NODES, DEFAULT_ANGLES).expect("default sizes are valid")
    }

    pub fn weight(&self) -> GaussWeight {
        self.weight
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn angles(&self) -> usize {
        self.angles
    }
}

/// Laguerre (α = 0) nodes and weights by Newton iteration on the three-term recurrence.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n {
        // initial guesses from the asymptotic node spacing
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - x[i - 2])
            }
        };
        let mut converged = false;
        let (mut pp, mut p2) = (0.0, 0.0);
        for _ in 0..100 {
            let (mut p1, mut p2_) = (1.0f64, 0.0f64);
            for j in 0..n {
                let p3 = p2_;
                p2_ = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2_ - jf * p3) / (jf + 1.0);
            }
            p2 = p2_;
            pp = (nf * p1 - nf * p2_) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(FockError::Inconclusive(format!("Laguerre node {i} of {n} did not converge")));
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    Ok((x, w))
}

/// Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0f64, 0.0f64);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn sample(f: &impl Fn(Complex64) -> Complex64, z: Complex64, j: usize, k: usize) -> Result<Complex64> {
    let v = f(z);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(FockError::NonFiniteSample { node: format!("radial {j}, angle {k}, z = {z}") })
    }
}

/// `∫ f conj(g) dμ ≈ (1/K) Σ_j Σ_k v_j f(s_j e^{iθ_k}) conj g(s_j e^{iθ_k})`, `s_j = √(t_j/r)`.
pub fn gauss_inner<F, G>(f: F, g: G, rule: &QuadratureRule) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let r = rule.weight.r();
    let k_count = rule.angles;
    let mut total = Complex64::new(0.0, 0.0);
    for (j, (&t, &v)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let s = (t / r).sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for k in 0..k_count {
            let z = Complex64::from_polar(s, 2.0 * PI * k as f64 / k_count as f64);
            ring += sample(&f, z, j, k)? * sample(&g, z, j, k)?.conj();
        }
        total += ring * v;
    }
    Ok(total / k_count as f64)
}

/// `G[i][j] = ∫ f_i conj(g_j) dμ` for two families sampled together: each closure
/// returns every member's value at `z`, so each node is visited once.
pub fn gauss_gram<F, G>(f: F, g: G, rule: &QuadratureRule) -> Result<DMatrix<Complex64>>
where
    F: Fn(Complex64) -> Vec<Complex64>,
    G: Fn(Complex64) -> Vec<Complex64>,
{
    let r = rule.weight.r();
    let k_count = rule.angles;
    let mut gram: Option<DMatrix<Complex64>> = None;
    for (j, (&t, &v)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let s = (t / r).sqrt();
        for k in 0..k_count {
            let z = Complex64::from_polar(s, 2.0 * PI * k as f64 / k_count as f64);
            let fz = f(z);
            let gz = g(z);
            if let Some(bad) = fz.iter().chain(&gz).find(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(FockError::NonFiniteSample { node: format!("radial {j}, angle {k}, z = {z}, value {bad}") });
            }
            let acc = gram.get_or_insert_with(|| DMatrix::zeros(fz.len(), gz.len()));
            if acc.nrows() != fz.len() || acc.ncols() != gz.len() {
                return Err(FockError::SizeMismatch { left: acc.nrows() * acc.ncols(), right: fz.len() * gz.len() });
            }
            for (b, gv) in gz.iter().enumerate() {
                let wg = gv.conj() * (v / k_count as f64);
                for (a, fv) in fz.iter().enumerate() {
                    acc[(a, b)] += fv * wg;
                }
            }
        }
    }
    Ok(gram.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// Radial/angular resolution for annulus integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusRule {
    /// Gauss–Legendre order per radial panel.
    pub order: usize,
    pub panel_width: f64,
    pub min_angles: usize,
    /// Angular samples per unit arc length.
    pub angular_density: f64,
}

impl Default for AnnulusRule {
    fn default() -> Self {
        Self { order: 8, panel_width: 0.25, min_angles: 64, angular_density: 8.0 }
    }
}

/// `∫_{R_in<|z|<R_out} |f|² |z|^{2p} dμ` from a log-modulus `ln|f|`, so integrands far
/// beyond `f64` range still combine with the Gaussian factor safely.
pub fn gauss_log_norm_over_annulus<F>(
    ln_abs_f: F,
    weight: GaussWeight,
    r_inner: f64,
    r_outer: f64,
    power: i32,
    rule: &AnnulusRule,
) -> Result<f64>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    if !(r_inner >= 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(FockError::InvalidArgument(format!("annulus needs 0 ≤ R_in < R_out, got [{r_inner}, {r_outer}]")));
    }
    let r = weight.r();
    let (gx, gw) = gauss_legendre(rule.order);
    let panels = ((r_outer - r_inner) / rule.panel_width).ceil().max(1.0) as usize;
    let h = (r_outer - r_inner) / panels as f64;
    let mut shells = Vec::with_capacity(panels * rule.order);
    for p in 0..panels {
        let lo = r_inner + p as f64 * h;
        for (x, wq) in gx.iter().zip(&gw) {
            shells.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * wq));
        }
    }
    use rayon::prelude::*;
    let per_shell: Vec<Result<f64>> = shells
        .par_iter()
        .enumerate()
        .map(|(j, &(s, ws))| {
            let k_count = rule.min_angles.max((rule.angular_density * 2.0 * PI * s).ceil() as usize);
            let radial = -r * s * s + 2.0 * power as f64 * s.ln();
            let mut ring = 0.0;
            for k in 0..k_count {
                let z = Complex64::from_polar(s, 2.0 * PI * k as f64 / k_count as f64);
                let l = ln_abs_f(z);
                if l.is_nan() || l == f64::INFINITY {
                    return Err(FockError::NonFiniteSample { node: format!("radial {j}, angle {k}, z = {z}") });
                }
                ring += (2.0 * l + radial).exp();
            }
            // dμ = (r/π) s ds dθ; angular mean times 2π
            Ok(ring / k_count as f64 * 2.0 * r * s * ws)
        })
        .collect();
    // summed in shell order: deterministic regardless of scheduling
    per_shell.into_iter().sum()
}

/// Annulus integral for a directly evaluable `f`.
pub fn gauss_norm_over_annulus<F>(
    f: F,
    weight: GaussWeight,
    r_inner: f64,
    r_outer: f64,
    power: i32,
    rule: &AnnulusRule,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    gauss_log_norm_over_annulus(|z| f(z).norm().ln(), weight, r_inner, r_outer, power, rule)
}

/// Taylor coefficients `a_0..a_{n_max}` by a `K`-point trapezoid Cauchy integral on `|z| = ρ`.
pub fn cauchy_taylor<F>(f: F, n_max: usize, radius: f64, samples: usize) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64,
{
    if samples <= 2 * n_max {
        return Err(FockError::InvalidArgument(format!("need more than {} samples, got {samples}", 2 * n_max)));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FockError::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let values: Vec<Complex64> = (0..samples)
        .map(|k| {
            let z = Complex64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
            sample(&f, z, 0, k)
        })
        .collect::<Result<_>>()?;
    Ok((0..=n_max)
        .map(|n| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((n * k) % samples) as f64 / samples as f64))
                .sum();
            sum / (samples as f64 * radius.powi(n as i32))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_factorial;

    fn w(r: f64) -> GaussWeight {
        GaussWeight::new(r).unwrap()
    }

    fn u(n: usize, r: f64) -> impl Fn(Complex64) -> Complex64 {
        let scale = (0.5 * (n as f64 * r.ln() - ln_factorial(n))).exp();
        move |z| z.powu(n as u32) * scale
    }

    #[test]
    fn laguerre_weights_sum_to_one_and_integrate_moments() {
        let (x, v) = gauss_laguerre(40).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..20 {
            let got: f64 = x.iter().zip(&v).map(|(t, w)| w * t.powi(k)).sum();
            let want = ln_factorial(k as usize).exp();
            assert!((got - want).abs() / want < 1e-12, "moment {k}");
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn low_order_moments() {
        let rule = QuadratureRule::with_defaults(w(1.0));
        let one = gauss_inner(|_| Complex64::new(1.0, 0.0), |_| Complex64::new(1.0, 0.0), &rule).unwrap();
        assert!((one.re - 1.0).abs() < 1e-13 && one.im.abs() < 1e-13);
        let z2 = gauss_inner(|z| z * z, |z| z * z, &rule).unwrap();
        assert!((z2.re - 2.0).abs() < 1e-12);
        let cross = gauss_inner(|z| z * z * z, |z| z * z, &rule).unwrap();
        assert!(cross.norm() < 1e-13);
        let rule2 = QuadratureRule::with_defaults(w(2.0));
        let z3 = gauss_inner(|z| z * z * z, |z| z * z * z, &rule2).unwrap();
        assert!((z3.re - 0.75).abs() < 1e-13);
    }

    #[test]
    fn gram_matches_pairwise_inner_products() {
        let rule = QuadratureRule::new(w(1.5), 20, 48).unwrap();
        let fam = |z: Complex64| (0..6).map(|n| u(n, 1.5)(z) * (z + 0.3)).collect::<Vec<_>>();
        let basis = |z: Complex64| (0..4).map(|n| u(n, 1.5)(z)).collect::<Vec<_>>();
        let g = gauss_gram(fam, basis, &rule).unwrap();
        assert_eq!(g.shape(), (6, 4));
        for a in 0..6 {
            for b in 0..4 {
                let one = gauss_inner(|z| u(a, 1.5)(z) * (z + 0.3), u(b, 1.5), &rule).unwrap();
                assert!((g[(a, b)] - one).norm() < 1e-13);
            }
        }
        let bad = gauss_gram(|_| vec![Complex64::new(f64::NAN, 0.0)], |_| vec![Complex64::new(1.0, 0.0)], &rule);
        assert!(matches!(bad, Err(FockError::NonFiniteSample { .. })));
    }

    #[test]
    fn orthonormal_basis_under_quadrature() {
        for r in [0.5, 1.0, 2.0] {
            let rule = QuadratureRule::with_defaults(w(r));
            let mut worst: f64 = 0.0;
            for n in 0..=30 {
                for m in 0..=30 {
                    let got = gauss_inner(u(n, r), u(m, r), &rule).unwrap();
                    let want = if n == m { 1.0 } else { 0.0 };
                    worst = worst.max((got - want).norm());
                }
            }
            assert!(worst < 1e-10, "r = {r}: {worst:e}");
        }
    }

    #[test]
    fn doubling_nodes_is_stable_on_polynomials() {
        let coarse = QuadratureRule::new(w(1.0), 40, 128).unwrap();
        let fine = QuadratureRule::new(w(1.0), 80, 256).unwrap();
        let f = |z: Complex64| z * z * z - z * 2.0 + Complex64::new(0.5, 1.0);
        let g = |z: Complex64| z.powu(4) + z * Complex64::new(0.0, 1.0);
        let a = gauss_inner(f, g, &coarse).unwrap();
        let b = gauss_inner(f, g, &fine).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn non_finite_samples_are_named() {
        let rule = QuadratureRule::new(w(1.0), 4, 8).unwrap();
        let err = gauss_inner(|z| Complex64::new(1.0, 0.0) / (z - z), |_| Complex64::new(1.0, 0.0), &rule);
        assert!(matches!(err, Err(FockError::NonFiniteSample { .. })));
    }

    #[test]
    fn annulus_of_constant_approaches_full_mass() {
        let rule = AnnulusRule::default();
        for r in [0.5, 1.0, 2.0] {
            let v = gauss_norm_over_annulus(|_| Complex64::new(1.0, 0.0), w(r), 0.0, 12.0 / r.sqrt(), 0, &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "r = {r}: {v}");
        }
        // mass of the annulus [1, 2] at r = 1 is e^{-1} − e^{-4}
        let v = gauss_norm_over_annulus(|_| Complex64::new(1.0, 0.0), w(1.0), 1.0, 2.0, 0, &rule).unwrap();
        assert!((v - ((-1.0f64).exp() - (-4.0f64).exp())).abs() < 1e-13);
        // ∫ |z|² dμ = 1/r
        let v = gauss_norm_over_annulus(|_| Complex64::new(1.0, 0.0), w(2.0), 0.0, 10.0, 1, &rule).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_r_symbol_grows_without_bound() {
        let r = 1.0;
        let ln_f = |z: Complex64| (z * z * (r / 2.0)).re;
        let rule = AnnulusRule::default();
        let vals: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&big_r| gauss_log_norm_over_annulus(ln_f, w(r), 1.0, big_r, 0, &rule).unwrap())
            .collect();
        // mass per shell tends to a constant: increments over doubling radii keep growing
        for p in vals.windows(2) {
            assert!(p[1] > 1.5 * p[0], "{vals:?}");
        }
    }

    #[test]
    fn annulus_rejects_bad_radii() {
        let rule = AnnulusRule::default();
        assert!(gauss_norm_over_annulus(|z| z, w(1.0), 2.0, 1.0, 0, &rule).is_err());
    }

    #[test]
    fn cauchy_taylor_examples() {
        let a = cauchy_taylor(|z: Complex64| z.exp(), 10, 1.0, 64).unwrap();
        assert!((a[3].re - 1.0 / 6.0).abs() < 1e-12);
        let p = cauchy_taylor(|z: Complex64| z * z * 3.0 - Complex64::new(0.0, 1.0), 5, 0.7, 11).unwrap();
        assert!((p[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((p[2] - Complex64::new(3.0, 0.0)).norm() < 1e-13);
        assert!(p[3].norm() < 1e-13);
        assert!(cauchy_taylor(|z| z, 5, 1.0, 10).is_err());
    }

    #[test]
    fn cauchy_taylor_resummation() {
        let f = |z: Complex64| (z * 0.7).exp() / (Complex64::new(3.0, 0.0) - z);
        let rho = 1.5;
        let a = cauchy_taylor(f, 60, rho, 256).unwrap();
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.5), Complex64::new(0.0, -0.7)] {
            let s: Complex64 = a.iter().enumerate().map(|(n, c)| c * z.powu(n as u32)).sum();
            assert!((s - f(z)).norm() < 1e-8 * f(z).norm());
        }
    }
}
