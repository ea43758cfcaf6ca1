//! Weierstrass σ for the square lattice `a(ℤ + iℤ)`, `a = √(π/r)`.
//!
//! With `η₁ = η(a) = r·a` and `η(ia) = −iη₁` (Legendre: `η₁·ia − η(ia)·a = 2πi`),
//! `σ(z + ω) = ψ(ω) e^{η(ω)(z + ω/2)} σ(z)` where `ψ(ω) = +1` iff both lattice
//! coordinates are even. Since `η(ω)ω/2 + Re(η(ω)z)` equals `r|z+ω|²/2 − r|z|²/2` up to
//! an imaginary part, `|σ(z)| e^{−r|z|²/2}` is lattice periodic.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::fock::GaussWeight;

/// `Σ' (m + in)^{-4} = Γ(1/4)^8 / (960 π²)` over the unit square lattice.
pub const SQUARE_LATTICE_G4_SUM: f64 = 3.151_212_002_153_897_5;

/// Nome `q = e^{−π}` of the square lattice.
const NOME: f64 = 0.043_213_918_263_772_25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSigma {
    weight: GaussWeight,
    a: f64,
    eta1: f64,
}

impl LatticeSigma {
    pub fn new(weight: GaussWeight) -> Self {
        let a = (PI / weight.r()).sqrt();
        Self { weight, a, eta1: weight.r() * a }
    }

    pub fn weight(&self) -> GaussWeight {
        self.weight
    }

    /// Lattice spacing `a = √(π/r)`.
    pub fn spacing(&self) -> f64 {
        self.a
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    /// `(m, n)` with `z − a(m + in)` in the cell `|Re|, |Im| ≤ a/2`.
    fn reduce(&self, z: Complex64) -> (i64, i64, Complex64) {
        let m = (z.re / self.a).round();
        let n = (z.im / self.a).round();
        (m as i64, n as i64, z - Complex64::new(m * self.a, n * self.a))
    }

    /// `η(ω)(z0 + ω/2)` for `ω = a(m + in)`, `η(ω) = η₁(m − in)`.
    fn quasi_exponent(&self, m: i64, n: i64, z0: Complex64) -> Complex64 {
        let omega = Complex64::new(m as f64 * self.a, n as f64 * self.a);
        Complex64::new(m as f64 * self.eta1, -(n as f64) * self.eta1) * (z0 + omega * 0.5)
    }

    /// q-product, accurate inside the fundamental cell.
    fn cell_value(&self, z: Complex64) -> Complex64 {
        let a = self.a;
        let x = z * (PI / a);
        let c2 = (x * 2.0).cos();
        let mut prod = Complex64::new(1.0, 0.0);
        let mut q2n = 1.0;
        for _ in 0..40 {
            q2n *= NOME * NOME;
            let factor = (Complex64::new(1.0 + q2n * q2n, 0.0) - c2 * (2.0 * q2n)) / ((1.0 - q2n) * (1.0 - q2n));
            prod *= factor;
            if q2n < 1e-18 {
                break;
            }
        }
        (z * z * (self.weight.r() / 2.0)).exp() * x.sin() * prod * (a / PI)
    }

    /// `σ(z)`; exactly 0 on lattice points. Overflows to ∞ once `r|z|²/2` passes ~709.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (m, n, z0) = self.reduce(z);
        let v0 = self.cell_value(z0);
        if v0 == Complex64::new(0.0, 0.0) {
            return v0;
        }
        let sign = if m % 2 == 0 && n % 2 == 0 { 1.0 } else { -1.0 };
        v0 * self.quasi_exponent(m, n, z0).exp() * sign
    }

    /// `ln|σ(z)|`, finite for any `z` off the lattice.
    pub fn ln_abs(&self, z: Complex64) -> f64 {
        let (m, n, z0) = self.reduce(z);
        self.cell_value(z0).norm().ln() + self.quasi_exponent(m, n, z0).re
    }

    /// `G(z) = |σ(z)| e^{−r|z|²/2}`.
    pub fn modulus_g(&self, z: Complex64) -> f64 {
        (self.ln_abs(z) - 0.5 * self.weight.r() * z.norm_sqr()).exp()
    }

    /// Is `z` a lattice point (to `1e-9·a`)?
    pub fn is_lattice_point(&self, z: Complex64) -> bool {
        let (_, _, z0) = self.reduce(z);
        z0.norm() <= 1e-9 * self.a
    }

    /// Lattice points sorted by `(|ω|, arg ω ∈ [0, 2π))`, starting at 0.
    pub fn nearest_lattice_points(&self, count: usize) -> Vec<Complex64> {
        let mut radius = 1i64;
        loop {
            let mut pts: Vec<(i64, i64)> = (-radius..=radius)
                .flat_map(|m| (-radius..=radius).map(move |n| (m, n)))
                .collect();
            pts.sort_by(|p, q| {
                let key = |&(m, n): &(i64, i64)| {
                    let arg = (n as f64).atan2(m as f64).rem_euclid(2.0 * PI);
                    (m * m + n * n, arg)
                };
                let (kp, kq) = (key(p), key(q));
                kp.0.cmp(&kq.0).then(kp.1.total_cmp(&kq.1))
            });
            // points with m²+n² ≤ radius² are complete within the box
            let complete: Vec<(i64, i64)> = pts.into_iter().filter(|(m, n)| m * m + n * n <= radius * radius).collect();
            if complete.len() >= count {
                return complete[..count]
                    .iter()
                    .map(|&(m, n)| Complex64::new(m as f64 * self.a, n as f64 * self.a))
                    .collect();
            }
            radius += 1;
        }
    }

    /// Independent route: `z Π' (1 − z/ω) e^{z/ω + z²/2ω²}` over `|m|, |n| ≤ cutoff`,
    /// with the missing `Σ ω^{-4}` tail restored exactly (the `ω^{-6}` sum vanishes
    /// on any square-symmetric truncation).
    pub fn product_eval(&self, z: Complex64, cutoff: i64) -> Complex64 {
        if z == Complex64::new(0.0, 0.0) {
            return z;
        }
        let mut log_sum = Complex64::new(0.0, 0.0);
        let mut g4_trunc = 0.0;
        for m in -cutoff..=cutoff {
            for n in -cutoff..=cutoff {
                if m == 0 && n == 0 {
                    continue;
                }
                let unit = Complex64::new(m as f64, n as f64);
                g4_trunc += unit.powi(-4).re;
                let x = z / (unit * self.a);
                if x == Complex64::new(1.0, 0.0) {
                    return Complex64::new(0.0, 0.0);
                }
                log_sum += if x.norm() < 0.1 {
                    // ln(1−x) + x + x²/2 = −Σ_{k≥3} x^k/k
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut p = x * x * x;
                    for k in 3..=16 {
                        acc -= p / k as f64;
                        p *= x;
                    }
                    acc
                } else {
                    (Complex64::new(1.0, 0.0) - x).ln() + x + x * x * 0.5
                };
            }
        }
        let missing_g4 = (SQUARE_LATTICE_G4_SUM - g4_trunc) / self.a.powi(4);
        z * (log_sum - z.powi(4) * (missing_g4 / 4.0)).exp()
    }
}

/// Rejects zero sets that are not distinct lattice points.
pub(crate) fn validate_zeros(s: &LatticeSigma, zeros: &[Complex64]) -> Result<()> {
    for (i, z) in zeros.iter().enumerate() {
        if !s.is_lattice_point(*z) {
            return Err(FockError::InvalidArgument(format!(
                "zero {z} of p is not a lattice point; σ/p would not be entire"
            )));
        }
        if zeros[..i].iter().any(|y| (y - z).norm() <= 1e-9 * s.spacing()) {
            return Err(FockError::InvalidArgument(format!("zero {z} of p is repeated")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::cauchy_taylor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(r: f64) -> LatticeSigma {
        LatticeSigma::new(GaussWeight::new(r).unwrap())
    }

    #[test]
    fn g4_constant_matches_gamma_quarter() {
        // Γ(1/4) = 3.625609908221908...
        let g = 3.625_609_908_221_908f64;
        let want = g.powi(8) / (960.0 * PI * PI);
        assert!((SQUARE_LATTICE_G4_SUM - want).abs() < 1e-13);
        assert!((NOME - (-PI).exp()).abs() < 1e-17);
    }

    #[test]
    fn legendre_relation_and_constants() {
        for r in [0.5, 1.0, 2.0] {
            let s = sig(r);
            let a = s.spacing();
            assert!((a * a - PI / r).abs() < 1e-14);
            // η₁·ia − η(ia)·a = 2πi with η(ia) = −iη₁
            let lhs = Complex64::new(0.0, s.eta1() * a) - Complex64::new(0.0, -s.eta1()) * a;
            assert!((lhs - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        }
    }

    #[test]
    fn normalization_and_oddness() {
        let s = sig(1.0);
        assert_eq!(s.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        let d = cauchy_taylor(|z| s.eval(z), 8, s.spacing() / 4.0, 64).unwrap();
        assert!((d[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(d[0].norm() < 1e-14 && d[2].norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let z = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let (p, m) = (s.eval(z), s.eval(-z));
            worst = worst.max((p + m).norm() / p.norm().max(1e-300));
        }
        assert!(worst <= 1e-10, "{worst:e}");
    }

    #[test]
    fn zeros_sit_on_the_lattice() {
        let s = sig(2.0);
        let a = s.spacing();
        for (m, n) in [(1, 0), (0, 1), (2, -1), (-3, 2)] {
            let w = Complex64::new(m as f64 * a, n as f64 * a);
            assert_eq!(s.eval(w), Complex64::new(0.0, 0.0));
            assert!(s.eval(w + Complex64::new(1e-3, 0.0)).norm() > 0.0);
        }
    }

    #[test]
    fn modulus_is_lattice_periodic() {
        for r in [0.5, 1.0, 2.0] {
            let s = sig(r);
            let a = s.spacing();
            for i in 0..10 {
                for j in 0..10 {
                    let z = Complex64::new(-3.0 + 0.61 * i as f64, -3.0 + 0.59 * j as f64);
                    let g = s.modulus_g(z);
                    for shift in [Complex64::new(a, 0.0), Complex64::new(0.0, a), Complex64::new(-2.0 * a, 3.0 * a)] {
                        let gs = s.modulus_g(z + shift);
                        assert!((gs - g).abs() <= 1e-8 * g, "r={r} z={z}: {g} vs {gs}");
                    }
                }
            }
        }
    }

    #[test]
    fn quasi_periodicity_of_values() {
        let s = sig(1.0);
        let a = s.spacing();
        let z = Complex64::new(0.3, -0.2);
        let lhs = s.eval(z + a);
        let rhs = -s.eval(z) * (Complex64::new(s.eta1(), 0.0) * (z + a / 2.0)).exp();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        let lhs = s.eval(z + Complex64::new(0.0, a));
        let rhs = -s.eval(z) * (Complex64::new(0.0, -s.eta1()) * (z + Complex64::new(0.0, a / 2.0))).exp();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn product_route_agrees_and_is_cutoff_stable() {
        let s = sig(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..12 {
            let z = Complex64::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let coarse = s.product_eval(z, 32);
            let fine = s.product_eval(z, 64);
            assert!((coarse - fine).norm() < 1e-8 * fine.norm(), "{z}");
            let primary = s.eval(z);
            assert!((primary - fine).norm() < 1e-8 * fine.norm(), "{z}: {primary} vs {fine}");
        }
        // outside the cell the reduction takes over; compare at a moderate point
        let z = Complex64::new(2.1, -1.3);
        let (p, q) = (s.eval(z), s.product_eval(z, 96));
        assert!((p - q).norm() < 1e-6 * p.norm());
    }

    #[test]
    fn nearest_points_are_ordered() {
        let s = sig(1.0);
        let a = s.spacing();
        let pts = s.nearest_lattice_points(6);
        assert_eq!(pts[0], Complex64::new(0.0, 0.0));
        assert_eq!(pts[1], Complex64::new(a, 0.0));
        assert_eq!(pts[2], Complex64::new(0.0, a));
        assert_eq!(pts[3], Complex64::new(-a, 0.0));
        assert_eq!(pts[4], Complex64::new(0.0, -a));
        assert!((pts[5] - Complex64::new(a, a)).norm() < 1e-15);
        assert!(validate_zeros(&s, &pts).is_ok());
        assert!(validate_zeros(&s, &[Complex64::new(0.5, 0.0)]).is_err());
        assert!(validate_zeros(&s, &[pts[1], pts[1]]).is_err());
    }
}
