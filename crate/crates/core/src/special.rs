//! Log-space factorial helpers.

use std::sync::OnceLock;

const TABLE_LEN: usize = 171;

fn table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Direct products stay within f64 range up to 170!; their rounding
        // error stays below n ulps.
        let mut out = [0.0; TABLE_LEN];
        let mut fact = 1.0f64;
        for (n, slot) in out.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            *slot = fact.ln();
        }
        out
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        return table()[n];
    }
    ln_gamma_stirling(n as f64 + 1.0)
}

/// Stirling series for `ln Γ(x)`, accurate to f64 precision for x > 100.
fn ln_gamma_stirling(x: f64) -> f64 {
    const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// `ln(n! / r^n)`, the log of the squared Fock norm of `z^n`.
pub fn ln_monomial_norm_sq(n: usize, r: f64) -> f64 {
    ln_factorial(n) - n as f64 * r.ln()
}

/// Binomial coefficient as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
