//! The fractional kernel `K_s(k)` and its tables.
//!
//! For non-integer `s` the kernel is evaluated from the Gamma-ratio form
//!
//! ```text
//! K_s(k) = (-1)^{k+1} Γ(2s+1) / (Γ(1+s+k) Γ(1+s-k)),   k ≥ 1,
//! ```
//!
//! which has no `Γ(-s)` factor. For `k > s` the reflection formula turns
//! `1/Γ(1+s-k)` into `sin(π(k-s)) Γ(k-s) / π`, leaving
//! `K_s(k) = sin(πs)/π · Γ(2s+1) Γ(k-s) / Γ(k+1+s)`, a single log-Gamma
//! ratio with an explicit sign. At integer `s = m` the kernel is the limit
//! `(-1)^{k+1} C(2m, m+k)` for `1 ≤ |k| ≤ m` and zero elsewhere.
//!
//! Every routine works with `|k|`; `K_s(-k) = K_s(k)` holds bit-for-bit.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special_functions::{binomial, gamma, ln_gamma, log_gamma_ratio, sin_pi};

/// Orders closer than this to a positive integer use the integer limit.
pub const NEAR_INTEGER_TOL: f64 = 1e-9;

/// Multiplier applied to the decay constant when certifying table tails.
pub const TAIL_SAFETY: f64 = 1.5;

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("order must be positive and finite, got {s}")));
    }
    Ok(())
}

/// The integer `m ≥ 1` with `|s - m| ≤ NEAR_INTEGER_TOL`, if any.
pub fn integer_order(s: f64) -> Option<u64> {
    let m = s.round();
    if m >= 1.0 && (s - m).abs() <= NEAR_INTEGER_TOL {
        Some(m as u64)
    } else {
        None
    }
}

fn require_fractional(s: f64) -> Result<()> {
    check_order(s)?;
    if integer_order(s).is_some() {
        return Err(Error::NearIntegerOrder { s, tol: NEAR_INTEGER_TOL });
    }
    Ok(())
}

/// `K_s(k)` for non-integer `s`, from the Gamma-ratio form.
pub fn kernel_value(s: f64, k: i64) -> Result<f64> {
    require_fractional(s)?;
    let k = k.unsigned_abs();
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    if kf < s {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let ln = log_gamma_ratio(2.0 * s + 1.0, 1.0 + s + kf)? - ln_gamma(1.0 + s - kf)?;
        Ok(sign * ln.exp())
    } else {
        let ln = log_gamma_ratio(kf - s, kf + 1.0 + s)? + ln_gamma(2.0 * s + 1.0)?;
        Ok(sin_pi(s) / PI * ln.exp())
    }
}

/// `K_s(k)` from the defining quotient
/// `-4^s Γ(½+s) Γ(|k|-s) / (√π Γ(-s) Γ(|k|+1+s))`.
///
/// Uses plain Gamma values (including negative arguments), so it is an
/// independent route for cross-checking [`kernel_value`]. Overflows for
/// `|k| + s` beyond ~170.
pub fn kernel_definition_form(s: f64, k: i64) -> Result<f64> {
    require_fractional(s)?;
    let k = k.unsigned_abs() as f64;
    if k == 0.0 {
        return Ok(0.0);
    }
    let num = 4f64.powf(s) * gamma(0.5 + s)? * gamma(k - s)?;
    let den = SQRT_PI * gamma(-s)? * gamma(k + 1.0 + s)?;
    Ok(-num / den)
}

/// `lim_{z→m} K_z(k)`: `(-1)^{k+1} C(2m, m+|k|)` for `1 ≤ |k| ≤ m`, else 0.
pub fn kernel_limit_at_integer(m: u64, k: i64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("integer order must be at least 1".into()));
    }
    let k = k.unsigned_abs();
    if k == 0 || k > m {
        return Ok(0.0);
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * binomial(2 * m, (m + k) as i64)?)
}

/// The kernel continued across integer orders.
pub fn kernel_extended(s: f64, k: i64) -> Result<f64> {
    check_order(s)?;
    match integer_order(s) {
        Some(m) => kernel_limit_at_integer(m, k),
        None => kernel_value(s, k),
    }
}

/// `A_s = Σ_k K_s(k) = 4^s Γ(½+s) / (√π Γ(1+s))`; equals `C(2m, m)` at integer order.
pub fn kernel_sum(s: f64) -> Result<f64> {
    check_order(s)?;
    if let Some(m) = integer_order(s) {
        return binomial(2 * m, m as i64);
    }
    Ok((s * 4f64.ln() + log_gamma_ratio(0.5 + s, 1.0 + s)?).exp() / SQRT_PI)
}

/// `lim_{k→∞} |K_s(k)| k^{1+2s} = 4^s Γ(½+s) / (√π |Γ(-s)|)`.
///
/// Evaluated as `4^s Γ(½+s) Γ(1+s) |sin πs| / π^{3/2}` so it stays finite
/// (and tends to zero) as `s` approaches an integer.
pub fn decay_constant(s: f64) -> Result<f64> {
    check_order(s)?;
    let ln = s * 4f64.ln() + ln_gamma(0.5 + s)? + ln_gamma(1.0 + s)?;
    Ok(ln.exp() * sin_pi(s).abs() / (PI * SQRT_PI))
}

/// `max_{⌈s⌉+1 ≤ k ≤ k_max} |K_s(k)| k^{1+2s}`: an empirical decay constant.
pub fn decay_certificate(s: f64, k_max: u64) -> Result<f64> {
    require_fractional(s)?;
    let k_min = s.ceil() as u64 + 1;
    if k_max < k_min {
        return Err(Error::Domain(format!("k_max must be at least {k_min}, got {k_max}")));
    }
    decay_profile_max(s, k_min, k_max)
}

fn decay_profile_max(s: f64, k_lo: u64, k_hi: u64) -> Result<f64> {
    let mut best = 0.0f64;
    for k in k_lo..=k_hi {
        let v = kernel_value(s, k as i64)?.abs() * (k as f64).powf(1.0 + 2.0 * s);
        best = best.max(v);
    }
    Ok(best)
}

/// `|Γ(m-s)/(2s Γ(m+s)) + Σ_{k=1}^{m-1} Γ(k-s)/Γ(k+1+s) + Γ(-s)/(2Γ(1+s))|`.
///
/// Both sides go through [`gamma`] directly, including its negative branch.
pub fn partial_sum_identity_check(s: f64, m: u64) -> Result<f64> {
    partial_sum_deviation_with(gamma, s, m)
}

pub(crate) fn partial_sum_deviation_with(
    gamma: impl Fn(f64) -> Result<f64>,
    s: f64,
    m: u64,
) -> Result<f64> {
    require_fractional(s)?;
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let mf = m as f64;
    let mut lhs = gamma(mf - s)? / (2.0 * s * gamma(mf + s)?);
    for k in 1..m {
        let kf = k as f64;
        lhs += gamma(kf - s)? / gamma(kf + 1.0 + s)?;
    }
    let rhs = -gamma(-s)? / (2.0 * gamma(1.0 + s)?);
    Ok((lhs - rhs).abs())
}

/// Precomputed `K_s(k)` for `0 ≤ k ≤ radius` with a certified bound on the
/// discarded absolute mass `Σ_{|k|>radius} |K_s(k)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub s: f64,
    pub radius: usize,
    pub values: Vec<f64>,
    pub total_sum: f64,
    pub tail_bound: f64,
}

impl KernelTable {
    /// `K_s(k)`, zero beyond the radius.
    pub fn get(&self, k: i64) -> f64 {
        self.values.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Largest `k` with a nonzero stored value.
    pub fn support_radius(&self) -> usize {
        self.values.iter().rposition(|&v| v != 0.0).unwrap_or(0)
    }

    /// CSV dump: `#` preamble with `s`, `R`, `A_s`, `tail_bound`, then `k,K_s_k` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.values.len() + 6));
        out.push_str(&format!("# s = {:?}\n", self.s));
        out.push_str(&format!("# radius = {}\n", self.radius));
        out.push_str(&format!("# A_s = {:?}\n", self.total_sum));
        out.push_str(&format!("# tail_bound = {:?}\n", self.tail_bound));
        out.push_str("k,K_s_k\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{k},{v:?}\n"));
        }
        out
    }
}

/// Builds the table for order `s` up to `radius ≥ max(2, ⌈s⌉ + 1)`.
///
/// The tail bound is `2 C R^{-2s} / (2s)` with
/// `C = 1.5 · max(decay_constant(s), max_{R/2 ≤ k ≤ R} |K_s(k)| k^{1+2s})`,
/// i.e. the integral estimate of `Σ_{|k|>R} C |k|^{-1-2s}`. At integer order
/// the kernel is finitely supported and the bound is zero.
pub fn build_table(s: f64, radius: usize) -> Result<KernelTable> {
    check_order(s)?;
    let min_radius = 2usize.max(s.ceil() as usize + 1);
    if radius < min_radius {
        return Err(Error::Domain(format!("radius must be at least {min_radius}, got {radius}")));
    }
    let values = (0..=radius)
        .map(|k| kernel_extended(s, k as i64))
        .collect::<Result<Vec<_>>>()?;
    let total_sum = kernel_sum(s)?;
    let tail_bound = tail_bound(s, radius)?;
    Ok(KernelTable { s, radius, values, total_sum, tail_bound })
}

/// Certified bound on `Σ_{|k|>radius} |K_s(k)|`; see [`build_table`].
pub fn tail_bound(s: f64, radius: usize) -> Result<f64> {
    check_order(s)?;
    if integer_order(s).is_some() {
        let m = s.round() as usize;
        return Ok(if radius >= m { 0.0 } else { f64::INFINITY });
    }
    let k_lo = ((radius / 2) as u64).max(s.ceil() as u64 + 1);
    if (radius as u64) < k_lo {
        return Err(Error::Domain(format!(
            "radius {radius} is too small to certify the tail at order {s}"
        )));
    }
    let empirical = decay_profile_max(s, k_lo, radius as u64)?;
    let c = TAIL_SAFETY * decay_constant(s)?.max(empirical);
    Ok(2.0 * c * (radius as f64).powf(-2.0 * s) / (2.0 * s))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // reference values keep all computed digits
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn kernel_value_examples() {
        for s in [0.3, 0.5, 2.5, 7.1] {
            assert_eq!(kernel_value(s, 0).unwrap(), 0.0);
        }
        let want = 4.0 / (3.0 * PI);
        assert!(rel(kernel_value(0.5, 1).unwrap(), want) < 1e-14);
        assert!(rel(kernel_definition_form(0.5, 1).unwrap(), want) < 1e-14);
        assert_eq!(kernel_value(0.5, -7).unwrap(), kernel_value(0.5, 7).unwrap());
    }

    #[test]
    fn kernel_value_reference() {
        // 50-digit evaluations of the defining quotient
        let cases = [
            (0.5, 100_000, 3.1830988619174841869e-11),
            (2.5, 3, 0.23517267204343553222),
            (2.5, 2, -2.5868993924777908544),
            (3.7, 1, 37.706971387459407741),
            (3.7, 5, -0.014206725707253095595),
            (19.5, 7, 5716904219.8651870191),
            (19.5, 100_000, -6.4928492540004577412e-155),
            (0.1, 12345, 1.1116438819597838683e-6),
            (7.25, 40, -1.2236515063336755534e-14),
        ];
        for (s, k, want) in cases {
            let got = kernel_value(s, k).unwrap();
            assert!(rel(got, want) < 1e-10, "K_{s}({k}) = {got}, want {want}");
        }
    }

    #[test]
    fn kernel_value_rejects_bad_orders() {
        assert!(matches!(kernel_value(2.0, 1), Err(Error::NearIntegerOrder { .. })));
        assert!(matches!(kernel_value(2.0 + 1e-10, 1), Err(Error::NearIntegerOrder { .. })));
        assert!(matches!(kernel_value(0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(kernel_value(-0.5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn integer_limit_examples() {
        assert_eq!(kernel_limit_at_integer(1, 1).unwrap(), 1.0);
        assert_eq!(kernel_limit_at_integer(1, 2).unwrap(), 0.0);
        assert_eq!(kernel_limit_at_integer(2, 1).unwrap(), 4.0);
        assert_eq!(kernel_limit_at_integer(2, -2).unwrap(), -1.0);
        assert_eq!(kernel_limit_at_integer(3, 0).unwrap(), 0.0);
        assert!(kernel_limit_at_integer(0, 1).is_err());
    }

    #[test]
    fn integer_limit_sign_pattern() {
        for m in 1..=8u64 {
            for k in 1..=m as i64 {
                let v = kernel_limit_at_integer(m, k).unwrap();
                let expected_sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                assert_eq!(v.signum(), expected_sign, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn extended_examples() {
        assert_eq!(kernel_extended(1.0, 1).unwrap(), 1.0);
        assert!((kernel_extended(1.0 + 1e-7, 1).unwrap() - 1.0).abs() < 1e-5);
        assert_eq!(kernel_extended(0.5, 0).unwrap(), 0.0);
    }

    #[test]
    fn extended_continuity_by_sampling() {
        // approach s = 1 from above along a shrinking sequence
        let mut prev = f64::INFINITY;
        for h in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
            let d = (kernel_value(1.0 + h, 1).unwrap() - 1.0).abs();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn kernel_sum_examples() {
        assert!(rel(kernel_sum(0.5).unwrap(), 4.0 / PI) < 1e-14);
        assert_eq!(kernel_sum(1.0).unwrap(), 2.0);
        assert_eq!(kernel_sum(2.0).unwrap(), 6.0);
        // the closed form is continuous through integers
        assert!((kernel_sum(2.0 + 1e-8).unwrap() - 6.0).abs() < 1e-6);
    }

    #[test]
    fn decay_constant_half() {
        assert!(rel(decay_constant(0.5).unwrap(), 1.0 / PI) < 1e-14);
        let k = 10_000.0f64;
        let profile = kernel_value(0.5, 10_000).unwrap() * k * k;
        assert!(rel(profile, 1.0 / PI) < 1e-3);
    }

    #[test]
    fn decay_certificate_examples() {
        let c = decay_certificate(0.5, 1000).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let c = decay_certificate(1.5, 1000).unwrap();
        assert!(c.is_finite() && c > 0.0);
        assert!(decay_certificate(2.0, 1000).is_err());
        assert!(decay_certificate(2.5, 3).is_err());
    }

    #[test]
    fn decay_certificate_converges() {
        for s in [0.5, 1.5, 2.3] {
            let full = decay_certificate(s, 2000).unwrap();
            let half = decay_certificate(s, 1000).unwrap();
            assert!(rel(full, half) <= 1e-3, "s={s}");
        }
    }

    #[test]
    fn partial_sum_examples() {
        assert!(partial_sum_identity_check(0.5, 1).unwrap() <= 1e-12);
        assert!(partial_sum_identity_check(2.5, 3).unwrap() <= 1e-11);
        assert!(partial_sum_identity_check(0.25, 10).unwrap() <= 1e-10);
        assert!(partial_sum_identity_check(1.0, 3).is_err());
    }

    #[test]
    fn partial_sum_detects_tampered_gamma() {
        let tampered = |z: f64| gamma(z).map(|g| if z > 2.0 { g * (1.0 + 1e-6) } else { g });
        let dev = partial_sum_deviation_with(tampered, 0.5, 4).unwrap();
        assert!(dev > 1e-8, "deviation {dev}");
    }

    #[test]
    fn table_examples() {
        let t = build_table(0.5, 64).unwrap();
        assert_eq!(t.values[0], 0.0);
        let partial: f64 = t.values[0] + 2.0 * t.values[1..].iter().sum::<f64>();
        assert!((partial - 4.0 / PI).abs() <= t.tail_bound);

        let t = build_table(1.0, 16).unwrap();
        assert!(t.values[2..].iter().all(|&v| v == 0.0));
        assert_eq!(t.tail_bound, 0.0);
        assert_eq!(t.support_radius(), 1);

        assert!(build_table(2.5, 3).is_err());
        assert!(build_table(0.5, 1).is_err());
        assert!(build_table(-1.0, 10).is_err());
    }

    #[test]
    fn tail_bound_dominates_larger_radius() {
        for s in [0.25, 0.5, 0.9, 1.5, 2.5, 3.7] {
            for r in [16usize, 64, 256] {
                let small = build_table(s, r).unwrap();
                let big = build_table(s, 64 * r).unwrap();
                let discarded: f64 = 2.0 * big.values[r + 1..].iter().map(|v| v.abs()).sum::<f64>();
                // the remainder beyond 64R is itself bounded by the big table's tail
                let total = discarded + big.tail_bound;
                assert!(total <= small.tail_bound, "s={s} R={r}: {total} > {}", small.tail_bound);
            }
        }
    }

    #[test]
    fn csv_dump_layout() {
        let csv = build_table(0.5, 4).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert!(lines[0].starts_with("# s = 0.5"));
        assert!(lines[2].starts_with("# A_s = "));
        assert_eq!(lines[4], "k,K_s_k");
        assert_eq!(lines[5], "0,0.0");
        assert_eq!(lines.len(), 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn dual_forms_agree(s in 0.0f64..6.0, k in -64i64..=64) {
            prop_assume!((s - s.round()).abs() > 1e-3);
            let a = kernel_value(s, k).unwrap();
            let b = kernel_definition_form(s, k).unwrap();
            if k == 0 {
                prop_assert_eq!(a, 0.0);
                prop_assert_eq!(b, 0.0);
            } else {
                prop_assert!(rel(a, b) <= 1e-10, "s={} k={}: {} vs {}", s, k, a, b);
            }
        }

        #[test]
        fn extended_is_symmetric(s in 0.01f64..8.0, k in 0i64..500) {
            prop_assert_eq!(kernel_extended(s, k).unwrap().to_bits(), kernel_extended(s, -k).unwrap().to_bits());
        }
    }
}
