//! Cross-checks between the independent evaluation routes, as a pass/fail table.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::Result;
use crate::kernel::{self, decay_constant, kernel_definition_form, kernel_value, partial_sum_deviation_with};
use crate::lattice::{sup_distance, Sequence};
use crate::operator::{
    apply_fractional, apply_integer_power, apply_quadrature_oracle, heat_semigroup, OperatorSpec, QuadratureScheme,
};
use crate::special_functions::gamma;

/// Which `(-Δ)^0` convention the library uses. Printed with every report.
pub const POWER_ZERO_CONVENTION: &str = "(-Δ)^0 = identity";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "convention: {POWER_ZERO_CONVENTION}")?;
        writeln!(f, "{:<28} {:>12} {:>12}  result", "check", "deviation", "tolerance")?;
        for c in &self.checks {
            let verdict = if c.passed() { "pass" } else { "FAIL" };
            writeln!(f, "{:<28} {:>12.3e} {:>12.1e}  {verdict}", c.name, c.deviation, c.tolerance)?;
        }
        Ok(())
    }
}

/// Runs the suite. A nonzero `gamma_perturbation` δ replaces `Γ(z)` by
/// `Γ(z)(1 + δz)` inside the partial-sum check. It exists for fault injection
/// (a uniform factor would cancel from the Gamma ratios) and is zero in normal runs.
pub fn run(level: Level, gamma_perturbation: f64) -> Result<Report> {
    let full = level == Level::Full;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut checks = Vec::new();

    // dual-form kernel agreement
    let mut worst = 0.0f64;
    let cases = if full { 500 } else { 100 };
    let mut done = 0;
    while done < cases {
        let s = 6.0 * uniform();
        if s <= 0.0 || (s - s.round()).abs() < 1e-3 {
            continue;
        }
        let k = (uniform() * 129.0) as i64 - 64;
        let a = kernel_value(s, k)?;
        let b = kernel_definition_form(s, k)?;
        if a != b {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
        done += 1;
    }
    checks.push(Check { name: "kernel dual forms", deviation: worst, tolerance: 1e-10 });

    // kernel sum against its closed form, within the certified tail. For large
    // s the tail drops far below f64 rounding of the partial sum, so the sum is
    // taken in double-double from the ratio recurrence and the f64 table is
    // checked against that recurrence separately.
    let mut worst_tail = 0.0f64;
    let mut worst_table = 0.0f64;
    for s in [0.25, 0.5, 0.9, 1.5, 2.5, 3.7] {
        let t = kernel::build_table(s, 1024)?;
        let (missing, ratios) = normalized_tail_dd(s, 1024);
        worst_tail = worst_tail.max(t.total_sum * missing.abs() / t.tail_bound);
        for (k, r) in ratios.iter().enumerate().skip(1) {
            let expected = r * t.total_sum;
            worst_table = worst_table.max((t.values[k] - expected).abs() / expected.abs());
        }
    }
    checks.push(Check { name: "kernel sum / tail bound", deviation: worst_tail, tolerance: 1.0 });
    checks.push(Check { name: "kernel table vs recurrence", deviation: worst_table, tolerance: 1e-12 });

    // partial-sum identity
    let perturbed = |z: f64| gamma(z).map(|g| g * (1.0 + gamma_perturbation * z));
    let mut worst = 0.0f64;
    for s in [0.5, 1.5, 2.5, 0.25] {
        for m in 1..=10 {
            worst = worst.max(partial_sum_deviation_with(perturbed, s, m)?);
        }
    }
    checks.push(Check { name: "partial-sum identity", deviation: worst, tolerance: 1e-10 });

    // decay constant
    let k = if full { 10_000 } else { 1_000 };
    let mut worst = 0.0f64;
    for s in [0.5, 1.5] {
        let c = decay_constant(s)?;
        let observed = kernel_value(s, k)?.abs() * (k as f64).powf(1.0 + 2.0 * s);
        worst = worst.max((observed - c).abs() / c);
    }
    checks.push(Check {
        name: if full { "decay constant (k = 1e4)" } else { "decay constant (k = 1e3)" },
        deviation: worst,
        tolerance: if full { 1e-3 } else { 1e-2 },
    });

    // integer limit
    let d = Sequence::delta(0);
    let mut worst = 0.0f64;
    for m in 1..=3u32 {
        let exact = apply_integer_power(&d, m);
        for s in [m as f64 - 1e-6, m as f64 + 1e-6] {
            let approx = apply_fractional(&d, &OperatorSpec::new(s, 64))?.sequence;
            worst = worst.max(sup_distance(&approx, &exact));
        }
    }
    checks.push(Check { name: "integer limit", deviation: worst, tolerance: 1e-4 });

    // series against the semigroup quadrature
    let orders: &[f64] = if full { &[0.3, 0.5, 0.8, 1.2, 1.5, 2.7] } else { &[0.5, 1.5] };
    let mut inputs = vec![d.clone()];
    if full {
        for _ in 0..5 {
            let len = 1 + (uniform() * 6.0) as usize;
            let offset = (uniform() * 9.0) as i64 - 4;
            inputs.push(Sequence::new(offset, (0..len).map(|_| 2.0 * uniform() - 1.0).collect()));
        }
    }
    let radius = 32;
    let scheme = QuadratureScheme { output_radius: radius, ..QuadratureScheme::default() };
    let mut worst = 0.0f64;
    for &s in orders {
        for u in &inputs {
            let series = apply_fractional(u, &OperatorSpec::new(s, radius))?.sequence;
            let quad = apply_quadrature_oracle(u, s, &scheme)?;
            worst = worst.max(sup_distance(&series, &quad));
        }
    }
    checks.push(Check { name: "series vs quadrature", deviation: worst, tolerance: 1e-6 });

    // semigroup law
    let u = Sequence::new(-1, vec![1.0, -0.5, 2.0]);
    let mut worst = 0.0f64;
    for (t, z) in [(0.3, 0.7), (1.0, 1.0)] {
        let two = heat_semigroup(&heat_semigroup(&u, t, 40)?, z, 40)?;
        let one = heat_semigroup(&u, t + z, 80)?;
        worst = worst.max(sup_distance(&two, &one));
    }
    checks.push(Check { name: "semigroup law", deviation: worst, tolerance: 1e-10 });

    Ok(Report { level, checks })
}

/// Double-double value `hi + lo`.
#[derive(Debug, Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, o: Dd) -> Dd {
        let Dd(s, e) = Dd::two_sum(self.0, o.0);
        let Dd(h, l) = Dd::two_sum(s, e + self.1 + o.1);
        Dd::two_sum(h, l)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + self.0 * o.1 + self.1 * o.0;
        Dd::two_sum(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q = self.0 / o.0;
        let r = self.add(o.mul(Dd(-q, 0.0)));
        Dd::two_sum(q, r.0 / o.0)
    }
}

/// `1 - Σ_{0<|k|≤R} K_s(k)/A_s` in double-double, with the f64 ratios `K_s(k)/A_s`.
///
/// Uses `K_s(1)/A_s = s/(1+s)` and `K_s(k+1)/K_s(k) = (k-s)/(k+1+s)`, both exact
/// rational functions of `s`.
fn normalized_tail_dd(s: f64, radius: usize) -> (f64, Vec<f64>) {
    let sd = Dd(s, 0.0);
    let mut term = sd.div(Dd::two_sum(1.0, s));
    let mut sum = Dd(0.0, 0.0);
    let mut ratios = vec![0.0, term.0];
    for k in 1..=radius {
        sum = sum.add(term);
        let kf = k as f64;
        term = term.mul(Dd::two_sum(kf, -s).div(Dd::two_sum(kf + 1.0, s)));
        ratios.push(term.0);
    }
    ratios.truncate(radius + 1);
    let missing = Dd(1.0, 0.0).add(sum.mul(Dd(-2.0, 0.0)));
    (missing.0 + missing.1, ratios)
}
