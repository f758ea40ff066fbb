//! Random fractional Schrödinger operators `H = (-Δ)^s + ε` and their orbits.
//!
//! Everything runs on the window `[-W, W]` with zero extension outside it.
//! The kernel is truncated at `kernel_radius`, so `H` is a banded symmetric
//! Toeplitz matrix plus a diagonal, and applying it costs `O(W · kernel_radius)`.
//! The effect of the band truncation and of clipping to the window is reported
//! in a [`Certificate`].

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{self, KernelTable};
use crate::lattice::{pairwise_sum, Sequence};
use crate::operator::{convolve_symmetric, Applied, Certificate};

/// Default early-stop threshold for the orbit basis.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Probes must have unit norm to within this.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// i.i.d. uniform `ε_n ∈ [-c/2, c/2]` on `[-W, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub amplitude: f64,
    pub seed: u64,
    pub window_radius: usize,
    /// `potential[i] = ε_{i - W}`.
    pub potential: Vec<f64>,
}

impl DisorderRealization {
    pub fn at(&self, n: i64) -> f64 {
        let i = n + self.window_radius as i64;
        if i < 0 {
            return 0.0;
        }
        self.potential.get(i as usize).copied().unwrap_or(0.0)
    }
}

/// Draws the potential from a ChaCha stream keyed by `seed`.
///
/// Site `n` reads the block at word position `2·zigzag(n)`, so its value does
/// not depend on the window.
pub fn sample_disorder(c: f64, seed: u64, window_radius: usize) -> Result<DisorderRealization> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("disorder amplitude must be finite and non-negative, got {c}")));
    }
    let w = window_radius as i64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let potential = (-w..=w)
        .map(|n| {
            let zigzag = ((n << 1) ^ (n >> 63)) as u64;
            rng.set_word_pos(2 * zigzag as u128);
            let x = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            c * (x - 0.5)
        })
        .collect();
    Ok(DisorderRealization { amplitude: c, seed, window_radius, potential })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    ZeroExtension,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianConfig {
    pub s: f64,
    pub kernel_radius: usize,
    pub disorder: DisorderRealization,
    pub boundary: Boundary,
}

impl HamiltonianConfig {
    pub fn new(s: f64, kernel_radius: usize, disorder: DisorderRealization) -> Self {
        Self { s, kernel_radius, disorder, boundary: Boundary::ZeroExtension }
    }

    pub fn window_radius(&self) -> usize {
        self.disorder.window_radius
    }

    fn window_len(&self) -> usize {
        2 * self.window_radius() + 1
    }

    fn build(&self) -> Result<DenseHamiltonian<'_>> {
        let min_radius = 2usize.max(self.s.ceil() as usize + 1);
        if self.kernel_radius < min_radius {
            return Err(Error::Domain(format!(
                "kernel radius must be at least {min_radius}, got {}",
                self.kernel_radius
            )));
        }
        if self.kernel_radius > self.window_radius() {
            return Err(Error::Domain(format!(
                "kernel radius {} exceeds the window radius {}",
                self.kernel_radius,
                self.window_radius()
            )));
        }
        let table = kernel::build_table(self.s, self.kernel_radius)?;
        let reach = table.support_radius();
        Ok(DenseHamiltonian { table, reach, potential: &self.disorder.potential, w: self.window_radius() as i64 })
    }

    /// Dense window of `u`, or a support-overflow error.
    fn embed(&self, u: &Sequence) -> Result<Vec<f64>> {
        let w = self.window_radius() as i64;
        if let Some((lo, hi)) = u.support() {
            if lo < -w || hi > w {
                return Err(Error::SupportOverflow { lo, hi, window: w });
            }
        }
        Ok(u.dense_window(-w, w))
    }

    /// Conservative step limit `0.5 / (A_s + c/2)` for [`evolve`].
    pub fn stability_limit(&self) -> Result<f64> {
        Ok(0.5 / (kernel::kernel_sum(self.s)? + 0.5 * self.disorder.amplitude))
    }
}

struct DenseHamiltonian<'a> {
    table: KernelTable,
    reach: usize,
    potential: &'a [f64],
    w: i64,
}

impl DenseHamiltonian<'_> {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = convolve_symmetric(u, -self.w, &self.table, self.reach, -self.w, self.w);
        for ((o, e), x) in out.iter_mut().zip(self.potential).zip(u) {
            *o += e * x;
        }
        out
    }

    /// ℓ¹ mass the banded operator would have put outside the window.
    fn clipped_mass(&self, u: &[f64]) -> f64 {
        let r = self.reach as i64;
        let right = convolve_symmetric(u, -self.w, &self.table, self.reach, self.w + 1, self.w + r);
        let left = convolve_symmetric(u, -self.w, &self.table, self.reach, -self.w - r, -self.w - 1);
        right.iter().chain(&left).map(|x| x.abs()).sum()
    }
}

/// `H u` on the window.
///
/// The certificate's `pointwise` bounds the effect of truncating the kernel at
/// `kernel_radius`: `tail · ‖u‖_∞`. Its `discarded_l1` is the exact ℓ¹ mass
/// clipped at the window edges, plus `tail · ‖u‖_1`.
pub fn apply_hamiltonian(u: &Sequence, config: &HamiltonianConfig) -> Result<Applied> {
    let dense = config.embed(u)?;
    let h = config.build()?;
    let out = h.apply(&dense);
    let tail = h.table.tail_bound;
    let certificate = Certificate {
        pointwise: tail * u.sup_norm(),
        discarded_l1: h.clipped_mass(&dense) + tail * u.l1_norm(),
    };
    Ok(Applied { sequence: Sequence::new(-h.w, out), certificate })
}

/// Orthonormal basis of `span{H^k δ_0 : k < depth}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBasis {
    pub vectors: Vec<Sequence>,
    /// `‖H^k δ_0‖` for `k = 0, 1, …`, one per basis vector.
    pub raw_norms: Vec<f64>,
    pub residual_tol: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum(a.len(), |i| a[i] * b[i])
}

fn subtract_projection(r: &mut [f64], b: &[f64]) {
    let c = dot(r, b);
    for (x, y) in r.iter_mut().zip(b) {
        *x -= c * y;
    }
}

/// Builds the orbit basis by Arnoldi: each new direction is `H` applied to the
/// latest basis vector, orthogonalized by modified Gram–Schmidt with one full
/// reorthogonalization pass.
///
/// This spans the same space as the raw powers `H^k δ_0` without their loss of
/// rank in floating point. Construction stops early once the orthogonal
/// component falls below `residual_tol` relative to the new direction's norm.
pub fn orbit_basis(config: &HamiltonianConfig, depth: usize, residual_tol: f64) -> Result<OrbitBasis> {
    if depth == 0 {
        return Err(Error::Domain("orbit depth must be at least 1".into()));
    }
    if !(residual_tol > 0.0) {
        return Err(Error::Domain(format!("residual tolerance must be positive, got {residual_tol}")));
    }
    let h = config.build()?;
    let w = h.w as usize;
    let mut start = vec![0.0; config.window_len()];
    start[w] = 1.0;

    let mut dense: Vec<Vec<f64>> = vec![start.clone()];
    let mut raw = start;
    let mut raw_norms = vec![1.0];
    while dense.len() < depth {
        let mut next = h.apply(dense.last().unwrap());
        let scale = dot(&next, &next).sqrt();
        for _ in 0..2 {
            for b in &dense {
                subtract_projection(&mut next, b);
            }
        }
        let rest = dot(&next, &next).sqrt();
        if !(rest >= residual_tol * scale) || rest == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= rest);
        dense.push(next);
        raw = h.apply(&raw);
        raw_norms.push(dot(&raw, &raw).sqrt());
    }
    let vectors = dense.into_iter().map(|v| Sequence::new(-h.w, v)).collect();
    Ok(OrbitBasis { vectors, raw_norms, residual_tol })
}

fn check_unit(v: &Sequence) -> Result<()> {
    let n = crate::lattice::norm(v);
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Domain(format!("probe must have unit norm, got {n}")));
    }
    Ok(())
}

/// Distance from the unit vector `v` to the span of the basis.
pub fn krylov_residual(v: &Sequence, basis: &OrbitBasis) -> Result<f64> {
    Ok(krylov_residual_profile(v, basis)?.last().copied().unwrap_or(1.0))
}

/// Distances from `v` to the spans of the first `1, 2, …, len` basis vectors.
pub fn krylov_residual_profile(v: &Sequence, basis: &OrbitBasis) -> Result<Vec<f64>> {
    check_unit(v)?;
    let (lo, hi) = basis
        .vectors
        .iter()
        .chain(std::iter::once(v))
        .filter_map(Sequence::support)
        .fold((0, 0), |(a, b), (c, d)| (a.min(c), b.max(d)));
    let mut r = v.dense_window(lo, hi);
    basis
        .vectors
        .iter()
        .map(|b| {
            subtract_projection(&mut r, &b.dense_window(lo, hi));
            Ok(dot(&r, &r).sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sign {
    /// `u' = H u`, the literal sign.
    #[default]
    Plus,
    /// `u' = -H u`, the diffusive direction.
    Minus,
}

/// Integrates `u' = ±H u` from `u0` to `t_end` by classical RK4.
///
/// The step is `t_end / ⌈t_end / dt⌉ ≤ dt`. A `t_end` of zero returns `u0`.
pub fn evolve(u0: &Sequence, config: &HamiltonianConfig, t_end: f64, dt: f64, sign: Sign) -> Result<Sequence> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be finite and non-negative, got {t_end}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let limit = config.stability_limit()?;
    if dt > limit {
        return Err(Error::Stability { dt, limit });
    }
    let mut u = config.embed(u0)?;
    let h = config.build()?;
    if t_end == 0.0 {
        return Ok(u0.clone());
    }
    let steps = (t_end / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let f = |x: &[f64]| -> Vec<f64> {
        let mut y = h.apply(x);
        if sign == Sign::Minus {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        y
    };
    let shifted = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    for _ in 0..steps {
        let k1 = f(&u);
        let k2 = f(&shifted(&u, &k1, 0.5 * dt));
        let k3 = f(&shifted(&u, &k2, 0.5 * dt));
        let k4 = f(&shifted(&u, &k3, dt));
        for i in 0..u.len() {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(Sequence::new(-h.w, u))
}

/// Parameters shared by every seed of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub s: f64,
    pub amplitude: f64,
    pub window_radius: usize,
    pub kernel_radius: usize,
    pub depth: usize,
    pub residual_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub id: String,
    pub vector: Sequence,
}

impl Probe {
    /// `(δ_1 - δ_{-1}) / √2`.
    pub fn odd() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self { id: "odd".into(), vector: Sequence::new(-1, vec![-a, 0.0, a]) }
    }

    /// `(δ_1 + δ_{-1}) / √2`.
    pub fn even() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self { id: "even".into(), vector: Sequence::new(-1, vec![a, 0.0, a]) }
    }

    pub fn delta(n: i64) -> Self {
        Self { id: format!("delta:{n}"), vector: Sequence::delta(n) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub seed: u64,
    pub probe_id: String,
    pub depth: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub probe_id: String,
    pub depth: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub config: EnsembleConfig,
    pub seeds: Vec<u64>,
    pub rows: Vec<ResidualRow>,
    pub summary: Vec<SummaryRow>,
}

impl EnsembleReport {
    /// `#` preamble, `seed,probe_id,depth,residual` rows, then the ensemble
    /// statistics as `#` comment lines.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str(&format!("# fraclap {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("# s = {:?}\n# c = {:?}\n", c.s, c.amplitude));
        out.push_str(&format!("# window_radius = {}\n# kernel_radius = {}\n", c.window_radius, c.kernel_radius));
        out.push_str(&format!("# depth = {}\n# residual_tol = {:?}\n", c.depth, c.residual_tol));
        out.push_str(&format!("# unit_norm_tol = {UNIT_NORM_TOL:?}\n# seeds = {}\n", self.seeds.len()));
        out.push_str("seed,probe_id,depth,residual\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:?}\n", r.seed, r.probe_id, r.depth, r.residual));
        }
        out.push_str("# ensemble: probe_id,depth,mean,min,max\n");
        for r in &self.summary {
            out.push_str(&format!("# {},{},{:?},{:?},{:?}\n", r.probe_id, r.depth, r.mean, r.min, r.max));
        }
        out
    }
}

/// Residual of every probe at depths `1..=depth`, for every seed.
///
/// Seeds are processed in parallel. Rows come back in seed order, so the
/// report is a pure function of the inputs. If a basis stops early, its span
/// is invariant, and the last residual repeats for the remaining depths.
pub fn monte_carlo(config: &EnsembleConfig, seeds: &[u64], probes: &[Probe]) -> Result<EnsembleReport> {
    for p in probes {
        check_unit(&p.vector)?;
    }
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ResidualRow>> {
            let disorder = sample_disorder(config.amplitude, seed, config.window_radius)?;
            let h = HamiltonianConfig::new(config.s, config.kernel_radius, disorder);
            let basis = orbit_basis(&h, config.depth, config.residual_tol)?;
            let mut rows = Vec::with_capacity(probes.len() * config.depth);
            for p in probes {
                let profile = krylov_residual_profile(&p.vector, &basis)?;
                for d in 1..=config.depth {
                    let residual = profile[d.min(profile.len()) - 1];
                    rows.push(ResidualRow { seed, probe_id: p.id.clone(), depth: d, residual });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ResidualRow> = per_seed.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for p in probes {
        for d in 1..=config.depth {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.probe_id == p.id && r.depth == d)
                .map(|r| r.residual)
                .collect();
            if vals.is_empty() {
                continue;
            }
            summary.push(SummaryRow {
                probe_id: p.id.clone(),
                depth: d,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(EnsembleReport { config: config.clone(), seeds: seeds.to_vec(), rows, summary })
}
