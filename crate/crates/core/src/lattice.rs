//! Finitely supported real sequences on ℤ.
//!
//! A [`Sequence`] stores a dense window `values[i] = u(offset + i)`; every
//! index outside the window is zero. Constructors trim exact leading and
//! trailing zeros so the stored window is minimal, and the all-zero
//! sequence is the empty window at offset 0.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Windows longer than this are summed pairwise.
const PAIRWISE_CUTOFF: usize = 1024;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequence {
    offset: i64,
    values: Vec<f64>,
}

impl Sequence {
    /// Builds a sequence from a dense window starting at `offset`.
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        let mut s = Self { offset, values };
        s.normalize();
        s
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Kronecker delta δ_n.
    pub fn delta(n: i64) -> Self {
        Self { offset: n, values: vec![1.0] }
    }

    /// Samples `f` on `lo..=hi`.
    pub fn from_fn(lo: i64, hi: i64, f: impl FnMut(i64) -> f64) -> Self {
        if hi < lo {
            return Self::zero();
        }
        Self::new(lo, (lo..=hi).map(f).collect())
    }

    /// Trims exact zeros from both ends of the stored window.
    pub fn normalize(&mut self) {
        let Some(first) = self.values.iter().position(|&x| x != 0.0) else {
            self.values.clear();
            self.offset = 0;
            return;
        };
        let last = self.values.iter().rposition(|&x| x != 0.0).unwrap();
        if first > 0 || last + 1 < self.values.len() {
            self.values.truncate(last + 1);
            self.values.drain(..first);
            self.offset += first as i64;
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Length of the stored window.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Inclusive bounds of the stored window, `None` for the zero sequence.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.values.is_empty() {
            None
        } else {
            Some((self.offset, self.offset + self.values.len() as i64 - 1))
        }
    }

    /// u(n), zero outside the window.
    pub fn get(&self, n: i64) -> f64 {
        let i = n - self.offset;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// Values on `lo..=hi`, zero-filled.
    pub fn dense_window(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|n| self.get(n)).collect()
    }

    /// Restriction to `lo..=hi`.
    pub fn clip(&self, lo: i64, hi: i64) -> Sequence {
        match self.support() {
            None => Sequence::zero(),
            Some((a, b)) => Sequence::from_fn(a.max(lo), b.min(hi), |n| self.get(n)),
        }
    }

    pub fn scale(&self, a: f64) -> Sequence {
        Sequence::new(self.offset, self.values.iter().map(|x| a * x).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        pairwise_sum(self.values.len(), |i| self.values[i].abs())
    }

    /// Serialises to the text format: `offset <n>` then one value per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("offset {}\n", self.offset);
        for v in &self.values {
            // Debug formatting is the shortest string that round-trips
            writeln!(out, "{v:?}").unwrap();
        }
        out
    }

    /// Parses the text format. Blank lines and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Sequence> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("missing `offset <n>` header".into()))?;
        let offset = header
            .strip_prefix("offset")
            .map(str::trim)
            .ok_or_else(|| Error::Parse(format!("expected `offset <n>`, found `{header}`")))?
            .parse::<i64>()
            .map_err(|e| Error::Parse(format!("bad offset: {e}")))?;
        let values = lines
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{l}`: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sequence::new(offset, values))
    }
}

/// Sum of `f(0) + … + f(n-1)`; pairwise above [`PAIRWISE_CUTOFF`] terms.
pub(crate) fn pairwise_sum(n: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
    fn rec(lo: usize, hi: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
        if hi - lo <= PAIRWISE_CUTOFF {
            (lo..hi).map(f).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    rec(0, n, f)
}

/// ⟨u, v⟩ = Σ_k u(k) v(k), summed over the overlap of the two windows.
pub fn inner(u: &Sequence, v: &Sequence) -> f64 {
    let (Some((ua, ub)), Some((va, vb))) = (u.support(), v.support()) else {
        return 0.0;
    };
    let lo = ua.max(va);
    let hi = ub.min(vb);
    if hi < lo {
        return 0.0;
    }
    let us = &u.values[(lo - ua) as usize..=(hi - ua) as usize];
    let vs = &v.values[(lo - va) as usize..=(hi - va) as usize];
    pairwise_sum(us.len(), |i| us[i] * vs[i])
}

pub fn norm(u: &Sequence) -> f64 {
    inner(u, u).sqrt()
}

/// a·u + v.
pub fn axpy(a: f64, u: &Sequence, v: &Sequence) -> Sequence {
    let bounds = match (u.support(), v.support()) {
        (None, None) => return Sequence::zero(),
        (Some(s), None) | (None, Some(s)) => s,
        (Some((ua, ub)), Some((va, vb))) => (ua.min(va), ub.max(vb)),
    };
    Sequence::from_fn(bounds.0, bounds.1, |n| a * u.get(n) + v.get(n))
}

/// sup_n |u(n) - v(n)|.
pub fn sup_distance(u: &Sequence, v: &Sequence) -> f64 {
    axpy(-1.0, u, v).sup_norm()
}

/// Finite-ε semi-inner product `((‖v + εu‖ - ‖v‖)/ε) ‖v‖`.
///
/// Converges to ⟨u, v⟩ at first order in ε.
pub fn semi_inner_fd(u: &Sequence, v: &Sequence, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(Error::Degenerate("semi-inner product with ‖v‖ = 0".into()));
    }
    let shifted = norm(&axpy(eps, u, v));
    Ok((shifted - nv) / eps * nv)
}
