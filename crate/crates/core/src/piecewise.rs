//! Exact piecewise-constant weights for the localized-weight experiments.
//!
//! A uniform grid cannot hold both the block scale `e^-n` and block origins
//! `e^n`, so these scans run on explicit piece lists: widths are stored in
//! local coordinates (never differenced from global positions) and integrals
//! are summed piece by piece. Luxemburg norms reuse the weighted-piece
//! bisection from the Orlicz engine, which is exact for step data.

use crate::orlicz::{luxemburg_weighted, Gauge};

/// One constant piece: width and the (u, v) weight values on it.
#[derive(Clone, Copy, Debug)]
pub struct Seg {
    pub width: f64,
    pub u: f64,
    pub v: f64,
}

/// Ordered piece list for a pair of weights on a line segment.
#[derive(Clone, Debug, Default)]
pub struct PiecePair {
    pub segs: Vec<Seg>,
}

impl PiecePair {
    pub fn total_width(&self) -> f64 {
        self.segs.iter().map(|s| s.width).sum()
    }

    pub fn push(&mut self, width: f64, u: f64, v: f64) {
        if width > 0.0 {
            self.segs.push(Seg { width, u, v });
        }
    }

    /// Clip to `[lo, hi]` in the pair's own coordinate (0 at its start).
    pub fn clip(&self, lo: f64, hi: f64) -> PiecePair {
        let mut out = PiecePair::default();
        let mut x = 0.0f64;
        for s in &self.segs {
            let a = x.max(lo);
            let b = (x + s.width).min(hi);
            if b > a {
                out.push(b - a, s.u, s.v);
            }
            x += s.width;
        }
        out
    }

    pub fn concat(&self, other: &PiecePair) -> PiecePair {
        let mut out = self.clone();
        out.segs.extend(other.segs.iter().cloned());
        out
    }

    pub fn integrate(&self, pick: impl Fn(&Seg) -> f64) -> f64 {
        self.segs.iter().map(|s| s.width * pick(s)).sum()
    }

    pub fn average(&self, pick: impl Fn(&Seg) -> f64) -> f64 {
        self.integrate(&pick) / self.total_width()
    }

    /// Luxemburg norm over the whole piece list of `pick(seg)` values.
    pub fn luxemburg(&self, pick: impl Fn(&Seg) -> f64, phi: &impl Gauge, tol: f64) -> f64 {
        let pieces: Vec<(f64, f64)> = self.segs.iter().map(|s| (s.width, pick(s))).collect();
        luxemburg_weighted(&pieces, phi, tol)
    }

    /// Interior breakpoints (local coordinates), endpoints included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut x = 0.0;
        for s in &self.segs {
            x += s.width;
            out.push(x);
        }
        out
    }
}
