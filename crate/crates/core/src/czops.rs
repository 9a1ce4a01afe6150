//! Discrete non-degenerate Calderon-Zygmund operator (the cell-center
//! Hilbert kernel `1/(x-y)` with an excluded diagonal), iterated commutators,
//! BMO / weighted-BMO norms, the extension of a BMO function off an interval,
//! and the log-maximal test function used by the necessity probe.

use serde::Serialize;

use crate::grid::{enumerate_intervals, EnumMode, Grid, IntervalRef, Prefix, StepFn};
use crate::orlicz::hl_maximal;
use crate::Error;

/// Discrete Hilbert kernel on a grid: `K(x,y) = 1/(x-y)` at cell centers,
/// zero on the diagonal. Antisymmetry is exact, `|K| <= 1/|x-y|` with
/// constant one, and every scale carries the non-degeneracy witness
/// `|K(x,y)| >= c0/r` for some `x` outside `B(y,r)`.
#[derive(Clone, Copy, Debug)]
pub struct KernelOp {
    grid: Grid,
}

impl KernelOp {
    pub fn hilbert(grid: Grid) -> KernelOp {
        KernelOp { grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eval(&self, x_cell: usize, y_cell: usize) -> f64 {
        if x_cell == y_cell {
            return 0.0;
        }
        // centers differ by an integer number of cell widths
        1.0 / ((x_cell as f64 - y_cell as f64) * self.grid.cell_width())
    }
}

/// `Tf(x) = sum_{y != x} K(x,y) f(y) dy`; diagonal exclusion plus exact
/// antisymmetry realize the principal value.
pub fn cz_apply(t: &KernelOp, f: &StepFn) -> StepFn {
    let n = t.grid.cells();
    let vals = f.values();
    // K(x,y) dy = 1/((x_cell - y_cell) w) * w = 1/(x_cell - y_cell)
    let mut inv = vec![0.0f64; n];
    for (k, v) in inv.iter_mut().enumerate().skip(1) {
        *v = 1.0 / k as f64;
    }
    let mut out = vec![0.0f64; n];
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (y, fy) in vals.iter().enumerate() {
            if y < x {
                acc += fy * inv[x - y];
            } else if y > x {
                acc -= fy * inv[y - x];
            }
        }
        *o = acc;
    }
    StepFn::new(t.grid, out, true).unwrap()
}

/// Iterated commutator `T_b^m`, computed two ways and cross-checked:
/// the inductive recursion `T_b^m = [b, T_b^{m-1}]` and the collapsed kernel
/// `sum_y (b(x)-b(y))^m K(x,y) f(y) dy`. Returns the kernel-form result.
pub fn commutator_apply(
    t: &KernelOp,
    b: &StepFn,
    f: &StepFn,
    m: usize,
) -> Result<StepFn, Error> {
    let kernel = commutator_kernel_form(t, b, f, m);
    let recursion = commutator_recursive(t, b, f, m);
    let scale = kernel
        .values()
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for (a, r) in kernel.values().iter().zip(recursion.values()) {
        if (a - r).abs() > 1e-10 * scale {
            return Err(Error::Precondition(format!(
                "commutator routes disagree beyond 1e-10 (m={m}): {a} vs {r}"
            )));
        }
    }
    Ok(kernel)
}

/// Kernel route only (no cross-check); used where the caller already trusts
/// the agreement or wants the cheaper single pass.
pub fn commutator_kernel_form(t: &KernelOp, b: &StepFn, f: &StepFn, m: usize) -> StepFn {
    if m == 0 {
        return cz_apply(t, f);
    }
    let n = t.grid.cells();
    let w = t.grid.cell_width();
    let bv = b.values();
    let fv = f.values();
    let mut out = vec![0.0f64; n];
    for (x, o) in out.iter_mut().enumerate() {
        let bx = bv[x];
        let mut acc = 0.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            let diff = bx - bv[y];
            let mut pw = diff;
            for _ in 1..m {
                pw *= diff;
            }
            acc += pw * fv[y] / ((x as f64 - y as f64) * w);
        }
        *o = acc * w;
    }
    StepFn::new(t.grid, out, true).unwrap()
}

pub fn commutator_recursive(t: &KernelOp, b: &StepFn, f: &StepFn, m: usize) -> StepFn {
    if m == 0 {
        return cz_apply(t, f);
    }
    let inner_f = commutator_recursive(t, b, f, m - 1);
    let inner_bf = commutator_recursive(t, b, &b.mul(f), m - 1);
    b.mul(&inner_f).sub(&inner_bf)
}

#[derive(Clone, Debug, Serialize)]
pub struct BmoReport {
    pub norm: f64,
    pub maximizer: IntervalRef,
    pub mode: EnumMode,
}

/// `sup_Q (1/eta(Q)) int_Q |b - b_Q|` over the enumerated intervals; plain
/// BMO when `eta` is absent. Exact per interval.
pub fn bmo_norm(b: &StepFn, eta: Option<&StepFn>, mode: EnumMode) -> Result<BmoReport, Error> {
    if let Some(e) = eta {
        if e.values().iter().any(|v| *v <= 0.0) {
            return Err(Error::Precondition("BMO weight eta must be positive".into()));
        }
    }
    let g = *b.grid();
    let pre = Prefix::new(b);
    let eta_pre = eta.map(Prefix::new);
    let mut best = 0.0f64;
    let mut argmax = g.whole();
    for q in enumerate_intervals(&g, mode, usize::MAX) {
        let avg = pre.average(q);
        let osc: f64 = b.slice(q).iter().map(|v| (v - avg).abs()).sum::<f64>() * g.cell_width();
        let denom = match &eta_pre {
            Some(ep) => ep.integral(q),
            None => q.measure(&g),
        };
        let val = osc / denom;
        if val > best {
            best = val;
            argmax = q;
        }
    }
    Ok(BmoReport { norm: best, maximizer: argmax, mode })
}

/// Doubling constant `sup u(2Q)/u(Q)` over dyadic intervals whose double
/// stays inside the domain.
pub fn doubling_constant(u: &StepFn) -> f64 {
    let g = *u.grid();
    let pre = Prefix::new(u);
    let mut worst = 1.0f64;
    for q in enumerate_intervals(&g, EnumMode::Dyadic, usize::MAX) {
        if q.len == g.cells() {
            continue;
        }
        let ext = q.len / 2;
        let lo = q.start.saturating_sub(ext);
        let hi = (q.end() + ext).min(g.cells());
        let dq = IntervalRef::new(lo, hi - lo);
        let uq = pre.integral(q);
        if uq > 0.0 {
            worst = worst.max(pre.integral(dq) / uq);
        }
    }
    worst
}

pub struct JonesExtension {
    pub extension: StepFn,
    /// BMO norm ratio extension/original (0 when the input oscillates not at all)
    pub bmo_ratio: f64,
    pub input_bmo: f64,
    pub output_bmo: f64,
}

/// Extends `f` (mean zero on `R`) to a function equal to `f` on `R`,
/// vanishing outside `2R`, with controlled BMO norm. The complement of `R`
/// is tiled by intervals halving toward the boundary, and each small tile
/// copies the average of its mirror tile inside `R` at the same distance
/// scale.
pub fn jones_extend(f: &StepFn, r: IntervalRef) -> Result<JonesExtension, Error> {
    let g = *f.grid();
    if !r.in_grid(&g) {
        return Err(Error::OutOfRange { start: r.start, len: r.len, cells: g.cells() });
    }
    if !r.len.is_power_of_two() || r.len < 2 {
        return Err(Error::Precondition("extension base must have power-of-two length >= 2".into()));
    }
    let half = r.len / 2;
    if r.start < half || r.end() + half > g.cells() {
        return Err(Error::Precondition("2R must fit inside the domain".into()));
    }
    let mean = f.average(r)?;
    let scale = f.values().iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
    if mean.abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!("extension input must have zero mean on R (got {mean})")));
    }

    let mut out = vec![0.0f64; g.cells()];
    out[r.start..r.end()].copy_from_slice(f.slice(r));

    let pre = Prefix::new(f);
    // tiles of length r.len/2^j at distance r.len/2^j from the boundary,
    // j >= 2, plus the single boundary cell; all tiles live inside 2R and
    // mirror the interval at matching distance scale inside R
    let mut tile = |len: usize, right_side: bool| {
        // distance from the boundary equals the tile length
        let (start, mirror_start) = if right_side {
            (r.end() + len, r.end() - 2 * len)
        } else {
            (r.start - 2 * len, r.start + len)
        };
        let avg = pre.average(IntervalRef::new(mirror_start, len));
        for c in start..start + len {
            out[c] = avg;
        }
    };
    let mut len = r.len / 4;
    while len >= 1 {
        tile(len, true);
        tile(len, false);
        len /= 2;
    }
    // boundary cells (distance zero): mirror the adjacent cell
    out[r.end()] = f.values()[r.end() - 1];
    out[r.start - 1] = f.values()[r.start];

    let extension = StepFn::new(g, out, true)?;
    let input_bmo = bmo_norm(f, None, EnumMode::AllAligned)?.norm;
    let output_bmo = bmo_norm(&extension, None, EnumMode::AllAligned)?.norm;
    let bmo_ratio = if input_bmo > 0.0 { output_bmo / input_bmo } else { 0.0 };
    Ok(JonesExtension { extension, bmo_ratio, input_bmo, output_bmo })
}

/// Interval with the same center as `q` and twice the length, clipped to the
/// grid.
pub fn double_interval(g: &Grid, q: IntervalRef) -> IntervalRef {
    let ext = q.len / 2;
    let lo = q.start.saturating_sub(ext);
    let hi = (q.end() + ext).min(g.cells());
    IntervalRef::new(lo, hi - lo)
}

pub struct NeccondTestFn {
    pub g: StepFn,
    /// average of g over Q (the proof needs it O(1))
    pub g_avg: f64,
}

/// `g = log^+( M(v^{1-p'} chi_Q) / (v^{1-p'})_Q )` restricted to `Q`.
pub fn neccond_testfn(v: &StepFn, q: IntervalRef, p: f64) -> Result<NeccondTestFn, Error> {
    if v.values().iter().any(|x| *x <= 0.0) {
        return Err(Error::Precondition("weight v must be positive".into()));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidArg("p must exceed 1".into()));
    }
    let grid = *v.grid();
    let pc = p / (p - 1.0);
    let sigma = v.powf(1.0 - pc)?;
    let sigma_q = sigma.average(q)?;
    let local = sigma.mul(&StepFn::indicator(grid, q));
    let m = hl_maximal(&local, EnumMode::AllAligned);
    let mut vals = vec![0.0f64; grid.cells()];
    for c in q.start..q.end() {
        let ratio = m.values()[c] / sigma_q;
        vals[c] = ratio.ln().max(0.0);
    }
    let g = StepFn::new(grid, vals, false)?;
    let g_avg = g.average(q)?;
    Ok(NeccondTestFn { g, g_avg })
}

#[derive(Clone, Debug, Serialize)]
pub struct PartnerReport {
    pub partner: IntervalRef,
    /// discrete kernel-variation bound `max |K(x,y)-K(x0,y0)| * A * |B|`
    pub epsilon: f64,
    pub k_center: f64,
    /// true when the partner had to be reflected to the left
    pub reflected: bool,
}

/// Disjoint partner interval of equal length at gap `A |B|`, reflected to the
/// other side when the domain is too short. Reports the variation constant
/// of the kernel between the two intervals, which decays as `A` grows.
pub fn disjoint_partner(t: &KernelOp, b: IntervalRef, a: f64) -> Result<PartnerReport, Error> {
    if !(a >= 3.0) {
        return Err(Error::InvalidArg("separation factor A must be >= 3".into()));
    }
    let g = t.grid;
    if !b.in_grid(&g) {
        return Err(Error::OutOfRange { start: b.start, len: b.len, cells: g.cells() });
    }
    let gap = (a * b.len as f64).round().max(1.0) as usize;
    let (partner, reflected) = if b.end() + gap + b.len <= g.cells() {
        (IntervalRef::new(b.end() + gap, b.len), false)
    } else if b.start >= gap + b.len {
        (IntervalRef::new(b.start - gap - b.len, b.len), true)
    } else {
        return Err(Error::OutOfRange { start: b.end() + gap, len: b.len, cells: g.cells() });
    };
    let x0 = partner.start + partner.len / 2;
    let y0 = b.start + b.len / 2;
    let k0 = t.eval(x0, y0);
    let mut var: f64 = 0.0;
    for x in partner.start..partner.end() {
        for y in b.start..b.end() {
            var = var.max((t.eval(x, y) - k0).abs());
        }
    }
    let measure = b.measure(&g);
    Ok(PartnerReport { partner, epsilon: var * a * measure, k_center: k0, reflected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn grid(l: u32, k: u32) -> Grid {
        Grid::new(l, k).unwrap()
    }

    #[test]
    fn cz_of_zero_is_zero() {
        let g = grid(5, 0);
        let t = KernelOp::hilbert(g);
        let out = cz_apply(&t, &StepFn::constant(g, 0.0));
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kernel_antisymmetric_and_size_bounded() {
        let g = grid(5, 0);
        let t = KernelOp::hilbert(g);
        for x in 0..g.cells() {
            for y in 0..g.cells() {
                assert_eq!(t.eval(x, y), -t.eval(y, x));
                if x != y {
                    let dist = (g.cell_center(x) - g.cell_center(y)).abs();
                    assert!(t.eval(x, y).abs() <= 1.0 / dist + 1e-12);
                }
            }
        }
    }

    #[test]
    fn nondegeneracy_witness_every_scale() {
        // for every y and radius up to half the domain, some x outside
        // B(y, r) has |K(x,y)| >= c0/r; the finite domain truncates larger
        // radii, which is why experiments keep maximizers interior
        let g = grid(5, 2);
        let t = KernelOp::hilbert(g);
        let c0 = 0.25;
        let half_domain = g.domain_len() / 2.0;
        for y in 0..g.cells() {
            let mut r = 2.0 * g.cell_width();
            while r < half_domain {
                let found = (0..g.cells()).any(|x| {
                    let dist = (g.cell_center(x) - g.cell_center(y)).abs();
                    dist > r && t.eval(x, y).abs() >= c0 / r
                });
                assert!(found, "y={y} r={r}");
                r *= 2.0;
            }
        }
    }

    #[test]
    fn even_input_gives_odd_output() {
        let g = grid(5, 0);
        let t = KernelOp::hilbert(g);
        let n = g.cells();
        let f = StepFn::from_fn(g, false, |x| (x - 0.5).powi(2) + 0.3);
        let out = cz_apply(&t, &f);
        for i in 0..n / 2 {
            let a = out.values()[i];
            let b = out.values()[n - 1 - i];
            assert!((a + b).abs() < 1e-12 * a.abs().max(1.0), "i={i}");
        }
    }

    #[test]
    fn hilbert_of_half_indicator_matches_continuum_log() {
        let g = grid(10, 0);
        let t = KernelOp::hilbert(g);
        let f = StepFn::indicator(g, IntervalRef::new(0, g.cells() / 2));
        let out = cz_apply(&t, &f);
        let w = g.cell_width();
        for c in 0..g.cells() {
            let x = g.cell_center(c);
            let d0 = x.abs().min((x - 0.5).abs());
            if d0 < 4.0 * w {
                continue;
            }
            let expect = (x / (x - 0.5)).abs().ln();
            let got = out.values()[c];
            assert!(
                (got - expect).abs() <= 40.0 * w / d0.max(w),
                "x={x}: got {got}, continuum {expect}"
            );
        }
    }

    #[test]
    fn commutator_constant_symbol_vanishes() {
        let g = grid(5, 0);
        let t = KernelOp::hilbert(g);
        let b = StepFn::constant(g, 4.0);
        let f = StepFn::from_fn(g, false, |x| 1.0 + x);
        for m in 1..=3 {
            let out = commutator_apply(&t, &b, &f, m).unwrap();
            for v in out.values() {
                assert!(v.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn commutator_m0_is_cz() {
        let g = grid(5, 0);
        let t = KernelOp::hilbert(g);
        let b = StepFn::from_fn(g, true, |x| x);
        let f = StepFn::from_fn(g, false, |x| 1.0 + x * x);
        let out = commutator_apply(&t, &b, &f, 0).unwrap();
        assert_eq!(out.values(), cz_apply(&t, &f).values());
    }

    #[test]
    fn commutator_linear_symbol_collapses() {
        // b(x) = x: (b(x)-b(y)) K(x,y) = 1 off the diagonal, so
        // T_b^1 f = int f - w f(x)
        let g = grid(6, 0);
        let t = KernelOp::hilbert(g);
        let b = StepFn::from_fn(g, true, |x| x);
        let f = StepFn::from_fn(g, false, |x| 0.5 + x.sin());
        let total = f.integrate(g.whole()).unwrap();
        let w = g.cell_width();
        let out = commutator_apply(&t, &b, &f, 1).unwrap();
        for (c, v) in out.values().iter().enumerate() {
            let expect = total - w * f.values()[c];
            assert!((v - expect).abs() < 1e-12, "cell {c}");
        }
    }

    #[test]
    fn commutator_routes_agree_on_random_data() {
        let g = grid(6, 0);
        let t = KernelOp::hilbert(g);
        let mut rng = SplitMix64::new(7);
        for m in 1..=3 {
            let b = StepFn::from_fn(g, true, |x| (7.0 * x).sin() + 0.3 * (19.0 * x).cos());
            let mut fv = vec![0.0; g.cells()];
            for v in &mut fv {
                *v = rng.uniform(0.0, 2.0);
            }
            let f = StepFn::new(g, fv, false).unwrap();
            assert!(commutator_apply(&t, &b, &f, m).is_ok(), "m={m}");
        }
    }

    #[test]
    fn bmo_constant_is_zero() {
        let g = grid(5, 0);
        let b = StepFn::constant(g, 2.0);
        let rep = bmo_norm(&b, None, EnumMode::AllAligned).unwrap();
        assert_eq!(rep.norm, 0.0);
    }

    #[test]
    fn bmo_indicator_closed_form() {
        // osc over Q of an indicator is 2 theta (1-theta), theta = |E cap Q|/|Q|;
        // maximum 1/2 at a half-covered interval
        let g = grid(5, 0);
        let e = IntervalRef::new(0, 8);
        let b = StepFn::indicator(g, e);
        let rep = bmo_norm(&b, None, EnumMode::AllAligned).unwrap();
        assert!((rep.norm - 0.5).abs() < 1e-12);
        let theta = |q: IntervalRef| {
            q.intersect(&e).map_or(0.0, |i| i.len as f64) / q.len as f64
        };
        for q in enumerate_intervals(&g, EnumMode::AllAligned, usize::MAX) {
            let th = theta(q);
            let avg = b.average(q).unwrap();
            let osc: f64 =
                b.slice(q).iter().map(|v| (v - avg).abs()).sum::<f64>() / q.len as f64;
            assert!((osc - 2.0 * th * (1.0 - th)).abs() < 1e-12);
        }
    }

    #[test]
    fn bmo_eta_weighted_indicator_bounded_by_two() {
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(3);
        let mut ev = vec![0.0; g.cells()];
        for v in &mut ev {
            *v = (rng.normal() * 0.5).exp();
        }
        let eta = StepFn::new(g, ev, false).unwrap();
        let bq = IntervalRef::new(8, 16);
        let b = eta.mul(&StepFn::indicator(g, bq));
        let rep = bmo_norm(&b, Some(&eta), EnumMode::AllAligned).unwrap();
        assert!(rep.norm <= 2.0 + 1e-9, "norm {}", rep.norm);
    }

    #[test]
    fn jones_zero_input_gives_zero() {
        let g = grid(5, 0);
        let r = IntervalRef::new(8, 16);
        let f = StepFn::constant(g, 0.0);
        let ext = jones_extend(&f, r).unwrap();
        assert!(ext.extension.values().iter().all(|v| *v == 0.0));
        assert_eq!(ext.bmo_ratio, 0.0);
    }

    #[test]
    fn jones_rejects_nonzero_mean() {
        let g = grid(5, 0);
        let r = IntervalRef::new(8, 16);
        let f = StepFn::constant(g, 1.0);
        assert!(jones_extend(&f, r).is_err());
    }

    #[test]
    fn jones_alternating_halves() {
        let g = grid(6, 0);
        let r = IntervalRef::new(16, 32);
        let mut vals = vec![0.0f64; g.cells()];
        for c in r.start..r.end() {
            vals[c] = if c < r.start + r.len / 2 { 1.0 } else { -1.0 };
        }
        let f = StepFn::new(g, vals, true).unwrap();
        let ext = jones_extend(&f, r).unwrap();
        // equal to f on R
        assert_eq!(&ext.extension.values()[r.start..r.end()], f.slice(r));
        // zero outside 2R
        let twor = double_interval(&g, r);
        for c in 0..g.cells() {
            if !twor.contains_cell(c) {
                assert_eq!(ext.extension.values()[c], 0.0, "cell {c}");
            }
        }
        assert!(ext.bmo_ratio.is_finite());
        assert!(ext.bmo_ratio > 0.0);
    }

    #[test]
    fn jones_log_profile_ratio_bounded() {
        let g = grid(8, 0);
        let r = IntervalRef::new(64, 128);
        let mut vals = vec![0.0f64; g.cells()];
        for c in r.start..r.end() {
            let d = (c - r.start + 1) as f64 / r.len as f64;
            vals[c] = (1.0f64 / d).ln().min(8.0);
        }
        let base = StepFn::new(g, vals, true).unwrap();
        let mean = base.average(r).unwrap();
        let f = base.sub(&StepFn::indicator(g, r).scale(mean));
        let ext = jones_extend(&f, r).unwrap();
        assert_eq!(&ext.extension.values()[r.start..r.end()], f.slice(r));
        assert!(ext.bmo_ratio < 10.0, "ratio {}", ext.bmo_ratio);
    }

    #[test]
    fn neccond_testfn_constant_weight_vanishes() {
        let g = grid(6, 0);
        let v = StepFn::constant(g, 1.0);
        let q = IntervalRef::new(0, 32);
        let out = neccond_testfn(&v, q, 2.0).unwrap();
        for c in q.start..q.end() {
            assert_eq!(out.g.values()[c], 0.0);
        }
        assert_eq!(out.g_avg, 0.0);
    }

    #[test]
    fn neccond_testfn_spike_tracks_log_ratio() {
        let g = grid(8, 0);
        let q = IntervalRef::new(0, 128);
        // sigma = v^{1-p'} spikes on the first cells of Q
        let p = 2.0;
        let mut sv = vec![1.0f64; g.cells()];
        for c in 0..4 {
            sv[c] = 64.0;
        }
        // v = sigma^{-(p-1)} for p = 2
        let v = StepFn::new(g, sv.iter().map(|s| 1.0 / s).collect(), false).unwrap();
        let out = neccond_testfn(&v, q, p).unwrap();
        let sigma_q: f64 = (64.0 * 4.0 + 124.0) / 128.0;
        let expect_near_spike = (64.0 / sigma_q).ln();
        assert!((out.g.values()[1] - expect_near_spike).abs() < 1e-9);
        assert!(out.g_avg < 2.0, "average {}", out.g_avg);
    }

    #[test]
    fn partner_kernel_bounds_and_decay() {
        let g = grid(8, 2);
        let t = KernelOp::hilbert(g);
        let b = IntervalRef::new(0, 16); // |B| = 2^{-4}
        let rep8 = disjoint_partner(&t, b, 8.0).unwrap();
        assert!(rep8.partner.intersect(&b).is_none());
        let measure = b.measure(&g);
        let k = rep8.k_center.abs();
        assert!(k >= 1.0 / (2.0 * 8.0 * measure) && k <= 2.0 / (8.0 * measure), "k={k}");
        let rep32 = disjoint_partner(&t, b, 32.0).unwrap();
        assert!(rep32.epsilon < rep8.epsilon, "{} !< {}", rep32.epsilon, rep8.epsilon);
    }

    #[test]
    fn partner_reflects_or_errors() {
        let g = grid(6, 0);
        let t = KernelOp::hilbert(g);
        // interval at the right edge must reflect left
        let b = IntervalRef::new(g.cells() - 4, 4);
        let rep = disjoint_partner(&t, b, 3.0).unwrap();
        assert!(rep.reflected);
        assert!(rep.partner.end() <= b.start);
        // too large to place anywhere
        let big = IntervalRef::new(0, g.cells() / 2);
        assert!(disjoint_partner(&t, big, 8.0).is_err());
    }

    #[test]
    fn doubling_constant_of_ones_is_bounded() {
        let g = grid(6, 0);
        let u = StepFn::constant(g, 1.0);
        let c = doubling_constant(&u);
        assert!(c <= 2.0 + 1e-12);
    }
}
