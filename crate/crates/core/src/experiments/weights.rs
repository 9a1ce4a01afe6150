//! Weight constructors shared by the experiment drivers and the CLI:
//! smooth log-density fields, power and spike weights, and the localized
//! two-weight blocks (grid-snapped and exact piecewise forms).

use crate::grid::{Grid, IntervalRef, StepFn};
use crate::piecewise::PiecePair;
use crate::rng::SplitMix64;
use crate::Error;

/// Lacunary cosine field: a fixed, resolution-independent smooth function
/// drawn from a seed; sampling it on finer grids refines the same weight.
#[derive(Clone, Debug)]
pub struct SmoothField {
    coeffs: Vec<(f64, f64, f64)>, // (frequency, amplitude, phase)
}

impl SmoothField {
    pub fn draw(rng: &mut SplitMix64, octaves: u32, amp: f64) -> SmoothField {
        let mut coeffs = Vec::new();
        for j in 1..=octaves {
            coeffs.push((
                (1u64 << j) as f64,
                amp * rng.normal() / j as f64,
                rng.uniform(0.0, std::f64::consts::TAU),
            ));
        }
        SmoothField { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(f, a, ph)| a * (std::f64::consts::TAU * f * x + ph).cos())
            .sum()
    }

    pub fn sample(&self, grid: Grid) -> StepFn {
        StepFn::from_fn(grid, true, |x| self.eval(x))
    }

    /// `exp(field)`: a positive weight with multiscale structure.
    pub fn sample_exp(&self, grid: Grid) -> StepFn {
        StepFn::from_fn(grid, false, |x| self.eval(x).exp())
    }
}

/// `dist-to-origin^gamma` at cell centers.
pub fn power_weight(grid: Grid, gamma: f64) -> StepFn {
    StepFn::from_fn(grid, false, |x| x.powf(gamma))
}

/// Height `h` on a centered window of width `w`, 1 elsewhere.
pub fn spike_weight(grid: Grid, h: f64, w: f64) -> Result<StepFn, Error> {
    if !(h > 0.0) || !(w > 0.0) {
        return Err(Error::InvalidArg("spike needs positive height and width".into()));
    }
    let cells = grid.cells();
    let wc = ((w / grid.cell_width()).round() as usize).clamp(1, cells);
    let start = (cells - wc) / 2;
    let mut vals = vec![1.0; cells];
    for v in &mut vals[start..start + wc] {
        *v = h;
    }
    StepFn::new(grid, vals, false)
}

/// Parse a CLI weight constructor: `ones`, `power:g`, `spike:h:w`,
/// `appendix:a:p` (side picks u or v), `file:path`.
pub enum WeightSide {
    U,
    V,
}

pub fn parse_weight(spec: &str, grid: Grid, side: WeightSide) -> Result<StepFn, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |x: &str| -> Result<f64, Error> {
        x.parse().map_err(|_| Error::InvalidArg(format!("bad number `{x}` in weight `{spec}`")))
    };
    match parts.as_slice() {
        ["ones"] => Ok(StepFn::constant(grid, 1.0)),
        ["power", g] => Ok(power_weight(grid, num(g)?)),
        ["spike", h, w] => spike_weight(grid, num(h)?, num(w)?),
        ["appendix", a, p] => {
            let lw = gen_localized_weights(grid, num(a)?, num(p)?, 0.0)?;
            Ok(match side {
                WeightSide::U => lw.u,
                WeightSide::V => lw.v,
            })
        }
        ["file", path] => {
            let f = std::fs::File::open(path)?;
            StepFn::read_csv(std::io::BufReader::new(f), grid, false)
        }
        _ => Err(Error::InvalidArg(format!("unknown weight constructor `{spec}`"))),
    }
}

/// Localized weight pair on the snapped interval `[shift, shift + b]`.
#[derive(Debug)]
pub struct LocalizedWeights {
    pub u: StepFn,
    pub v: StepFn,
    pub interval: IntervalRef,
    pub b: f64,
    /// exact averages over the snapped interval
    pub u_avg: f64,
    pub v_sigma_avg: f64,
}

/// Grid-snapped localized pair: `u` carries mass `1` on `[0,a]` scaled by
/// `1/a` and a low shelf `a` at the right end; `v` is `1/a` except for the
/// shelf `a log^{3p}(1/a)` on the last `a^{1/(p-1)}` of the interval.
///
/// Preconditions: the smallness condition `a < (b/2)^{max(p-1,1)}` with
/// `b = log^{-1/2}(1/a)`, and at least 4 cells across both `a` and
/// `a^{1/(p-1)}`.
pub fn gen_localized_weights(
    grid: Grid,
    a: f64,
    p: f64,
    shift: f64,
) -> Result<LocalizedWeights, Error> {
    if !(p > 1.0) {
        return Err(Error::InvalidArg("localized weights need p > 1".into()));
    }
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::InvalidArg(format!("scale a must sit in (0, 1/2) (got {a})")));
    }
    let n = (1.0 / a).ln();
    let b = n.powf(-0.5);
    if !(b < 0.5) {
        return Err(Error::Precondition(format!("block length b={b} must stay below 1/2")));
    }
    if !(a < (b / 2.0).powf((p - 1.0).max(1.0))) {
        return Err(Error::Precondition(format!(
            "smallness condition fails: a={a} vs (b/2)^max(p-1,1)={}",
            (b / 2.0).powf((p - 1.0).max(1.0))
        )));
    }
    let a1 = a.powf(1.0 / (p - 1.0));
    let w = grid.cell_width();
    let n_round = n.round() as i64;
    if a / w < 4.0 || a1 / w < 4.0 {
        return Err(Error::Resolution(
            format!("a={a:.3e} or a^(1/(p-1))={a1:.3e} spans < 4 cells of width {w:.3e}"),
            n_round,
        ));
    }
    let start = (shift / w).round() as usize;
    let len = (b / w).round() as usize;
    if start + len > grid.cells() {
        return Err(Error::OutOfRange { start, len, cells: grid.cells() });
    }
    let interval = IntervalRef::new(start, len);
    let a_cells = (a / w).round() as usize;
    let a1_cells = (a1 / w).round() as usize;
    let spike = a * n.powf(3.0 * p);
    let mut uv = vec![0.0f64; grid.cells()];
    let mut vv = vec![1.0f64; grid.cells()];
    for c in 0..len {
        let u = if c < a_cells {
            1.0 / a
        } else if c >= len - a_cells {
            a
        } else {
            0.0
        };
        let v = if c < len - a1_cells { 1.0 / a } else { spike };
        uv[start + c] = u;
        vv[start + c] = v;
    }
    let u = StepFn::new(grid, uv, false)?;
    let v = StepFn::new(grid, vv, false)?;
    let u_avg = u.average(interval)?;
    let pc = p / (p - 1.0);
    let v_sigma_avg = v.powf(1.0 - pc)?.average(interval)?;
    Ok(LocalizedWeights { u, v, interval, b, u_avg, v_sigma_avg })
}

/// Exact piecewise form of the localized pair on `[0, b]` (local
/// coordinates); no resolution constraint, any `a = e^-n` down to f64 range.
///
/// Segments are laid out by widths, never by differencing nearby positions:
/// at large n the boundary `b - a` rounds to `b` in f64 and a breakpoint
/// construction would silently drop the end pieces.
pub fn appendix_block(n: f64, p: f64) -> Result<(PiecePair, f64), Error> {
    if !(p > 1.0) || !(n > 1.0) {
        return Err(Error::InvalidArg("appendix block needs p > 1 and n > 1".into()));
    }
    let a = (-n).exp();
    let b = n.powf(-0.5);
    if !(b < 0.5) {
        return Err(Error::Precondition(format!("block length b={b} must stay below 1/2")));
    }
    if !(a < (b / 2.0).powf((p - 1.0).max(1.0))) {
        return Err(Error::Precondition(format!("smallness condition fails at n={n}")));
    }
    let a1 = a.powf(1.0 / (p - 1.0));
    let spike = a * n.powf(3.0 * p);
    let mut pair = PiecePair::default();
    pair.push(a, 1.0 / a, 1.0 / a);
    if a1 >= a {
        // v's shelf starts first (p <= 2)
        pair.push(b - a - a1, 0.0, 1.0 / a);
        pair.push(a1 - a, 0.0, spike);
        pair.push(a, a, spike);
    } else {
        // u's shelf starts first (p > 2)
        pair.push(b - a - a, 0.0, 1.0 / a);
        pair.push(a - a1, a, 1.0 / a);
        pair.push(a1, a, spike);
    }
    Ok((pair, b))
}
