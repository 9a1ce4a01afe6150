//! Uniform dyadic grid on `[0, 2^span)` with cells of width `2^-levels`,
//! step functions on it, exact integrals and interval enumeration.
//!
//! Everything downstream (Orlicz norms, sparse operators, kernels) consumes
//! these primitives, so integrals here are exact sums, not quadrature.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::Error;

/// Dyadic grid: `2^(levels+span)` cells of width `2^-levels` covering `[0, 2^span)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    levels: u32,
    span: u32,
}

impl Grid {
    /// `levels >= 1`; `levels + span` capped so cell indices stay addressable.
    pub fn new(levels: u32, span: u32) -> Result<Grid, Error> {
        if levels < 1 {
            return Err(Error::InvalidArg("grid levels must be >= 1".into()));
        }
        if levels + span > 26 {
            return Err(Error::InvalidArg(format!(
                "grid with 2^{} cells exceeds the addressable guardrail",
                levels + span
            )));
        }
        Ok(Grid { levels, span })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn span(&self) -> u32 {
        self.span
    }

    pub fn cells(&self) -> usize {
        1usize << (self.levels + self.span)
    }

    /// Cell width `2^-levels`; exactly representable.
    pub fn cell_width(&self) -> f64 {
        (self.levels as i32).checked_neg().map(|e| 2f64.powi(e)).unwrap()
    }

    pub fn domain_len(&self) -> f64 {
        2f64.powi(self.span as i32)
    }

    pub fn whole(&self) -> IntervalRef {
        IntervalRef { start: 0, len: self.cells() }
    }

    pub fn cell_center(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.cell_width()
    }

    pub fn cell_left(&self, cell: usize) -> f64 {
        cell as f64 * self.cell_width()
    }
}

/// Grid-aligned interval: `len` consecutive cells starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalRef {
    pub start: usize,
    pub len: usize,
}

impl IntervalRef {
    pub fn new(start: usize, len: usize) -> IntervalRef {
        IntervalRef { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        cell >= self.start && cell < self.end()
    }

    pub fn contains(&self, other: &IntervalRef) -> bool {
        self.start <= other.start && other.end() <= self.end()
    }

    pub fn intersect(&self, other: &IntervalRef) -> Option<IntervalRef> {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        (hi > lo).then(|| IntervalRef::new(lo, hi - lo))
    }

    /// Measure `len * 2^-levels`.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.len as f64 * grid.cell_width()
    }

    pub fn in_grid(&self, grid: &Grid) -> bool {
        self.len >= 1 && self.end() <= grid.cells()
    }

    /// True if this is a dyadic interval of the grid (power-of-two length at
    /// an aligned offset).
    pub fn is_dyadic(&self) -> bool {
        self.len.is_power_of_two() && self.start % self.len == 0
    }
}

/// Step function: one value per cell. Nonnegative unless `signed`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFn {
    grid: Grid,
    values: Vec<f64>,
    signed: bool,
}

impl StepFn {
    pub fn new(grid: Grid, values: Vec<f64>, signed: bool) -> Result<StepFn, Error> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidArg(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.cells()
            )));
        }
        if !signed && values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArg(
                "negative value in an unsigned step function".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArg("non-finite value in step function".into()));
        }
        Ok(StepFn { grid, values, signed })
    }

    pub fn constant(grid: Grid, c: f64) -> StepFn {
        StepFn { grid, values: vec![c; grid.cells()], signed: c < 0.0 }
    }

    pub fn indicator(grid: Grid, i: IntervalRef) -> StepFn {
        let mut values = vec![0.0; grid.cells()];
        for v in &mut values[i.start..i.end()] {
            *v = 1.0;
        }
        StepFn { grid, values, signed: false }
    }

    /// Sample `f` at cell centers.
    pub fn from_fn(grid: Grid, signed: bool, f: impl Fn(f64) -> f64) -> StepFn {
        let values = (0..grid.cells()).map(|i| f(grid.cell_center(i))).collect();
        StepFn { grid, values, signed }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    pub fn slice(&self, i: IntervalRef) -> &[f64] {
        &self.values[i.start..i.end()]
    }

    /// Exact integral over `i`: sum of cell values times cell width.
    pub fn integrate(&self, i: IntervalRef) -> Result<f64, Error> {
        if !i.in_grid(&self.grid) {
            return Err(Error::OutOfRange { start: i.start, len: i.len, cells: self.grid.cells() });
        }
        Ok(self.slice(i).iter().sum::<f64>() * self.grid.cell_width())
    }

    pub fn average(&self, i: IntervalRef) -> Result<f64, Error> {
        Ok(self.integrate(i)? / i.measure(&self.grid))
    }

    pub fn integrate_abs(&self, i: IntervalRef) -> Result<f64, Error> {
        if !i.in_grid(&self.grid) {
            return Err(Error::OutOfRange { start: i.start, len: i.len, cells: self.grid.cells() });
        }
        Ok(self.slice(i).iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_width())
    }

    pub fn map(&self, signed: bool, f: impl Fn(f64) -> f64) -> StepFn {
        StepFn {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            signed,
        }
    }

    /// Pointwise power of the absolute value; `0^e = 0` for e < 0 is rejected.
    pub fn powf(&self, e: f64) -> Result<StepFn, Error> {
        if e < 0.0 && self.values.iter().any(|v| *v == 0.0) {
            return Err(Error::InvalidArg("negative power of a vanishing step function".into()));
        }
        Ok(self.map(false, |v| v.abs().powf(e)))
    }

    pub fn abs(&self) -> StepFn {
        self.map(false, f64::abs)
    }

    pub fn scale(&self, c: f64) -> StepFn {
        self.map(self.signed || c < 0.0, |v| c * v)
    }

    pub fn mul(&self, other: &StepFn) -> StepFn {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        StepFn { grid: self.grid, values, signed: self.signed || other.signed }
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        StepFn { grid: self.grid, values, signed: self.signed || other.signed }
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        StepFn { grid: self.grid, values, signed: true }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `cell,value`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "cell,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", i, v)?;
        }
        Ok(())
    }

    /// Grid sidecar: `{"levels":L,"span":K}`.
    pub fn grid_sidecar_json(&self) -> String {
        serde_json::to_string(&self.grid).unwrap()
    }

    pub fn read_csv(r: impl BufRead, grid: Grid, signed: bool) -> Result<StepFn, Error> {
        let mut values = vec![0.0; grid.cells()];
        let mut seen = vec![false; grid.cells()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidArg(format!("csv read: {e}")))?;
            let line = line.trim();
            if lineno == 0 {
                if line != "cell,value" {
                    return Err(Error::InvalidArg(format!("bad csv header `{line}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (c, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidArg(format!("bad csv row `{line}`")))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArg(format!("bad cell index `{c}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArg(format!("bad value `{v}`")))?;
            if c >= grid.cells() {
                return Err(Error::OutOfRange { start: c, len: 1, cells: grid.cells() });
            }
            values[c] = v;
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArg("csv does not cover every cell".into()));
        }
        StepFn::new(grid, values, signed)
    }
}

/// Prefix sums of a step function; O(1) integrals for scan-heavy code.
pub struct Prefix {
    grid: Grid,
    sums: Vec<f64>,
}

impl Prefix {
    pub fn new(f: &StepFn) -> Prefix {
        let mut sums = Vec::with_capacity(f.values().len() + 1);
        sums.push(0.0);
        let mut acc = 0.0;
        for v in f.values() {
            acc += v;
            sums.push(acc);
        }
        Prefix { grid: *f.grid(), sums }
    }

    pub fn of_abs(f: &StepFn) -> Prefix {
        Prefix::new(&f.abs())
    }

    pub fn integral(&self, i: IntervalRef) -> f64 {
        (self.sums[i.end()] - self.sums[i.start]) * self.grid.cell_width()
    }

    pub fn average(&self, i: IntervalRef) -> f64 {
        (self.sums[i.end()] - self.sums[i.start]) / i.len as f64
    }
}

/// Interval enumeration: exact dyadic tree, or all power-of-two lengths at
/// every offset (the discrete stand-in for "sup over all cubes").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumMode {
    Dyadic,
    AllAligned,
}

impl EnumMode {
    pub fn name(&self) -> &'static str {
        match self {
            EnumMode::Dyadic => "dyadic",
            EnumMode::AllAligned => "all_aligned",
        }
    }
}

/// Dyadic mode ignores `budget` (the full tree is always produced); aligned
/// mode truncates to `budget` by descending length then ascending offset.
pub fn enumerate_intervals(grid: &Grid, mode: EnumMode, budget: usize) -> Vec<IntervalRef> {
    let cells = grid.cells();
    let top = grid.levels() + grid.span();
    let mut out = Vec::new();
    match mode {
        EnumMode::Dyadic => {
            for j in (0..=top).rev() {
                let len = 1usize << j;
                let mut start = 0;
                while start + len <= cells {
                    out.push(IntervalRef::new(start, len));
                    start += len;
                }
            }
        }
        EnumMode::AllAligned => {
            'outer: for j in (0..=top).rev() {
                let len = 1usize << j;
                for start in 0..=(cells - len) {
                    if out.len() >= budget {
                        break 'outer;
                    }
                    out.push(IntervalRef::new(start, len));
                }
            }
        }
    }
    out
}
