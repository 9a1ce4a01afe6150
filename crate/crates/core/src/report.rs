//! Experiment reports: a per-case table (CSV), recorded constants, verdicts,
//! and the fully resolved configuration, serialized deterministically so a
//! re-run from the embedded config reproduces the artifact byte for byte
//! (the wall-time field excepted).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::Error;

/// Resolved run configuration; every report embeds one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub p: f64,
    pub m: usize,
    pub levels: u32,
    pub span: u32,
    pub seed: u64,
    pub mode: String,
    #[serde(default)]
    pub preset: Option<String>,
    /// localized-weight scale list (exponents n with a = e^-n)
    #[serde(default)]
    pub n_list: Vec<i64>,
    pub count: usize,
    pub depth: u32,
    #[serde(default)]
    pub theorem: Option<String>,
    /// slack multiplier for PASS verdicts where one applies
    pub slack: f64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            p: 2.0,
            m: 1,
            levels: 8,
            span: 0,
            seed: 1,
            mode: "dyadic".into(),
            preset: None,
            n_list: Vec::new(),
            count: 50,
            depth: 6,
            theorem: None,
            slack: 1.0,
            jobs: 0,
        }
    }
}

impl RunConfig {
    /// Guardrails shared by the CLI and the drivers.
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidArg(format!("p must exceed 1 (got {})", self.p)));
        }
        if self.m > 4 {
            return Err(Error::InvalidArg(format!("m capped at 4 (got {})", self.m)));
        }
        if self.levels < 1 || self.levels > 16 {
            return Err(Error::InvalidArg(format!("levels must be in 1..=16 (got {})", self.levels)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    Recorded,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Recorded => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Recorded => "RECORDED",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub constants: BTreeMap<String, f64>,
    pub verdicts: Vec<VerdictEntry>,
    /// excluded from reproducibility comparison
    pub wall_ms: u64,
}

impl ExperimentReport {
    pub fn new(name: &str, config: RunConfig) -> ExperimentReport {
        ExperimentReport {
            name: name.to_string(),
            config,
            columns: Vec::new(),
            rows: Vec::new(),
            constants: BTreeMap::new(),
            verdicts: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn set_columns(&mut self, cols: &[&str]) {
        self.columns = cols.iter().map(|s| s.to_string()).collect();
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn record(&mut self, key: &str, value: f64) {
        self.constants.insert(key.to_string(), value);
    }

    pub fn verdict(&mut self, name: &str, verdict: Verdict, detail: String) {
        self.verdicts.push(VerdictEntry { name: name.to_string(), verdict, detail });
    }

    /// Worst verdict decides the exit code.
    pub fn overall(&self) -> Verdict {
        let mut out = Verdict::Recorded;
        for v in &self.verdicts {
            out = match (out, v.verdict) {
                (_, Verdict::Fail) | (Verdict::Fail, _) => Verdict::Fail,
                (_, Verdict::Inconclusive) | (Verdict::Inconclusive, _) => Verdict::Inconclusive,
                (Verdict::Recorded, Verdict::Pass) => Verdict::Pass,
                (keep, _) => keep,
            };
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// `<name>.report.json` and `<name>.table.csv` under `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(PathBuf, PathBuf), Error> {
        std::fs::create_dir_all(dir)?;
        let jpath = dir.join(format!("{}.report.json", self.name));
        let cpath = dir.join(format!("{}.table.csv", self.name));
        let mut jf = std::fs::File::create(&jpath)?;
        jf.write_all(self.to_json().as_bytes())?;
        jf.write_all(b"\n")?;
        let mut cf = std::fs::File::create(&cpath)?;
        cf.write_all(self.to_csv().as_bytes())?;
        Ok((jpath, cpath))
    }

    pub fn summary_line(&self) -> String {
        let details: Vec<String> = self
            .verdicts
            .iter()
            .map(|v| format!("{}={}", v.name, v.verdict.name()))
            .collect();
        format!("{}: {} [{}]", self.name, self.overall().name(), details.join(" "))
    }

    /// Byte equality modulo the wall-time field.
    pub fn reproduces(&self, other: &ExperimentReport) -> bool {
        let strip = |r: &ExperimentReport| {
            let mut c = r.clone();
            c.wall_ms = 0;
            c.to_json()
        };
        strip(self) == strip(other)
    }
}

/// Least-squares line fit; returns (slope, intercept, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let (_, _, _) = linear_fit(&rx, &ry);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let dx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>().sqrt();
    let dy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum::<f64>().sqrt();
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
