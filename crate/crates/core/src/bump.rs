//! Two-weight bump functionals: the sup-over-intervals product of Luxemburg
//! norms `[lam, mu]_{A,B}`, the named logarithmic-bump families, the
//! necessary-condition constant, and the Lacey / Li style testing
//! functionals for sparse operators.

use serde::Serialize;

use crate::grid::{enumerate_intervals, EnumMode, IntervalRef, Prefix, StepFn};
use crate::orlicz::{luxemburg_slice, BpVerdict, Complementary, YoungFn};
use crate::sparse::SparseFamily;
use crate::Error;

const E: f64 = std::f64::consts::E;

/// Named bump pairs. Each preset pins the Young pair (A, B) applied to
/// `u^{1/p}` and `v^{-1/p}` (or to `(u, sigma)` for the two sigma-form
/// presets, which carry outer exponents).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Preset {
    /// plain two-weight condition: `(t^p, t^p')`
    Ap,
    /// joint logarithmic bumps `(t^p log^{p-1+d}, t^p' log^{p'-1+d})`
    BumpConjecture,
    /// `(t^p log^{p-1+d}, t^p' log^{(m+1)p'-1+d})`
    StcoPair,
    /// separated-bump second pair `(t^p log^{p-1+d}, t^p' log^{m(p'+d)})`
    SepbumpThm,
    /// symmetric pair of `t^q log^{max((m+1)q'-1, mq'+1)+e}` bumps
    Corpc,
    /// necessity pair `(t^p, t^p' log^{mp'})`
    Necbump,
    /// sigma-form `u_Q ||sigma||^{p-1}` with the (m+1)p'-1+d log power
    Recond,
    /// sigma-form `||u||_{L(log L)^{p-1+d}} ||sigma||^{p-1}` with m(p'+d)
    K2,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Preset, Error> {
        Ok(match s {
            "ap" => Preset::Ap,
            "bump_conjecture" => Preset::BumpConjecture,
            "stco_pair" => Preset::StcoPair,
            "sepbump_thm" => Preset::SepbumpThm,
            "corpc" => Preset::Corpc,
            "necbump" => Preset::Necbump,
            "recond" => Preset::Recond,
            "k2" => Preset::K2,
            _ => return Err(Error::InvalidArg(format!("unknown bump preset `{s}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ap => "ap",
            Preset::BumpConjecture => "bump_conjecture",
            Preset::StcoPair => "stco_pair",
            Preset::SepbumpThm => "sepbump_thm",
            Preset::Corpc => "corpc",
            Preset::Necbump => "necbump",
            Preset::Recond => "recond",
            Preset::K2 => "k2",
        }
    }
}

/// The Young pair with outer exponents: the scanned quantity is
/// `||lam||_{A,Q}^e1 * ||mu||_{B,Q}^e2`.
#[derive(Clone, Debug)]
pub struct BumpSpec {
    pub a: YoungFn,
    pub b: YoungFn,
    pub p: f64,
    pub m: usize,
    pub e1: f64,
    pub e2: f64,
    pub preset: Option<Preset>,
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `t^q log^{max((m+1)q'-1, mq'+1)+eps}(e+t)` on the conjugate side of `q`.
fn psi_exponent(q: f64, m: usize, eps: f64) -> f64 {
    let qc = conjugate(q);
    let a = (m as f64 + 1.0) * qc - 1.0;
    let b = m as f64 * qc + 1.0;
    a.max(b) + eps
}

impl BumpSpec {
    pub fn manual(a: YoungFn, b: YoungFn, p: f64, m: usize) -> BumpSpec {
        BumpSpec { a, b, p, m, e1: 1.0, e2: 1.0, preset: None }
    }

    /// Preset families; `delta`/`eps` default to 1/2 when not given.
    pub fn preset(preset: Preset, p: f64, m: usize, delta: f64, eps: f64) -> Result<BumpSpec, Error> {
        if !(p > 1.0) {
            return Err(Error::InvalidArg("bump preset needs p > 1".into()));
        }
        let pc = conjugate(p);
        let mf = m as f64;
        let (a, b, e1, e2) = match preset {
            Preset::Ap => (YoungFn::power(p)?, YoungFn::power(pc)?, 1.0, 1.0),
            Preset::BumpConjecture => (
                YoungFn::power_log(p, p - 1.0 + delta)?,
                YoungFn::power_log(pc, pc - 1.0 + delta)?,
                1.0,
                1.0,
            ),
            Preset::StcoPair => (
                YoungFn::power_log(p, p - 1.0 + delta)?,
                YoungFn::power_log(pc, (mf + 1.0) * pc - 1.0 + delta)?,
                1.0,
                1.0,
            ),
            Preset::SepbumpThm => (
                YoungFn::power_log(p, p - 1.0 + delta)?,
                YoungFn::power_log(pc, mf * (pc + delta))?,
                1.0,
                1.0,
            ),
            Preset::Corpc => (
                YoungFn::power_log(p, psi_exponent(pc, m, eps))?,
                YoungFn::power_log(pc, psi_exponent(p, m, eps))?,
                1.0,
                1.0,
            ),
            Preset::Necbump => (
                YoungFn::power(p)?,
                YoungFn::power_log(pc, mf * pc)?,
                1.0,
                1.0,
            ),
            // sigma-form presets act on (u, sigma) directly
            Preset::Recond => (
                YoungFn::lin_log(0.0)?,
                YoungFn::lin_log((mf + 1.0) * pc - 1.0 + delta)?,
                1.0,
                p - 1.0,
            ),
            Preset::K2 => (
                YoungFn::lin_log(p - 1.0 + delta)?,
                YoungFn::lin_log(mf * (pc + delta))?,
                1.0,
                p - 1.0,
            ),
        };
        Ok(BumpSpec { a, b, p, m, e1, e2, preset: Some(preset) })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleMax {
    pub len_cells: usize,
    pub max: f64,
}

/// Result of a supremum scan over intervals.
#[derive(Clone, Debug, Serialize)]
pub struct BumpReport {
    pub value: f64,
    pub argmax: IntervalRef,
    pub mode: EnumMode,
    /// per-scale maxima (one entry per interval length)
    pub profile: Vec<ScaleMax>,
}

/// `sup_Q ||lam||_{A,Q}^{e1} ||mu||_{B,Q}^{e2}` over enumerated intervals.
/// For weight pairs the caller passes `lam = u^{1/p}`, `mu = v^{-1/p}`.
pub fn bump_constant(
    lam: &StepFn,
    mu: &StepFn,
    spec: &BumpSpec,
    mode: EnumMode,
    budget: usize,
) -> BumpReport {
    bump_constant_tol(lam, mu, spec, mode, budget, 1e-9)
}

pub fn bump_constant_tol(
    lam: &StepFn,
    mu: &StepFn,
    spec: &BumpSpec,
    mode: EnumMode,
    budget: usize,
    tol: f64,
) -> BumpReport {
    let g = *lam.grid();
    let mut best = 0.0f64;
    let mut argmax = g.whole();
    let mut profile: Vec<ScaleMax> = Vec::new();
    for q in enumerate_intervals(&g, mode, budget) {
        let na = luxemburg_slice(lam.slice(q), &spec.a, tol);
        let nb = luxemburg_slice(mu.slice(q), &spec.b, tol);
        let val = na.powf(spec.e1) * nb.powf(spec.e2);
        match profile.last_mut() {
            Some(s) if s.len_cells == q.len => s.max = s.max.max(val),
            _ => profile.push(ScaleMax { len_cells: q.len, max: val }),
        }
        if val > best {
            best = val;
            argmax = q;
        }
    }
    BumpReport { value: best, argmax, mode, profile }
}

#[derive(Clone, Debug, Serialize)]
pub struct NecessaryReport {
    /// `sup_Q ||u^{1/p}||_{L^p,Q} ||v^{-1/p}||_{L^{p'}(log L)^{mp'},Q}`
    pub bump: BumpReport,
    /// sigma-form `sup_Q u_Q ( (1/|Q|) int sigma log^{mp'}(sigma/sigma_Q + e) )^{p-1}`
    pub sigma_form: f64,
    pub sigma_argmax: IntervalRef,
    /// max over intervals of the two-route ratio `bump^p / sigma-form`
    pub route_ratio_hi: f64,
    pub route_ratio_lo: f64,
}

/// Necessary-condition constant in both routes; the routes agree within an
/// equivalence band (the log-average route vs the Luxemburg route).
pub fn necessary_constant(
    u: &StepFn,
    v: &StepFn,
    p: f64,
    m: usize,
    mode: EnumMode,
) -> Result<NecessaryReport, Error> {
    if u.values().iter().any(|x| *x <= 0.0) || v.values().iter().any(|x| *x <= 0.0) {
        return Err(Error::Precondition("necessary_constant needs positive weights".into()));
    }
    let g = *u.grid();
    let pc = conjugate(p);
    let spec = BumpSpec::preset(Preset::Necbump, p, m, 0.5, 0.5)?;
    let lam = u.powf(1.0 / p)?;
    let mu = v.powf(-1.0 / p)?;
    let sigma = v.powf(1.0 - pc)?;
    let su = Prefix::new(u);
    let ss = Prefix::new(&sigma);

    let mut best_bump = 0.0f64;
    let mut arg_bump = g.whole();
    let mut best_sig = 0.0f64;
    let mut arg_sig = g.whole();
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut profile: Vec<ScaleMax> = Vec::new();
    for q in enumerate_intervals(&g, mode, usize::MAX) {
        let na = luxemburg_slice(lam.slice(q), &spec.a, 1e-9);
        let nb = luxemburg_slice(mu.slice(q), &spec.b, 1e-9);
        let bval = na * nb;
        match profile.last_mut() {
            Some(s) if s.len_cells == q.len => s.max = s.max.max(bval),
            _ => profile.push(ScaleMax { len_cells: q.len, max: bval }),
        }
        if bval > best_bump {
            best_bump = bval;
            arg_bump = q;
        }
        let uq = su.average(q);
        let sq = ss.average(q);
        let logavg = sigma
            .slice(q)
            .iter()
            .map(|s| s * (s / sq + E).ln().powf(m as f64 * pc))
            .sum::<f64>()
            / q.len as f64;
        let sval = uq * logavg.powf(p - 1.0);
        if sval > best_sig {
            best_sig = sval;
            arg_sig = q;
        }
        if sval > 0.0 {
            let ratio = bval.powf(p) / sval;
            hi = hi.max(ratio);
            lo = lo.min(ratio);
        }
    }
    Ok(NecessaryReport {
        bump: BumpReport { value: best_bump, argmax: arg_bump, mode, profile },
        sigma_form: best_sig,
        sigma_argmax: arg_sig,
        route_ratio_hi: hi,
        route_ratio_lo: lo,
    })
}

#[derive(Clone, Debug)]
pub enum TestingVariant {
    Lacey,
    Li,
    /// testing with coefficients `lambda_Q >= 1`
    Estli { lambdas: Vec<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub struct TestingReport {
    pub value: f64,
    pub argmax: IntervalRef,
    pub variant: String,
}

/// Lacey / Li / coefficient testing functionals over the cubes of a sparse
/// family, with `phi = psi = log(e+t)` (increasing reading) and the
/// `t^p/log^{1+mu}` gauge as the B_p function.
pub fn testing_functional(
    fam: &SparseFamily,
    u: &StepFn,
    sigma: &StepFn,
    p: f64,
    variant: &TestingVariant,
) -> Result<TestingReport, Error> {
    let pc = conjugate(p);
    let a = YoungFn::power_over_log(p, 1.0)?;
    if a.bp_report(p, 1e6).verdict != BpVerdict::Finite {
        return Err(Error::Precondition("testing gauge must satisfy B_p".into()));
    }
    let phi = |t: f64| (E + t).ln();
    let su = Prefix::new(u);
    let ss = Prefix::new(sigma);
    if let TestingVariant::Estli { lambdas } = variant {
        if lambdas.len() != fam.len() {
            return Err(Error::InvalidArg("one lambda per cube required".into()));
        }
        if lambdas.iter().any(|l| *l < 1.0) {
            return Err(Error::InvalidArg("testing coefficients must be >= 1".into()));
        }
    }
    let comp = match variant {
        TestingVariant::Lacey => Some(Complementary::new(&a)),
        _ => None,
    };
    let mut best = 0.0f64;
    let mut argmax = fam.grid().whole();
    for (i, q) in fam.cubes().iter().enumerate() {
        let uq = su.average(*q);
        let sq = ss.average(*q);
        if sq <= 0.0 {
            continue;
        }
        let val = match variant {
            TestingVariant::Lacey => {
                let s_root = sigma.powf(1.0 / pc)?;
                let n = luxemburg_slice(s_root.slice(*q), comp.as_ref().unwrap(), 1e-8);
                uq.powf(1.0 / p) * n * phi(n / sq.powf(1.0 / pc))
            }
            TestingVariant::Li => {
                let s_root = sigma.powf(1.0 / p)?;
                let n = luxemburg_slice(s_root.slice(*q), &a, 1e-8);
                uq.powf(1.0 / p) * (sq / n) * phi(sq.powf(1.0 / p) / n)
            }
            TestingVariant::Estli { lambdas } => {
                let s_root = sigma.powf(1.0 / p)?;
                let n = luxemburg_slice(s_root.slice(*q), &a, 1e-8);
                let l = lambdas[i];
                uq.powf(1.0 / p) * l * phi(l) * (sq / n) * phi(sq.powf(1.0 / p) / n)
            }
        };
        if val > best {
            best = val;
            argmax = *q;
        }
    }
    let variant_name = match variant {
        TestingVariant::Lacey => "lacey",
        TestingVariant::Li => "li",
        TestingVariant::Estli { .. } => "estli",
    }
    .to_string();
    Ok(TestingReport { value: best, argmax, variant: variant_name })
}

/// Coefficients `lambda_Q = (||sigma||_{L(log L)^{m r'},Q} / sigma_Q)^{1/r'}`
/// clamped below at one, with `r` strictly between `(mp+1)/(m+1)` and `p`.
pub fn estli_lambdas(
    fam: &SparseFamily,
    sigma: &StepFn,
    p: f64,
    m: usize,
) -> Result<Vec<f64>, Error> {
    let lower = ((m as f64) * p + 1.0) / (m as f64 + 1.0);
    let r = 0.5 * (lower.max(1.0 + 1e-6) + p);
    if !(r > 1.0 && r < p) {
        return Err(Error::InvalidArg(format!("no admissible r for p={p}, m={m}")));
    }
    let rc = conjugate(r);
    let phi = YoungFn::lin_log(m as f64 * rc)?;
    let ss = Prefix::new(sigma);
    let mut out = Vec::with_capacity(fam.len());
    for q in fam.cubes() {
        let sq = ss.average(*q);
        let norm = luxemburg_slice(sigma.slice(*q), &phi, 1e-8);
        let l = if sq > 0.0 { (norm / sq).powf(1.0 / rc).max(1.0) } else { 1.0 };
        out.push(l);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::rng::SplitMix64;
    use crate::sparse::random_family;

    fn grid(l: u32, k: u32) -> Grid {
        Grid::new(l, k).unwrap()
    }

    fn lognormal(g: Grid, rng: &mut SplitMix64, s: f64) -> StepFn {
        let vals = (0..g.cells()).map(|_| (rng.normal() * s).exp()).collect();
        StepFn::new(g, vals, false).unwrap()
    }

    #[test]
    fn ap_preset_of_ones_is_one() {
        let g = grid(5, 0);
        let u = StepFn::constant(g, 1.0);
        let spec = BumpSpec::preset(Preset::Ap, 2.0, 0, 0.5, 0.5).unwrap();
        let lam = u.powf(0.5).unwrap();
        let mu = u.powf(-0.5).unwrap();
        let rep = bump_constant(&lam, &mu, &spec, EnumMode::AllAligned, usize::MAX);
        assert!((rep.value - 1.0).abs() < 1e-7, "value {}", rep.value);
    }

    #[test]
    fn ap_value_at_least_one() {
        // Jensen: u_Q^{1/p} sigma_Q^{1/p'} >= 1 when u = v
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(42);
        for _ in 0..5 {
            let u = lognormal(g, &mut rng, 1.0);
            let spec = BumpSpec::preset(Preset::Ap, 2.0, 0, 0.5, 0.5).unwrap();
            let lam = u.powf(0.5).unwrap();
            let mu = u.powf(-0.5).unwrap();
            let rep = bump_constant(&lam, &mu, &spec, EnumMode::Dyadic, usize::MAX);
            assert!(rep.value >= 1.0 - 1e-7, "value {}", rep.value);
        }
    }

    #[test]
    fn profile_tracks_value_and_argmax_is_valid() {
        let g = grid(5, 0);
        let mut rng = SplitMix64::new(9);
        let u = lognormal(g, &mut rng, 1.2);
        let v = lognormal(g, &mut rng, 1.2);
        let spec = BumpSpec::preset(Preset::StcoPair, 2.0, 1, 0.5, 0.5).unwrap();
        let lam = u.powf(0.5).unwrap();
        let mu = v.powf(-0.5).unwrap();
        let rep = bump_constant(&lam, &mu, &spec, EnumMode::AllAligned, usize::MAX);
        let best_profile = rep.profile.iter().map(|s| s.max).fold(0.0f64, f64::max);
        assert!((best_profile - rep.value).abs() <= 1e-12 * rep.value);
        assert!(rep.argmax.in_grid(&g));
    }

    #[test]
    fn dyadic_value_below_all_aligned() {
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(10);
        let u = lognormal(g, &mut rng, 1.0);
        let v = lognormal(g, &mut rng, 1.0);
        let spec = BumpSpec::preset(Preset::BumpConjecture, 1.5, 0, 0.5, 0.5).unwrap();
        let lam = u.powf(1.0 / 1.5).unwrap();
        let mu = v.powf(-1.0 / 1.5).unwrap();
        let dy = bump_constant(&lam, &mu, &spec, EnumMode::Dyadic, usize::MAX);
        let al = bump_constant(&lam, &mu, &spec, EnumMode::AllAligned, usize::MAX);
        assert!(dy.value <= al.value * (1.0 + 1e-9));
    }

    #[test]
    fn holder_chain_of_presets() {
        // each family dominates the previous pointwise, so the sups are ordered
        let g = grid(5, 0);
        let mut rng = SplitMix64::new(11);
        for m in 1..=2 {
            let u = lognormal(g, &mut rng, 1.0);
            let v = lognormal(g, &mut rng, 1.0);
            let p = 2.0;
            let lam = u.powf(1.0 / p).unwrap();
            let mu = v.powf(-1.0 / p).unwrap();
            let mut last = 0.0;
            for preset in [Preset::Ap, Preset::BumpConjecture, Preset::Corpc] {
                let spec = BumpSpec::preset(preset, p, m, 0.5, 0.5).unwrap();
                let rep = bump_constant(&lam, &mu, &spec, EnumMode::Dyadic, usize::MAX);
                assert!(
                    rep.value >= last * (1.0 - 1e-7),
                    "m={m}: {} broke the chain: {} < {last}",
                    preset.name(),
                    rep.value
                );
                last = rep.value;
            }
        }
    }

    #[test]
    fn monotone_in_log_exponent() {
        let g = grid(5, 0);
        let mut rng = SplitMix64::new(12);
        let u = lognormal(g, &mut rng, 1.0);
        let v = lognormal(g, &mut rng, 1.0);
        let p = 2.0;
        let lam = u.powf(0.5).unwrap();
        let mu = v.powf(-0.5).unwrap();
        let mut last = 0.0;
        for alpha in [0.0, 0.5, 1.5, 3.0] {
            let spec = BumpSpec::manual(
                YoungFn::power_log(p, alpha).unwrap(),
                YoungFn::power_log(2.0, alpha).unwrap(),
                p,
                0,
            );
            let rep = bump_constant(&lam, &mu, &spec, EnumMode::Dyadic, usize::MAX);
            assert!(rep.value >= last * (1.0 - 1e-9));
            last = rep.value;
        }
    }

    #[test]
    fn necessary_m0_matches_ap_preset() {
        let g = grid(5, 0);
        let mut rng = SplitMix64::new(13);
        let u = lognormal(g, &mut rng, 0.8);
        let v = lognormal(g, &mut rng, 0.8);
        let p = 2.0;
        let nec = necessary_constant(&u, &v, p, 0, EnumMode::Dyadic).unwrap();
        let spec = BumpSpec::preset(Preset::Ap, p, 0, 0.5, 0.5).unwrap();
        let rep = bump_constant(
            &u.powf(1.0 / p).unwrap(),
            &v.powf(-1.0 / p).unwrap(),
            &spec,
            EnumMode::Dyadic,
            usize::MAX,
        );
        assert!((nec.bump.value - rep.value).abs() < 1e-7 * rep.value);
    }

    #[test]
    fn necessary_of_ones() {
        let g = grid(5, 0);
        let ones = StepFn::constant(g, 1.0);
        let p = 2.0;
        // m = 0: exactly the plain condition with value 1
        let nec0 = necessary_constant(&ones, &ones, p, 0, EnumMode::AllAligned).unwrap();
        assert!((nec0.bump.value - 1.0).abs() < 1e-7);
        // m >= 1: the log-bump norm of a constant is the normalization
        // constant 1/phi^{-1}(1) of the family
        let m = 1;
        let nec1 = necessary_constant(&ones, &ones, p, m, EnumMode::AllAligned).unwrap();
        let pc = conjugate(p);
        let unit = YoungFn::power_log(pc, m as f64 * pc).unwrap().inverse(1.0);
        assert!((nec1.bump.value - 1.0 / unit).abs() < 1e-6, "{} vs {}", nec1.bump.value, 1.0 / unit);
        assert!(nec1.bump.value >= 1.0);
    }

    #[test]
    fn necessary_routes_agree_within_band() {
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(14);
        for m in 0..=2 {
            let u = lognormal(g, &mut rng, 0.9);
            let v = lognormal(g, &mut rng, 0.9);
            let nec = necessary_constant(&u, &v, 2.0, m, EnumMode::Dyadic).unwrap();
            // equivalence band: rescaling + eqlog constants, two-sided
            assert!(nec.route_ratio_hi <= 64.0, "m={m}: hi {}", nec.route_ratio_hi);
            assert!(nec.route_ratio_lo >= 1.0 / 64.0, "m={m}: lo {}", nec.route_ratio_lo);
        }
    }

    #[test]
    fn testing_functionals_on_ones() {
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(15);
        let fam = random_family(&g, 4, 0.5, None, &mut rng).unwrap();
        let ones = StepFn::constant(g, 1.0);
        let lac = testing_functional(&fam, &ones, &ones, 2.0, &TestingVariant::Lacey).unwrap();
        let li = testing_functional(&fam, &ones, &ones, 2.0, &TestingVariant::Li).unwrap();
        let lambdas = vec![1.0; fam.len()];
        let es =
            testing_functional(&fam, &ones, &ones, 2.0, &TestingVariant::Estli { lambdas }).unwrap();
        assert!(lac.value.is_finite() && lac.value > 0.0);
        assert!(li.value.is_finite() && li.value > 0.0);
        assert!(es.value.is_finite() && es.value > 0.0);
    }

    #[test]
    fn li_weaker_than_lacey() {
        // the li-form value is controlled by the lacey-form value
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(16);
        for p in [1.5, 2.0] {
            let fam = random_family(&g, 4, 0.5, None, &mut rng).unwrap();
            let u = lognormal(g, &mut rng, 0.7);
            let sigma = lognormal(g, &mut rng, 0.7);
            let lac = testing_functional(&fam, &u, &sigma, p, &TestingVariant::Lacey).unwrap();
            let li = testing_functional(&fam, &u, &sigma, p, &TestingVariant::Li).unwrap();
            assert!(li.value <= 4.0 * lac.value, "p={p}: li {} vs lacey {}", li.value, lac.value);
        }
    }

    #[test]
    fn estli_rejects_bad_lambdas() {
        let g = grid(4, 0);
        let mut rng = SplitMix64::new(17);
        let fam = random_family(&g, 3, 0.5, None, &mut rng).unwrap();
        let ones = StepFn::constant(g, 1.0);
        let bad = vec![0.5; fam.len()];
        assert!(testing_functional(&fam, &ones, &ones, 2.0, &TestingVariant::Estli { lambdas: bad })
            .is_err());
    }

    #[test]
    fn estli_proof_lambdas_finite() {
        let g = grid(6, 0);
        let mut rng = SplitMix64::new(18);
        let fam = random_family(&g, 4, 0.5, None, &mut rng).unwrap();
        let sigma = lognormal(g, &mut rng, 1.0);
        let u = lognormal(g, &mut rng, 1.0);
        for m in 1..=2 {
            let lambdas = estli_lambdas(&fam, &sigma, 2.0, m).unwrap();
            assert!(lambdas.iter().all(|l| *l >= 1.0 && l.is_finite()));
            let rep =
                testing_functional(&fam, &u, &sigma, 2.0, &TestingVariant::Estli { lambdas })
                    .unwrap();
            assert!(rep.value.is_finite());
        }
    }
}
