//! Blocks of `Θ = α − β`, their eigenvalues and the exact minimal error.
//!
//! In every sector `(s, t, q)` the operator `Θ` acts on the span of
//! `|s ± ½, t; q⟩` (test qubit coupled to A). Entries are stored rescaled by
//! `scale = f_s(r1) f_t(r2)` for the purity scenarios and by `Φ(q)` for the
//! overlap scenarios; the block appears `M = (2q+1) #(s,n) #(t,n)` times.

use crate::angular::{
    enumerate_sectors, ln_multiplicity_irrep, q_range, recoupling_row, sector_multiplicity,
    spins_of, CaseTag, RecouplingRow, SectorKey, Sign, SpinLabel,
};
use crate::asymptotics;
use crate::logmath::{ln_binomial, ln_factorial, sorted_compensated_sum, LogWeight, NeumaierSum};
use crate::priors::{ln_f, ratio_r, PriorScenario, PurityPrior};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Relative threshold below which weighted eigenvalues count as zero.
pub const TIE_THRESHOLD: f64 = 1e-14;

/// Largest `n` accepted by [`spectrum_report`].
pub const SPECTRUM_CAP: u32 = 40;

/// Which eigenvalue of a block an entry is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Single,
    Plus,
    Minus,
}

/// Rescaled entries of `Θ` in one sector. For `1×1` blocks the single entry
/// sits in `lam_pp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaBlock {
    pub sector: SectorKey,
    pub n: u32,
    pub scale: LogWeight,
    pub lam_pp: f64,
    pub lam_mm: f64,
    pub lam_pm: f64,
    pub is_2x2: bool,
}

/// One eigenvalue of `Θ` with its degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub sector: SectorKey,
    pub branch: Branch,
    /// Rescaled eigenvalue; the eigenvalue of `Θ` is `eigenvalue · scale`.
    pub eigenvalue: f64,
    pub multiplicity: u128,
    pub scale: LogWeight,
}

impl SpectrumEntry {
    /// `eigenvalue · scale · multiplicity`.
    pub fn weighted(&self) -> f64 {
        self.eigenvalue * self.scale.value() * self.multiplicity as f64
    }
}

/// Exact error probability together with its baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: u32,
    pub scenario: PriorScenario,
    pub p_exact: f64,
    pub p_asymptotic: Option<f64>,
    pub helstrom: f64,
    pub excess_risk: f64,
}

/// Engine switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    /// Drop `(s, t)` pairs whose weight is below `truncation_epsilon` times the
    /// largest one. Only honoured for `n > 200`.
    pub truncate: bool,
    pub truncation_epsilon: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            truncate: false,
            truncation_epsilon: 1e-18,
        }
    }
}

/// `n` above which truncation may be applied.
pub const TRUNCATION_MIN_N: u32 = 200;

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Rescaled block entries from the ratios and recoupling coefficients.
fn rescaled_entries(case: CaseTag, rs: (f64, f64), rt: (f64, f64), c: &RecouplingRow) -> (f64, f64, f64) {
    let (rsp, rsm) = rs;
    let (rtp, rtm) = rt;
    match case {
        CaseTag::A => (rsp - rtp, 0.0, 0.0),
        CaseTag::B => (rsp - rtm, 0.0, 0.0),
        CaseTag::C => (rsm - rtp, 0.0, 0.0),
        CaseTag::D => (
            rsp - rtp * c.c_pp * c.c_pp - rtm * c.c_pm * c.c_pm,
            rsm - rtp * c.c_mp * c.c_mp - rtm * c.c_mm * c.c_mm,
            -(rtp * c.c_pp * c.c_mp + rtm * c.c_pm * c.c_mm),
        ),
    }
}

/// Eigenvalues `(plus, minus)` of the symmetric matrix `[[pp, pm], [pm, mm]]`.
pub fn eigen_2x2(pp: f64, mm: f64, pm: f64) -> (f64, f64) {
    if pm == 0.0 {
        return (pp.max(mm), pp.min(mm));
    }
    let mean = 0.5 * (pp + mm);
    let radius = (0.5 * (mm - pp)).hypot(pm);
    (mean + radius, mean - radius)
}

/// Per-spin quantities reused across sectors.
struct SideTable {
    /// `ln f_j + ln #(j, n)` per spin of `n` qubits.
    ln_weight: Vec<f64>,
    ratios: Vec<(f64, f64)>,
}

impl SideTable {
    fn new(n: u32, prior: PurityPrior) -> Self {
        let mut ln_weight = Vec::new();
        let mut ratios = Vec::new();
        for j in spins_of(n) {
            ln_weight.push(ln_f(j, n, prior) + ln_multiplicity_irrep(j, n));
            ratios.push((ratio_r(j, n, Sign::Plus, prior), ratio_r(j, n, Sign::Minus, prior)));
        }
        SideTable { ln_weight, ratios }
    }
}

fn spin_index(j: SpinLabel, n: u32) -> usize {
    ((j.twice - n % 2) / 2) as usize
}

/// `Θ` block of a sector in the fixed-purity or hard-sphere scenario.
pub fn theta_block(sector: &SectorKey, n: u32, scenario: &PriorScenario) -> Result<ThetaBlock> {
    check_n(n)?;
    scenario.validate()?;
    sector.validate_for(n)?;
    let (p1, p2) = scenario
        .purity_priors()
        .ok_or_else(|| Error::UnsupportedScenario(scenario.to_string()))?;
    let (s, t) = (sector.s, sector.t);
    let rs = (ratio_r(s, n, Sign::Plus, p1), ratio_r(s, n, Sign::Minus, p1));
    let rt = (ratio_r(t, n, Sign::Plus, p2), ratio_r(t, n, Sign::Minus, p2));
    let c = recoupling_row(s, t, sector.q);
    let (lam_pp, lam_mm, lam_pm) = rescaled_entries(sector.case_tag, rs, rt, &c);
    Ok(ThetaBlock {
        sector: *sector,
        n,
        scale: LogWeight::from_ln(ln_f(s, n, p1) + ln_f(t, n, p2)),
        lam_pp,
        lam_mm,
        lam_pm,
        is_2x2: sector.case_tag.is_2x2(),
    })
}

/// Eigenvalues of a block as spectrum entries.
pub fn block_eigenvalues(block: &ThetaBlock) -> Result<Vec<SpectrumEntry>> {
    let multiplicity = sector_multiplicity(&block.sector, block.n).ok_or(Error::CapExceeded {
        n: block.n,
        cap: SPECTRUM_CAP,
    })?;
    let entry = |branch, eigenvalue| SpectrumEntry {
        sector: block.sector,
        branch,
        eigenvalue,
        multiplicity,
        scale: block.scale,
    };
    Ok(if block.is_2x2 {
        let (plus, minus) = eigen_2x2(block.lam_pp, block.lam_mm, block.lam_pm);
        vec![entry(Branch::Plus, plus), entry(Branch::Minus, minus)]
    } else {
        vec![entry(Branch::Single, block.lam_pp)]
    })
}

/// `ln` of the binomial pmf `C(n,k) p^k (1−p)^{n−k}` with `p = sin²(θ/2)`.
fn ln_overlap_pmf(n: u32, k: u32, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let term = |count: u32, ln_x: f64| if count == 0 { 0.0 } else { f64::from(count) * ln_x };
    ln_binomial(u64::from(n), u64::from(k))
        + term(k, 2.0 * half.sin().ln())
        + term(n - k, 2.0 * half.cos().abs().ln())
}

/// `ln (C^{q, k+½}_{(n+1)/2, (n+1)/2; n/2, k−n/2})²`, where `k = n/2 + h`.
/// `-inf` when `k + ½ > q`.
pub fn ln_overlap_cg_squared(q: SpinLabel, n: u32, k: u32) -> f64 {
    let q2 = u64::from(q.twice);
    let (n, k) = (u64::from(n), u64::from(k));
    if 2 * k + 1 > q2 || q2 > 2 * n + 1 {
        return f64::NEG_INFINITY;
    }
    let q_lo = (q2 - 1) / 2; // q − ½
    let q_hi = q2.div_ceil(2); // q + ½
    2f64.ln() + ln_factorial(n - k) + ln_factorial(n + 1) - ln_factorial(k)
        + ln_factorial(k + q_hi)
        - ln_factorial(q_lo - k)
        - ln_factorial(n - q_lo)
        - ln_factorial(n + q_hi + 1)
}

/// `Φ^(n)(q, θ)`: eigenvalue of `α` on the `s' = (n+1)/2, t = n/2` vectors of
/// total spin `q` in the fixed-overlap scenario.
pub fn phi_overlap(q: SpinLabel, n: u32, theta: f64) -> f64 {
    if q.twice == 0 || q.twice > 2 * n + 1 {
        return 0.0;
    }
    let k_max = ((q.twice - 1) / 2).min(n);
    let mut terms: Vec<f64> = (0..=k_max)
        .map(|k| (ln_overlap_pmf(n, k, theta) + ln_overlap_cg_squared(q, n, k)).exp())
        .collect();
    sorted_compensated_sum(&mut terms) / q.dim() as f64
}

/// `|C_{+−}^{(n/2, n/2, q)}| = √((q+n+3/2)(n+½−q)) / (n+1)`.
pub fn overlap_c_pm_abs(q: SpinLabel, n: u32) -> f64 {
    let qf = q.value();
    let nf = f64::from(n);
    ((qf + nf + 1.5) * (nf + 0.5 - qf)).max(0.0).sqrt() / (nf + 1.0)
}

/// `Θ` block of the `s = t = n/2` sector in the fixed-overlap scenario.
///
/// In the `|s ± ½, t; q⟩` basis `α = Φ diag(1, 0)` and `β = Φ v vᵀ` with
/// `v = (C_{++}, C_{−+})`.
pub fn overlap_block(q: SpinLabel, n: u32, theta: f64) -> Result<ThetaBlock> {
    check_n(n)?;
    PriorScenario::FixedOverlap { theta }.validate()?;
    let top = SpinLabel::from_twice(n);
    let sector = SectorKey::new(top, top, q)?;
    let phi = phi_overlap(q, n, theta);
    let (lam_pp, lam_mm, lam_pm) = if sector.case_tag.is_2x2() {
        let c = recoupling_row(top, top, q);
        (1.0 - c.c_pp * c.c_pp, -c.c_mp * c.c_mp, -c.c_pp * c.c_mp)
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(ThetaBlock {
        sector,
        n,
        scale: LogWeight::from_value(phi),
        lam_pp,
        lam_mm,
        lam_pm,
        is_2x2: sector.case_tag.is_2x2(),
    })
}

/// Eigenvalues `±|C_{+−}|` (scale `Φ`) of the `s = t = n/2` sector, or a
/// single zero in the stretched sector `q = n + ½`.
pub fn overlap_eigenvalues(q: SpinLabel, n: u32, theta: f64) -> Result<Vec<SpectrumEntry>> {
    check_n(n)?;
    PriorScenario::FixedOverlap { theta }.validate()?;
    let top = SpinLabel::from_twice(n);
    let sector = SectorKey::new(top, top, q)?;
    let scale = LogWeight::from_value(phi_overlap(q, n, theta));
    let multiplicity = u128::from(q.dim());
    let entry = |branch, eigenvalue| SpectrumEntry {
        sector,
        branch,
        eigenvalue,
        multiplicity,
        scale,
    };
    Ok(if sector.case_tag.is_2x2() {
        let c = overlap_c_pm_abs(q, n);
        vec![entry(Branch::Plus, c), entry(Branch::Minus, -c)]
    } else {
        vec![entry(Branch::Single, 0.0)]
    })
}

/// Minimal error probability with default options.
pub fn p_err_min(n: u32, scenario: &PriorScenario) -> Result<ErrorReport> {
    p_err_min_with(n, scenario, &EngineOptions::default())
}

/// Minimal error probability `½ − ½ Σ⁺`, where `Σ⁺` sums the positive
/// eigenvalues of `Θ` with their multiplicities.
pub fn p_err_min_with(n: u32, scenario: &PriorScenario, options: &EngineOptions) -> Result<ErrorReport> {
    let p_exact = p_exact_with(n, scenario, options)?;
    let helstrom = asymptotics::helstrom_avg(scenario);
    Ok(ErrorReport {
        n,
        scenario: *scenario,
        p_exact,
        p_asymptotic: asymptotics::p_asymptotic(n, scenario),
        helstrom,
        excess_risk: p_exact - helstrom,
    })
}

/// The exact error probability alone.
pub fn p_exact_with(n: u32, scenario: &PriorScenario, options: &EngineOptions) -> Result<f64> {
    check_n(n)?;
    scenario.validate()?;
    let positive = match scenario {
        PriorScenario::FixedPurities { .. } | PriorScenario::HardSphere => {
            positive_sum_purity(n, scenario, options)
        }
        PriorScenario::FixedOverlap { theta } | PriorScenario::FixedOverlapDim { theta, .. } => {
            positive_sum_overlap(n, *theta)
        }
    };
    Ok(0.5 - 0.5 * positive)
}

/// Positive rescaled eigenvalues of one `(s, t)` pair with their `2q+1`,
/// plus the largest `|Λ|` seen.
fn pair_eigenvalues(s: SpinLabel, t: SpinLabel, rs: (f64, f64), rt: (f64, f64)) -> (Vec<(f64, u64)>, f64) {
    let mut positive = Vec::new();
    let mut max_abs: f64 = 0.0;
    for q in q_range(s, t) {
        let key = SectorKey::new(s, t, q).expect("valid by construction");
        let c = if key.case_tag.is_2x2() {
            recoupling_row(s, t, q)
        } else {
            RecouplingRow {
                c_pp: 0.0,
                c_pm: 0.0,
                c_mp: 0.0,
                c_mm: 0.0,
            }
        };
        let (pp, mm, pm) = rescaled_entries(key.case_tag, rs, rt, &c);
        let eigs = if key.case_tag.is_2x2() {
            let (a, b) = eigen_2x2(pp, mm, pm);
            [Some(a), Some(b)]
        } else {
            [Some(pp), None]
        };
        for lam in eigs.into_iter().flatten() {
            max_abs = max_abs.max(lam.abs());
            if lam > 0.0 {
                positive.push((lam, q.dim()));
            }
        }
    }
    (positive, max_abs)
}

struct PairResult {
    ln_weight: f64,
    positive: Vec<(f64, u64)>,
    max_abs: f64,
}

fn positive_sum_purity(n: u32, scenario: &PriorScenario, options: &EngineOptions) -> f64 {
    let (p1, p2) = scenario.purity_priors().expect("checked by caller");
    let side_s = SideTable::new(n, p1);
    let side_t = SideTable::new(n, p2);
    let max_of = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_ln_w = max_of(&side_s.ln_weight) + max_of(&side_t.ln_weight);
    let cutoff = if options.truncate && n > TRUNCATION_MIN_N {
        max_ln_w + options.truncation_epsilon.ln()
    } else {
        f64::NEG_INFINITY
    };

    let spins: Vec<SpinLabel> = spins_of(n).collect();
    let rows: Vec<Vec<PairResult>> = spins
        .par_iter()
        .map(|&s| {
            let i = spin_index(s, n);
            spins
                .iter()
                .filter_map(|&t| {
                    let k = spin_index(t, n);
                    let ln_weight = side_s.ln_weight[i] + side_t.ln_weight[k];
                    if ln_weight == f64::NEG_INFINITY || ln_weight < cutoff {
                        return None;
                    }
                    let (positive, max_abs) =
                        pair_eigenvalues(s, t, side_s.ratios[i], side_t.ratios[k]);
                    Some(PairResult {
                        ln_weight,
                        positive,
                        max_abs,
                    })
                })
                .collect()
        })
        .collect();

    // ties are judged within each (s, t): scales across pairs differ by far
    // more than the multiplicities that compensate them
    let mut contributions: Vec<f64> = rows
        .iter()
        .flatten()
        .map(|p| {
            let threshold = TIE_THRESHOLD * p.max_abs;
            let mut acc = NeumaierSum::default();
            for &(lam, dim) in &p.positive {
                if lam >= threshold {
                    acc.add(lam * dim as f64);
                }
            }
            acc.value() * p.ln_weight.exp()
        })
        .collect();
    sorted_compensated_sum(&mut contributions)
}

fn positive_sum_overlap(n: u32, theta: f64) -> f64 {
    let top = SpinLabel::from_twice(n);
    let qs: Vec<SpinLabel> = q_range(top, top).collect();
    let values: Vec<(f64, u64)> = qs
        .par_iter()
        .map(|&q| {
            let key = SectorKey::new(top, top, q).expect("valid by construction");
            if key.case_tag.is_2x2() {
                (phi_overlap(q, n, theta) * overlap_c_pm_abs(q, n), q.dim())
            } else {
                (0.0, q.dim())
            }
        })
        .collect();
    // case A is exactly zero and the 2×2 eigenvalues carry no cancellation
    let mut terms: Vec<f64> = values
        .iter()
        .filter(|(v, _)| *v > 0.0)
        .map(|&(v, dim)| v * dim as f64)
        .collect();
    sorted_compensated_sum(&mut terms)
}

/// Full spectrum, ordered by `(s, t, q, branch)`, zero eigenvalues included.
pub fn spectrum_report(n: u32, scenario: &PriorScenario) -> Result<Vec<SpectrumEntry>> {
    check_n(n)?;
    scenario.validate()?;
    if n > SPECTRUM_CAP {
        return Err(Error::CapExceeded { n, cap: SPECTRUM_CAP });
    }
    let mut out = Vec::new();
    let top = SpinLabel::from_twice(n);
    for key in enumerate_sectors(n) {
        match scenario.overlap_angle() {
            None => out.extend(block_eigenvalues(&theta_block(&key, n, scenario)?)?),
            Some(theta) if key.s == top && key.t == top => {
                out.extend(overlap_eigenvalues(key.q, n, theta)?)
            }
            Some(_) => {
                let multiplicity = sector_multiplicity(&key, n).ok_or(Error::CapExceeded {
                    n,
                    cap: SPECTRUM_CAP,
                })?;
                let branches: &[Branch] = if key.case_tag.is_2x2() {
                    &[Branch::Plus, Branch::Minus]
                } else {
                    &[Branch::Single]
                };
                out.extend(branches.iter().map(|&branch| SpectrumEntry {
                    sector: key,
                    branch,
                    eigenvalue: 0.0,
                    multiplicity,
                    scale: LogWeight::ZERO,
                }));
            }
        }
    }
    Ok(out)
}

/// Aggregates of a spectrum listing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumTotals {
    /// `Σ eigenvalue · scale · multiplicity`; zero for a trace-null `Θ`.
    pub trace_sum: f64,
    pub positive_sum: f64,
    pub negative_sum: f64,
    pub total_multiplicity: u128,
}

pub fn spectrum_totals(entries: &[SpectrumEntry]) -> SpectrumTotals {
    let mut pos = NeumaierSum::default();
    let mut neg = NeumaierSum::default();
    let mut total = 0u128;
    for e in entries {
        let w = e.weighted();
        if w > 0.0 {
            pos.add(w);
        } else {
            neg.add(w);
        }
        total += e.multiplicity;
    }
    SpectrumTotals {
        trace_sum: pos.value() + neg.value(),
        positive_sum: pos.value(),
        negative_sum: neg.value(),
        total_multiplicity: total,
    }
}

/// `p_exact − helstrom`; a value below `−1e-10` is reported as a violation.
pub fn excess_risk(n: u32, scenario: &PriorScenario) -> Result<f64> {
    let report = p_err_min(n, scenario)?;
    if report.excess_risk < -1e-10 {
        return Err(Error::BoundViolation(format!(
            "excess risk {} below zero for {scenario} at n = {n}",
            report.excess_risk
        )));
    }
    Ok(report.excess_risk)
}

/// `a_{s,t} = (R_{s,+} + R_{s,−} − R_{t,+} − R_{t,−}) / 2`: the mean of the
/// two rescaled eigenvalues of a `2×2` block.
pub fn a_st(s: SpinLabel, t: SpinLabel, n: u32, scenario: &PriorScenario) -> Result<f64> {
    let (p1, p2) = scenario
        .purity_priors()
        .ok_or_else(|| Error::UnsupportedScenario(scenario.to_string()))?;
    Ok(0.5
        * (ratio_r(s, n, Sign::Plus, p1) + ratio_r(s, n, Sign::Minus, p1)
            - ratio_r(t, n, Sign::Plus, p2)
            - ratio_r(t, n, Sign::Minus, p2)))
}

fn rescaled_gaps(s: SpinLabel, t: SpinLabel, n: u32, scenario: &PriorScenario) -> Result<(f64, f64)> {
    let (p1, p2) = scenario
        .purity_priors()
        .ok_or_else(|| Error::UnsupportedScenario(scenario.to_string()))?;
    let g = |j, p| ratio_r(j, n, Sign::Plus, p) - ratio_r(j, n, Sign::Minus, p);
    Ok((g(s, p1), g(t, p2)))
}

/// Half-splitting of a `2×2` block, `b = ½ √((g_s + g_t)² − 4 g_s g_t C_{++}²)`
/// with `g_j = R_{j,+} − R_{j,−}`. Equals the radius of [`eigen_2x2`].
pub fn b_stq(sector: &SectorKey, n: u32, scenario: &PriorScenario) -> Result<f64> {
    let (gs, gt) = rescaled_gaps(sector.s, sector.t, n, scenario)?;
    let c = recoupling_row(sector.s, sector.t, sector.q).c_pp;
    Ok(0.5 * ((gs + gt).powi(2) - 4.0 * gs * gt * c * c).max(0.0).sqrt())
}

/// The alternative half-splitting `½ √((g_s − g_t)² − 4 g_s g_t C_{++}²)`.
/// Returns `None` when the radicand is negative. Kept only to show that it
/// disagrees with the block diagonalization.
pub fn b_stq_alternative(sector: &SectorKey, n: u32, scenario: &PriorScenario) -> Result<Option<f64>> {
    let (gs, gt) = rescaled_gaps(sector.s, sector.t, n, scenario)?;
    let c = recoupling_row(sector.s, sector.t, sector.q).c_pp;
    let radicand = (gs - gt).powi(2) - 4.0 * gs * gt * c * c;
    Ok((radicand >= 0.0).then(|| 0.5 * radicand.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::enumerate_sectors;
    use std::f64::consts::PI;

    fn sp(twice: u32) -> SpinLabel {
        SpinLabel::from_twice(twice)
    }

    #[test]
    fn hard_sphere_single_blocks_have_closed_forms() {
        for n in 1..=12u32 {
            let nf = f64::from(n);
            for key in enumerate_sectors(n) {
                let b = theta_block(&key, n, &PriorScenario::HardSphere).unwrap();
                let (s, t, q) = (key.s.value(), key.t.value(), key.q.value());
                match key.case_tag {
                    CaseTag::A => assert!((b.lam_pp - (s - t) / (nf + 4.0)).abs() < 1e-13),
                    CaseTag::B => assert!((b.lam_pp - (1.0 + s + t) / (nf + 4.0)).abs() < 1e-13),
                    CaseTag::C => assert!((b.lam_pp + (1.0 + s + t) / (nf + 4.0)).abs() < 1e-13),
                    CaseTag::D => {
                        let (plus, minus) = eigen_2x2(b.lam_pp, b.lam_mm, b.lam_pm);
                        let want = (3.0 - 4.0 * q * (1.0 + q) + 8.0 * s * (1.0 + s) + 8.0 * t * (1.0 + t)).sqrt()
                            / (2.0 * (nf + 4.0));
                        assert!((plus - want).abs() < 1e-13, "{key:?}");
                        assert!((minus + want).abs() < 1e-13, "{key:?}");
                    }
                }
                if !b.is_2x2 {
                    assert_eq!(b.lam_pm, 0.0);
                }
            }
        }
    }

    #[test]
    fn maximally_mixed_templates_give_zero_blocks() {
        let sc = PriorScenario::FixedPurities { r1: 0.0, r2: 0.0 };
        for key in enumerate_sectors(6) {
            let b = theta_block(&key, 6, &sc).unwrap();
            assert!(b.lam_pp.abs() < 1e-14 && b.lam_mm.abs() < 1e-14 && b.lam_pm.abs() < 1e-14);
        }
        assert!((p_err_min(6, &sc).unwrap().p_exact - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_eigenvalues_respect_trace_and_determinant() {
        for &(pp, mm, pm) in &[(0.3, -0.2, 0.1), (1.0, 1.0, 0.0), (-2.0, 5.0, 3.0), (1e-9, 2e-9, -4e-9)] {
            let (a, b) = eigen_2x2(pp, mm, pm);
            assert!(a >= b);
            let size = pp.abs().max(mm.abs()).max(pm.abs());
            assert!((a + b - pp - mm).abs() < 1e-12 * size);
            assert!((a * b - (pp * mm - pm * pm)).abs() < 1e-12 * size * size);
        }
        let (a, b) = eigen_2x2(0.7, -0.1, 0.0);
        assert_eq!((a, b), (0.7, -0.1));
    }

    #[test]
    fn mean_and_splitting_reproduce_block_eigenvalues() {
        for sc in [
            PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 },
            PriorScenario::FixedPurities { r1: 0.2, r2: 0.9 },
            PriorScenario::HardSphere,
        ] {
            let mut alternative_misses = 0;
            for n in 2..=10u32 {
                for key in enumerate_sectors(n).into_iter().filter(|k| k.case_tag == CaseTag::D) {
                    let blk = theta_block(&key, n, &sc).unwrap();
                    let (plus, minus) = eigen_2x2(blk.lam_pp, blk.lam_mm, blk.lam_pm);
                    let a = a_st(key.s, key.t, n, &sc).unwrap();
                    let b = b_stq(&key, n, &sc).unwrap();
                    assert!((a + b - plus).abs() < 1e-12 && (a - b - minus).abs() < 1e-12, "{key:?}");
                    match b_stq_alternative(&key, n, &sc).unwrap() {
                        Some(alt) if (alt - b).abs() < 1e-9 => {}
                        _ => alternative_misses += 1,
                    }
                }
            }
            assert!(alternative_misses > 0);
        }
    }

    #[test]
    fn spectrum_is_trace_null_with_full_dimension() {
        for sc in [
            PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 },
            PriorScenario::HardSphere,
            PriorScenario::FixedOverlap { theta: PI / 3.0 },
        ] {
            for n in [1u32, 2, 3, 7, 16] {
                let entries = spectrum_report(n, &sc).unwrap();
                let tot = spectrum_totals(&entries);
                assert!(tot.trace_sum.abs() < 1e-10 * entries.len() as f64);
                assert!((tot.positive_sum + tot.negative_sum).abs() < 1e-10);
                assert_eq!(tot.total_multiplicity, 1u128 << (2 * n + 1));
                let p = p_err_min(n, &sc).unwrap().p_exact;
                assert!((p - (0.5 - 0.5 * tot.positive_sum)).abs() < 1e-12, "{sc} {n}");
            }
        }
        assert!(matches!(spectrum_report(41, &PriorScenario::HardSphere), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn plus_branch_dominates_minus() {
        for e in spectrum_report(9, &PriorScenario::FixedPurities { r1: 0.4, r2: 0.95 })
            .unwrap()
            .chunks(2)
        {
            if e.len() == 2 && e[0].branch == Branch::Plus {
                assert_eq!(e[1].branch, Branch::Minus);
                assert!(e[0].eigenvalue >= e[1].eigenvalue);
            }
        }
    }

    #[test]
    fn phi_is_a_distribution() {
        for n in 1..=20u32 {
            for theta in [0.0, 0.4, PI / 2.0, 2.9, PI] {
                let total: f64 = q_range(sp(n), sp(n))
                    .map(|q| q.dim() as f64 * phi_overlap(q, n, theta))
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "n = {n}, theta = {theta}");
            }
        }
    }

    #[test]
    fn overlap_single_copy_values() {
        for theta in [0.0, 0.3, PI / 2.0, 2.0, PI] {
            let v = phi_overlap(sp(1), 1, theta) * overlap_c_pm_abs(sp(1), 1);
            assert!((v - (1.0 + theta.cos()) / (4.0 * 3f64.sqrt())).abs() < 1e-14);
        }
        let p = p_err_min(1, &PriorScenario::FixedOverlap { theta: 0.0 }).unwrap().p_exact;
        assert!((p - (0.5 - 0.5 / 3f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn overlap_blocks_match_closed_eigenvalues() {
        for n in 1..=8u32 {
            for q in q_range(sp(n), sp(n)) {
                let blk = overlap_block(q, n, 1.1).unwrap();
                let entries = overlap_eigenvalues(q, n, 1.1).unwrap();
                if blk.is_2x2 {
                    let (plus, minus) = eigen_2x2(blk.lam_pp, blk.lam_mm, blk.lam_pm);
                    assert!((plus - entries[0].eigenvalue).abs() < 1e-12);
                    assert!((minus - entries[1].eigenvalue).abs() < 1e-12);
                    assert_eq!(entries[0].eigenvalue, -entries[1].eigenvalue);
                } else {
                    assert_eq!(entries.len(), 1);
                    assert_eq!(entries[0].eigenvalue, 0.0);
                }
            }
        }
    }

    #[test]
    fn coincident_templates_are_indistinguishable() {
        for n in [1u32, 5, 30] {
            let p = p_err_min(n, &PriorScenario::FixedOverlap { theta: PI }).unwrap().p_exact;
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_does_not_enter_the_exact_error() {
        for d in [2u32, 3, 5] {
            let a = p_err_min(12, &PriorScenario::FixedOverlapDim { theta: 0.9, d }).unwrap();
            let b = p_err_min(12, &PriorScenario::FixedOverlap { theta: 0.9 }).unwrap();
            assert_eq!(a.p_exact, b.p_exact);
        }
    }

    #[test]
    fn known_excess_risks() {
        let e = excess_risk(1, &PriorScenario::FixedOverlap { theta: 0.0 }).unwrap();
        assert!((e - (0.5 - 0.5 / 3f64.sqrt())).abs() < 1e-14);
        let e = excess_risk(50, &PriorScenario::HardSphere).unwrap();
        let lead = 18.0 / (35.0 * 50.0);
        assert!((e - lead).abs() < 0.25 * lead);
    }

    #[test]
    fn truncation_changes_nothing_visible() {
        let sc = PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 };
        let exact = p_exact_with(240, &sc, &EngineOptions::default()).unwrap();
        let trunc = p_exact_with(
            240,
            &sc,
            &EngineOptions {
                truncate: true,
                ..EngineOptions::default()
            },
        )
        .unwrap();
        assert!((exact - trunc).abs() < 1e-13);
    }

    #[test]
    fn invalid_inputs() {
        assert!(p_err_min(0, &PriorScenario::HardSphere).is_err());
        assert!(p_err_min(3, &PriorScenario::FixedPurities { r1: 1.2, r2: 0.0 }).is_err());
        let key = SectorKey::new(sp(2), sp(2), sp(3)).unwrap();
        assert!(theta_block(&key, 2, &PriorScenario::FixedOverlap { theta: 1.0 }).is_err());
    }
}
