//! Prior scenarios and the weights they induce on each irrep.
//!
//! For a qubit state of Bloch length `r`, twirling `ρ^{⊗n}` gives the weight
//!
//! ```text
//! f_j^(n)(r) = (ab)^{n/2 − j} · (a^{2j+1} − b^{2j+1}) / ((2j+1) r),   a = (1+r)/2, b = (1−r)/2
//! ```
//!
//! on every vector of every spin-`j` irrep. Everything here is evaluated in a
//! form without the division by `r`, so `r = 0` and `r = 1` need no special
//! casing beyond `0⁰ = 1`.

use crate::angular::{ln_multiplicity_irrep, Sign, SpinLabel};
use crate::logmath::{ln_factorial, LogWeight};
use crate::{Error, Result};
use serde::Serialize;
use std::fmt;

/// Prior information available about the two templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorScenario {
    /// Mixed templates with known Bloch lengths and uniformly random directions.
    FixedPurities { r1: f64, r2: f64 },
    /// Templates uniform in the Bloch ball.
    HardSphere,
    /// Pure templates with known overlap `sin(θ/2)`, random common orientation.
    FixedOverlap { theta: f64 },
    /// Same as [`PriorScenario::FixedOverlap`] for qudits of dimension `d`.
    FixedOverlapDim { theta: f64, d: u32 },
}

impl PriorScenario {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorScenario::FixedPurities { r1, r2 } => {
                check_purity(r1)?;
                check_purity(r2)
            }
            PriorScenario::HardSphere => Ok(()),
            PriorScenario::FixedOverlap { theta } => check_theta(theta),
            PriorScenario::FixedOverlapDim { theta, d } => {
                if d < 2 {
                    return Err(Error::InvalidParameter(format!("d = {d} must be at least 2")));
                }
                check_theta(theta)
            }
        }
    }

    /// Purity priors of the two templates, when the scenario has them.
    pub fn purity_priors(&self) -> Option<(PurityPrior, PurityPrior)> {
        match *self {
            PriorScenario::FixedPurities { r1, r2 } => {
                Some((PurityPrior::Fixed(r1), PurityPrior::Fixed(r2)))
            }
            PriorScenario::HardSphere => Some((PurityPrior::HardSphere, PurityPrior::HardSphere)),
            _ => None,
        }
    }

    /// `θ` of the overlap scenarios.
    pub fn overlap_angle(&self) -> Option<f64> {
        match *self {
            PriorScenario::FixedOverlap { theta } | PriorScenario::FixedOverlapDim { theta, .. } => {
                Some(theta)
            }
            _ => None,
        }
    }
}

impl fmt::Display for PriorScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorScenario::FixedPurities { r1, r2 } => write!(f, "fixed-purity(r1={r1}, r2={r2})"),
            PriorScenario::HardSphere => write!(f, "hard-sphere"),
            PriorScenario::FixedOverlap { theta } => write!(f, "fixed-overlap(theta={theta})"),
            PriorScenario::FixedOverlapDim { theta, d } => {
                write!(f, "fixed-overlap-dim(theta={theta}, d={d})")
            }
        }
    }
}

fn check_purity(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("purity r = {r} outside [0, 1]")))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=std::f64::consts::PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("theta = {theta} outside [0, pi]")))
    }
}

/// Prior on the Bloch length of a single template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PurityPrior {
    Fixed(f64),
    /// `3r² dr` on `[0, 1]`.
    HardSphere,
}

/// Quantities of a fixed Bloch length that the weight formulas reuse.
#[derive(Debug, Clone, Copy)]
struct Bloch {
    a: f64,
    b: f64,
    ln_a: f64,
    ln_ab: f64,
    /// `ln(b/a)`; 0 at `r = 0`, `-inf` at `r = 1`.
    ln_rho: f64,
}

impl Bloch {
    fn new(r: f64) -> Self {
        let ln_a = r.ln_1p() - std::f64::consts::LN_2;
        let ln_b = (-r).ln_1p() - std::f64::consts::LN_2;
        Bloch {
            a: 0.5 * (1.0 + r),
            b: 0.5 * (1.0 - r),
            ln_a,
            ln_ab: ln_a + ln_b,
            ln_rho: (-r).ln_1p() - r.ln_1p(),
        }
    }

    /// `1 − ρ^m`.
    fn one_minus_rho_pow(&self, m: u64) -> f64 {
        -(m as f64 * self.ln_rho).exp_m1()
    }

    /// `(1 − ρ^m1) / (1 − ρ^m2)`, with the `ρ → 1` limit `m1/m2`.
    fn geometric_ratio(&self, m1: u64, m2: u64) -> f64 {
        if self.ln_rho == 0.0 {
            m1 as f64 / m2 as f64
        } else {
            self.one_minus_rho_pow(m1) / self.one_minus_rho_pow(m2)
        }
    }

    /// `ln Σ_{k=0}^{2j} a^k b^{2j−k} = 2j ln a + ln((1 − ρ^{2j+1}) / (1 − ρ))`.
    fn ln_geometric_sum(&self, j: SpinLabel) -> f64 {
        let m = j.dim();
        let tail = if self.ln_rho == 0.0 {
            (m as f64).ln()
        } else {
            (self.one_minus_rho_pow(m) / self.one_minus_rho_pow(1)).ln()
        };
        f64::from(j.twice) * self.ln_a + tail
    }
}

fn compatible(j: SpinLabel, n: u32) -> bool {
    j.twice <= n && (n - j.twice).is_multiple_of(2)
}

fn require_compatible(j: SpinLabel, n: u32) -> Result<()> {
    if compatible(j, n) {
        Ok(())
    } else {
        Err(Error::InvalidSpin {
            label: j.to_string(),
            reason: format!("not a spin of {n} qubits"),
        })
    }
}

/// `f_j^(n)(r)`.
pub fn f_fixed(j: SpinLabel, n: u32, r: f64) -> Result<f64> {
    check_purity(r)?;
    require_compatible(j, n)?;
    Ok(ln_f_fixed(j, n, r).exp())
}

/// `ln f_j^(n)(r)`; `-inf` when the weight vanishes or `j` is not a spin of `n` qubits.
pub fn ln_f_fixed(j: SpinLabel, n: u32, r: f64) -> f64 {
    if !compatible(j, n) {
        return f64::NEG_INFINITY;
    }
    let bloch = Bloch::new(r);
    let exponent = (n - j.twice) / 2;
    let pow = if exponent == 0 {
        0.0
    } else {
        f64::from(exponent) * bloch.ln_ab
    };
    pow + bloch.ln_geometric_sum(j) - (j.dim() as f64).ln()
}

/// Hard-sphere average `∫ 3r² f_j^(n)(r) dr = 6 (n/2−j)! (1+n/2+j)! / (n+3)!`.
pub fn f_hard_sphere(j: SpinLabel, n: u32) -> Result<f64> {
    require_compatible(j, n)?;
    Ok(ln_f_hard_sphere(j, n).exp())
}

/// `ln` of [`f_hard_sphere`]; `-inf` for incompatible `j`.
pub fn ln_f_hard_sphere(j: SpinLabel, n: u32) -> f64 {
    if !compatible(j, n) {
        return f64::NEG_INFINITY;
    }
    let lo = u64::from((n - j.twice) / 2);
    let hi = u64::from((n + j.twice) / 2) + 1;
    6f64.ln() + ln_factorial(lo) + ln_factorial(hi) - ln_factorial(u64::from(n) + 3)
}

/// `ln f_j^(n)` under either purity prior.
pub fn ln_f(j: SpinLabel, n: u32, prior: PurityPrior) -> f64 {
    match prior {
        PurityPrior::Fixed(r) => ln_f_fixed(j, n, r),
        PurityPrior::HardSphere => ln_f_hard_sphere(j, n),
    }
}

/// `R_{j,±}^(n) = f_{j±½}^(n+1) / f_j^(n)`; 0 when `j − ½ < 0`.
///
/// At `r = 1` and `j < n/2` both weights vanish; the value returned is the
/// continuous limit from `r < 1`.
pub fn ratio_r(j: SpinLabel, n: u32, sign: Sign, prior: PurityPrior) -> f64 {
    let two_j = u64::from(j.twice);
    if sign == Sign::Minus && two_j == 0 {
        return 0.0;
    }
    let nf = f64::from(n);
    let jf = j.value();
    match (prior, sign) {
        (PurityPrior::HardSphere, Sign::Plus) => (2.0 + nf / 2.0 + jf) / (nf + 4.0),
        (PurityPrior::HardSphere, Sign::Minus) => (1.0 + nf / 2.0 - jf) / (nf + 4.0),
        (PurityPrior::Fixed(r), Sign::Plus) => {
            let bloch = Bloch::new(r);
            (two_j + 1) as f64 / (two_j + 2) as f64 * bloch.a * bloch.geometric_ratio(two_j + 2, two_j + 1)
        }
        (PurityPrior::Fixed(r), Sign::Minus) => {
            let bloch = Bloch::new(r);
            (two_j + 1) as f64 / two_j as f64 * bloch.b * bloch.geometric_ratio(two_j, two_j + 1)
        }
    }
}

/// `G_j^(n) = f_{j+½}^(n+1) − f_{j−½}^(n+1)`.
pub fn gap_g(j: SpinLabel, n: u32, prior: PurityPrior) -> f64 {
    let up = ln_f(j.raise(), n + 1, prior).exp();
    let down = j.lower().map_or(0.0, |jm| ln_f(jm, n + 1, prior).exp());
    up - down
}

/// `f_s(r1) f_t(r2) #(s,n) #(t,n)`: the sector weight without its `2q+1`.
pub fn sector_log_weight(s: SpinLabel, t: SpinLabel, n: u32, scenario: &PriorScenario) -> Result<LogWeight> {
    let (p1, p2) = scenario
        .purity_priors()
        .ok_or_else(|| Error::UnsupportedScenario(scenario.to_string()))?;
    require_compatible(s, n)?;
    require_compatible(t, n)?;
    Ok(LogWeight::from_ln(
        ln_f(s, n, p1) + ln_f(t, n, p2) + ln_multiplicity_irrep(s, n) + ln_multiplicity_irrep(t, n),
    ))
}

/// Closed form of `f_s f_t M_{s,t,q}` under the hard-sphere prior:
/// `36 (2s+1)(2t+1)(2q+1) / ((n+1)(n+2)(n+3))²`.
pub fn hard_sphere_sector_weight(s: SpinLabel, t: SpinLabel, q: SpinLabel, n: u32) -> f64 {
    let nf = f64::from(n);
    let den = (nf + 1.0) * (nf + 2.0) * (nf + 3.0);
    36.0 * (s.dim() * t.dim() * q.dim()) as f64 / (den * den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::spins_of;

    fn sp(twice: u32) -> SpinLabel {
        SpinLabel::from_twice(twice)
    }

    /// Direct evaluation of the defining expression, valid for `0 < r < 1`.
    fn f_textbook(j: SpinLabel, n: u32, r: f64) -> f64 {
        let a = (1.0 + r) / 2.0;
        let b = (1.0 - r) / 2.0;
        let e = (n - j.twice) / 2;
        let m = j.twice as i32 + 1;
        (a * b).powi(e as i32) * (a.powi(m) - b.powi(m)) / (r * m as f64)
    }

    #[test]
    fn fixed_weight_matches_textbook_form() {
        for n in 1..=12 {
            for j in spins_of(n) {
                for r in [0.1, 0.5, 0.75, 0.99] {
                    let got = f_fixed(j, n, r).unwrap();
                    let want = f_textbook(j, n, r);
                    assert!((got - want).abs() <= 1e-13 * want, "n={n} j={j} r={r}");
                }
            }
        }
    }

    #[test]
    fn fixed_weight_special_points() {
        for n in 1..=10 {
            for j in spins_of(n) {
                let v = f_fixed(j, n, 0.0).unwrap();
                assert!((v - 0.5f64.powi(n as i32)).abs() < 1e-15);
            }
            let top = f_fixed(sp(n), n, 1.0).unwrap();
            assert!((top - 1.0 / (f64::from(n) + 1.0)).abs() < 1e-15);
            if n >= 2 {
                assert_eq!(f_fixed(sp(n - 2), n, 1.0).unwrap(), 0.0);
            }
        }
        assert!((f_fixed(sp(1), 1, 0.3).unwrap() - 0.5).abs() < 1e-15);
        assert!(f_fixed(sp(1), 1, 1.2).is_err());
        assert!(f_fixed(sp(2), 1, 0.5).is_err());
    }

    #[test]
    fn weights_are_continuous_at_endpoints() {
        for n in [3u32, 8] {
            for j in spins_of(n) {
                let at0 = f_fixed(j, n, 0.0).unwrap();
                let near0 = f_fixed(j, n, 1e-6).unwrap();
                assert!((at0 - near0).abs() <= 1e-5 * at0);
                let at1 = f_fixed(j, n, 1.0).unwrap();
                let near1 = f_fixed(j, n, 1.0 - 1e-6).unwrap();
                assert!((at1 - near1).abs() <= 1e-5 * at1.max(1e-300) + 1e-5);
            }
        }
    }

    #[test]
    fn unit_trace_for_both_priors() {
        for n in 1..=100u32 {
            for prior in [PurityPrior::Fixed(0.0), PurityPrior::Fixed(0.6), PurityPrior::Fixed(1.0), PurityPrior::HardSphere] {
                let total: f64 = spins_of(n)
                    .map(|j| (ln_f(j, n, prior) + ln_multiplicity_irrep(j, n)).exp() * j.dim() as f64)
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "n={n} {prior:?}: {total}");
            }
        }
    }

    #[test]
    fn hard_sphere_values() {
        assert!((f_hard_sphere(sp(1), 1).unwrap() - 0.5).abs() < 1e-15);
        let n = 7;
        for j in spins_of(n) {
            let nf = f64::from(n);
            let jf = j.value();
            let up = ln_f_hard_sphere(j.raise(), n + 1).exp() / f_hard_sphere(j, n).unwrap();
            assert!((ratio_r(j, n, Sign::Plus, PurityPrior::HardSphere) - up).abs() < 1e-14);
            assert!((up - (2.0 + nf / 2.0 + jf) / (nf + 4.0)).abs() < 1e-14);
            if let Some(jm) = j.lower() {
                let down = ln_f_hard_sphere(jm, n + 1).exp() / f_hard_sphere(j, n).unwrap();
                assert!((down - (1.0 + nf / 2.0 - jf) / (nf + 4.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fixed_ratios_match_weight_quotients() {
        for n in 1..=15u32 {
            for j in spins_of(n) {
                for r in [0.0, 0.2, 0.75, 0.5, 0.999] {
                    let base = ln_f_fixed(j, n, r);
                    let up = (ln_f_fixed(j.raise(), n + 1, r) - base).exp();
                    let got = ratio_r(j, n, Sign::Plus, PurityPrior::Fixed(r));
                    assert!((got - up).abs() < 1e-12 * up.max(1.0), "n={n} j={j} r={r}");
                    if let Some(jm) = j.lower() {
                        let down = (ln_f_fixed(jm, n + 1, r) - base).exp();
                        let got = ratio_r(j, n, Sign::Minus, PurityPrior::Fixed(r));
                        assert!((got - down).abs() < 1e-12 * down.max(1.0), "n={n} j={j} r={r}");
                    }
                }
            }
        }
        let n = 6;
        let pure = ratio_r(sp(n), n, Sign::Plus, PurityPrior::Fixed(1.0));
        assert!((pure - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn gap_vanishes_for_maximally_mixed() {
        for n in 2..=10u32 {
            for j in spins_of(n).filter(|j| j.twice > 0) {
                assert!(gap_g(j, n, PurityPrior::Fixed(0.0)).abs() < 1e-16);
            }
        }
        let direct = f_hard_sphere(sp(2), 2).unwrap() - f_hard_sphere(sp(0), 2).unwrap();
        assert!((gap_g(sp(1), 1, PurityPrior::HardSphere) - direct).abs() < 1e-15);
        let g = gap_g(sp(3), 3, PurityPrior::Fixed(0.6));
        let want = f_textbook(sp(4), 4, 0.6) - f_textbook(sp(2), 4, 0.6);
        assert!((g - want).abs() < 1e-14);
    }

    #[test]
    fn sector_weights() {
        let sc = PriorScenario::FixedPurities { r1: 0.0, r2: 0.0 };
        for n in 1..=8u32 {
            for s in spins_of(n) {
                for t in spins_of(n) {
                    let w = sector_log_weight(s, t, n, &sc).unwrap().value();
                    let want = 0.25f64.powi(n as i32)
                        * (ln_multiplicity_irrep(s, n) + ln_multiplicity_irrep(t, n)).exp();
                    assert!((w - want).abs() < 1e-12 * want);
                }
            }
        }
        let big = sector_log_weight(sp(200), sp(200), 200, &PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 })
            .unwrap();
        assert!(big.ln_magnitude.is_finite());
        let overlap = PriorScenario::FixedOverlap { theta: 1.0 };
        assert!(sector_log_weight(sp(1), sp(1), 1, &overlap).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(PriorScenario::FixedPurities { r1: 0.5, r2: 1.1 }.validate().is_err());
        assert!(PriorScenario::FixedOverlap { theta: 4.0 }.validate().is_err());
        assert!(PriorScenario::FixedOverlapDim { theta: 1.0, d: 1 }.validate().is_err());
        assert!(PriorScenario::HardSphere.validate().is_ok());
    }
}
