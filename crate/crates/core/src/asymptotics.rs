//! Large-`n` expansions, average Helstrom baselines and the central moments
//! of the two distributions behind the fixed-overlap expansion.

use crate::angular::SpinLabel;
use crate::logmath::{ln_binomial, ln_gamma_half, NeumaierSum};
use crate::priors::PriorScenario;
use crate::spectrum::ln_overlap_cg_squared;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

/// `leading + order_1_over_n / n + order_1_over_n2 / n²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub n: u32,
    pub leading: f64,
    /// Coefficient of `1/n`.
    pub order_1_over_n: f64,
    /// Coefficient of `1/n²`, when the expansion has one.
    pub order_1_over_n2: Option<f64>,
    pub valid_region_note: String,
    /// False when `n` is outside the region where the expansion is expected to hold.
    pub reliable: bool,
}

impl AsymptoticEstimate {
    pub fn value(&self) -> f64 {
        let n = f64::from(self.n);
        self.leading + self.order_1_over_n / n + self.order_1_over_n2.unwrap_or(0.0) / (n * n)
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Average Helstrom error of two fixed-purity states with independent
/// uniformly random directions: `½ − ((r1+r2)³ − |r1−r2|³) / (24 r1 r2)`.
pub fn helstrom_fixed_purities(r1: f64, r2: f64) -> f64 {
    // With a = max, b = min the fraction reduces to (3a² + b²) / (12a), which
    // has the limit 0 at a = 0 and needs no special case at b = 0.
    let (a, b) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    if a == 0.0 {
        return 0.5;
    }
    0.5 - (3.0 * a * a + b * b) / (12.0 * a)
}

/// Pure-state Helstrom error at fixed `θ`: `½(1 − |cos(θ/2)|)`.
pub fn helstrom_overlap(theta: f64) -> f64 {
    0.5 * (1.0 - (0.5 * theta).cos().abs())
}

/// Helstrom error of two Haar-random pure qudits averaged over their overlap:
/// `½ − (d−1)/(2d−1)`.
pub fn helstrom_overlap_averaged(d: u32) -> f64 {
    let d = f64::from(d);
    0.5 - (d - 1.0) / (2.0 * d - 1.0)
}

/// Hard-sphere average of the fixed-purity Helstrom error as an exact rational.
///
/// For `b ≤ a` the integrand is `½ − a/4 − b²/(12a)` with weight `9a²b²`; the
/// region `b > a` contributes the same by symmetry.
pub fn helstrom_hard_sphere_exact() -> Ratio<i64> {
    // (coefficient, power of a, power of b) of 9a²b²·(½ − a/4 − b²/(12a))
    let terms = [
        (Ratio::new(9, 2), 2u32, 2u32),
        (Ratio::new(-9, 4), 3, 2),
        (Ratio::new(-3, 4), 1, 4),
    ];
    let mut total = Ratio::from_integer(0);
    for (c, pa, pb) in terms {
        // ∫_0^a b^pb db = a^{pb+1}/(pb+1), then ∫_0^1 a^{pa+pb+1} da
        let inner = c / Ratio::from_integer(i64::from(pb) + 1);
        total += inner / Ratio::from_integer(i64::from(pa + pb + 1) + 1);
    }
    total * Ratio::from_integer(2)
}

/// The baseline `lim_{n→∞} P_err` of each scenario.
///
/// For [`PriorScenario::FixedOverlapDim`] this is the fixed-`θ` value, which
/// does not depend on `d`; the overlap-averaged baseline is
/// [`helstrom_overlap_averaged`].
pub fn helstrom_avg(scenario: &PriorScenario) -> f64 {
    match *scenario {
        PriorScenario::FixedPurities { r1, r2 } => helstrom_fixed_purities(r1, r2),
        PriorScenario::HardSphere => 17.0 / 70.0,
        PriorScenario::FixedOverlap { theta } | PriorScenario::FixedOverlapDim { theta, .. } => {
            helstrom_overlap(theta)
        }
    }
}

/// Two-term expansion for fixed purities.
pub fn p_asym_fixed_purity(n: u32, r1: f64, r2: f64) -> Result<AsymptoticEstimate> {
    check_n(n)?;
    for r in [r1, r2] {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "purity r = {r}: the expansion needs 0 < r <= 1"
            )));
        }
    }
    let sum = r1 + r2;
    let diff = (r1 - r2).abs();
    let p = r1 * r2;
    let c1 = 5.0 * (sum.powi(3) + diff.powi(3)) / (24.0 * p * p)
        - (sum.powi(5) - diff.powi(5)) / (24.0 * p * p * p);
    Ok(AsymptoticEstimate {
        n,
        leading: helstrom_fixed_purities(r1, r2),
        order_1_over_n: c1,
        order_1_over_n2: None,
        valid_region_note: "n >> 1/min(r1, r2)".into(),
        reliable: f64::from(n) * r1.min(r2) >= 10.0,
    })
}

/// `17/70 + 18/(35n)`.
pub fn p_asym_hard_sphere(n: u32) -> Result<AsymptoticEstimate> {
    check_n(n)?;
    Ok(AsymptoticEstimate {
        n,
        leading: 17.0 / 70.0,
        order_1_over_n: 18.0 / 35.0,
        order_1_over_n2: None,
        valid_region_note: "n >> 1".into(),
        reliable: n >= 10,
    })
}

/// Three-term expansion at fixed overlap. Singular at `θ = π`.
pub fn p_asym_overlap(n: u32, theta: f64) -> Result<AsymptoticEstimate> {
    check_n(n)?;
    PriorScenario::FixedOverlap { theta }.validate()?;
    if theta >= PI {
        return Err(Error::InvalidParameter(
            "the expansion is singular for coincident templates (theta = pi)".into(),
        ));
    }
    let c = theta.cos();
    let one_plus = 1.0 + c;
    let c1 = (3.0 + c) / (8.0 * SQRT_2 * one_plus.sqrt());
    let c2 = (1.0 - 60.0 * c - 5.0 * (2.0 * theta).cos()) / (128.0 * SQRT_2 * one_plus.powf(1.5));
    let reliable = f64::from(n) * (PI - theta) >= 10.0;
    Ok(AsymptoticEstimate {
        n,
        leading: helstrom_overlap(theta),
        order_1_over_n: c1,
        order_1_over_n2: Some(c2),
        valid_region_note: if reliable {
            "n (pi - theta) >> 1".into()
        } else {
            "warning: n (pi - theta) < 10, the expansion is not reliable near coincident templates"
                .into()
        },
        reliable,
    })
}

/// Small-angle form `θ²/16 + 1/(4n) − (1 − θ²/4)/(8n²)`.
pub fn p_asym_overlap_small_angle(n: u32, theta: f64) -> Result<AsymptoticEstimate> {
    check_n(n)?;
    PriorScenario::FixedOverlap { theta }.validate()?;
    Ok(AsymptoticEstimate {
        n,
        leading: theta * theta / 16.0,
        order_1_over_n: 0.25,
        order_1_over_n2: Some(-(1.0 - theta * theta / 4.0) / 8.0),
        valid_region_note: "theta << 1 and n >> 1".into(),
        reliable: theta < 0.3 && n >= 10,
    })
}

/// Same as [`p_asym_overlap`]; the qudit dimension does not enter.
pub fn p_asym_overlap_dim(n: u32, theta: f64, d: u32) -> Result<AsymptoticEstimate> {
    PriorScenario::FixedOverlapDim { theta, d }.validate()?;
    p_asym_overlap(n, theta)
}

/// Expansion for Haar-random pure qudits averaged over their overlap.
pub fn p_asym_dimension_avg(n: u32, d: u32) -> Result<AsymptoticEstimate> {
    check_n(n)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d = {d} must be at least 2")));
    }
    let df = f64::from(d);
    Ok(AsymptoticEstimate {
        n,
        leading: helstrom_overlap_averaged(d),
        order_1_over_n: (df - 1.0).powi(2) / (3.0 + 4.0 * df * (df - 2.0)),
        order_1_over_n2: None,
        valid_region_note: "n >> 1; first order only".into(),
        reliable: n >= 10,
    })
}

/// Expansion value for a scenario, when one exists.
pub fn p_asymptotic(n: u32, scenario: &PriorScenario) -> Option<f64> {
    let estimate = match *scenario {
        PriorScenario::FixedPurities { r1, r2 } => p_asym_fixed_purity(n, r1, r2),
        PriorScenario::HardSphere => p_asym_hard_sphere(n),
        PriorScenario::FixedOverlap { theta } => p_asym_overlap(n, theta),
        PriorScenario::FixedOverlapDim { theta, d } => p_asym_overlap_dim(n, theta, d),
    };
    estimate.ok().map(|e| e.value())
}

/// Which distribution to take moments of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MomentDistribution {
    /// `x = 2h/n` with `n/2 + h ~ Binomial(n, (1+r)/2)`.
    Binomial { r: f64 },
    /// Total spin `q` with pmf `(C^{q, k+½}_{(n+1)/2,(n+1)/2; n/2, h})²`, `k = n/2 + h`.
    Spin { k: u32 },
}

/// Mean and second to fourth central moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

fn check_distribution(which: MomentDistribution, n: u32) -> Result<()> {
    check_n(n)?;
    match which {
        MomentDistribution::Binomial { r } if !(-1.0..=1.0).contains(&r) => Err(
            Error::InvalidParameter(format!("r = {r} outside [-1, 1]")),
        ),
        MomentDistribution::Spin { k } if k > n => Err(Error::InvalidParameter(format!(
            "k = n/2 + h = {k} exceeds n = {n}"
        ))),
        _ => Ok(()),
    }
}

/// `K = Γ(3/2 + k) Γ(2 + n) / (Γ(1 + k) Γ(3/2 + n))` with `k = n/2 + h`.
fn gamma_ratio_k(n: u32, k: u32) -> f64 {
    let (n, k) = (u64::from(n), u64::from(k));
    (ln_gamma_half(2 * k + 3) + ln_gamma_half(2 * n + 4)
        - ln_gamma_half(2 * k + 2)
        - ln_gamma_half(2 * n + 3))
    .exp()
}

/// Closed-form moments.
///
/// The third moments here differ from a commonly quoted form; see
/// [`moments_alternative_form`] for that version.
pub fn moments_closed_form(which: MomentDistribution, n: u32) -> Result<Moments> {
    check_distribution(which, n)?;
    let nf = f64::from(n);
    Ok(match which {
        MomentDistribution::Binomial { r } => {
            let v = 1.0 - r * r;
            Moments {
                mu1: r,
                mu2: v / nf,
                mu3: -2.0 * r * v / (nf * nf),
                mu4: v * (-2.0 + 6.0 * r * r + 3.0 * nf * v) / nf.powi(3),
            }
        }
        MomentDistribution::Spin { k } => spin_moments_exact(n, k),
    })
}

fn factorial_big(m: u64) -> BigInt {
    (2..=m).fold(BigInt::one(), |acc, x| acc * x)
}

fn pow4_big(e: u64) -> BigInt {
    BigInt::one() << (2 * e)
}

fn ratio_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Spin-distribution moments in exact rational arithmetic.
///
/// With half-integer arguments every `√π` cancels, so `K` and the gamma term
/// of `μ4` are rational. Evaluating in floating point instead loses most
/// digits of `μ3` and `μ4`, which are small differences of terms of size `K³`
/// and `K⁴`.
fn spin_moments_exact(n: u32, k: u32) -> Moments {
    let (n, k) = (u64::from(n), u64::from(k));
    let int = |x: u64| BigRational::from_integer(BigInt::from(x));
    let nr = int(n);
    let two = int(2);
    // h = k − n/2
    let h = int(k) - &nr / &two;
    let fact = |m: u64| BigRational::from_integer(factorial_big(m));
    let kk = fact(2 * k + 2) * fact(n + 1) * fact(n + 1) * BigRational::from_integer(pow4_big(n - k))
        / (fact(k + 1) * fact(k) * fact(2 * n + 2));

    let c = |x: i64| BigRational::from_integer(BigInt::from(x));
    let poly3 = c(8) + &two * &h * (c(5) + c(4) * &nr) + &nr * (c(11) + c(4) * &nr);
    let poly4 = (c(1) + &nr)
        * (c(4) + c(10) * &nr + c(4) * &h * &h * &nr + c(6) * &nr * &nr + &nr * &nr * &nr
            + c(4) * &h * (c(1) + c(3) * &nr + &nr * &nr))
        / c(4);
    let poly_g = c(2) + &two * &nr + &nr * &nr + &two * &h * (c(2) + &nr);
    let gamma_term = poly_g
        * fact(2 * k + 1)
        * fact(2 * k + 1)
        * BigRational::from_integer(pow4_big(2 * n + 1 - 2 * k))
        * fact(n + 1).pow(4)
        / (fact(k).pow(4) * fact(2 * n + 2).pow(2));

    let k2 = &kk * &kk;
    let mu1 = &kk - c(1) / &two;
    let mu2 = (c(1) + &nr) * (c(2) + &two * &h + &nr) / &two - &k2;
    let mu3 = -(&poly3 * &kk) / c(4) + &two * &k2 * &kk;
    let mu4 = poly4 - c(3) * &k2 * &k2 + gamma_term;
    Moments {
        mu1: ratio_to_f64(&mu1),
        mu2: ratio_to_f64(&mu2),
        mu3: ratio_to_f64(&mu3),
        mu4: ratio_to_f64(&mu4),
    }
}

/// Alternative closed forms that disagree with direct summation: binomial `μ3 = 2r(1−r²)/n`; spin
/// `μ1 = −½ + Γ(½+k)Γ(2+n)/(Γ(1+k)Γ(3/2+n))` and
/// `μ3 = −(8 + 2h(5+4n) + n(11+4n)) K + 2K³`. `μ2` and `μ4` coincide with
/// [`moments_closed_form`].
pub fn moments_alternative_form(which: MomentDistribution, n: u32) -> Result<Moments> {
    let mut m = moments_closed_form(which, n)?;
    let nf = f64::from(n);
    match which {
        MomentDistribution::Binomial { r } => {
            m.mu3 = 2.0 * r * (1.0 - r * r) / nf;
        }
        MomentDistribution::Spin { k } => {
            let h = f64::from(k) - nf / 2.0;
            let (nu, ku) = (u64::from(n), u64::from(k));
            let k_half = (ln_gamma_half(2 * ku + 1) + ln_gamma_half(2 * nu + 4)
                - ln_gamma_half(2 * ku + 2)
                - ln_gamma_half(2 * nu + 3))
            .exp();
            let kk = gamma_ratio_k(n, k);
            m.mu1 = k_half - 0.5;
            m.mu3 = -(8.0 + 2.0 * h * (5.0 + 4.0 * nf) + nf * (11.0 + 4.0 * nf)) * kk + 2.0 * kk.powi(3);
        }
    }
    Ok(m)
}

fn moments_from_pmf(points: &[(f64, f64)]) -> Moments {
    let mut mean = NeumaierSum::default();
    mean.extend(points.iter().map(|&(x, p)| x * p));
    let mu1 = mean.value();
    let central = |power: i32| {
        let mut acc = NeumaierSum::default();
        acc.extend(points.iter().map(|&(x, p)| (x - mu1).powi(power) * p));
        acc.value()
    };
    Moments {
        mu1,
        mu2: central(2),
        mu3: central(3),
        mu4: central(4),
    }
}

/// Moments by direct summation over the pmf.
pub fn numeric_moments(which: MomentDistribution, n: u32) -> Result<Moments> {
    check_distribution(which, n)?;
    let nf = f64::from(n);
    let points: Vec<(f64, f64)> = match which {
        MomentDistribution::Binomial { r } => {
            let p = 0.5 * (1.0 + r);
            (0..=n)
                .map(|k| {
                    let x = (2.0 * f64::from(k) - nf) / nf;
                    let ln_p = |count: u32, v: f64| {
                        if count == 0 {
                            0.0
                        } else {
                            f64::from(count) * v.ln()
                        }
                    };
                    let ln = ln_binomial(u64::from(n), u64::from(k)) + ln_p(k, p) + ln_p(n - k, 1.0 - p);
                    (x, ln.exp())
                })
                .collect()
        }
        MomentDistribution::Spin { k } => (2 * k + 1..=2 * n + 1)
            .step_by(2)
            .map(|q2| {
                let q = SpinLabel::from_twice(q2);
                (q.value(), ln_overlap_cg_squared(q, n, k).exp())
            })
            .collect(),
    };
    Ok(moments_from_pmf(&points))
}
