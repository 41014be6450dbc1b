//! Half-integer angular momentum: spin labels, Clebsch–Gordan and 6j
//! coefficients, irrep multiplicities and the `(s, t, q)` sector list.
//!
//! Spins are stored doubled so that half-integers stay exact. Phases follow
//! the Condon–Shortley convention.

use crate::logmath::{ln_factorial, NeumaierSum};
use crate::{Error, Result};
use serde::{Serialize, Serializer};
use std::fmt;

/// A spin `j ≥ 0` stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinLabel {
    pub twice: u32,
}

impl SpinLabel {
    pub const ZERO: SpinLabel = SpinLabel { twice: 0 };
    pub const HALF: SpinLabel = SpinLabel { twice: 1 };

    pub const fn from_twice(twice: u32) -> Self {
        SpinLabel { twice }
    }

    /// Parses a float that must be a non-negative multiple of ½.
    pub fn from_f64(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if twice.is_nan() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 || twice > u32::MAX as f64 {
            return Err(Error::InvalidSpin {
                label: j.to_string(),
                reason: "must be a non-negative multiple of 1/2".into(),
            });
        }
        Ok(SpinLabel {
            twice: twice.round() as u32,
        })
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice.is_multiple_of(2)
    }

    /// `j + ½`.
    pub fn raise(self) -> Self {
        SpinLabel {
            twice: self.twice + 1,
        }
    }

    /// `j − ½`, or `None` when `j = 0`.
    pub fn lower(self) -> Option<Self> {
        self.twice.checked_sub(1).map(SpinLabel::from_twice)
    }

    /// Dimension `2j + 1` of the irrep.
    pub fn dim(self) -> u64 {
        u64::from(self.twice) + 1
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Serialized as the decimal value (`0.5`, `1`, `1.5`, ...).
impl Serialize for SpinLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

/// Block structure of `Θ` in a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CaseTag {
    /// `q = s + t + ½`: only `|s+½, t⟩` and `|s, t+½⟩` exist.
    A,
    /// `q = t − s − ½`, `t > s`.
    B,
    /// `q = s − t − ½`, `s > t`.
    C,
    /// Both coupled vectors exist on each side: a `2×2` block.
    D,
}

impl CaseTag {
    pub fn is_2x2(self) -> bool {
        self == CaseTag::D
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            CaseTag::A => "A",
            CaseTag::B => "B",
            CaseTag::C => "C",
            CaseTag::D => "D",
        };
        f.write_str(c)
    }
}

/// Sector label `(s, t, q)`. `s` is the spin of the A register, `t` of the B
/// register, `q` the total spin of all `2n + 1` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SectorKey {
    pub s: SpinLabel,
    pub t: SpinLabel,
    pub q: SpinLabel,
    pub case_tag: CaseTag,
}

impl SectorKey {
    pub fn new(s: SpinLabel, t: SpinLabel, q: SpinLabel) -> Result<Self> {
        Ok(SectorKey {
            s,
            t,
            q,
            case_tag: classify_sector(s, t, q)?,
        })
    }

    /// Checks that `s` and `t` are admissible spins of `n` qubits.
    pub fn validate_for(&self, n: u32) -> Result<()> {
        for (name, j) in [("s", self.s), ("t", self.t)] {
            if j.twice > n || !(n - j.twice).is_multiple_of(2) {
                return Err(Error::InvalidSpin {
                    label: format!("{name} = {j}"),
                    reason: format!("not a spin of {n} qubits"),
                });
            }
        }
        Ok(())
    }
}

/// Four recoupling coefficients `C_{±±}` of a sector. Row sign refers to
/// `s ± ½`, column sign to `t ± ½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecouplingRow {
    pub c_pp: f64,
    pub c_pm: f64,
    pub c_mp: f64,
    pub c_mm: f64,
}

/// Sign choice `±½` used in recoupling labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn shift(self, j: SpinLabel) -> Option<SpinLabel> {
        match self {
            Sign::Plus => Some(j.raise()),
            Sign::Minus => j.lower(),
        }
    }
}

/// `#(j, n)`: number of spin-`j` irreps in `n` qubits.
///
/// Zero when `j` is not a spin of `n` qubits, `None` when the value does not
/// fit a `u128`.
pub fn multiplicity_irrep(j: SpinLabel, n: u32) -> Option<u128> {
    if j.twice > n || !(n - j.twice).is_multiple_of(2) {
        return Some(0);
    }
    let k = u64::from((n - j.twice) / 2);
    let n = u64::from(n);
    let a = binomial_u128(n, k)?;
    let b = if k == 0 { 0 } else { binomial_u128(n, k - 1)? };
    Some(a - b)
}

/// `ln #(j, n)`; `-inf` when the multiplicity is zero.
pub fn ln_multiplicity_irrep(j: SpinLabel, n: u32) -> f64 {
    if j.twice > n || !(n - j.twice).is_multiple_of(2) {
        return f64::NEG_INFINITY;
    }
    // n!(2j+1) / ((n/2−j)! (n/2+j+1)!)
    let lo = u64::from((n - j.twice) / 2);
    let hi = u64::from((n + j.twice) / 2) + 1;
    ln_factorial(u64::from(n)) + (j.dim() as f64).ln() - ln_factorial(lo) - ln_factorial(hi)
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc · (n − i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `M = (2q+1) #(s,n) #(t,n)`, the number of times the sector's block
/// appears in `α − β`.
pub fn sector_multiplicity(key: &SectorKey, n: u32) -> Option<u128> {
    let a = multiplicity_irrep(key.s, n)?;
    let b = multiplicity_irrep(key.t, n)?;
    a.checked_mul(b)?.checked_mul(u128::from(key.q.dim()))
}

/// `ln M` for the sector.
pub fn ln_sector_multiplicity(key: &SectorKey, n: u32) -> f64 {
    ln_multiplicity_irrep(key.s, n) + ln_multiplicity_irrep(key.t, n) + (key.q.dim() as f64).ln()
}

fn triangle(a: u32, b: u32, c: u32) -> bool {
    (a + b + c).is_multiple_of(2) && c <= a + b && a <= b + c && b <= a + c
}

/// `ln Δ(abc)` for doubled arguments satisfying the triangle rule.
fn ln_delta(a: u32, b: u32, c: u32) -> f64 {
    let (a, b, c) = (u64::from(a), u64::from(b), u64::from(c));
    0.5 * (ln_factorial((a + b - c) / 2) + ln_factorial((a + c - b) / 2)
        + ln_factorial((b + c - a) / 2)
        - ln_factorial((a + b + c) / 2 + 1))
}

/// Sums `Σ sign_k · exp(ln_k)` accurately, returning the signed total.
fn signed_log_sum(terms: &[(f64, bool)]) -> f64 {
    let Some(max) = terms.iter().map(|t| t.0).reduce(f64::max) else {
        return 0.0;
    };
    let mut acc = NeumaierSum::default();
    for &(ln_mag, negative) in terms {
        let v = (ln_mag - max).exp();
        acc.add(if negative { -v } else { v });
    }
    acc.value() * max.exp()
}

/// Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩`.
///
/// Spins are [`SpinLabel`]s and projections are doubled signed integers.
/// Returns 0 whenever a selection rule fails.
pub fn clebsch_gordan(j1: SpinLabel, m1: i32, j2: SpinLabel, m2: i32, jj: SpinLabel, mm: i32) -> f64 {
    let (a, b, c) = (j1.twice as i64, j2.twice as i64, jj.twice as i64);
    let (m1, m2, mm) = (i64::from(m1), i64::from(m2), i64::from(mm));
    if m1 + m2 != mm || m1.abs() > a || m2.abs() > b || mm.abs() > c {
        return 0.0;
    }
    if (a + m1) % 2 != 0 || (b + m2) % 2 != 0 || (c + mm) % 2 != 0 {
        return 0.0;
    }
    if !triangle(j1.twice, j2.twice, jj.twice) {
        return 0.0;
    }
    let h = |x: i64| -> u64 {
        debug_assert!(x >= 0 && x % 2 == 0);
        (x / 2) as u64
    };
    let prefactor = 0.5
        * (((c + 1) as f64).ln() + ln_factorial(h(c + a - b)) + ln_factorial(h(c - a + b))
            + ln_factorial(h(a + b - c))
            - ln_factorial(h(a + b + c) + 1)
            + ln_factorial(h(c + mm))
            + ln_factorial(h(c - mm))
            + ln_factorial(h(a - m1))
            + ln_factorial(h(a + m1))
            + ln_factorial(h(b - m2))
            + ln_factorial(h(b + m2)));

    // Racah sum over k; all doubled arguments below are non-negative and even.
    let kmin = 0.max(b - c - m1).max(a - c + m2);
    let kmax = (a + b - c).min(a - m1).min(b + m2);
    let mut terms = Vec::new();
    let mut k = kmin;
    while k <= kmax {
        let ln_den = ln_factorial(h(k))
            + ln_factorial(h(a + b - c - k))
            + ln_factorial(h(a - m1 - k))
            + ln_factorial(h(b + m2 - k))
            + ln_factorial(h(c - b + m1 + k))
            + ln_factorial(h(c - a - m2 + k));
        terms.push((prefactor - ln_den, h(k) % 2 == 1));
        k += 2;
    }
    signed_log_sum(&terms)
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}` by the Racah formula.
///
/// Returns 0 when any of the four triads fails the triangle rule.
pub fn wigner6j(
    j1: SpinLabel,
    j2: SpinLabel,
    j3: SpinLabel,
    j4: SpinLabel,
    j5: SpinLabel,
    j6: SpinLabel,
) -> f64 {
    let [a, b, c, d, e, f] = [j1, j2, j3, j4, j5, j6].map(|j| j.twice);
    let triads = [(a, b, c), (a, e, f), (d, b, f), (d, e, c)];
    if !triads.iter().all(|&(x, y, z)| triangle(x, y, z)) {
        return 0.0;
    }
    let ln_pref: f64 = triads.iter().map(|&(x, y, z)| ln_delta(x, y, z)).sum();
    let alpha = triads.map(|(x, y, z)| u64::from(x + y + z) / 2);
    let beta = [
        u64::from(a + b + d + e) / 2,
        u64::from(b + c + e + f) / 2,
        u64::from(c + a + f + d) / 2,
    ];
    let tmin = *alpha.iter().max().unwrap();
    let tmax = *beta.iter().min().unwrap();
    let mut terms = Vec::new();
    for t in tmin..=tmax {
        let mut ln_term = ln_pref + ln_factorial(t + 1);
        for &x in &alpha {
            ln_term -= ln_factorial(t - x);
        }
        for &y in &beta {
            ln_term -= ln_factorial(y - t);
        }
        terms.push((ln_term, t % 2 == 1));
    }
    signed_log_sum(&terms)
}

/// Recoupling coefficient `C^{(s,t,q)}_{ab}` between the basis where the
/// test qubit is coupled to A (spin `s' = s ± ½`) and the one where it is
/// coupled to B (spin `t' = t ± ½`).
///
/// `C_{ab} = (−1)^{a½ + b½} √((2s'+1)(2t'+1)) {t' t ½; s' s q}`, and 0 when
/// either coupled vector does not exist.
pub fn recoupling_c(s: SpinLabel, t: SpinLabel, q: SpinLabel, sign_a: Sign, sign_b: Sign) -> f64 {
    let (Some(sp), Some(tp)) = (sign_a.shift(s), sign_b.shift(t)) else {
        return 0.0;
    };
    if !triangle(sp.twice, t.twice, q.twice) || !triangle(s.twice, tp.twice, q.twice) {
        return 0.0;
    }
    let phase = if sign_a == sign_b { -1.0 } else { 1.0 };
    let six = wigner6j(tp, t, SpinLabel::HALF, sp, s, q);
    phase * ((sp.dim() * tp.dim()) as f64).sqrt() * six
}

/// All four `C_{±±}` of a sector.
pub fn recoupling_row(s: SpinLabel, t: SpinLabel, q: SpinLabel) -> RecouplingRow {
    RecouplingRow {
        c_pp: recoupling_c(s, t, q, Sign::Plus, Sign::Plus),
        c_pm: recoupling_c(s, t, q, Sign::Plus, Sign::Minus),
        c_mp: recoupling_c(s, t, q, Sign::Minus, Sign::Plus),
        c_mm: recoupling_c(s, t, q, Sign::Minus, Sign::Minus),
    }
}

/// Case tag of `(s, t, q)`; errors if `q` is not in
/// `||t − s| − ½| ..= s + t + ½` with the right parity.
pub fn classify_sector(s: SpinLabel, t: SpinLabel, q: SpinLabel) -> Result<CaseTag> {
    let (s2, t2, q2) = (s.twice as i64, t.twice as i64, q.twice as i64);
    let lo = ((t2 - s2).abs() - 1).abs();
    let hi = s2 + t2 + 1;
    if q2 < lo || q2 > hi || (q2 - hi) % 2 != 0 {
        return Err(Error::InvalidSpin {
            label: format!("q = {q}"),
            reason: format!("not reachable from s = {s}, t = {t} and a spin 1/2"),
        });
    }
    Ok(if q2 == hi {
        CaseTag::A
    } else if t2 > s2 && q2 == t2 - s2 - 1 {
        CaseTag::B
    } else if s2 > t2 && q2 == s2 - t2 - 1 {
        CaseTag::C
    } else {
        CaseTag::D
    })
}

/// Spins of `n` qubits in increasing order.
pub fn spins_of(n: u32) -> impl Iterator<Item = SpinLabel> + Clone {
    (n % 2..=n).step_by(2).map(SpinLabel::from_twice)
}

/// Allowed `q` for fixed `(s, t)` in increasing order.
pub fn q_range(s: SpinLabel, t: SpinLabel) -> impl Iterator<Item = SpinLabel> + Clone {
    let lo = ((t.twice as i64 - s.twice as i64).abs() - 1).unsigned_abs() as u32;
    let hi = s.twice + t.twice + 1;
    (lo..=hi).step_by(2).map(SpinLabel::from_twice)
}

/// Every sector of the `2n + 1`-qubit space, ordered by `(s, t, q)`.
pub fn enumerate_sectors(n: u32) -> Vec<SectorKey> {
    let mut out = Vec::new();
    for s in spins_of(n) {
        for t in spins_of(n) {
            for q in q_range(s, t) {
                out.push(SectorKey::new(s, t, q).expect("q_range yields valid labels"));
            }
        }
    }
    out
}
