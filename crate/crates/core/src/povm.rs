//! The optimal measurement: eigenvector amplitudes of the `2×2` blocks, the
//! explicit three-qubit basis change for `n = 1`, and a density-matrix
//! simulator of that measurement under channel-level noise.
//!
//! Three-qubit wires of the `n = 1` circuit: X (test qubit) is bit 0, A is
//! bit 1, B is bit 2, and `|↑⟩ = |0⟩`.

use crate::angular::{SectorKey, SpinLabel};
use crate::linalg::CMatrix;
use crate::oracle::{haar_su2, rotated_up, twirl, DenseOperator};
use crate::priors::PriorScenario;
use crate::spectrum::{eigen_2x2, overlap_block, theta_block, ThetaBlock};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// How a computational-basis outcome is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    /// The test qubit was drawn like the A copies.
    First,
    /// The test qubit was drawn like the B copies.
    Second,
    /// Decide by a fair coin.
    Coin,
}

/// Label of each of the eight outcomes, by basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PovmOutcomeMap {
    pub labels: [OutcomeLabel; 8],
}

impl PovmOutcomeMap {
    pub fn count(&self, label: OutcomeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Unnormalized eigenvector `a_plus_component |s+½,t;q⟩ + b_branch |s−½,t;q⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigvecAmplitudes {
    pub a_plus_component: f64,
    pub b_branch: f64,
}

impl EigvecAmplitudes {
    pub fn normalized(&self) -> (f64, f64) {
        let norm = self.a_plus_component.hypot(self.b_branch);
        (self.a_plus_component / norm, self.b_branch / norm)
    }
}

/// Block of a case-D sector in any scenario.
fn sector_block(sector: &SectorKey, n: u32, scenario: &PriorScenario) -> Result<ThetaBlock> {
    match scenario.overlap_angle() {
        None => theta_block(sector, n, scenario),
        Some(theta) => {
            let top = SpinLabel::from_twice(n);
            if sector.s != top || sector.t != top {
                return Err(Error::InvalidParameter(format!(
                    "in {scenario} only the s = t = n/2 sectors carry a block"
                )));
            }
            overlap_block(sector.q, n, theta)
        }
    }
}

/// Eigenvectors `(A, B(±))` of a case-D block with `A = Θ_{+−}` and
/// `B(±) = (Θ_{−−} − Θ_{++})/2 ± √(((Θ_{−−} − Θ_{++})/2)² + Θ_{+−}²)`.
///
/// When `Θ_{+−}` vanishes the block is diagonal and basis vectors are
/// returned instead.
pub fn eigenvector_amplitudes(
    sector: &SectorKey,
    n: u32,
    scenario: &PriorScenario,
) -> Result<(EigvecAmplitudes, EigvecAmplitudes)> {
    if !sector.case_tag.is_2x2() {
        return Err(Error::InvalidParameter(format!(
            "sector ({}, {}, {}) is case {}: its eigenvectors are basis vectors",
            sector.s, sector.t, sector.q, sector.case_tag
        )));
    }
    let b = sector_block(sector, n, scenario)?;
    let scale_free = b.lam_pp.abs().max(b.lam_mm.abs()).max(b.lam_pm.abs());
    if b.lam_pm.abs() <= 1e-15 * scale_free || scale_free == 0.0 {
        let basis = |a, bb| EigvecAmplitudes {
            a_plus_component: a,
            b_branch: bb,
        };
        return Ok(if b.lam_pp >= b.lam_mm {
            (basis(1.0, 0.0), basis(0.0, 1.0))
        } else {
            (basis(0.0, 1.0), basis(1.0, 0.0))
        });
    }
    let half = 0.5 * (b.lam_mm - b.lam_pp);
    let root = half.hypot(b.lam_pm);
    Ok((
        EigvecAmplitudes {
            a_plus_component: b.lam_pm,
            b_branch: half + root,
        },
        EigvecAmplitudes {
            a_plus_component: b.lam_pm,
            b_branch: half - root,
        },
    ))
}

/// Eigenvalues matching [`eigenvector_amplitudes`], `(plus, minus)`.
pub fn eigenvector_eigenvalues(sector: &SectorKey, n: u32, scenario: &PriorScenario) -> Result<(f64, f64)> {
    let b = sector_block(sector, n, scenario)?;
    Ok(eigen_2x2(b.lam_pp, b.lam_mm, b.lam_pm))
}

/// The `8×8` real orthogonal basis change of the `n = 1` machine (row `k` is
/// the eigenvector sent to basis state `k`) and its outcome labels.
pub fn n1_change_of_basis() -> ([[f64; 8]; 8], PovmOutcomeMap) {
    let s3 = 3f64.sqrt();
    let a = 1.0 / s3;
    let m = (-3.0 - s3) / 6.0;
    let p = (3.0 - s3) / 6.0;
    let u = [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, a, a, 0.0, a, 0.0, 0.0, 0.0],
        [0.0, a, m, 0.0, p, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, m, 0.0, 1.0 / (3.0 + s3), a, 0.0],
        [0.0, a, p, 0.0, m, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, p, 0.0, 1.0 / (-3.0 + s3), a, 0.0],
        [0.0, 0.0, 0.0, a, 0.0, a, a, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    use OutcomeLabel::{Coin as C, First as A, Second as B};
    (u, PovmOutcomeMap {
        labels: [C, C, B, A, A, B, C, C],
    })
}

/// Bit positions of the three wires.
pub const WIRE_X: usize = 0;
pub const WIRE_A: usize = 1;
pub const WIRE_B: usize = 2;

/// Noise family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Depolarizing,
    Thermal,
}

/// Layered noise applied after the ideal unitary. Times are in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Depolarizing probability per layer.
    pub p_depol: f64,
    pub t1: f64,
    pub t2: f64,
    pub duration_1q: f64,
    pub duration_2q: f64,
    pub layer_count: u32,
}

/// Circuit depth used by default.
pub const DEFAULT_LAYERS: u32 = 43;

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            p_depol: 0.0,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            duration_1q: 0.2,
            duration_2q: 0.8,
            layer_count: DEFAULT_LAYERS,
        }
    }

    pub fn depolarizing(p_depol: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::Depolarizing,
            p_depol,
            ..Self::none()
        }
    }

    pub fn thermal(t1: f64, t2: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::Thermal,
            t1,
            t2,
            ..Self::none()
        }
    }

    pub fn with_layers(mut self, layer_count: u32) -> Self {
        self.layer_count = layer_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_count == 0 {
            return Err(Error::InvalidParameter("layer_count must be positive".into()));
        }
        match self.kind {
            NoiseKind::None => Ok(()),
            NoiseKind::Depolarizing => {
                if (0.0..=1.0).contains(&self.p_depol) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("p_depol = {} outside [0, 1]", self.p_depol)))
                }
            }
            NoiseKind::Thermal => {
                if !(self.t1 > 0.0 && self.t2 > 0.0) {
                    return Err(Error::InvalidParameter("t1 and t2 must be positive".into()));
                }
                if self.t2 > 2.0 * self.t1 {
                    return Err(Error::InvalidParameter(format!(
                        "t2 = {} exceeds 2 t1 = {}",
                        self.t2,
                        2.0 * self.t1
                    )));
                }
                if !(self.duration_1q >= 0.0 && self.duration_2q >= 0.0) {
                    return Err(Error::InvalidParameter("durations must be non-negative".into()));
                }
                Ok(())
            }
        }
    }

    /// Duration of one layer: the slower of the two gate kinds.
    pub fn layer_duration(&self) -> f64 {
        self.duration_1q.max(self.duration_2q)
    }

    /// Total depolarizing probability after all layers.
    pub fn effective_depolarizing(&self) -> f64 {
        1.0 - (1.0 - self.p_depol).powi(self.layer_count as i32)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-qubit Kraus operators of one thermal layer: amplitude damping with
/// `γ = 1 − e^{−τ/T1}` followed by pure dephasing with
/// `ε = e^{−τ/Tφ}`, `1/Tφ = 1/T2 − 1/(2T1)`.
pub fn thermal_kraus(noise: &NoiseModel) -> Vec<CMatrix> {
    let tau = noise.layer_duration();
    let gamma = -(-tau / noise.t1).exp_m1();
    let rate_phi = (1.0 / noise.t2 - 0.5 / noise.t1).max(0.0);
    let eps = (-tau * rate_phi).exp();
    let damping = [
        CMatrix::from_real(2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]),
        CMatrix::from_real(2, &[0.0, gamma.sqrt(), 0.0, 0.0]),
    ];
    let dephasing = [
        CMatrix::identity(2).scale((0.5 * (1.0 + eps)).sqrt()),
        CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).scale((0.5 * (1.0 - eps)).sqrt()),
    ];
    let mut out = Vec::new();
    for d in &dephasing {
        for a in &damping {
            out.push(d.mul(a));
        }
    }
    out
}

/// Embeds a single-qubit operator on `wire` of three qubits.
fn on_wire(op: &CMatrix, wire: usize) -> CMatrix {
    let id = CMatrix::identity(2);
    let ops: Vec<&CMatrix> = (0..3).map(|k| if k == wire { op } else { &id }).collect();
    ops[0].kron_low_first(ops[1]).kron_low_first(ops[2])
}

/// The noise channel as a linear map on any `8×8` operator.
pub fn apply_channel(x: &CMatrix, noise: &NoiseModel) -> CMatrix {
    match noise.kind {
        NoiseKind::None => x.clone(),
        NoiseKind::Depolarizing => {
            let p = noise.effective_depolarizing();
            let tr = x.trace();
            let mixed = CMatrix::from_fn(x.dim(), |i, j| {
                if i == j {
                    tr / x.dim() as f64
                } else {
                    c(0.0)
                }
            });
            x.scale(1.0 - p).add(&mixed.scale(p))
        }
        NoiseKind::Thermal => {
            let kraus: Vec<Vec<(CMatrix, CMatrix)>> = (0..3)
                .map(|wire| {
                    thermal_kraus(noise)
                        .iter()
                        .map(|k| {
                            let big = on_wire(k, wire);
                            let adj = big.adjoint();
                            (big, adj)
                        })
                        .collect()
                })
                .collect();
            let mut rho = x.clone();
            for _ in 0..noise.layer_count {
                for wire_ops in &kraus {
                    let mut next = CMatrix::zeros(rho.dim());
                    for (k, kd) in wire_ops {
                        next = next.add(&k.mul(&rho).mul(kd));
                    }
                    rho = next;
                }
            }
            rho
        }
    }
}

/// Applies the noise channel to a three-qubit state.
pub fn apply_noise(rho: &DenseOperator, noise: &NoiseModel) -> Result<DenseOperator> {
    noise.validate()?;
    if rho.n_qubits != 3 {
        return Err(Error::InvalidDensityMatrix(format!(
            "expected 3 qubits, got {}",
            rho.n_qubits
        )));
    }
    rho.check_state(1e-10)?;
    Ok(DenseOperator::new(3, apply_channel(&rho.matrix, noise)))
}

/// Outcome of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub theta: f64,
    pub shots: u64,
    pub errors: u64,
    pub frequency: f64,
    /// Binomial standard error `√(f(1−f)/shots)`.
    pub stderr: f64,
}

/// `½ − (1 + cos θ)/(4√3)`.
pub fn p_err_n1_closed_form(theta: f64) -> f64 {
    0.5 - (1.0 + theta.cos()) / (4.0 * 3f64.sqrt())
}

/// Shots per independently seeded chunk.
pub const SHOTS_PER_CHUNK: u64 = 1024;

/// `F[k][i][j] = N(|i⟩⟨j|)_{kk}`: outcome probabilities are then
/// `p_k = Σ_ij φ_i φ_j* F[k][i][j]` for the pure pre-noise state `φ`.
type OutcomeKernel = Vec<[[Complex64; 8]; 8]>;

fn outcome_kernel(noise: &NoiseModel) -> OutcomeKernel {
    let mut kernel = vec![[[c(0.0); 8]; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut unit = CMatrix::zeros(8);
            unit[(i, j)] = c(1.0);
            let out = apply_channel(&unit, noise);
            for (k, slot) in kernel.iter_mut().enumerate() {
                slot[i][j] = out[(k, k)];
            }
        }
    }
    kernel
}

/// Three-qubit product state with `x`, `a`, `b` on their wires.
fn wire_product(x: &[Complex64; 2], a: &[Complex64; 2], b: &[Complex64; 2]) -> [Complex64; 8] {
    std::array::from_fn(|idx| {
        let bit = |wire: usize| (idx >> wire) & 1;
        x[bit(WIRE_X)] * a[bit(WIRE_A)] * b[bit(WIRE_B)]
    })
}

fn apply_2x2(u: &CMatrix, v: &[Complex64; 2]) -> [Complex64; 2] {
    [u[(0, 0)] * v[0] + u[(0, 1)] * v[1], u[(1, 0)] * v[0] + u[(1, 1)] * v[1]]
}

/// Monte Carlo estimate of the misclassification frequency of the `n = 1`
/// machine at fixed overlap `θ`.
///
/// Each shot draws the hidden label and a Haar-random common frame `V`, sets
/// `A = V|↑⟩`, `B = V U0 |↑⟩` and the test qubit to the labelled template,
/// applies the basis change and the noise, and reads the outcome. Shots are
/// split into chunks of [`SHOTS_PER_CHUNK`], chunk `c` drawing from stream
/// `c` of a ChaCha8 generator seeded with `seed`, so the result does not
/// depend on the number of worker threads.
pub fn simulate_misclassification(theta: f64, shots: u64, noise: &NoiseModel, seed: u64) -> Result<SimulationResult> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    PriorScenario::FixedOverlap { theta }.validate()?;
    noise.validate()?;
    let (u, map) = n1_change_of_basis();
    let kernel = outcome_kernel(noise);
    let up = [c(1.0), c(0.0)];
    let second = rotated_up(theta);
    let chunks = shots.div_ceil(SHOTS_PER_CHUNK);

    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = SHOTS_PER_CHUNK.min(shots - chunk * SHOTS_PER_CHUNK);
            let mut errors = 0u64;
            for _ in 0..count {
                let first_is_true = rng.random_bool(0.5);
                let frame = haar_su2(&mut rng);
                let a = apply_2x2(&frame, &up);
                let b = apply_2x2(&frame, &second);
                let x = if first_is_true { a } else { b };
                let psi = wire_product(&x, &a, &b);
                let phi: [Complex64; 8] =
                    std::array::from_fn(|k| (0..8).map(|j| psi[j] * u[k][j]).sum());
                let probs: [f64; 8] = std::array::from_fn(|k| {
                    let mut acc = c(0.0);
                    for i in 0..8 {
                        for j in 0..8 {
                            acc += phi[i] * phi[j].conj() * kernel[k][i][j];
                        }
                    }
                    acc.re.max(0.0)
                });
                let total: f64 = probs.iter().sum();
                let mut draw = rng.random::<f64>() * total;
                let mut outcome = 7;
                for (k, &p) in probs.iter().enumerate() {
                    if draw < p {
                        outcome = k;
                        break;
                    }
                    draw -= p;
                }
                let guess_first = match map.labels[outcome] {
                    OutcomeLabel::First => true,
                    OutcomeLabel::Second => false,
                    OutcomeLabel::Coin => rng.random_bool(0.5),
                };
                if guess_first != first_is_true {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    let frequency = errors as f64 / shots as f64;
    Ok(SimulationResult {
        theta,
        shots,
        errors,
        frequency,
        stderr: (frequency * (1.0 - frequency) / shots as f64).sqrt(),
    })
}

/// Exact misclassification probability of the `n = 1` machine under `noise`,
/// with the Haar average over the common frame taken by twirling the input.
pub fn exact_misclassification(theta: f64, noise: &NoiseModel) -> Result<f64> {
    PriorScenario::FixedOverlap { theta }.validate()?;
    noise.validate()?;
    let (u, map) = n1_change_of_basis();
    let kernel = outcome_kernel(noise);
    let up = [c(1.0), c(0.0)];
    let second = rotated_up(theta);
    let u_mat = CMatrix::from_fn(8, |i, j| c(u[i][j]));
    let u_t = u_mat.adjoint();
    let mut err = 0.0;
    for first_is_true in [true, false] {
        let x = if first_is_true { up } else { second };
        let pure = DenseOperator::new(3, CMatrix::outer(&wire_product(&x, &up, &second)));
        let averaged = twirl(&pure, 3)?;
        let sigma = u_mat.mul(&averaged.matrix).mul(&u_t);
        for (k, label) in map.labels.iter().enumerate() {
            let mut p = c(0.0);
            for i in 0..8 {
                for j in 0..8 {
                    p += sigma[(i, j)] * kernel[k][i][j];
                }
            }
            let wrong = match label {
                OutcomeLabel::Coin => 0.5,
                OutcomeLabel::First if first_is_true => 0.0,
                OutcomeLabel::Second if !first_is_true => 0.0,
                _ => 1.0,
            };
            err += 0.5 * p.re * wrong;
        }
    }
    Ok(err)
}
