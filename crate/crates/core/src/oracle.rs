//! Brute-force construction of `α` and `β` for `n ≤ 2`.
//!
//! The twirl `∫dU U^{⊗m} X U^{†⊗m}` is computed as the Hilbert–Schmidt
//! projection of `X` onto the span of the qubit permutation operators, which
//! by Schur–Weyl duality is the commutant of `U^{⊗m}`. Nothing here uses the
//! irrep formulas of the other modules.
//!
//! Basis order: qubit `k` is bit `k` of the index. Qubits `0..n` hold the A
//! copies, qubit `n` the test qubit X, qubits `n+1..=2n` the B copies.

use crate::linalg::{hermitian_eigenvalues, jacobi_symmetric, trace_norm, CMatrix};
use crate::priors::PriorScenario;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};
use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::OnceLock;

/// Largest number of qubits [`twirl`] accepts.
pub const MAX_TWIRL_QUBITS: usize = 5;

/// Largest `n` the dense oracle handles.
pub const MAX_ORACLE_N: u32 = 2;

/// Operator on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub n_qubits: usize,
    pub matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(n_qubits: usize, matrix: CMatrix) -> Self {
        assert_eq!(matrix.dim(), 1 << n_qubits);
        DenseOperator { n_qubits, matrix }
    }

    /// Tensor product of single-qubit operators, `ops[k]` on qubit `k`.
    pub fn product(ops: &[CMatrix]) -> Self {
        let mut m = CMatrix::identity(1);
        for op in ops {
            m = m.kron_low_first(op);
        }
        DenseOperator::new(ops.len(), m)
    }

    /// `self` on the low qubits, `other` on the following ones.
    pub fn tensor(&self, other: &DenseOperator) -> Self {
        DenseOperator::new(self.n_qubits + other.n_qubits, self.matrix.kron_low_first(&other.matrix))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Checks hermiticity, unit trace and positivity within `tol`.
    pub fn check_state(&self, tol: f64) -> Result<()> {
        let herm = self.matrix.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }
}

/// Bit permutation induced by a qubit permutation: qubit `k` moves to `perm[k]`.
fn permute_bits(index: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (k, &to)| acc | (((index >> k) & 1) << to))
}

fn cycle_count(perm: &[usize]) -> u32 {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
        }
    }
    cycles
}

/// Permutation operators of `S_m` on `m` qubits and their Gram matrix.
#[derive(Debug, Clone)]
pub struct TwirlBasis {
    pub m: usize,
    /// `perms[σ][k]` is where qubit `k` is sent.
    pub perms: Vec<Vec<usize>>,
    /// For every permutation, the image of each basis index.
    index_maps: Vec<Vec<usize>>,
    /// `G[σ,τ] = Tr[P_σ† P_τ] = 2^{cycles(σ⁻¹τ)}`, row-major.
    pub gram: Vec<f64>,
    gram_pinv: Vec<f64>,
}

impl TwirlBasis {
    pub fn new(m: usize) -> Self {
        let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();
        let dim = 1usize << m;
        let index_maps: Vec<Vec<usize>> = perms
            .iter()
            .map(|p| (0..dim).map(|b| permute_bits(b, p)).collect())
            .collect();
        let count = perms.len();
        let mut gram = vec![0.0; count * count];
        for (a, pa) in perms.iter().enumerate() {
            let mut inv = vec![0; m];
            for (k, &to) in pa.iter().enumerate() {
                inv[to] = k;
            }
            for (b, pb) in perms.iter().enumerate() {
                let composed: Vec<usize> = pb.iter().map(|&to| inv[to]).collect();
                gram[a * count + b] = 2f64.powi(cycle_count(&composed) as i32);
            }
        }
        let gram_pinv = pseudo_inverse(&gram, count, 1e-10);
        TwirlBasis {
            m,
            perms,
            index_maps,
            gram,
            gram_pinv,
        }
    }

    /// Cached basis for `m ≤ MAX_TWIRL_QUBITS`.
    pub fn cached(m: usize) -> &'static TwirlBasis {
        static CACHE: [OnceLock<TwirlBasis>; MAX_TWIRL_QUBITS + 1] =
            [const { OnceLock::new() }; MAX_TWIRL_QUBITS + 1];
        CACHE[m].get_or_init(|| TwirlBasis::new(m))
    }

    /// Dense `P_σ` with `P_σ |b⟩ = |π_σ(b)⟩`.
    pub fn operator(&self, sigma: usize) -> CMatrix {
        let dim = 1usize << self.m;
        let mut out = CMatrix::zeros(dim);
        for (b, &image) in self.index_maps[sigma].iter().enumerate() {
            out[(image, b)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    fn project(&self, x: &CMatrix) -> CMatrix {
        let count = self.perms.len();
        // v[σ] = Tr[P_σ† X] = Σ_b X[π_σ(b), b]
        let v: Vec<Complex64> = self
            .index_maps
            .iter()
            .map(|map| map.iter().enumerate().map(|(b, &image)| x[(image, b)]).sum())
            .collect();
        let coeffs: Vec<Complex64> = (0..count)
            .map(|a| (0..count).map(|b| v[b] * self.gram_pinv[a * count + b]).sum())
            .collect();
        let dim = 1usize << self.m;
        let mut out = CMatrix::zeros(dim);
        for (map, c) in self.index_maps.iter().zip(&coeffs) {
            for (b, &image) in map.iter().enumerate() {
                out[(image, b)] += *c;
            }
        }
        out
    }
}

fn pseudo_inverse(a: &[f64], dim: usize, rel_cut: f64) -> Vec<f64> {
    let (eig, v) = jacobi_symmetric(a, dim);
    let max = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = vec![0.0; dim * dim];
    for (k, &lam) in eig.iter().enumerate() {
        if lam.abs() <= rel_cut * max {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] += v[i * dim + k] * v[j * dim + k] / lam;
            }
        }
    }
    out
}

/// `∫dU U^{⊗m} X U^{†⊗m}` for `X` on `m ≤ 5` qubits.
pub fn twirl(op: &DenseOperator, m: usize) -> Result<DenseOperator> {
    if m > MAX_TWIRL_QUBITS {
        return Err(Error::CapExceeded {
            n: m as u32,
            cap: MAX_TWIRL_QUBITS as u32,
        });
    }
    if op.n_qubits != m {
        return Err(Error::InvalidParameter(format!(
            "operator acts on {} qubits, not {m}",
            op.n_qubits
        )));
    }
    Ok(DenseOperator::new(m, TwirlBasis::cached(m).project(&op.matrix)))
}

/// `diag((1+r)/2, (1−r)/2)`: Bloch vector of length `r` along `z`.
pub fn diagonal_qubit_state(r: f64) -> CMatrix {
    CMatrix::from_real(2, &[0.5 * (1.0 + r), 0.0, 0.0, 0.5 * (1.0 - r)])
}

fn power(single: &CMatrix, m: usize) -> DenseOperator {
    DenseOperator::product(&vec![single.clone(); m])
}

/// `∫_0^1 3r² ρ(r)^{⊗m} dr` with 64-node Gauss–Legendre.
fn hard_sphere_power(m: usize) -> DenseOperator {
    let (x, w) = gauss_legendre(64);
    let mut acc = CMatrix::zeros(1 << m);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * (xi + 1.0);
        let weight = 0.5 * wi * 3.0 * r * r;
        acc = acc.add(&power(&diagonal_qubit_state(r), m).matrix.scale(weight));
    }
    DenseOperator::new(m, acc)
}

/// `U0 |↑⟩ = cos((π−θ)/2) |↑⟩ + sin((π−θ)/2) |↓⟩` with `U0 = exp(−iσ_y (π−θ)/2)`.
pub fn rotated_up(theta: f64) -> [Complex64; 2] {
    let half = 0.5 * (std::f64::consts::PI - theta);
    [Complex64::new(half.cos(), 0.0), Complex64::new(half.sin(), 0.0)]
}

fn check_oracle_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_ORACLE_N {
        Err(Error::CapExceeded {
            n,
            cap: MAX_ORACLE_N,
        })
    } else {
        Ok(())
    }
}

/// Dense `α` (test qubit drawn like A) and `β` (drawn like B).
pub fn alpha_beta_dense(n: u32, scenario: &PriorScenario) -> Result<(DenseOperator, DenseOperator)> {
    check_oracle_n(n)?;
    scenario.validate()?;
    let n = n as usize;
    match *scenario {
        PriorScenario::FixedPurities { r1, r2 } => {
            let (rho1, rho2) = (diagonal_qubit_state(r1), diagonal_qubit_state(r2));
            let alpha = twirl(&power(&rho1, n + 1), n + 1)?.tensor(&twirl(&power(&rho2, n), n)?);
            let beta = twirl(&power(&rho1, n), n)?.tensor(&twirl(&power(&rho2, n + 1), n + 1)?);
            Ok((alpha, beta))
        }
        PriorScenario::HardSphere => {
            let big = twirl(&hard_sphere_power(n + 1), n + 1)?;
            let small = twirl(&hard_sphere_power(n), n)?;
            Ok((big.tensor(&small), small.tensor(&big)))
        }
        PriorScenario::FixedOverlap { theta } | PriorScenario::FixedOverlapDim { theta, .. } => {
            let up = CMatrix::outer(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
            let other = CMatrix::outer(&rotated_up(theta));
            let m = 2 * n + 1;
            let alpha_ops: Vec<CMatrix> = (0..m).map(|k| if k <= n { up.clone() } else { other.clone() }).collect();
            let beta_ops: Vec<CMatrix> = (0..m).map(|k| if k < n { up.clone() } else { other.clone() }).collect();
            Ok((
                twirl(&DenseOperator::product(&alpha_ops), m)?,
                twirl(&DenseOperator::product(&beta_ops), m)?,
            ))
        }
    }
}

/// `½ − ¼ ‖α − β‖₁` by dense diagonalization.
pub fn p_err_oracle(n: u32, scenario: &PriorScenario) -> Result<f64> {
    let (alpha, beta) = alpha_beta_dense(n, scenario)?;
    Ok(0.5 - 0.25 * trace_norm(&alpha.matrix.sub(&beta.matrix)))
}

/// Operator exchanging qubit `i` with qubit `n+1+i` for every `i < n`.
pub fn swap_ab(n: u32) -> CMatrix {
    let n = n as usize;
    let m = 2 * n + 1;
    let perm: Vec<usize> = (0..m)
        .map(|k| match k {
            k if k < n => k + n + 1,
            k if k == n => n,
            k => k - n - 1,
        })
        .collect();
    let dim = 1usize << m;
    let mut s = CMatrix::zeros(dim);
    for b in 0..dim {
        s[(permute_bits(b, &perm), b)] = Complex64::new(1.0, 0.0);
    }
    s
}

/// `max |S Θ S† + Θ|` with `S` the A↔B swap.
pub fn swap_antisymmetry_residual(n: u32, scenario: &PriorScenario) -> Result<f64> {
    if let PriorScenario::FixedPurities { r1, r2 } = *scenario {
        if r1 != r2 {
            return Err(Error::UnsupportedScenario(format!(
                "{scenario}: swap antisymmetry needs r1 = r2"
            )));
        }
    }
    let (alpha, beta) = alpha_beta_dense(n, scenario)?;
    let theta = alpha.matrix.sub(&beta.matrix);
    let s = swap_ab(n);
    Ok(s.mul(&theta).mul(&s.adjoint()).add(&theta).max_abs())
}

/// Haar-random element of SU(2).
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let mut q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= norm);
    let [a, b, c, d] = q;
    CMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Complex64::new(a, b),
        (0, 1) => Complex64::new(c, d),
        (1, 0) => Complex64::new(-c, d),
        _ => Complex64::new(a, -b),
    })
}
