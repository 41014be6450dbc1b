//! Small dense complex matrices and a cyclic Jacobi eigensolver.

use num_complex::Complex64;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(dim: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), dim * dim);
        Self::from_fn(dim, |i, j| Complex64::new(values[i * dim + j], 0.0))
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &CMatrix) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] * c)
    }

    /// `self ⊗ other` where `self` acts on the low-order bits of the index.
    ///
    /// With qubit `k` stored as bit `k`, this places `other` on the qubits
    /// that follow those of `self`.
    pub fn kron_low_first(&self, other: &CMatrix) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| {
            self[(i % a, j % a)] * other[(i / a, j / a)]
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// `Tr[self† other]`.
    pub fn hs_inner(&self, other: &CMatrix) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigen-decomposition of a real symmetric matrix (row-major, `dim × dim`) by
/// cyclic Jacobi rotations. Returns eigenvalues and the matrix whose columns
/// are the eigenvectors.
pub fn jacobi_symmetric(a: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), dim * dim);
    let mut m = a.to_vec();
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * dim + j] * m[i * dim + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = m[p * dim + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * dim + p];
                let aqq = m[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let mkp = m[k * dim + p];
                    let mkq = m[k * dim + q];
                    m[k * dim + p] = c * mkp - s * mkq;
                    m[k * dim + q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p * dim + k];
                    let mqk = m[q * dim + k];
                    m[p * dim + k] = c * mpk - s * mqk;
                    m[q * dim + k] = s * mpk + c * mqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..dim).map(|i| m[i * dim + i]).collect();
    (eig, v)
}

/// Real embedding `[[A, −B], [B, A]]` of `H = A + iB`. Every eigenvalue of
/// `H` appears twice in the embedding.
fn real_embedding(h: &CMatrix) -> Vec<f64> {
    let n = h.dim();
    let d = 2 * n;
    let mut out = vec![0.0; d * d];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[i * d + j] = z.re;
            out[(i + n) * d + j + n] = z.re;
            out[i * d + j + n] = -z.im;
            out[(i + n) * d + j] = z.im;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.dim();
    let (mut eig, _) = jacobi_symmetric(&real_embedding(h), 2 * n);
    eig.sort_by(f64::total_cmp);
    // pairs are degenerate; keep one of each
    eig.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// `‖H‖₁ = Σ |λ|` for Hermitian `H`.
pub fn trace_norm(h: &CMatrix) -> f64 {
    hermitian_eigenvalues(h).iter().map(|x| x.abs()).sum()
}

/// Projector onto the span of eigenvectors of `H` with eigenvalue above `cut`.
pub fn positive_projector(h: &CMatrix, cut: f64) -> CMatrix {
    let n = h.dim();
    let d = 2 * n;
    let (eig, v) = jacobi_symmetric(&real_embedding(h), d);
    // P_real = Σ v vᵀ over selected real eigenvectors equals the embedding of
    // the complex projector, counted twice.
    let mut p = vec![0.0; d * d];
    for (k, &lam) in eig.iter().enumerate() {
        if lam > cut {
            for i in 0..d {
                let vi = v[i * d + k];
                if vi == 0.0 {
                    continue;
                }
                for j in 0..d {
                    p[i * d + j] += vi * v[j * d + k];
                }
            }
        }
    }
    CMatrix::from_fn(n, |i, j| Complex64::new(p[i * d + j], p[(i + n) * d + j]))
}
