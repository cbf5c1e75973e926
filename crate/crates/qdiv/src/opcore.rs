//! Dense Hermitian linear algebra on small Hilbert spaces.
//!
//! Provides the validated domain types everything else is built on:
//! Hermitian matrices, spectral decompositions with eigenvalue
//! clustering, density operators, and tangent vectors, plus seeded
//! random generators for states and tangents.
//!
//! Conventions:
//! - all tolerances are absolute unless stated otherwise;
//! - eigenvalues below [`SUPPORT_CUTOFF`] are treated as exactly zero
//!   and never inverted (generalised-inverse convention);
//! - logarithms are natural throughout the crate.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex<f64>;
/// Dense complex matrix used everywhere in the crate.
pub type CMat = DMatrix<C64>;

/// Eigenvalues below this are treated as exactly 0 and not inverted.
pub const SUPPORT_CUTOFF: f64 = 1e-12;
/// Default relative tolerance of the Hermiticity check.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("not traceless (trace {0:.3e})")]
    NotTraceless(f64),
    #[error("support violation (off-support mass {0:.3e})")]
    SupportViolation(f64),
    #[error("bad rank {rank} for dimension {dim}")]
    BadRank { rank: usize, dim: usize },
}

pub type OpResult<T> = Result<T, OpError>;

/// A validated Hermitian matrix. Construction symmetrises the input so
/// the stored entries satisfy A = A* exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    m: CMat,
}

impl HermitianMatrix {
    /// Validates Hermiticity within `1e-12` relative to the largest
    /// entry magnitude, then stores (A + A*)/2.
    pub fn new(m: CMat) -> OpResult<Self> {
        if m.nrows() != m.ncols() {
            return Err(OpError::NotSquare(m.nrows(), m.ncols()));
        }
        let dim = m.nrows();
        let scale = m
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let mut dev = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if dev > HERMITICITY_TOL * scale.max(1.0) {
            return Err(OpError::NonHermitian(dev));
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self { dim, m: sym })
    }

    /// Builds from an untrusted matrix by force-symmetrising. Only for
    /// internal use where the Hermitian structure is known analytically.
    pub(crate) fn symmetrize(m: CMat) -> Self {
        let dim = m.nrows();
        let sym = (&m + m.adjoint()).scale(0.5);
        Self { dim, m: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            m: CMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            m: CMat::identity(dim, dim),
        }
    }

    pub fn from_real(rows: &[&[f64]]) -> OpResult<Self> {
        let dim = rows.len();
        let mut m = CMat::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(OpError::NotSquare(dim, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = C64::new(v, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            m: self.m.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> OpResult<Self> {
        if self.dim != other.dim {
            return Err(OpError::DimMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> OpResult<Self> {
        if self.dim != other.dim {
            return Err(OpError::DimMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            m: &self.m - &other.m,
        })
    }
}

/// Pauli matrices, the workhorse basis for qubit tests.
pub fn pauli_x() -> HermitianMatrix {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m[(1, 0)] = C64::new(1.0, 0.0);
    HermitianMatrix { dim: 2, m }
}

pub fn pauli_y() -> HermitianMatrix {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    HermitianMatrix { dim: 2, m }
}

pub fn pauli_z() -> HermitianMatrix {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(1, 1)] = C64::new(-1.0, 0.0);
    HermitianMatrix { dim: 2, m }
}

/// Spectral decomposition with eigenvalues clustered into groups of
/// near-degenerate values sharing a single projector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// One Hermitian projector per distinct eigenvalue.
    pub projectors: Vec<CMat>,
    /// Multiplicity of each distinct eigenvalue.
    pub multiplicities: Vec<usize>,
}

impl SpectralDecomposition {
    /// Rebuilds sum_a a P_a.
    pub fn reconstruct(&self) -> CMat {
        let d = self.projectors[0].nrows();
        let mut m = CMat::zeros(d, d);
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            m += p.scale(*a);
        }
        m
    }
}

/// Raw (unclustered) Hermitian eigendecomposition: ascending eigenvalues
/// with an orthonormal eigenvector matrix.
pub(crate) fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let se = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let d = h.nrows();
    let mut vecs = CMat::zeros(d, d);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigendecompose `h`, merging eigenvalues within `cluster_tol` of each
/// other into a shared projector.
pub fn spectral_decompose(
    h: &HermitianMatrix,
    cluster_tol: f64,
) -> OpResult<SpectralDecomposition> {
    if cluster_tol < 0.0 {
        return Err(OpError::NotAState("negative cluster tolerance".into()));
    }
    let (vals, vecs) = eigh(&h.m);
    let d = h.dim;
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut multiplicities = Vec::new();
    let mut k = 0;
    while k < d {
        let mut end = k + 1;
        while end < d && vals[end] - vals[end - 1] <= cluster_tol {
            end += 1;
        }
        let mut p = CMat::zeros(d, d);
        let mut mean = 0.0;
        for i in k..end {
            let v = vecs.column(i);
            p += v * v.adjoint();
            mean += vals[i];
        }
        mean /= (end - k) as f64;
        eigenvalues.push(mean);
        projectors.push(p);
        multiplicities.push(end - k);
        k = end;
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
        multiplicities,
    })
}

/// Default clustering tolerance: 1e-9 times the spectral radius.
pub fn default_cluster_tol(h: &HermitianMatrix) -> f64 {
    let (vals, _) = eigh(&h.m);
    let radius = vals.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    1e-9 * radius.max(1e-9)
}

/// Hilbert-Schmidt inner product Tr(A* B).
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> OpResult<C64> {
    if a.dim != b.dim {
        return Err(OpError::DimMismatch(a.dim, b.dim));
    }
    Ok(hs_inner_raw(&a.m, &b.m))
}

/// Hilbert-Schmidt inner product on raw matrices (no validation).
pub fn hs_inner_raw(a: &CMat, b: &CMat) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Trace norm and Hilbert-Schmidt norm of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub trace_norm: f64,
    pub two_norm: f64,
}

pub fn norms(a: &HermitianMatrix) -> Norms {
    let (vals, _) = eigh(&a.m);
    Norms {
        trace_norm: vals.iter().map(|v| v.abs()).sum(),
        two_norm: vals.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

pub(crate) fn trace_norm_raw(m: &CMat) -> f64 {
    // General (non-Hermitian) trace norm via singular values.
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// A positive semidefinite, unit-trace operator with cached spectral
/// data.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: HermitianMatrix,
    spectral: SpectralDecomposition,
    support_rank: usize,
    min_eig: f64,
}

impl DensityOperator {
    /// Validates `m` as a density operator within `tol`: trace within
    /// `tol` of 1 and eigenvalues >= -tol. Eigenvalues in [-tol, 0) are
    /// clipped to 0 and the matrix reprojected (then renormalised to
    /// unit trace).
    pub fn validate(m: HermitianMatrix, tol: f64) -> OpResult<Self> {
        let tr = m.trace();
        if (tr - 1.0).abs() > tol {
            return Err(OpError::NotAState(format!("trace = {tr:.12}")));
        }
        let (vals, vecs) = eigh(&m.m);
        let min_raw = vals[0];
        if min_raw < -tol {
            return Err(OpError::NotAState(format!(
                "min eigenvalue = {min_raw:.3e}"
            )));
        }
        let needs_clip = min_raw < 0.0 || (tr - 1.0).abs() > 1e-15;
        let m = if needs_clip {
            let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let d = m.dim;
            let mut out = CMat::zeros(d, d);
            for (i, &v) in clipped.iter().enumerate() {
                if v > 0.0 {
                    let col = vecs.column(i);
                    out += (col * col.adjoint()).scale(v / total);
                }
            }
            HermitianMatrix::symmetrize(out)
        } else {
            m
        };
        let cluster = default_cluster_tol(&m);
        let spectral = spectral_decompose(&m, cluster)?;
        let (vals, _) = eigh(&m.m);
        let support_rank = vals.iter().filter(|&&v| v > SUPPORT_CUTOFF).count();
        Ok(Self {
            matrix: m,
            min_eig: vals[0].max(0.0),
            spectral,
            support_rank,
        })
    }

    /// Validation with the default tolerance 1e-10.
    pub fn new(m: HermitianMatrix) -> OpResult<Self> {
        Self::validate(m, 1e-10)
    }

    pub fn new_unchecked_from(m: CMat) -> OpResult<Self> {
        Self::new(HermitianMatrix::symmetrize(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::new(HermitianMatrix::identity(d).scale(1.0 / d as f64)).unwrap()
    }

    /// Pure state |v><v| from an (unnormalised) vector.
    pub fn pure(v: &DVector<C64>) -> Self {
        let n = v.norm();
        let v = v.unscale(n);
        Self::new(HermitianMatrix::symmetrize(&v * v.adjoint())).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.matrix.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eig(&self) -> f64 {
        *self.spectral.eigenvalues.last().unwrap()
    }

    /// lambda_max / lambda_min over the support.
    pub fn condition_number(&self) -> f64 {
        let pos: Vec<f64> = self
            .spectral
            .eigenvalues
            .iter()
            .copied()
            .filter(|&v| v > SUPPORT_CUTOFF)
            .collect();
        self.max_eig() / pos.first().copied().unwrap_or(SUPPORT_CUTOFF)
    }

    /// Projector onto the support (eigenvalues above the cutoff).
    pub fn support_projector(&self) -> CMat {
        let d = self.dim();
        let mut p = CMat::zeros(d, d);
        for (a, proj) in self
            .spectral
            .eigenvalues
            .iter()
            .zip(&self.spectral.projectors)
        {
            if *a > SUPPORT_CUTOFF {
                p += proj;
            }
        }
        p
    }

    /// Matrix function f(rho) through the spectral decomposition; `f` is
    /// applied only to eigenvalues above the support cutoff.
    pub fn apply_on_support<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for (a, p) in self
            .spectral
            .eigenvalues
            .iter()
            .zip(&self.spectral.projectors)
        {
            if *a > SUPPORT_CUTOFF {
                out += p.scale(f(*a));
            }
        }
        out
    }
}

/// A traceless Hermitian matrix supported inside a base state's support.
#[derive(Debug, Clone)]
pub struct TangentVector {
    matrix: HermitianMatrix,
    base_support: CMat,
}

impl TangentVector {
    pub fn matrix(&self) -> &CMat {
        self.matrix.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn base_support(&self) -> &CMat {
        &self.base_support
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Validates X as a tangent vector at `rho`: |Tr X| <= tol and
/// X = P X P within tol, where P projects onto supp(rho).
pub fn make_tangent(rho: &DensityOperator, x: &HermitianMatrix, tol: f64) -> OpResult<TangentVector> {
    if rho.dim() != x.dim() {
        return Err(OpError::DimMismatch(rho.dim(), x.dim()));
    }
    let tr = x.trace();
    if tr.abs() > tol {
        return Err(OpError::NotTraceless(tr));
    }
    let p = rho.support_projector();
    let inside = &p * x.matrix() * &p;
    let resid = (x.matrix() - &inside).norm();
    if resid > tol {
        return Err(OpError::SupportViolation(resid));
    }
    Ok(TangentVector {
        matrix: x.clone(),
        base_support: p,
    })
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    // Box-Muller; two independent N(0, 1) components.
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    C64::new(
        r * (2.0 * std::f64::consts::PI * u2).cos(),
        r * (2.0 * std::f64::consts::PI * u2).sin(),
    ) / 2.0_f64.sqrt()
}

pub(crate) fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random rank-`rank` state of dimension `d`, drawn by partial-tracing a
/// Haar-random pure state on a d x rank system (equivalently GG*/Tr).
pub fn random_state(d: usize, rank: usize, seed: u64) -> OpResult<DensityOperator> {
    if rank == 0 || rank > d {
        return Err(OpError::BadRank { rank, dim: d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, d, rank);
    let w = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| w[(i, i)].re).sum();
    DensityOperator::new(HermitianMatrix::symmetrize(w.unscale(tr)))
}

/// Random Haar pure state vector of dimension `d`.
pub fn random_pure_vector(d: usize, seed: u64) -> DVector<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(d, |_, _| complex_gaussian(&mut rng));
    let n = v.norm();
    v.unscale(n)
}

/// Random tangent vector at `rho`: Gaussian Hermitian, projected onto
/// the support and the traceless subspace.
pub fn random_tangent(rho: &DensityOperator, seed: u64) -> TangentVector {
    let d = rho.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, d, d);
    let h = (&g + g.adjoint()).scale(0.5);
    let p = rho.support_projector();
    let mut x = &p * h * &p;
    let r = rho.support_rank() as f64;
    let tr: f64 = (0..d).map(|i| x[(i, i)].re).sum();
    x -= p.scale(tr / r);
    TangentVector {
        matrix: HermitianMatrix::symmetrize(x),
        base_support: p,
    }
}

/// JSON wire format for complex matrices: {"dim": d, "re": [[..]], "im": [[..]]}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_cmat(m: &CMat) -> Self {
        let d = m.nrows();
        Self {
            dim: d,
            re: (0..d)
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..d)
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn to_cmat(&self) -> OpResult<CMat> {
        let d = self.dim;
        if self.re.len() != d || self.im.len() != d {
            return Err(OpError::NotSquare(self.re.len(), d));
        }
        let mut m = CMat::zeros(d, self.re.first().map_or(d, Vec::len));
        for i in 0..d {
            if self.re[i].len() != m.ncols() || self.im[i].len() != m.ncols() {
                return Err(OpError::NotSquare(d, self.re[i].len()));
            }
            for j in 0..m.ncols() {
                m[(i, j)] = C64::new(self.re[i][j], self.im[i][j]);
            }
        }
        Ok(m)
    }

    pub fn to_hermitian(&self) -> OpResult<HermitianMatrix> {
        HermitianMatrix::new(self.to_cmat()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_spectral() {
        let h = HermitianMatrix::identity(2);
        let sd = spectral_decompose(&h, 1e-8).unwrap();
        assert_eq!(sd.eigenvalues, vec![1.0]);
        assert_eq!(sd.multiplicities, vec![2]);
        assert!((sd.projectors[0].clone() - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_spectral() {
        let h = HermitianMatrix::from_real(&[&[0.7, 0.0], &[0.0, 0.3]]).unwrap();
        let sd = spectral_decompose(&h, 1e-12).unwrap();
        assert_abs_diff_eq!(sd.eigenvalues[0], 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.eigenvalues[1], 0.7, epsilon = 1e-14);
        assert_eq!(sd.multiplicities, vec![1, 1]);
        assert!((sd.reconstruct() - h.matrix()).norm() < 1e-10);
    }

    #[test]
    fn rank_one_projector_case() {
        // (sigma_x + I)/2 has eigenvalues 0 and 1
        let h = HermitianMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let sd = spectral_decompose(&h, 1e-10).unwrap();
        assert_abs_diff_eq!(sd.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.eigenvalues[1], 1.0, epsilon = 1e-12);
        for p in &sd.projectors {
            assert!((p * p - p).norm() < 1e-10, "projector not idempotent");
        }
        assert!(
            (&sd.projectors[0] * &sd.projectors[1]).norm() < 1e-10,
            "projectors not orthogonal"
        );
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(OpError::NonHermitian(_))
        ));
    }

    #[test]
    fn hs_inner_cases() {
        let i2 = HermitianMatrix::identity(2);
        assert_abs_diff_eq!(hs_inner(&i2, &i2).unwrap().re, 2.0, epsilon = 1e-14);
        let v = hs_inner(&pauli_z(), &pauli_x()).unwrap();
        assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_matches_elementwise_sum() {
        let a = random_state(3, 3, 5).unwrap().hermitian().clone();
        let b = random_state(3, 3, 6).unwrap().hermitian().clone();
        let direct = hs_inner(&a, &b).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += a.matrix()[(i, j)].conj() * b.matrix()[(i, j)];
            }
        }
        assert!((direct - acc).norm() < 1e-12);
    }

    #[test]
    fn norms_cases() {
        let n = norms(&pauli_z());
        assert_abs_diff_eq!(n.trace_norm, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.two_norm, 2.0_f64.sqrt(), epsilon = 1e-12);
        let z = norms(&HermitianMatrix::zeros(3));
        assert_eq!((z.trace_norm, z.two_norm), (0.0, 0.0));
    }

    #[test]
    fn norms_match_eigen_oracle() {
        let rho = random_state(4, 4, 9).unwrap();
        let x = random_tangent(&rho, 10);
        let n = norms(x.hermitian());
        let (vals, _) = eigh(x.matrix());
        let tn: f64 = vals.iter().map(|v| v.abs()).sum();
        assert_abs_diff_eq!(n.trace_norm, tn, epsilon = 1e-10);
        assert_abs_diff_eq!(
            n.two_norm * n.two_norm,
            hs_inner(x.hermitian(), x.hermitian()).unwrap().re,
            epsilon = 1e-10
        );
    }

    #[test]
    fn validate_density_cases() {
        let ok = DensityOperator::validate(
            HermitianMatrix::identity(2).scale(0.5),
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(ok.min_eig(), 0.5, epsilon = 1e-12);

        let bad = HermitianMatrix::from_real(&[&[1.5, 0.0], &[0.0, -0.5]]).unwrap();
        assert!(matches!(
            DensityOperator::validate(bad, 1e-10),
            Err(OpError::NotAState(_))
        ));

        let edge =
            HermitianMatrix::from_real(&[&[1.0 + 1e-13, 0.0], &[0.0, -1e-13]]).unwrap();
        let v = DensityOperator::validate(edge, 1e-10).unwrap();
        assert!(v.min_eig() >= 0.0);
        assert_abs_diff_eq!(v.hermitian().trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn make_tangent_cases() {
        let half = DensityOperator::maximally_mixed(2);
        assert!(make_tangent(&half, &pauli_z(), 1e-10).is_ok());

        let pure = DensityOperator::pure(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert!(matches!(
            make_tangent(&pure, &pauli_x(), 1e-10),
            Err(OpError::SupportViolation(_))
        ));

        let shifted = pauli_z()
            .add(&HermitianMatrix::identity(2).scale(0.1))
            .unwrap();
        assert!(matches!(
            make_tangent(&half, &shifted, 1e-10),
            Err(OpError::NotTraceless(_))
        ));
    }

    #[test]
    fn tangent_from_state_difference() {
        for seed in 0..8 {
            let rho = random_state(3, 3, 100 + seed).unwrap();
            let gam = random_state(3, 3, 200 + seed).unwrap();
            let x = rho.hermitian().sub(gam.hermitian()).unwrap();
            assert!(make_tangent(&rho, &x, 1e-8).is_ok());
        }
    }

    #[test]
    fn random_state_contracts() {
        let a = random_state(2, 2, 7).unwrap();
        let b = random_state(2, 2, 7).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-15, "not reproducible");
        assert_eq!(a.support_rank(), 2);

        let p = random_state(3, 1, 0).unwrap();
        assert_eq!(p.support_rank(), 1);
        assert!(p.min_eig() < 1e-12);
    }

    #[test]
    fn random_state_ensemble_mean() {
        let mut mean = CMat::zeros(2, 2);
        let n = 10_000;
        for s in 0..n {
            mean += random_state(2, 2, s).unwrap().matrix();
        }
        mean /= C64::new(n as f64, 0.0);
        let dev = (mean - CMat::identity(2, 2).scale(0.5)).norm();
        assert!(dev < 0.02, "ensemble mean deviation {dev}");
    }

    #[test]
    fn projector_algebra() {
        for seed in 0..8 {
            let rho = random_state(4, 4, 300 + seed).unwrap();
            let sd = rho.spectral();
            assert!((sd.reconstruct() - rho.matrix()).norm() < 1e-10);
            let mut sum = CMat::zeros(4, 4);
            for (i, p) in sd.projectors.iter().enumerate() {
                sum += p;
                for (j, q) in sd.projectors.iter().enumerate() {
                    let prod = p * q;
                    if i == j {
                        assert!((&prod - p).norm() < 1e-10);
                    } else {
                        assert!(prod.norm() < 1e-10);
                    }
                }
            }
            assert!((sum - CMat::identity(4, 4)).norm() < 1e-10);
        }
    }

    #[test]
    fn matrix_json_round_trip() {
        let rho = random_state(3, 2, 17).unwrap();
        let js = MatrixJson::from_cmat(rho.matrix());
        let text = serde_json::to_string(&js).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert!((back.to_cmat().unwrap() - rho.matrix()).norm() < 1e-15);
    }
}
