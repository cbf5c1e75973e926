//! Contraction, expansion, and relative expansion coefficients.
//!
//! The split of labour: wherever a generalised-eigenvalue reduction
//! exists (fixed reference state, Schatten-2 norms, the inner tangent
//! problem at a fixed base state) the value is exact. The outer
//! optimisation over base states (or state pairs, for the divergence
//! coefficients) is sampling plus Nelder-Mead refinement, and the
//! estimate's `direction` field records which side of the true value
//! the report sits on.

use crate::channels::{
    bloch_state, bloch_vector, hermitian_basis, identity_channel, Channel,
    ChannelError, RMat,
};
use crate::divergences::{standard_f_div, DivError};
use crate::funcs::{FSpec, FuncError, KappaSpec, LimitValue};
use crate::numeric::nelder_mead;
use crate::opcore::{
    eigh, CMat, DensityOperator, MatrixJson, C64, SUPPORT_CUTOFF,
};
use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("reference state is not fixed by the channel (residual {0:.3e})")]
    NotAFixedPoint(f64),
    #[error("subspace is degenerate (dimension 0)")]
    DegenerateSubspace,
    #[error("base state is singular for an unbounded kernel")]
    SingularBase,
    #[error("kernel is unbounded where a bounded one is required")]
    UnboundedKernel,
    #[error("hypotheses failed: {0}")]
    HypothesisFailed(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Div(#[from] DivError),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Op(#[from] crate::opcore::OpError),
}

pub type CoeffResult<T> = Result<T, CoeffError>;

/// Which side of the true coefficient the reported value sits on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Exact,
    UpperBoundOfInf,
    LowerBoundOfSup,
    CertifiedLower,
    CertifiedInterval { lo: f64, hi: f64 },
}

/// Witness data achieving (or approaching) the reported value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub states: Vec<MatrixJson>,
    pub tangent: Option<MatrixJson>,
}

impl Witness {
    fn empty() -> Self {
        Self {
            states: vec![],
            tangent: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub probes: usize,
    pub skipped: usize,
    pub refinements: usize,
    pub converged: bool,
    pub seed: u64,
}

/// A coefficient value with bound direction, witness, and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    pub direction: Direction,
    pub witness: Witness,
    pub diagnostics: Diagnostics,
}

/// Solver budgets for the sampled estimators.
#[derive(Debug, Clone)]
pub struct RelExpOpts {
    pub random_states: usize,
    pub boundary_directions: usize,
    pub boundary_deltas: Vec<f64>,
    pub refine_from_best: usize,
    pub refinements_each: usize,
    pub seed: u64,
    pub tol: f64,
    /// skip probes whose output condition number exceeds this
    pub cond_limit: f64,
}

impl Default for RelExpOpts {
    fn default() -> Self {
        Self {
            random_states: 512,
            boundary_directions: 64,
            boundary_deltas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            refine_from_best: 8,
            refinements_each: 2,
            seed: 0,
            tol: 1e-4,
            cond_limit: 1e9,
        }
    }
}

impl RelExpOpts {
    pub fn small() -> Self {
        Self {
            random_states: 128,
            boundary_directions: 16,
            refine_from_best: 4,
            ..Self::default()
        }
    }

    pub fn medium() -> Self {
        Self::default()
    }

    pub fn large() -> Self {
        Self {
            random_states: 2048,
            boundary_directions: 128,
            refine_from_best: 12,
            ..Self::default()
        }
    }
}

/// Optimisation sense of a sampled coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inf,
    Sup,
}

// ---------------------------------------------------------------------
// quadratic forms and exact reductions
// ---------------------------------------------------------------------

/// Real symmetric matrix Q on the traceless-Hermitian coordinate space
/// with x^T Q x = |X(x)|^2_{kappa, base}; requires a full-rank base.
pub fn riem_quadratic_form(kappa: &KappaSpec, base: &DensityOperator) -> CoeffResult<RMat> {
    let d = base.dim();
    if base.support_rank() < d {
        return Err(CoeffError::SingularBase);
    }
    let (vals, vecs) = eigh(base.matrix());
    let basis = hermitian_basis(d);
    let n = d * d - 1;
    // traceless basis elements rotated into the eigenbasis of the base
    let rotated: Vec<CMat> = basis[1..]
        .iter()
        .map(|b| vecs.adjoint() * b * &vecs)
        .collect();
    let mut weights = vec![vec![0.0; d]; d];
    for (a, wa) in weights.iter_mut().enumerate() {
        for (b, w) in wa.iter_mut().enumerate() {
            *w = kappa.eval(vals[a] / vals[b])? / vals[b];
        }
    }
    let mut q = RMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += weights[a][b] * (rotated[i][(a, b)].conj() * rotated[j][(a, b)]).re;
                }
            }
            q[(i, j)] = acc;
            q[(j, i)] = acc;
        }
    }
    Ok(q)
}

/// Smallest/largest generalised eigenvalue of the symmetric pencil
/// (A, B) with B positive definite, via Cholesky whitening. Returns the
/// eigenvector as well.
fn sym_gen_eig_extreme(a: &RMat, b: &RMat, mode: Mode) -> Option<(f64, DVector<f64>)> {
    let chol = nalgebra::Cholesky::new(b.clone())?;
    let l_inv = chol.l().try_inverse()?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()).scale(0.5);
    let se = nalgebra::SymmetricEigen::new(c);
    let mut idx = 0;
    for i in 0..se.eigenvalues.len() {
        let better = match mode {
            Mode::Inf => se.eigenvalues[i] < se.eigenvalues[idx],
            Mode::Sup => se.eigenvalues[i] > se.eigenvalues[idx],
        };
        if better {
            idx = i;
        }
    }
    let y = se.eigenvectors.column(idx).into_owned();
    let x = l_inv.transpose() * y;
    Some((se.eigenvalues[idx], x))
}

/// Generalised eigenvalue extreme of (A, B) for PSD B, with null
/// directions of B handled: common-null directions are excluded, and
/// directions where only the numerator survives do not constrain an
/// infimum (they are projected out through the Schur complement).
fn psd_pencil_extreme(a: &RMat, b: &RMat, mode: Mode) -> Option<(f64, DVector<f64>)> {
    let n = b.nrows();
    let se = nalgebra::SymmetricEigen::new((b + b.transpose()).scale(0.5));
    let scale = se.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if scale <= 1e-14 {
        return None;
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| se.eigenvalues[i] > 1e-12 * scale)
        .collect();
    if keep.is_empty() {
        return None;
    }
    let null: Vec<usize> = (0..n)
        .filter(|&i| se.eigenvalues[i] <= 1e-12 * scale)
        .collect();
    let mut u = RMat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        u.set_column(c, &se.eigenvectors.column(i));
    }
    let b_r = (u.transpose() * b * &u + (u.transpose() * b * &u).transpose()).scale(0.5);
    let mut a_r = u.transpose() * a * &u;
    if !null.is_empty() {
        // minimise the numerator over the B-null directions first
        let mut v = RMat::zeros(n, null.len());
        for (c, &i) in null.iter().enumerate() {
            v.set_column(c, &se.eigenvectors.column(i));
        }
        let avv = v.transpose() * a * &v;
        let avu = v.transpose() * a * &u;
        // pseudo-inverse of the null-block of A
        let se_n = nalgebra::SymmetricEigen::new((&avv + avv.transpose()).scale(0.5));
        let mut pinv = RMat::zeros(null.len(), null.len());
        let nscale = se_n
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        for k in 0..null.len() {
            if se_n.eigenvalues[k].abs() > 1e-12 * nscale {
                let col = se_n.eigenvectors.column(k);
                pinv += (col * col.transpose()).scale(1.0 / se_n.eigenvalues[k]);
            }
        }
        a_r -= avu.transpose() * &pinv * &avu;
        a_r = (&a_r + a_r.transpose()).scale(0.5);
    }
    let (val, x_r) = sym_gen_eig_extreme(&a_r, &b_r, mode)?;
    let x = u * x_r;
    Some((val, x))
}

/// Exact fixed-reference Riemannian coefficient: the extreme generalised
/// eigenvalue of (T^T Q T, Q) on the traceless subspace at a full-rank
/// fixed state, optionally restricted to a subspace (columns of
/// `subspace` in traceless coordinates).
pub fn riem_coeff_fixed_ref(
    kappa: &KappaSpec,
    ch: &Channel,
    reference: &DensityOperator,
    mode: Mode,
    subspace: Option<&RMat>,
) -> CoeffResult<CoefficientEstimate> {
    let out = ch.apply_state(reference)?;
    let resid = (out.matrix() - reference.matrix()).norm();
    if resid > 1e-9 {
        return Err(CoeffError::NotAFixedPoint(resid));
    }
    let q = riem_quadratic_form(kappa, reference)?;
    let t = ch.transfer_traceless();
    let a_full = t.transpose() * &q * &t;
    let (a, b, back): (RMat, RMat, Option<&RMat>) = match subspace {
        Some(m) => {
            if m.ncols() == 0 {
                return Err(CoeffError::DegenerateSubspace);
            }
            (
                m.transpose() * &a_full * m,
                m.transpose() * &q * m,
                Some(m),
            )
        }
        None => (a_full, q.clone(), None),
    };
    let (value, xv) =
        sym_gen_eig_extreme(&(&a + a.transpose()).scale(0.5), &(&b + b.transpose()).scale(0.5), mode)
            .ok_or(CoeffError::DegenerateSubspace)?;
    let coords = match back {
        Some(m) => m * xv,
        None => xv,
    };
    let tangent = coords_to_traceless(reference.dim(), &coords);
    Ok(CoefficientEstimate {
        value: value.max(0.0),
        direction: Direction::Exact,
        witness: Witness {
            states: vec![MatrixJson::from_cmat(reference.matrix())],
            tangent: Some(MatrixJson::from_cmat(&tangent)),
        },
        diagnostics: Diagnostics {
            probes: 1,
            converged: true,
            ..Default::default()
        },
    })
}

fn coords_to_traceless(d: usize, coords: &DVector<f64>) -> CMat {
    let basis = hermitian_basis(d);
    let mut m = CMat::zeros(d, d);
    for (j, c) in coords.iter().enumerate() {
        m += basis[j + 1].scale(*c);
    }
    m
}

/// Orthonormal basis of the column space of `m` (singular vectors with
/// non-negligible singular value).
pub fn column_space(m: &RMat) -> RMat {
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax.max(1e-300))
        .collect();
    let mut out = RMat::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Exact Schatten-2 relative expansion coefficient:
/// sqrt of the minimal generalised eigenvalue of
/// (T_N^T T_N, T_M^T T_M) on the traceless subspace.
pub fn schatten2_rel_expansion(n: &Channel, m: &Channel) -> CoeffResult<CoefficientEstimate> {
    if n.d_in() != m.d_in() {
        return Err(CoeffError::Channel(ChannelError::DimMismatch(
            n.d_in(),
            m.d_in(),
        )));
    }
    let tn = n.transfer_traceless();
    let tm = m.transfer_traceless();
    let a = tn.transpose() * &tn;
    let b = tm.transpose() * &tm;
    match psd_pencil_extreme(&a, &b, Mode::Inf) {
        Some((val, x)) => {
            let tangent = coords_to_traceless(n.d_in(), &x);
            Ok(CoefficientEstimate {
                value: val.max(0.0).sqrt(),
                direction: Direction::Exact,
                witness: Witness {
                    states: vec![],
                    tangent: Some(MatrixJson::from_cmat(&tangent)),
                },
                diagnostics: Diagnostics {
                    probes: 1,
                    converged: true,
                    ..Default::default()
                },
            })
        }
        None => Ok(CoefficientEstimate {
            // M annihilates every traceless direction: no valid pairs
            value: f64::INFINITY,
            direction: Direction::Exact,
            witness: Witness::empty(),
            diagnostics: Diagnostics::default(),
        }),
    }
}

// ---------------------------------------------------------------------
// sampled Riemannian relative expansion
// ---------------------------------------------------------------------

/// Quadratic form of |.|^2_{kappa, rho} for a QUBIT base state given by
/// its Bloch vector, through the h-profile:
/// Q = 2/(1-r^2) [h I + (1-h)/r^2 w w^T] on orthonormal Pauli coords.
fn qubit_h_form(kappa: &KappaSpec, w: &Vector3<f64>) -> CoeffResult<RMat> {
    let r2 = w.norm_squared();
    if r2 >= 1.0 - 1e-14 {
        return Err(CoeffError::SingularBase);
    }
    let h = kappa.h(r2)?;
    let mut q = RMat::identity(3, 3).scale(h);
    if r2 > 1e-28 {
        let scale = (1.0 - h) / r2;
        for i in 0..3 {
            for j in 0..3 {
                q[(i, j)] += scale * w[i] * w[j];
            }
        }
    }
    Ok(q.scale(2.0 / (1.0 - r2)))
}

/// Value of the inner (exact over tangents) problem at a fixed base
/// state: extreme generalised eigenvalue of the pencil
/// (T_N^T Q_{N(rho)} T_N, T_M^T Q_{M(rho)} T_M).
fn inner_ratio_extreme(
    kappa: &KappaSpec,
    n: &Channel,
    m: &Channel,
    rho: &DensityOperator,
    mode: Mode,
    cond_limit: f64,
) -> CoeffResult<Option<(f64, CMat)>> {
    let qubit_everywhere = n.d_in() == 2
        && n.d_out() == 2
        && m.d_out() == 2
        && kappa.has_mixing_measure()
        && n.bloch().is_some()
        && m.bloch().is_some();
    let (a, b) = if qubit_everywhere {
        // closed-form path: robust arbitrarily close to the boundary
        let w = bloch_vector(rho);
        let (tn, vn) = n.bloch().unwrap();
        let (tm, vm) = m.bloch().unwrap();
        let wn = tn * w + vn;
        let wm = tm * w + vm;
        if wn.norm_squared() >= 1.0 - 1e-14 || wm.norm_squared() >= 1.0 - 1e-14 {
            return Ok(None);
        }
        let qn = qubit_h_form(kappa, &wn)?;
        let qm = qubit_h_form(kappa, &wm)?;
        let tn3 = tn;
        let tm3 = tm;
        let a = tn3.transpose() * qn * tn3;
        let b = tm3.transpose() * qm * tm3;
        (
            RMat::from_fn(3, 3, |i, j| a[(i, j)]),
            RMat::from_fn(3, 3, |i, j| b[(i, j)]),
        )
    } else {
        let n_out = n.apply_state(rho)?;
        let m_out = m.apply_state(rho)?;
        if n_out.support_rank() < n.d_out() || m_out.support_rank() < m.d_out() {
            return Ok(None);
        }
        if n_out.condition_number() > cond_limit || m_out.condition_number() > cond_limit {
            return Ok(None);
        }
        let qn = riem_quadratic_form(kappa, &n_out)?;
        let qm = riem_quadratic_form(kappa, &m_out)?;
        let tn = n.transfer_traceless();
        let tm = m.transfer_traceless();
        (tn.transpose() * qn * &tn, tm.transpose() * qm * &tm)
    };
    let a = (&a + a.transpose()).scale(0.5);
    let b = (&b + b.transpose()).scale(0.5);
    let res = psd_pencil_extreme(&a, &b, mode);
    Ok(res.map(|(val, x)| {
        let tangent = coords_to_traceless(n.d_in(), &x);
        (val.max(0.0), tangent)
    }))
}

fn structured_pure_vectors(d: usize) -> Vec<DVector<C64>> {
    let mut out = Vec::new();
    for i in 0..d {
        let mut v = DVector::zeros(d);
        v[i] = C64::new(1.0, 0.0);
        out.push(v);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            for (re, im) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let mut v: DVector<C64> = DVector::zeros(d);
                v[i] = C64::new(1.0, 0.0);
                v[j] = C64::new(re, im);
                let nrm = v.norm();
                out.push(v.unscale(nrm));
            }
        }
    }
    out
}

fn probe_states(d: usize, opts: &RelExpOpts) -> Vec<DensityOperator> {
    let mut probes = Vec::new();
    probes.push(DensityOperator::maximally_mixed(d));
    let mixed = DensityOperator::maximally_mixed(d);
    let blend = |psi: &DensityOperator, delta: f64| -> DensityOperator {
        let m = psi.matrix().scale(1.0 - delta) + mixed.matrix().scale(delta);
        DensityOperator::new_unchecked_from(m).unwrap()
    };
    for v in structured_pure_vectors(d) {
        let psi = DensityOperator::pure(&v);
        for &delta in &opts.boundary_deltas {
            probes.push(blend(&psi, delta));
        }
    }
    for k in 0..opts.random_states {
        let rank = 1 + (k % d).max(if d > 1 { 1 } else { 0 });
        let full = crate::opcore::random_state(d, d, opts.seed.wrapping_add(k as u64)).unwrap();
        probes.push(full);
        if rank < d && k % 3 == 0 {
            // low-rank states smoothed into the interior
            let lr =
                crate::opcore::random_state(d, rank, opts.seed.wrapping_add(900_000 + k as u64))
                    .unwrap();
            probes.push(blend(&lr, 1e-3));
        }
    }
    for k in 0..opts.boundary_directions {
        let v = crate::opcore::random_pure_vector(d, opts.seed.wrapping_add(500_000 + k as u64));
        let psi = DensityOperator::pure(&v);
        for &delta in &opts.boundary_deltas {
            probes.push(blend(&psi, delta));
        }
    }
    probes
}

fn state_params(rho: &DensityOperator) -> Vec<f64> {
    // qubit: Bloch vector; general d: Cholesky-style packing of the
    // Hermitian square root
    if rho.dim() == 2 {
        let w = bloch_vector(rho);
        return vec![w[0], w[1], w[2]];
    }
    let d = rho.dim();
    let sq = rho.apply_on_support(|a| a.sqrt());
    let mut p = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            p.push(sq[(i, j)].re);
            p.push(sq[(i, j)].im);
        }
    }
    p
}

fn params_to_state(d: usize, params: &[f64]) -> Option<DensityOperator> {
    if d == 2 {
        let mut w = Vector3::new(params[0], params[1], params[2]);
        let r = w.norm();
        if r >= 1.0 - 1e-9 {
            w *= (1.0 - 1e-9) / r;
        }
        return Some(bloch_state(&w));
    }
    let mut g = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = C64::new(params[2 * (i * d + j)], params[2 * (i * d + j) + 1]);
        }
    }
    let w = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| w[(i, i)].re).sum();
    if tr < 1e-12 {
        return None;
    }
    DensityOperator::new_unchecked_from(w.unscale(tr)).ok()
}

/// Sampled Riemannian relative expansion coefficient
/// eta_check_kappa(N, M): the outer optimisation over base states is
/// heuristic (random + boundary probes + Nelder-Mead), the inner
/// optimisation over tangents is an exact generalised eigenvalue.
pub fn riem_rel_expansion(
    kappa: &KappaSpec,
    n: &Channel,
    m: &Channel,
    mode: Mode,
    opts: &RelExpOpts,
) -> CoeffResult<CoefficientEstimate> {
    if n.d_in() != m.d_in() {
        return Err(CoeffError::Channel(ChannelError::DimMismatch(
            n.d_in(),
            m.d_in(),
        )));
    }
    let d = n.d_in();
    let probes = probe_states(d, opts);
    let total = probes.len();
    let evals: Vec<Option<(f64, DensityOperator, CMat)>> = probes
        .into_par_iter()
        .map(|rho| {
            inner_ratio_extreme(kappa, n, m, &rho, mode, opts.cond_limit)
                .ok()
                .flatten()
                .map(|(v, x)| (v, rho, x))
        })
        .collect();
    let skipped = evals.iter().filter(|e| e.is_none()).count();
    let better = |a: f64, b: f64| match mode {
        Mode::Inf => a < b,
        Mode::Sup => a > b,
    };
    let mut ranked: Vec<&(f64, DensityOperator, CMat)> = evals.iter().flatten().collect();
    if ranked.is_empty() {
        return Err(CoeffError::DegenerateSubspace);
    }
    ranked.sort_by(|a, b| {
        let ord = a.0.partial_cmp(&b.0).unwrap();
        let ord = match mode {
            Mode::Inf => ord,
            Mode::Sup => ord.reverse(),
        };
        // deterministic tie-break: smaller condition number first
        ord.then(
            a.1.condition_number()
                .partial_cmp(&b.1.condition_number())
                .unwrap(),
        )
    });
    let mut best: (f64, DensityOperator, CMat) = ranked[0].clone();

    // Nelder-Mead refinement from the best probes
    let mut refinements = 0;
    let sign = match mode {
        Mode::Inf => 1.0,
        Mode::Sup => -1.0,
    };
    let seeds: Vec<DensityOperator> = ranked
        .iter()
        .take(opts.refine_from_best)
        .map(|t| t.1.clone())
        .collect();
    for (si, seed_state) in seeds.iter().enumerate() {
        for rep in 0..opts.refinements_each {
            refinements += 1;
            let mut x0 = state_params(seed_state);
            if rep > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    opts.seed
                        .wrapping_add(777)
                        .wrapping_add((si * 31 + rep) as u64),
                );
                for v in x0.iter_mut() {
                    *v += 0.02 * (rng.gen::<f64>() - 0.5);
                }
            }
            let res = nelder_mead(
                |params| {
                    params_to_state(d, params)
                        .and_then(|rho| {
                            inner_ratio_extreme(kappa, n, m, &rho, mode, opts.cond_limit)
                                .ok()
                                .flatten()
                        })
                        .map_or(f64::INFINITY, |(v, _)| sign * v)
                },
                &x0,
                0.5,
                300,
                opts.tol * 1e-3,
            );
            if res.fx.is_finite() {
                let cand = sign * res.fx;
                if better(cand, best.0) {
                    if let Some(rho) = params_to_state(d, &res.x) {
                        if let Ok(Some((v, x))) =
                            inner_ratio_extreme(kappa, n, m, &rho, mode, opts.cond_limit)
                        {
                            if better(v, best.0) {
                                best = (v, rho, x);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CoefficientEstimate {
        value: best.0,
        direction: match mode {
            Mode::Inf => Direction::UpperBoundOfInf,
            Mode::Sup => Direction::LowerBoundOfSup,
        },
        witness: Witness {
            states: vec![MatrixJson::from_cmat(best.1.matrix())],
            tangent: Some(MatrixJson::from_cmat(&best.2)),
        },
        diagnostics: Diagnostics {
            probes: total,
            skipped,
            refinements,
            converged: true,
            seed: opts.seed,
        },
    })
}

/// Riemannian contraction coefficient eta_kappa(ch) over all states:
/// the sup-mode relative expansion of (ch, id).
pub fn riem_contraction(
    kappa: &KappaSpec,
    ch: &Channel,
    opts: &RelExpOpts,
) -> CoeffResult<CoefficientEstimate> {
    let id = identity_channel(ch.d_in());
    riem_rel_expansion(kappa, ch, &id, Mode::Sup, opts)
}

// ---------------------------------------------------------------------
// sampled divergence relative expansion
// ---------------------------------------------------------------------

fn pair_ratio(
    f: &FSpec,
    n: &Channel,
    m: &Channel,
    rho: &DensityOperator,
    gamma: &DensityOperator,
) -> Option<f64> {
    let nr = n.apply_state(rho).ok()?;
    let ng = n.apply_state(gamma).ok()?;
    let mr = m.apply_state(rho).ok()?;
    let mg = m.apply_state(gamma).ok()?;
    let num = standard_f_div(f, &nr, &ng).ok()?;
    let den = standard_f_div(f, &mr, &mg).ok()?;
    // noise floor: divergences are computed from O(1) spectral sums, so
    // values below ~1e-10 carry fewer than five reliable digits
    if !den.value.is_finite() || den.value < 1e-10 {
        return None;
    }
    if !num.value.is_finite() {
        return None;
    }
    Some(num.value / den.value)
}

/// Sampled divergence relative expansion coefficient
/// eta_check_f(N, M): minimisation over equal-support pairs through
/// random pairs, collinear families seeded by the Riemannian witnesses
/// (capturing the local limit), radial boundary pairs, and pairwise
/// Nelder-Mead refinement.
pub fn div_rel_expansion(
    f: &FSpec,
    n: &Channel,
    m: &Channel,
    mode: Mode,
    opts: &RelExpOpts,
) -> CoeffResult<CoefficientEstimate> {
    if n.d_in() != m.d_in() {
        return Err(CoeffError::Channel(ChannelError::DimMismatch(
            n.d_in(),
            m.d_in(),
        )));
    }
    let d = n.d_in();
    let mixed = DensityOperator::maximally_mixed(d);
    let blend = |psi: &CMat, delta: f64| -> DensityOperator {
        let mm = psi.scale(1.0 - delta) + mixed.matrix().scale(delta);
        DensityOperator::new_unchecked_from(mm).unwrap()
    };

    let mut pairs: Vec<(DensityOperator, DensityOperator)> = Vec::new();

    // random full-rank pairs
    let n_random = opts.random_states / 2;
    for k in 0..n_random {
        let a = crate::opcore::random_state(d, d, opts.seed.wrapping_add(10_000 + k as u64));
        let b = crate::opcore::random_state(d, d, opts.seed.wrapping_add(20_000 + k as u64));
        if let (Ok(a), Ok(b)) = (a, b) {
            pairs.push((a, b));
        }
    }

    // Riemannian-witness seeds for the collinear and boundary families
    let kappa = f.induced_kappa().ok();
    let mut seed_dirs: Vec<(DensityOperator, CMat)> = Vec::new();
    if let Some(kappa) = &kappa {
        let mut riem_opts = opts.clone();
        riem_opts.random_states = opts.random_states / 2;
        if let Ok(est) = riem_rel_expansion(kappa, n, m, mode, &riem_opts) {
            if let (Some(state_js), Some(tan_js)) =
                (est.witness.states.first(), est.witness.tangent.as_ref())
            {
                if let (Ok(st), Ok(tn)) = (state_js.to_cmat(), tan_js.to_cmat()) {
                    if let Ok(rho) = DensityOperator::new_unchecked_from(st) {
                        seed_dirs.push((rho, tn));
                    }
                }
            }
        }
    }
    for k in 0..8 {
        let rho = crate::opcore::random_state(d, d, opts.seed.wrapping_add(30_000 + k)).unwrap();
        let x = crate::opcore::random_tangent(&rho, opts.seed.wrapping_add(40_000 + k));
        seed_dirs.push((rho, x.matrix().clone()));
    }

    // collinear families gamma = rho + eps X with eps set relative to the
    // base state's smallest eigenvalue (guarding float cancellation)
    for (rho, x) in &seed_dirs {
        let (xvals, _) = eigh(x);
        let xnorm = xvals.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        if xnorm < 1e-14 {
            continue;
        }
        let lam = rho.min_eig().max(SUPPORT_CUTOFF);
        for c in [1e-1, 1e-2, 1e-3, 1e-4] {
            let eps = c * lam / xnorm;
            if eps < 1e-7 {
                continue;
            }
            let gm = rho.matrix() + x.scale(eps);
            if let Ok(gamma) = DensityOperator::new_unchecked_from(gm) {
                if gamma.support_rank() == d {
                    pairs.push((rho.clone(), gamma));
                }
            }
        }
    }

    // radial boundary pairs approaching the boundary along pure
    // directions: ((1-d) psi + d I/d, (1-kd) psi + kd I/d)
    let mut pure_dirs: Vec<CMat> = structured_pure_vectors(d)
        .iter()
        .map(|v| v * v.adjoint())
        .collect();
    for (rho, _) in seed_dirs.iter().take(4) {
        let (vals, vecs) = eigh(rho.matrix());
        let top = vecs.column(vals.len() - 1);
        pure_dirs.push(&top * top.adjoint());
    }
    for k in 0..opts.boundary_directions.min(24) {
        let v = crate::opcore::random_pure_vector(d, opts.seed.wrapping_add(50_000 + k as u64));
        pure_dirs.push(&v * v.adjoint());
    }
    for psi in &pure_dirs {
        for &delta in &[1e-2, 1e-3, 1e-4, 1e-5] {
            for kfac in [2.0, 4.0] {
                pairs.push((blend(psi, delta), blend(psi, kfac * delta)));
            }
        }
    }

    let total = pairs.len();
    let evals: Vec<Option<(f64, usize)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (rho, gamma))| pair_ratio(f, n, m, rho, gamma).map(|v| (v, i)))
        .collect();
    let skipped = evals.iter().filter(|e| e.is_none()).count();
    let better = |a: f64, b: f64| match mode {
        Mode::Inf => a < b,
        Mode::Sup => a > b,
    };
    let mut ranked: Vec<(f64, usize)> = evals.into_iter().flatten().collect();
    if ranked.is_empty() {
        return Err(CoeffError::DegenerateSubspace);
    }
    ranked.sort_by(|a, b| {
        let ord = a.0.partial_cmp(&b.0).unwrap();
        match mode {
            Mode::Inf => ord.then(a.1.cmp(&b.1)),
            Mode::Sup => ord.reverse().then(a.1.cmp(&b.1)),
        }
    });
    let mut best = ranked[0];

    // pairwise Nelder-Mead refinement
    let sign = match mode {
        Mode::Inf => 1.0,
        Mode::Sup => -1.0,
    };
    let mut refinements = 0;
    for &(_, idx) in ranked.iter().take(opts.refine_from_best.min(4)) {
        refinements += 1;
        let (r0, g0) = &pairs[idx];
        let mut x0 = state_params(r0);
        x0.extend(state_params(g0));
        let half = x0.len() / 2;
        let res = nelder_mead(
            |params| {
                let rho = params_to_state(d, &params[..half]);
                let gamma = params_to_state(d, &params[half..]);
                match (rho, gamma) {
                    (Some(r), Some(g)) => {
                        pair_ratio(f, n, m, &r, &g).map_or(f64::INFINITY, |v| sign * v)
                    }
                    _ => f64::INFINITY,
                }
            },
            &x0,
            0.3,
            400,
            opts.tol * 1e-3,
        );
        if res.fx.is_finite() && better(sign * res.fx, best.0) {
            best = (sign * res.fx, idx);
        }
    }
    let (wr, wg) = &pairs[best.1];
    Ok(CoefficientEstimate {
        value: best.0,
        direction: match mode {
            Mode::Inf => Direction::UpperBoundOfInf,
            Mode::Sup => Direction::LowerBoundOfSup,
        },
        witness: Witness {
            states: vec![
                MatrixJson::from_cmat(wr.matrix()),
                MatrixJson::from_cmat(wg.matrix()),
            ],
            tangent: None,
        },
        diagnostics: Diagnostics {
            probes: total,
            skipped,
            refinements,
            converged: true,
            seed: opts.seed,
        },
    })
}

// ---------------------------------------------------------------------
// closed-form bounds
// ---------------------------------------------------------------------

/// Equivalence bound calculators: each returns the theorem's (alpha,
/// beta) with 0 < alpha <= beta.
#[derive(Debug, Clone)]
pub enum EquivalenceKind {
    /// (alpha, beta) = (a^2 gamma / b^2, min(b^2 delta / a^2, 1)) from a
    /// sandwich a f <= g <= b f and an assumed equivalence (gamma, delta).
    Inheritance { a: f64, b: f64, gamma: f64, delta: f64 },
    /// grid sup/inf of f/g with analytic endpoints; requires both
    /// induced kernels bounded.
    BoundedDivergences { f: FSpec, g: FSpec },
    /// (2 / kappa_g(0+), kappa_f(0+) / 2); requires both bounded.
    BoundedMetrics { kf: KappaSpec, kg: KappaSpec },
    /// alpha = kappa(1/lambda) for strictly positive channels.
    StrictlyPositiveRiem { kappa: KappaSpec, lambda: f64 },
    /// via nu_f(x) = (f(x) - f'(1)(x-1)) / (x-1)^2.
    StrictlyPositiveDiv { f: FSpec, lambda: f64 },
    /// (lambda_min(M)/lambda_max(N), lambda_max(M)/lambda_min(N)).
    Schatten2Sandwich {
        lambda_min_m: f64,
        lambda_max_m: f64,
        lambda_min_n: f64,
        lambda_max_n: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceBounds {
    pub alpha: f64,
    pub beta: f64,
}

/// nu_f(x) = (f(x) - f'(1)(x-1)) / (x-1)^2, decreasing and strictly
/// positive for f in F.
pub fn nu_f(f: &FSpec, x: f64) -> CoeffResult<f64> {
    let u = x - 1.0;
    if u.abs() < 1e-6 {
        // nu_f(1) = f''(1)/2
        return Ok(0.5 * f.fpp1());
    }
    Ok((f.eval(x)? - f.fprime1() * u) / (u * u))
}

pub fn equivalence_bounds(kind: &EquivalenceKind) -> CoeffResult<EquivalenceBounds> {
    let out = match kind {
        EquivalenceKind::Inheritance { a, b, gamma, delta } => {
            if *a <= 0.0 || *b < *a {
                return Err(CoeffError::HypothesisFailed(format!(
                    "need 0 < a <= b, got ({a}, {b})"
                )));
            }
            EquivalenceBounds {
                alpha: a * a * gamma / (b * b),
                beta: (b * b * delta / (a * a)).min(1.0),
            }
        }
        EquivalenceKind::BoundedDivergences { f, g } => {
            let (kf, kg) = (f.induced_kappa()?, g.induced_kappa()?);
            if !kf.is_bounded() || !kg.is_bounded() {
                return Err(CoeffError::UnboundedKernel);
            }
            // normalise away the linear parts before forming f/g
            let fv = |x: f64| f.eval(x).map(|v| v - f.fprime1() * (x - 1.0));
            let gv = |x: f64| g.eval(x).map(|v| v - g.fprime1() * (x - 1.0));
            let mut lo = f.fpp1() / g.fpp1();
            let mut hi = lo;
            for k in 0..=512 {
                let x = 10f64.powf(-8.0 + 16.0 * k as f64 / 512.0);
                if (x - 1.0).abs() < 1e-6 {
                    continue;
                }
                let r = fv(x)? / gv(x)?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            // analytic endpoints x -> 0+ and x -> inf
            let ends = [
                (f.limits().f0, g.limits().f0),
                (f.limits().fprime_inf, g.limits().fprime_inf),
            ];
            for (a, b) in ends {
                if let (LimitValue::Finite(a), LimitValue::Finite(b)) = (a, b) {
                    // subtracting the linear part shifts the endpoint data:
                    // f(0+) - f'(1)(0-1) = f(0+) + f'(1)
                    let r = a / b;
                    if r.is_finite() && r > 0.0 {
                        lo = lo.min(r);
                        hi = hi.max(r);
                    }
                }
            }
            EquivalenceBounds { alpha: lo, beta: hi }
        }
        EquivalenceKind::BoundedMetrics { kf, kg } => {
            let (z_f, z_g) = (kf.zero_limit(), kg.zero_limit());
            match (z_f, z_g) {
                (LimitValue::Finite(zf), LimitValue::Finite(zg)) => EquivalenceBounds {
                    alpha: 2.0 / zg,
                    beta: zf / 2.0,
                },
                _ => return Err(CoeffError::UnboundedKernel),
            }
        }
        EquivalenceKind::StrictlyPositiveRiem { kappa, lambda } => {
            if *lambda <= 0.0 {
                return Err(CoeffError::HypothesisFailed(
                    "lambda must be positive".into(),
                ));
            }
            let a = kappa.eval(1.0 / lambda)?;
            EquivalenceBounds {
                alpha: a,
                beta: 1.0 / a,
            }
        }
        EquivalenceKind::StrictlyPositiveDiv { f, lambda } => {
            if *lambda <= 0.0 {
                return Err(CoeffError::HypothesisFailed(
                    "lambda must be positive".into(),
                ));
            }
            let hi = nu_f(f, *lambda)?;
            let lo = nu_f(f, 1.0 / lambda)?;
            EquivalenceBounds {
                alpha: lo / hi,
                beta: hi / lo,
            }
        }
        EquivalenceKind::Schatten2Sandwich {
            lambda_min_m,
            lambda_max_m,
            lambda_min_n,
            lambda_max_n,
        } => {
            if *lambda_min_n <= 0.0 || *lambda_max_n <= 0.0 {
                return Err(CoeffError::HypothesisFailed(
                    "channel extremes must be positive".into(),
                ));
            }
            EquivalenceBounds {
                alpha: lambda_min_m / lambda_max_n,
                beta: lambda_max_m / lambda_min_n,
            }
        }
    };
    if !(out.alpha > 0.0 && out.alpha <= out.beta + 1e-12) {
        return Err(CoeffError::HypothesisFailed(format!(
            "bounds out of order: ({}, {})",
            out.alpha, out.beta
        )));
    }
    Ok(out)
}

/// Closed-form lower bounds on relative expansion coefficients for the
/// named qubit families, with numerical hypothesis checks.
#[derive(Debug, Clone)]
pub enum FamilyBoundKind {
    /// kappa_max bound for dephasing pairs, p2 < p1.
    Dephasing { p1: f64, p2: f64 },
    /// kappa_max bound for amplitude damping pairs, g2 < g1.
    AmplitudeDamping { g1: f64, g2: f64 },
    /// generalised dephasing with (1-eps) Gamma <= Gamma' <= (1+eps) Gamma.
    GeneralizedDephasing {
        gamma: CMat,
        gamma_prime: CMat,
        eps: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyLowerBound {
    pub bound: f64,
    pub hypotheses_ok: bool,
}

fn psd_check(m: &CMat, tol: f64) -> bool {
    let h = (m + m.adjoint()).scale(0.5);
    let (vals, _) = eigh(&h);
    vals[0] > -tol
}

pub fn family_lower_bounds(kind: &FamilyBoundKind) -> FamilyLowerBound {
    match kind {
        FamilyBoundKind::Dephasing { p1, p2 } => {
            let hypotheses_ok = 0.0 < *p2 && p2 < p1 && *p1 < 1.0;
            let ratio = (1.0 - p1) / (1.0 - p2);
            let bound =
                ratio * ratio * 1.0_f64.min(p2 * (2.0 - p2) / (p1 * (2.0 - p1)));
            FamilyLowerBound {
                bound,
                hypotheses_ok,
            }
        }
        FamilyBoundKind::AmplitudeDamping { g1, g2 } => {
            let hypotheses_ok = 0.0 < *g2 && g2 < g1 && *g1 < 1.0;
            let bound = (1.0 - g1) / (1.0 - g2) * 1.0_f64.min(g2 / g1);
            FamilyLowerBound {
                bound,
                hypotheses_ok,
            }
        }
        FamilyBoundKind::GeneralizedDephasing {
            gamma,
            gamma_prime,
            eps,
        } => {
            let e = *eps;
            let bound = if e < 0.5 {
                (1.0 - 2.0 * e) * (1.0 - e) / ((1.0 + 2.0 * e) * (1.0 + e))
            } else {
                0.0
            };
            let mut ok = e > 0.0 && e < 0.5;
            let tol = 1e-10;
            ok &= psd_check(&(gamma_prime - gamma.scale(1.0 - e)), tol);
            ok &= psd_check(&(gamma.scale(1.0 + e) - gamma_prime), tol);
            // the correction matrix Gamma^ must be an admissible parameter
            let d = gamma.nrows();
            let mut ghat = CMat::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let gp = gamma_prime[(i, j)];
                    if gp.norm() < 1e-14 {
                        ghat[(i, j)] = C64::new(0.0, 0.0);
                    } else {
                        ghat[(i, j)] = (gp - gamma[(i, j)] * C64::new(1.0 - e, 0.0))
                            / (gp * C64::new(e, 0.0));
                    }
                }
            }
            ok &= psd_check(&ghat, tol);
            for i in 0..d {
                ok &= (ghat[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-8;
            }
            for i in 0..d {
                for j in 0..d {
                    let v = ghat[(i, j)];
                    ok &= v.im.abs() < 1e-8 && v.re > -1e-10 && v.re < 1.0 + 1e-10;
                }
            }
            FamilyLowerBound {
                bound,
                hypotheses_ok: ok,
            }
        }
    }
}
