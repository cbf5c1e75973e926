//! Classical, standard, and maximal f-divergences, the chi^2 Riemannian
//! semi-norms (spectral and qubit closed forms), the second-order local
//! limit, and the integral-relation cross-checks.
//!
//! Equal support is required for the standard and maximal evaluators;
//! unequal-support queries error instead of silently applying
//! f(0+)/f'(inf) conventions, since every coefficient downstream assumes
//! supp(rho) = supp(gamma).

use crate::funcs::{FSpec, FuncError, KappaSpec};
use crate::numeric::{extrapolate_to_zero, gauss_legendre_on};
use crate::opcore::{
    eigh, hs_inner_raw, make_tangent, CMat, DensityOperator, HermitianMatrix, OpError,
    TangentVector, C64, SUPPORT_CUTOFF,
};
use thiserror::Error;

/// Support projectors must agree within this tolerance for two states to
/// count as equal-support.
pub const SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DivError {
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("probability vectors invalid: {0}")]
    BadProbabilityVector(String),
    #[error("epsilon grid leaves the state space at eps = {0}")]
    GridLeavesStateSpace(f64),
    #[error("pure base state (|w| = {0}) with no finite semi-norm")]
    PureStateBase(f64),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Op(#[from] OpError),
}

pub type DivResult<T> = Result<T, DivError>;

/// A divergence evaluation: nonnegative value (or an infinite flag) plus
/// the count of zero-eigenvalue pairs handled by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: f64,
    pub infinite: bool,
    pub terms_skipped: usize,
}

impl DivergenceValue {
    fn finite(value: f64, terms_skipped: usize) -> Self {
        Self {
            value,
            infinite: false,
            terms_skipped,
        }
    }
}

/// Classical f-divergence sum_y q(y) f(p(y)/q(y)) over distributions of
/// equal support; zero-zero coordinates contribute 0.
pub fn classical_f_div(f: &FSpec, p: &[f64], q: &[f64]) -> DivResult<DivergenceValue> {
    if p.len() != q.len() {
        return Err(DivError::BadProbabilityVector(format!(
            "lengths {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if v.iter().any(|&x| x < -1e-12) {
            return Err(DivError::BadProbabilityVector(format!("{name} has negative entries")));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(DivError::BadProbabilityVector(format!("{name} sums to {s}")));
        }
    }
    let mut total = 0.0;
    let mut skipped = 0;
    for (&pi, &qi) in p.iter().zip(q) {
        let pz = pi <= SUPPORT_CUTOFF;
        let qz = qi <= SUPPORT_CUTOFF;
        match (pz, qz) {
            (true, true) => skipped += 1,
            (false, false) => total += qi * f.eval(pi / qi)?,
            _ => {
                return Err(DivError::SupportMismatch(format!(
                    "coordinate with p = {pi:.3e}, q = {qi:.3e}"
                )))
            }
        }
    }
    Ok(DivergenceValue::finite(total.max(0.0), skipped))
}

fn check_equal_support(rho: &DensityOperator, gamma: &DensityOperator) -> DivResult<()> {
    if rho.dim() != gamma.dim() {
        return Err(DivError::SupportMismatch(format!(
            "dimensions {} vs {}",
            rho.dim(),
            gamma.dim()
        )));
    }
    if rho.support_rank() != gamma.support_rank() {
        return Err(DivError::SupportMismatch(format!(
            "ranks {} vs {}",
            rho.support_rank(),
            gamma.support_rank()
        )));
    }
    let d = (rho.support_projector() - gamma.support_projector()).norm();
    if d > SUPPORT_TOL {
        return Err(DivError::SupportMismatch(format!(
            "support projectors differ by {d:.3e}"
        )));
    }
    Ok(())
}

/// Standard f-divergence via the spectral form
/// sum_{a,b} b f(a/b) Tr(P_a Q_b) over supported eigenvalues.
pub fn standard_f_div(
    f: &FSpec,
    rho: &DensityOperator,
    gamma: &DensityOperator,
) -> DivResult<DivergenceValue> {
    check_equal_support(rho, gamma)?;
    let sr = rho.spectral();
    let sg = gamma.spectral();
    let mut total = 0.0;
    let mut skipped = 0;
    for (&a, pa) in sr.eigenvalues.iter().zip(&sr.projectors) {
        for (&b, qb) in sg.eigenvalues.iter().zip(&sg.projectors) {
            if a <= SUPPORT_CUTOFF || b <= SUPPORT_CUTOFF {
                skipped += 1;
                continue;
            }
            let overlap = hs_inner_raw(pa, qb).re.max(0.0);
            if overlap > 0.0 {
                total += b * f.eval(a / b)? * overlap;
            }
        }
    }
    Ok(DivergenceValue::finite(total.max(0.0), skipped))
}

/// Maximal f-divergence Tr gamma f(gamma^{-1/2} rho gamma^{-1/2})
/// evaluated on the support of gamma.
pub fn maximal_f_div(
    f: &FSpec,
    rho: &DensityOperator,
    gamma: &DensityOperator,
) -> DivResult<DivergenceValue> {
    check_equal_support(rho, gamma)?;
    // Work in the support basis of gamma.
    let (gvals, gvecs) = eigh(gamma.matrix());
    let idx: Vec<usize> = (0..gamma.dim())
        .filter(|&i| gvals[i] > SUPPORT_CUTOFF)
        .collect();
    let r = idx.len();
    let mut v = CMat::zeros(gamma.dim(), r);
    for (k, &i) in idx.iter().enumerate() {
        v.set_column(k, &gvecs.column(i));
    }
    let lam: Vec<f64> = idx.iter().map(|&i| gvals[i]).collect();
    let rho_r = v.adjoint() * rho.matrix() * &v;
    let mut m = CMat::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            m[(i, j)] = rho_r[(i, j)] / C64::new((lam[i] * lam[j]).sqrt(), 0.0);
        }
    }
    let (mvals, mvecs) = eigh(&m);
    let mut gamma_r = CMat::zeros(r, r);
    for (i, &l) in lam.iter().enumerate() {
        gamma_r[(i, i)] = C64::new(l, 0.0);
    }
    let mut total = 0.0;
    let mut skipped = 0;
    for (k, &mv) in mvals.iter().enumerate() {
        if mv <= SUPPORT_CUTOFF {
            // equal support makes m positive definite; tiny eigenvalues
            // here are numerical and carry negligible gamma-weight
            skipped += 1;
            continue;
        }
        let u = mvecs.column(k);
        let w = (u.adjoint() * &gamma_r * u)[(0, 0)].re.max(0.0);
        total += w * f.eval(mv)?;
    }
    Ok(DivergenceValue::finite(total.max(0.0), skipped))
}

/// chi^2 Riemannian semi-norm |X|^2_{kappa, rho} =
/// sum_{a,b} b^{-1} kappa(a/b) Tr(X P_a X P_b) over the support.
pub fn chi2_seminorm(
    kappa: &KappaSpec,
    rho: &DensityOperator,
    x: &TangentVector,
) -> DivResult<DivergenceValue> {
    // re-verify the support condition against this rho
    make_tangent(rho, x.hermitian(), 1e-8)
        .map_err(|e| DivError::SupportViolation(e.to_string()))?;
    chi2_seminorm_raw(kappa, rho, x.matrix())
}

/// The same spectral sum without the tangent re-validation; used by the
/// internal solvers on matrices known to be supported correctly.
pub fn chi2_seminorm_raw(
    kappa: &KappaSpec,
    rho: &DensityOperator,
    x: &CMat,
) -> DivResult<DivergenceValue> {
    let (vals, vecs) = eigh(rho.matrix());
    let xt = vecs.adjoint() * x * &vecs;
    let d = rho.dim();
    let mut total = 0.0;
    let mut skipped = 0;
    for alpha in 0..d {
        for beta in 0..d {
            let a = vals[alpha];
            let b = vals[beta];
            let w2 = xt[(alpha, beta)].norm_sqr();
            if a <= SUPPORT_CUTOFF || b <= SUPPORT_CUTOFF {
                if w2 > 1e-20 {
                    skipped += 1;
                }
                continue;
            }
            if w2 > 0.0 {
                total += kappa.eval(a / b)? / b * w2;
            }
        }
    }
    Ok(DivergenceValue::finite(total.max(0.0), skipped))
}

/// Qubit closed form of the chi^2 semi-norm in Bloch coordinates.
///
/// `w` is the Bloch vector of the base state rho = (I + w.sigma)/2 and
/// `y` holds the coordinates of X in the orthonormal Pauli basis
/// sigma_i / sqrt(2). With h the kernel's Bloch profile the value is
///
///   2 |y|^2 / (1 - |w|^2) * (h(|w|^2) + (1 - h(|w|^2)) cos^2 theta),
///
/// cos theta = |w.y| / (|w||y|), taken as 0 when w = 0.
pub fn qubit_chi2_closed_form(
    kappa: &KappaSpec,
    w: &[f64; 3],
    y: &[f64; 3],
) -> DivResult<DivergenceValue> {
    if !kappa.has_mixing_measure() {
        return Err(DivError::Func(FuncError::UnknownMeasure));
    }
    let w2 = w.iter().map(|v| v * v).sum::<f64>();
    let y2 = y.iter().map(|v| v * v).sum::<f64>();
    if w2 >= 1.0 - 1e-12 {
        return Err(DivError::PureStateBase(w2.sqrt()));
    }
    if y2 == 0.0 {
        return Ok(DivergenceValue::finite(0.0, 0));
    }
    let h = kappa.h(w2)?;
    let cos2 = if w2 < 1e-28 {
        0.0
    } else {
        let dot: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
        (dot * dot) / (w2 * y2)
    };
    let value = 2.0 * y2 / (1.0 - w2) * (h + (1.0 - h) * cos2);
    Ok(DivergenceValue::finite(value, 0))
}

/// Richardson-extrapolated limit of 2 eps^{-2} D_f(rho || rho + eps X)
/// over the supplied epsilon grid; equals f''(1) |X|^2_{kappa_f, rho}
/// on full-rank bases.
pub fn second_order_limit(
    f: &FSpec,
    rho: &DensityOperator,
    x: &TangentVector,
    eps_grid: &[f64],
) -> DivResult<f64> {
    let mut hs = Vec::with_capacity(eps_grid.len());
    let mut vs = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let pert = HermitianMatrix::symmetrize(rho.matrix() + x.matrix().scale(eps));
        let gamma = DensityOperator::validate(pert, 1e-9)
            .map_err(|_| DivError::GridLeavesStateSpace(eps))?;
        if gamma.support_rank() != rho.support_rank() {
            return Err(DivError::GridLeavesStateSpace(eps));
        }
        let d = standard_f_div(f, rho, &gamma)?;
        hs.push(eps);
        vs.push(2.0 / (eps * eps) * d.value);
    }
    Ok(extrapolate_to_zero(&hs, &vs))
}

/// Left-hand and right-hand sides of the classical integral relation
///
///   D_f(rho||gamma) = c |X|^2_{k,gamma} + mu0 |X|^2_{k,rho}
///     + sum_j w_j/(1+t_j) |X|^2_{k, gamma + X/(1+t_j)}
///     + int_0^1 g(u) |X|^2_{k, gamma + (1-u) X} du,      X = rho - gamma,
///
/// valid for commuting pairs; `nodes` Gauss-Legendre points evaluate the
/// density part.
pub fn classical_integral_relation(
    f: &FSpec,
    kappa: &KappaSpec,
    rho: &DensityOperator,
    gamma: &DensityOperator,
    nodes: usize,
) -> DivResult<(f64, f64)> {
    let data = f
        .classical_integral_data()
        .ok_or(FuncError::UnsupportedCustom)?;
    let lhs = standard_f_div(f, rho, gamma)?.value;
    let x = rho.matrix() - gamma.matrix();

    let seminorm_at = |state_matrix: CMat| -> DivResult<f64> {
        let st = DensityOperator::new_unchecked_from(state_matrix)?;
        Ok(chi2_seminorm_raw(kappa, &st, &x)?.value)
    };

    let mut rhs = 0.0;
    if data.c != 0.0 {
        rhs += data.c * chi2_seminorm_raw(kappa, gamma, &x)?.value;
    }
    if data.mu0 != 0.0 {
        rhs += data.mu0 * chi2_seminorm_raw(kappa, rho, &x)?.value;
    }
    for &(t, w) in &data.atoms {
        let base = gamma.matrix() + x.scale(1.0 / (1.0 + t));
        rhs += w / (1.0 + t) * seminorm_at(base)?;
    }
    if let Some(dens) = data.density {
        let (us, ws) = gauss_legendre_on(nodes, 0.0, 1.0);
        for (&u, &wu) in us.iter().zip(&ws) {
            let g = dens.alpha * u + dens.beta * (1.0 - u);
            if g == 0.0 {
                continue;
            }
            let base = gamma.matrix() + x.scale(1.0 - u);
            rhs += wu * g * seminorm_at(base)?;
        }
    }
    Ok((lhs, rhs))
}

/// Nested-quadrature evaluation of the relative-entropy double integral
///
///   int_0^1 int_0^s |rho - gamma|^2_{BKM, rho_t} dt ds,
///   rho_t = (1-t) gamma + t rho,
///
/// which reproduces D(rho||gamma) on full-rank pairs.
pub fn relative_entropy_double_integral(
    rho: &DensityOperator,
    gamma: &DensityOperator,
    nodes: usize,
) -> DivResult<f64> {
    let x = rho.matrix() - gamma.matrix();
    let bkm = KappaSpec::Bkm;
    let seminorm_at_t = |t: f64| -> DivResult<f64> {
        let base = gamma.matrix().scale(1.0 - t) + rho.matrix().scale(t);
        let st = DensityOperator::new_unchecked_from(base)?;
        Ok(chi2_seminorm_raw(&bkm, &st, &x)?.value)
    };
    let (ss, ws) = gauss_legendre_on(nodes, 0.0, 1.0);
    let mut total = 0.0;
    for (&s, &wo) in ss.iter().zip(&ws) {
        let (ts, wt) = gauss_legendre_on(nodes, 0.0, s);
        let mut inner = 0.0;
        for (&t, &wi) in ts.iter().zip(&wt) {
            inner += wi * seminorm_at_t(t)?;
        }
        total += wo * inner;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{pauli_x, pauli_z, random_state, random_tangent};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn diag_state(entries: &[f64]) -> DensityOperator {
        let d = entries.len();
        let mut m = CMat::zeros(d, d);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        DensityOperator::new_unchecked_from(m).unwrap()
    }

    #[test]
    fn classical_examples() {
        let eq = classical_f_div(&FSpec::Xlogx, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(eq.value, 0.0, epsilon = 1e-14);

        let kl = classical_f_div(&FSpec::Xlogx, &[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let oracle = 0.25 * 2.0 * 2.0_f64.ln() + 0.75 * (2.0 / 3.0) * (2.0_f64 / 3.0).ln();
        assert_abs_diff_eq!(kl.value, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(kl.value, 0.143841, epsilon = 1e-6);

        let chi = classical_f_div(&FSpec::Square, &[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(chi.value, 0.0625 / 0.25 + 0.0625 / 0.75, epsilon = 1e-12);

        assert!(classical_f_div(&FSpec::Xlogx, &[1.0, 0.0], &[0.5, 0.5]).is_err());
        let z = classical_f_div(&FSpec::Xlogx, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(z.terms_skipped, 1);
    }

    #[test]
    fn standard_examples() {
        let rho = random_state(3, 3, 1).unwrap();
        let same = standard_f_div(&FSpec::Xlogx, &rho, &rho).unwrap();
        assert_abs_diff_eq!(same.value, 0.0, epsilon = 1e-11);

        let a = diag_state(&[0.5, 0.5]);
        let b = diag_state(&[0.25, 0.75]);
        let v = standard_f_div(&FSpec::Xlogx, &a, &b).unwrap();
        assert_abs_diff_eq!(v.value, 0.143841, epsilon = 1e-6);
    }

    #[test]
    fn standard_unitary_covariance() {
        use crate::opcore::ginibre;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = ginibre(&mut rng, 3, 3);
        let qr = g.qr();
        let u = qr.q();
        let rho = random_state(3, 3, 21).unwrap();
        let gam = random_state(3, 3, 22).unwrap();
        let ur = DensityOperator::new_unchecked_from(&u * rho.matrix() * u.adjoint()).unwrap();
        let ug = DensityOperator::new_unchecked_from(&u * gam.matrix() * u.adjoint()).unwrap();
        let v0 = standard_f_div(&FSpec::Xlogx, &rho, &gam).unwrap().value;
        let v1 = standard_f_div(&FSpec::Xlogx, &ur, &ug).unwrap().value;
        assert_abs_diff_eq!(v0, v1, epsilon = 1e-10);
    }

    #[test]
    fn maximal_examples() {
        let rho = random_state(2, 2, 3).unwrap();
        assert_abs_diff_eq!(
            maximal_f_div(&FSpec::Square, &rho, &rho).unwrap().value,
            0.0,
            epsilon = 1e-11
        );
        let a = diag_state(&[0.7, 0.3]);
        let b = diag_state(&[0.5, 0.5]);
        assert_abs_diff_eq!(
            maximal_f_div(&FSpec::Square, &a, &b).unwrap().value,
            0.16,
            epsilon = 1e-12
        );
    }

    #[test]
    fn maximal_dominates_standard() {
        for seed in 0..24 {
            let rho = random_state(2, 2, 1000 + seed).unwrap();
            let gam = random_state(2, 2, 2000 + seed).unwrap();
            for f in [FSpec::Xlogx, FSpec::Square, FSpec::Fs { s: 0.5 }] {
                let s = standard_f_div(&f, &rho, &gam).unwrap().value;
                let m = maximal_f_div(&f, &rho, &gam).unwrap().value;
                assert!(m >= s - 1e-10, "maximality violated: {m} < {s}");
            }
        }
    }

    #[test]
    fn commuting_reduction() {
        let p = [0.6, 0.3, 0.1];
        let q = [0.2, 0.5, 0.3];
        let rho = diag_state(&p);
        let gam = diag_state(&q);
        for f in [FSpec::Xlogx, FSpec::Square, FSpec::Fs { s: 0.3 }] {
            let cl = classical_f_div(&f, &p, &q).unwrap().value;
            let st = standard_f_div(&f, &rho, &gam).unwrap().value;
            let mx = maximal_f_div(&f, &rho, &gam).unwrap().value;
            assert_abs_diff_eq!(st, cl, epsilon = 1e-10);
            assert_abs_diff_eq!(mx, cl, epsilon = 1e-10);
        }
    }

    #[test]
    fn transpose_swaps_arguments() {
        for seed in 0..8 {
            let rho = random_state(3, 3, 500 + seed).unwrap();
            let gam = random_state(3, 3, 600 + seed).unwrap();
            for f in [FSpec::Xlogx, FSpec::Square, FSpec::Fs { s: 0.8 }] {
                let t = f.transpose();
                let a = standard_f_div(&t, &rho, &gam).unwrap().value;
                let b = standard_f_div(&f, &gam, &rho).unwrap().value;
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn chi2_examples() {
        let half = DensityOperator::maximally_mixed(2);
        let zero = make_tangent(&half, &HermitianMatrix::zeros(2), 1e-10).unwrap();
        assert_abs_diff_eq!(
            chi2_seminorm(&KappaSpec::Max, &half, &zero).unwrap().value,
            0.0,
            epsilon = 1e-14
        );
        let x = make_tangent(&half, &pauli_z().scale(0.5), 1e-10).unwrap();
        assert_abs_diff_eq!(
            chi2_seminorm(&KappaSpec::Max, &half, &x).unwrap().value,
            1.0,
            epsilon = 1e-12
        );
        // kernel envelope on random instances
        for seed in 0..16 {
            let rho = random_state(2, 2, 700 + seed).unwrap();
            let x = random_tangent(&rho, 800 + seed);
            let lo = chi2_seminorm(&KappaSpec::Min, &rho, &x).unwrap().value;
            let hi = chi2_seminorm(&KappaSpec::Max, &rho, &x).unwrap().value;
            assert!(lo <= hi + 1e-10);
        }
    }

    #[test]
    fn chi2_max_equals_trace_form() {
        for seed in 0..16 {
            let rho = random_state(3, 3, 900 + seed).unwrap();
            let x = random_tangent(&rho, 950 + seed);
            let v = chi2_seminorm(&KappaSpec::Max, &rho, &x).unwrap().value;
            let rho_inv = rho.apply_on_support(|a| 1.0 / a);
            let oracle = (x.matrix() * rho_inv * x.matrix()).trace().re;
            assert_abs_diff_eq!(v, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn chi2_support_violation_detected() {
        let pure = DensityOperator::pure(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let half = DensityOperator::maximally_mixed(2);
        let x = make_tangent(&half, &pauli_x(), 1e-10).unwrap();
        assert!(chi2_seminorm(&KappaSpec::Min, &pure, &x).is_err());
    }

    #[test]
    fn closed_form_endpoints() {
        // w = 0: value 2|y|^2 for every kernel with a measure
        for k in [
            KappaSpec::Max,
            KappaSpec::Min,
            KappaSpec::Bkm,
            KappaSpec::Ks { s: 0.3 },
        ] {
            let v = qubit_chi2_closed_form(&k, &[0.0; 3], &[0.3, -0.2, 0.5]).unwrap();
            let y2 = 0.09 + 0.04 + 0.25;
            assert_abs_diff_eq!(v.value, 2.0 * y2, epsilon = 1e-12);
        }
        assert!(matches!(
            qubit_chi2_closed_form(&KappaSpec::Max, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            Err(DivError::PureStateBase(_))
        ));
        assert!(matches!(
            qubit_chi2_closed_form(&KappaSpec::Alpha { a: -0.5 }, &[0.0; 3], &[1.0, 0.0, 0.0]),
            Err(DivError::Func(FuncError::UnknownMeasure))
        ));
    }

    fn bloch_state(w: &[f64; 3]) -> DensityOperator {
        let m = CMat::identity(2, 2).scale(0.5)
            + pauli_x().matrix().scale(0.5 * w[0])
            + pauli_y().matrix().scale(0.5 * w[1])
            + pauli_z().matrix().scale(0.5 * w[2]);
        DensityOperator::new_unchecked_from(m).unwrap()
    }

    use crate::opcore::pauli_y;

    fn pauli_coord_matrix(y: &[f64; 3]) -> CMat {
        let s = 1.0 / 2.0_f64.sqrt();
        pauli_x().matrix().scale(y[0] * s)
            + pauli_y().matrix().scale(y[1] * s)
            + pauli_z().matrix().scale(y[2] * s)
    }

    #[test]
    fn closed_form_matches_spectral() {
        let w = [0.6, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let rho = bloch_state(&w);
        let x = pauli_coord_matrix(&y);
        for k in [
            KappaSpec::Min,
            KappaSpec::Max,
            KappaSpec::Bkm,
            KappaSpec::Ks { s: 0.7 },
        ] {
            let cf = qubit_chi2_closed_form(&k, &w, &y).unwrap().value;
            let sp = chi2_seminorm_raw(&k, &rho, &x).unwrap().value;
            assert_abs_diff_eq!(cf, sp, epsilon = 1e-8);
        }
    }

    #[test]
    fn second_order_examples() {
        let half = DensityOperator::maximally_mixed(2);
        let x = make_tangent(&half, &pauli_z().scale(0.25), 1e-10).unwrap();
        let grid = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let v = second_order_limit(&FSpec::Square, &half, &x, &grid).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-8);

        let zero = make_tangent(&half, &HermitianMatrix::zeros(2), 1e-10).unwrap();
        let v0 = second_order_limit(&FSpec::Square, &half, &zero, &grid).unwrap();
        assert_abs_diff_eq!(v0, 0.0, epsilon = 1e-14);

        let big = make_tangent(&half, &pauli_z().scale(10.0), 1e-10).unwrap();
        assert!(matches!(
            second_order_limit(&FSpec::Square, &half, &big, &grid),
            Err(DivError::GridLeavesStateSpace(_))
        ));
    }

    #[test]
    fn second_order_matches_chi2_randomly() {
        for seed in 0..10 {
            let rho = random_state(2, 2, 3000 + seed).unwrap();
            let x = random_tangent(&rho, 3100 + seed);
            let safe = 0.2 * rho.min_eig()
                / crate::opcore::norms(x.hermitian()).trace_norm.max(1e-12);
            let grid: Vec<f64> = (0..6).map(|k| safe / 2f64.powi(k)).collect();
            let lim = second_order_limit(&FSpec::Xlogx, &rho, &x, &grid).unwrap();
            let chi = chi2_seminorm(&KappaSpec::Bkm, &rho, &x).unwrap().value;
            let rel = (lim - chi).abs() / chi.max(1e-12);
            assert!(rel < 1e-5, "seed {seed}: rel err {rel}");
        }
    }

    #[test]
    fn classical_relation_on_commuting_pairs() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let rho = diag_state(&p);
        let gam = diag_state(&q);
        for f in [
            FSpec::Xlogx,
            FSpec::Square,
            FSpec::Fs { s: 0.5 },
            FSpec::Neglog,
            FSpec::SquareTranspose,
        ] {
            let (lhs, rhs) =
                classical_integral_relation(&f, &KappaSpec::Bkm, &rho, &gam, 200).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-6);
        }
    }

    #[test]
    fn double_integral_reproduces_relative_entropy() {
        let rho = random_state(2, 2, 4000).unwrap();
        let gam = random_state(2, 2, 4001).unwrap();
        let d = standard_f_div(&FSpec::Xlogx, &rho, &gam).unwrap().value;
        let q = relative_entropy_double_integral(&rho, &gam, 200).unwrap();
        assert_abs_diff_eq!(d, q, epsilon = 1e-5);
    }
}
