//! Quantum Markov chain analysis for primitive channels: trajectories
//! against convergence envelopes, and mixing-time bounds.
//!
//! The upper envelope comes from the fixed-reference contraction
//! coefficient eta (sup mode): | N^n(rho) - rho* |_1 <=
//! eta^{n/2} |rho - rho*|_{kappa, rho*}. The lower envelope comes from
//! the fixed-reference expansion coefficient on the image subspace:
//! | N^n(rho) - rho* |_1 >= lambda_min(N^n)^{1/2}
//! eta_check^{(n-M+1)/2} |N^{M-1}(rho) - rho*|_{kappa, rho*} for n >= M.

use crate::channels::{is_primitive, lambda_extremes, Channel, ChannelError};
use crate::coefficients::{column_space, riem_coeff_fixed_ref, CoeffError, Mode};
use crate::divergences::{chi2_seminorm_raw, DivError};
use crate::funcs::KappaSpec;
use crate::opcore::{trace_norm_raw, DensityOperator, OpError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("channel is not primitive")]
    NotPrimitive,
    #[error("contraction coefficient is 1; no mixing bound")]
    EtaIsOne,
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Div(#[from] DivError),
    #[error(transparent)]
    Op(#[from] OpError),
}

pub type MarkovResult<T> = Result<T, MarkovError>;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub trace_dist: f64,
    pub upper_env: f64,
    pub lower_env: Option<f64>,
}

/// Full convergence report: fixed point, the two fixed-reference
/// coefficients, the per-iteration trajectory with envelopes, and a
/// mixing-time bound at delta = 0.01.
///
/// The lambda_min entering the mixing bound is the smallest eigenvalue
/// of the fixed point rho*.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eta: f64,
    pub eta_check: f64,
    pub m_start: usize,
    pub trajectory: Vec<TrajectoryRow>,
    pub t_mix_bound: usize,
    pub fixed_point_min_eig: f64,
}

/// Smallest m >= 1 with lambda_min(N^m) > 1e-6 and a rank-stabilised
/// transfer image (injectivity on the image subspace).
pub fn auto_start_index(ch: &Channel) -> MarkovResult<usize> {
    let d = ch.d_in();
    let bound = 2 * (d * d - d + 1) + 1;
    let mut rank_prev = usize::MAX;
    for m in 1..=bound {
        let it = ch.iterate(m)?;
        let ext = lambda_extremes(&it);
        let img = column_space(&it.transfer_traceless());
        let rank = img.ncols();
        if ext.lambda_min > 1e-6 && rank == rank_prev {
            return Ok(m);
        }
        rank_prev = rank;
    }
    Err(MarkovError::NotPrimitive)
}

/// Iterate the channel on `rho0` and tabulate the trace distance to the
/// fixed point together with both envelopes.
pub fn convergence_trace(
    ch: &Channel,
    rho0: &DensityOperator,
    kappa: &KappaSpec,
    n_max: usize,
    m_start: Option<usize>,
) -> MarkovResult<ConvergenceReport> {
    let cert = is_primitive(ch, 1e-9)?;
    if !cert.primitive {
        return Err(MarkovError::NotPrimitive);
    }
    let fixed = cert.fixed_point.clone().unwrap();
    let eta = riem_coeff_fixed_ref(kappa, ch, &fixed, Mode::Sup, None)?.value;
    let m_start = match m_start {
        Some(m) => m.max(1),
        None => auto_start_index(ch)?,
    };
    // expansion over the image of transfer^(M-1) restricted to traceless
    let prev = ch.iterate(m_start.saturating_sub(1))?;
    let subspace = column_space(&prev.transfer_traceless());
    let eta_check =
        riem_coeff_fixed_ref(kappa, ch, &fixed, Mode::Inf, Some(&subspace))?.value;

    let x0 = rho0.matrix() - fixed.matrix();
    let norm0 = chi2_seminorm_raw(kappa, &fixed, &x0)?.value.sqrt();
    // |N^{M-1}(rho0) - rho*|_{kappa, rho*} anchors the lower envelope
    let at_m = ch.iterate(m_start - 1)?.apply_state(rho0)?;
    let xm = at_m.matrix() - fixed.matrix();
    let norm_m = chi2_seminorm_raw(kappa, &fixed, &xm)?.value.sqrt();

    let mut rows = Vec::with_capacity(n_max + 1);
    let mut current = rho0.clone();
    for n in 0..=n_max {
        let dist = trace_norm_raw(&(current.matrix() - fixed.matrix()));
        let upper = eta.powf(n as f64 / 2.0) * norm0;
        let lower = if n >= m_start {
            let lam_min_n = lambda_extremes(&ch.iterate(n)?).lambda_min.max(0.0);
            Some(
                lam_min_n.sqrt()
                    * eta_check.powf((n - m_start + 1) as f64 / 2.0)
                    * norm_m,
            )
        } else {
            None
        };
        rows.push(TrajectoryRow {
            n,
            trace_dist: dist,
            upper_env: upper,
            lower_env: lower,
        });
        if n < n_max {
            current = ch.apply_state(&current)?;
        }
    }
    let t_mix = mixing_time_bound(ch, kappa, 0.01)?;
    Ok(ConvergenceReport {
        eta,
        eta_check,
        m_start,
        trajectory: rows,
        t_mix_bound: t_mix.t,
        fixed_point_min_eig: fixed.min_eig(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MixingTimeBound {
    pub t: usize,
    pub eta: f64,
    pub lambda_min_fixed_point: f64,
    pub a_posteriori_ok: bool,
}

/// t_mix <= ceil( ln(2 / (delta^2 lambda_min(rho*))) / ln(1/eta) ),
/// verified a posteriori on 64 random states.
pub fn mixing_time_bound(
    ch: &Channel,
    kappa: &KappaSpec,
    delta: f64,
) -> MarkovResult<MixingTimeBound> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(MarkovError::BadDelta(delta));
    }
    let cert = is_primitive(ch, 1e-9)?;
    if !cert.primitive {
        return Err(MarkovError::NotPrimitive);
    }
    let fixed = cert.fixed_point.clone().unwrap();
    let eta = riem_coeff_fixed_ref(kappa, ch, &fixed, Mode::Sup, None)?.value;
    if eta >= 1.0 - 1e-12 {
        return Err(MarkovError::EtaIsOne);
    }
    let lam = fixed.min_eig();
    let arg = 2.0 / (delta * delta * lam);
    let t = if arg <= 1.0 {
        0
    } else {
        (arg.ln() / (1.0 / eta).ln()).ceil().max(0.0) as usize
    };
    // a posteriori verification on random states
    let powered = ch.iterate(t)?;
    let mut ok = true;
    for seed in 0..64u64 {
        let rho = crate::opcore::random_state(ch.d_in(), ch.d_in(), 40_000 + seed)?;
        let out = powered.apply_state(&rho)?;
        let dist = trace_norm_raw(&(out.matrix() - fixed.matrix()));
        if dist > delta + 1e-9 {
            ok = false;
            break;
        }
    }
    Ok(MixingTimeBound {
        t,
        eta,
        lambda_min_fixed_point: lam,
        a_posteriori_ok: ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bloch_state, build_channel, ChannelSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    #[test]
    fn depolarizing_trace_is_exactly_sandwiched() {
        let p = 0.5;
        let ch = build_channel(&ChannelSpec::Depolarizing { p, d: 2 }).unwrap();
        let w0 = Vector3::new(0.3, -0.5, 0.6);
        let rho0 = bloch_state(&w0);
        let rep = convergence_trace(&ch, &rho0, &KappaSpec::Bkm, 20, None).unwrap();
        assert_abs_diff_eq!(rep.eta, 0.25, epsilon = 1e-10);
        // trajectory = 0.5^n |w0| exactly; the upper envelope coincides
        for row in &rep.trajectory {
            let exact = 0.5_f64.powi(row.n as i32) * w0.norm();
            assert_abs_diff_eq!(row.trace_dist, exact, epsilon = 1e-9);
            assert!(row.trace_dist <= row.upper_env + 1e-9);
            assert_abs_diff_eq!(row.upper_env, exact, epsilon = 1e-9);
            if let Some(lo) = row.lower_env {
                assert!(lo <= row.trace_dist + 1e-9, "n = {}", row.n);
            }
        }
    }

    #[test]
    fn fixed_point_start_gives_zero_trajectory() {
        let ch = build_channel(&ChannelSpec::Depolarizing { p: 0.3, d: 2 }).unwrap();
        let half = DensityOperator::maximally_mixed(2);
        let rep = convergence_trace(&ch, &half, &KappaSpec::Max, 10, None).unwrap();
        for row in rep.trajectory {
            assert!(row.trace_dist < 1e-9);
        }
    }

    #[test]
    fn cq_phi_trajectory_within_envelopes() {
        let ch = build_channel(&ChannelSpec::CqPhi {
            alpha: 0.6,
            tau: 0.6,
        })
        .unwrap();
        let rho0 = bloch_state(&Vector3::new(-0.7, 0.2, 0.1));
        let rep = convergence_trace(&ch, &rho0, &KappaSpec::Min, 50, None).unwrap();
        assert!(rep.eta < 1.0);
        assert!(rep.eta_check <= rep.eta + 1e-12);
        for row in &rep.trajectory {
            assert!(
                row.trace_dist <= row.upper_env + 1e-9,
                "n = {}: {} > {}",
                row.n,
                row.trace_dist,
                row.upper_env
            );
            if let Some(lo) = row.lower_env {
                assert!(
                    lo <= row.trace_dist + 1e-9,
                    "n = {}: lower {} > dist {}",
                    row.n,
                    lo,
                    row.trace_dist
                );
            }
        }
    }

    #[test]
    fn mixing_time_worked_example() {
        // eta = 0.25, lambda_min = 0.5, delta = 0.01:
        // ceil(ln(40000)/ln 4) = 8
        let ch = build_channel(&ChannelSpec::Depolarizing { p: 0.5, d: 2 }).unwrap();
        let b = mixing_time_bound(&ch, &KappaSpec::Bkm, 0.01).unwrap();
        assert_eq!(b.t, 8);
        assert!(b.a_posteriori_ok);

        // loose delta: arg = 4/delta^2 stays above 1 for delta < 1, so
        // the bound bottoms out at ceil(ln 4.0008 / ln 4) = 2
        let b = mixing_time_bound(&ch, &KappaSpec::Bkm, 0.9999).unwrap();
        assert_eq!(b.t, 2);
        assert!(b.a_posteriori_ok);
    }

    #[test]
    fn mixing_time_cq_phi_posterior_check() {
        let ch = build_channel(&ChannelSpec::CqPhi {
            alpha: 0.6,
            tau: 0.6,
        })
        .unwrap();
        let b = mixing_time_bound(&ch, &KappaSpec::Min, 0.05).unwrap();
        assert!(b.a_posteriori_ok, "t = {}", b.t);
    }

    #[test]
    fn non_primitive_rejected() {
        let ch = build_channel(&ChannelSpec::AmplitudeDamping { g: 0.3 }).unwrap();
        let rho0 = DensityOperator::maximally_mixed(2);
        assert!(matches!(
            convergence_trace(&ch, &rho0, &KappaSpec::Max, 5, None),
            Err(MarkovError::NotPrimitive)
        ));
        let h = {
            use crate::opcore::{CMat, MatrixJson, C64};
            let s = 1.0 / 2.0_f64.sqrt();
            let mut m = CMat::zeros(2, 2);
            m[(0, 0)] = C64::new(s, 0.0);
            m[(0, 1)] = C64::new(s, 0.0);
            m[(1, 0)] = C64::new(s, 0.0);
            m[(1, 1)] = C64::new(-s, 0.0);
            build_channel(&ChannelSpec::Unitary {
                u: MatrixJson::from_cmat(&m),
            })
            .unwrap()
        };
        assert!(matches!(
            mixing_time_bound(&h, &KappaSpec::Max, 0.1),
            Err(MarkovError::NotPrimitive)
        ));
    }

    #[test]
    fn fixed_point_residual_small() {
        for spec in [
            ChannelSpec::Depolarizing { p: 0.35, d: 2 },
            ChannelSpec::CqPhi {
                alpha: 0.5,
                tau: 0.7,
            },
            ChannelSpec::Pauli {
                px: 0.15,
                py: 0.1,
                pz: 0.05,
            },
        ] {
            let ch = build_channel(&spec).unwrap();
            let cert = is_primitive(&ch, 1e-9).unwrap();
            let fixed = cert.fixed_point.unwrap();
            let out = ch.apply_state(&fixed).unwrap();
            let resid = (out.matrix() - fixed.matrix()).norm();
            assert!(resid <= 1e-10, "{spec:?}: residual {resid}");
        }
    }
}
