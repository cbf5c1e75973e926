//! Executable witnesses and scans for the headline statements: the
//! no-reverse-DPI family, primitive-channel expansion certificates,
//! equality checks between divergence and Riemannian coefficients, and
//! the bounded/unbounded inequivalence scan.

use crate::channels::{is_primitive, lambda_extremes, Channel};
use crate::coefficients::{
    div_rel_expansion, riem_contraction, riem_rel_expansion, CoeffError, CoefficientEstimate,
    Mode, RelExpOpts,
};
use crate::divergences::{maximal_f_div, standard_f_div, DivError};
use crate::funcs::{FSpec, KappaSpec};
use crate::numeric::loglog_slope;
use crate::opcore::{
    eigh, CMat, DensityOperator, MatrixJson, OpError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("channel is purity-preserving; the witness family does not exist")]
    PurityPreserving,
    #[error("witness search exhausted without a support-compatible pair")]
    NoWitnessFound,
    #[error("channel is not primitive")]
    NotPrimitive,
    #[error("m = {0} too small: lambda_min(N^(m-1)) = {1:.3e} is not positive")]
    MTooSmall(usize, f64),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Div(#[from] DivError),
    #[error(transparent)]
    Func(#[from] crate::funcs::FuncError),
    #[error(transparent)]
    Channel(#[from] crate::channels::ChannelError),
    #[error(transparent)]
    Op(#[from] OpError),
}

pub type CertResult<T> = Result<T, CertError>;

/// One row of a witness-family table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WitnessRow {
    pub eps: f64,
    pub d_in: f64,
    pub d_out: f64,
    pub ratio: f64,
}

/// The no-reverse-DPI witness family: states
/// rho_eps = (1 - eps^2) rho_bar + eps^2 psi,
/// gamma_eps = (1 - eps) rho_bar + eps psi
/// built on a projector / pure-state pair with
/// supp N(psi) <= supp N(rho_bar). The input divergence is Theta(eps)
/// while the output divergence (evaluated through the maximal
/// f-divergence upper bound) is o(eps).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessFamily {
    pub projector: MatrixJson,
    pub psi: MatrixJson,
    pub rows: Vec<WitnessRow>,
    /// log-log slope of the input divergence against eps
    pub input_slope: f64,
    /// D_in / eps at the smallest eps: estimates f'(1) + f(0+)
    pub input_rate: f64,
    /// log-log slope of the output divergence against eps
    pub output_slope: f64,
}

fn purity_preserving(ch: &Channel, seed: u64) -> bool {
    let d = ch.d_in();
    for k in 0..64u64 {
        let v = crate::opcore::random_pure_vector(d, seed.wrapping_add(k));
        let psi = DensityOperator::pure(&v);
        let out = match ch.apply_state(&psi) {
            Ok(o) => o,
            Err(_) => return false,
        };
        let purity = (out.matrix() * out.matrix()).trace().re;
        if purity < 1.0 - 1e-9 {
            return false;
        }
    }
    true
}

fn support_projector_of(m: &CMat) -> (CMat, usize) {
    let (vals, vecs) = eigh(m);
    let d = m.nrows();
    let mut p = CMat::zeros(d, d);
    let mut rank = 0;
    let top = vals.iter().fold(0.0_f64, |a, &b| a.max(b.abs())).max(1e-300);
    for (i, &v) in vals.iter().enumerate() {
        if v > 1e-10 * top {
            let col = vecs.column(i);
            p += col * col.adjoint();
            rank += 1;
        }
    }
    (p, rank)
}

/// Largest eigenvalue of (I - P) M (I - P): the off-support mass of M
/// relative to the projector P.
fn off_support_mass(m: &CMat, p: &CMat) -> f64 {
    let d = m.nrows();
    let q = CMat::identity(d, d) - p;
    let blocked = &q * m * &q;
    let (vals, _) = eigh(&blocked);
    vals.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

/// Search for (P_A, psi) with psi orthogonal to P_A and
/// supp N(psi) <= supp N(P_A / rk P_A), then tabulate the family over
/// the epsilon grid.
pub fn no_rdpi_witness(
    ch: &Channel,
    f: &FSpec,
    eps_grid: &[f64],
    seed: u64,
) -> CertResult<WitnessFamily> {
    let d_a = ch.d_in();
    let d_b = ch.d_out();
    if d_b > d_a {
        return Err(CertError::NoWitnessFound);
    }
    if purity_preserving(ch, seed) {
        return Err(CertError::PurityPreserving);
    }

    // candidate frames: the computational basis first, then random
    // orthonormal frames
    let mut frames: Vec<CMat> = vec![CMat::identity(d_a, d_a)];
    for k in 0..256u64 {
        let g = {
            let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + k));
            crate::opcore::ginibre(&mut r, d_a, d_a)
        };
        frames.push(g.qr().q());
    }

    let mut found: Option<(CMat, CMat, usize)> = None;
    'outer: for frame in &frames {
        for rank in 1..d_a {
            // P from the first `rank` frame columns, psi from any other
            let mut p = CMat::zeros(d_a, d_a);
            for c in 0..rank {
                let col = frame.column(c);
                p += col * col.adjoint();
            }
            let rho_bar = p.unscale(rank as f64);
            let n_bar = ch.apply_raw(&rho_bar)?;
            let (supp, _) = support_projector_of(&n_bar);
            for c in rank..d_a {
                let col = frame.column(c);
                let psi = col * col.adjoint();
                let n_psi = ch.apply_raw(&psi)?;
                if off_support_mass(&n_psi, &supp) <= 1e-8 {
                    found = Some((p.clone(), psi, rank));
                    break 'outer;
                }
            }
        }
    }
    let (p, psi, rank) = found.ok_or(CertError::NoWitnessFound)?;

    let rho_bar = p.unscale(rank as f64);
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        // o(eps) fixed to eps^2
        let o = eps * eps;
        let rho_e = DensityOperator::new_unchecked_from(
            rho_bar.scale(1.0 - o) + psi.scale(o),
        )?;
        let gam_e = DensityOperator::new_unchecked_from(
            rho_bar.scale(1.0 - eps) + psi.scale(eps),
        )?;
        let d_in = standard_f_div(f, &rho_e, &gam_e)?.value;
        let n_rho = ch.apply_state(&rho_e)?;
        let n_gam = ch.apply_state(&gam_e)?;
        let d_out = maximal_f_div(f, &n_rho, &n_gam)?.value;
        rows.push(WitnessRow {
            eps,
            d_in,
            d_out,
            ratio: if d_in > 0.0 { d_out / d_in } else { f64::NAN },
        });
    }
    let epss: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let dins: Vec<f64> = rows.iter().map(|r| r.d_in).collect();
    let douts: Vec<f64> = rows.iter().map(|r| r.d_out).collect();
    let smallest = *rows
        .iter()
        .min_by(|a, b| a.eps.partial_cmp(&b.eps).unwrap())
        .unwrap();
    Ok(WitnessFamily {
        projector: MatrixJson::from_cmat(&p),
        psi: MatrixJson::from_cmat(&psi),
        rows,
        input_slope: loglog_slope(&epss, &dins),
        input_rate: smallest.d_in / smallest.eps,
        output_slope: loglog_slope(&epss, &douts),
    })
}

/// Certified lower bound on the expansion coefficient of a primitive
/// channel restricted to Im N^(m-1):
///
///   eta_check_kappa(N^m, N^(m-1))
///     >= lambda_min(N^(m-1)) / lambda_max(N^m) * eta2(N^m, N^(m-1))^2,
///
/// valid simultaneously for every kappa in K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionCertificate {
    pub lower: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub schatten2: f64,
    pub m: usize,
    /// true when the lambda extremes came from the exact qubit solve
    pub lambda_exact: bool,
    /// sampled Riemannian estimate for the requested kernel, for
    /// comparison against the certificate
    pub riem_estimate: Option<CoefficientEstimate>,
}

pub fn primitive_expansion_certificate(
    ch: &Channel,
    kappa: &KappaSpec,
    m: usize,
    opts: &RelExpOpts,
) -> CertResult<ExpansionCertificate> {
    let cert = is_primitive(ch, 1e-9)?;
    if !cert.primitive {
        return Err(CertError::NotPrimitive);
    }
    if m == 0 {
        return Err(CertError::MTooSmall(0, 0.0));
    }
    let prev = ch.iterate(m - 1)?;
    let curr = ch.iterate(m)?;
    let ext_prev = lambda_extremes(&prev);
    if ext_prev.lambda_min <= 1e-9 {
        return Err(CertError::MTooSmall(m, ext_prev.lambda_min));
    }
    let ext_curr = lambda_extremes(&curr);
    let eta2 = crate::coefficients::schatten2_rel_expansion(&curr, &prev)?;
    let lower = ext_prev.lambda_min / ext_curr.lambda_max * eta2.value * eta2.value;
    let riem = riem_rel_expansion(kappa, &curr, &prev, Mode::Inf, opts).ok();
    Ok(ExpansionCertificate {
        lower,
        lambda_min: ext_prev.lambda_min,
        lambda_max: ext_curr.lambda_max,
        schatten2: eta2.value,
        m,
        lambda_exact: ext_prev.exact && ext_curr.exact,
        riem_estimate: riem,
    })
}

/// Smallest m >= 1 with lambda_min(N^(m-1)) > 0 (the first m for which
/// the certificate applies), up to the primitivity index bound.
pub fn minimal_certificate_m(ch: &Channel) -> CertResult<usize> {
    let d = ch.d_in();
    let bound = 2 * (d * d - d + 1) + 1;
    for m in 1..=bound {
        let prev = ch.iterate(m - 1)?;
        if lambda_extremes(&prev).lambda_min > 1e-9 {
            return Ok(m);
        }
    }
    Err(CertError::NotPrimitive)
}

/// Verdict of an equality check between the divergence and Riemannian
/// relative expansion estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityVerdict {
    ConsistentWithEquality,
    GapExceedsTolerance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EqualityReport {
    pub div_estimate: CoefficientEstimate,
    pub riem_estimate: CoefficientEstimate,
    pub gap: f64,
    pub tolerance: f64,
    pub verdict: EqualityVerdict,
}

/// Run both estimators with a shared budget and compare. A verdict of
/// `GapExceedsTolerance` never claims a strict inequality: both numbers
/// are sampled bounds.
pub fn equality_check(
    f: &FSpec,
    n: &Channel,
    m: &Channel,
    opts: &RelExpOpts,
    tolerance: f64,
) -> CertResult<EqualityReport> {
    let kappa = f.induced_kappa()?;
    let riem = riem_rel_expansion(&kappa, n, m, Mode::Inf, opts)?;
    let div = div_rel_expansion(f, n, m, Mode::Inf, opts)?;
    let gap = (div.value - riem.value).abs();
    Ok(EqualityReport {
        verdict: if gap <= tolerance {
            EqualityVerdict::ConsistentWithEquality
        } else {
            EqualityVerdict::GapExceedsTolerance
        },
        div_estimate: div,
        riem_estimate: riem,
        gap,
        tolerance,
    })
}

/// One row of the inequivalence scan over the channel family
/// Phi_{alpha, sqrt(1 - alpha^2)}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    /// Riemannian contraction coefficient eta_kappa(Phi)
    pub eta: f64,
    /// normalised column eta / alpha^2
    pub normalized: f64,
}

/// Scan eta_kappa^Riem(Phi_{alpha, sqrt(1-alpha^2)}) / alpha^2 over a
/// grid of alphas. For bounded kernels the column stays in a constant
/// band; for unbounded kernels it grows as alpha decreases.
pub fn inequivalence_scan(
    kappa: &KappaSpec,
    alpha_grid: &[f64],
    opts: &RelExpOpts,
) -> CertResult<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let tau = (1.0 - alpha * alpha).max(0.0).sqrt();
        let ch = crate::channels::build_channel(&crate::channels::ChannelSpec::CqPhi {
            alpha,
            tau,
        })?;
        let est = riem_contraction(kappa, &ch, opts)?;
        rows.push(ScanRow {
            alpha,
            eta: est.value,
            normalized: est.value / (alpha * alpha),
        });
    }
    Ok(rows)
}
