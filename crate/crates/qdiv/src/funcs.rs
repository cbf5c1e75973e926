//! Operator convex functions f and monotone kernels kappa.
//!
//! The f side carries the divergence generators (x log x, -log x,
//! (x-1)^2, its transpose, the symmetric family f_s = (x-1)^2 kappa_s,
//! conical combinations, and tabulated custom functions). The kappa
//! side carries the metric kernels (kappa_max, kappa_BKM, kappa_min,
//! the extreme points kappa_s, power kernels, and finite mixtures),
//! together with the data derived from them that the rest of the crate
//! consumes: transposes, symmetrisations, induced kernels, zero limits,
//! Bloch h-functions, and the integral-representation pieces used by
//! the classical integral relation.
//!
//! Normalisation: class membership requires f(1) = 0 and f''(1) > 0;
//! f''(1) is stored explicitly and never silently rescaled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FuncError {
    #[error("domain error: x = {0} outside (0, inf)")]
    DomainError(f64),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("no known mixing measure for this kernel")]
    UnknownMeasure,
    #[error("operation unsupported for tabulated custom functions")]
    UnsupportedCustom,
}

pub type FuncResult<T> = Result<T, FuncError>;

/// A possibly infinite nonnegative limit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitValue {
    Finite(f64),
    Infinite,
}

impl LimitValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, LimitValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            LimitValue::Finite(v) => Some(*v),
            LimitValue::Infinite => None,
        }
    }
}

/// Base functions allowed inside conical combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicalBase {
    Square,
    Xlogx,
}

/// Tabulated custom function with declared derivatives at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomF {
    /// Strictly increasing abscissae covering 1.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fprime1: f64,
    pub fpp1: f64,
}

impl CustomF {
    fn eval(&self, x: f64) -> f64 {
        let xs = &self.xs;
        let ys = &self.ys;
        if x <= xs[0] {
            let t = (x - xs[0]) / (xs[1] - xs[0]);
            return ys[0] + t * (ys[1] - ys[0]);
        }
        let n = xs.len();
        if x >= xs[n - 1] {
            let t = (x - xs[n - 2]) / (xs[n - 1] - xs[n - 2]);
            return ys[n - 2] + t * (ys[n - 1] - ys[n - 2]);
        }
        let k = xs.partition_point(|&v| v <= x).min(n - 1);
        let (x0, x1) = (xs[k - 1], xs[k]);
        let t = (x - x0) / (x1 - x0);
        ys[k - 1] + t * (ys[k] - ys[k - 1])
    }
}

/// Symbolic description of a function in the operator convex class F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
    /// x log x (relative entropy)
    Xlogx,
    /// -log x (transpose of x log x)
    Neglog,
    /// (x-1)^2
    Square,
    /// (x-1)^2 / x (transpose of (x-1)^2)
    SquareTranspose,
    /// f_s(x) = (x-1)^2 kappa_s(x), s in [0, 1]; symmetric by construction
    Fs { s: f64 },
    /// alpha * base + beta * transpose(base)
    Conical {
        alpha: f64,
        beta: f64,
        base: ConicalBase,
    },
    /// tabulated evaluator with declared f'(1), f''(1)
    Custom(CustomF),
}

impl FSpec {
    /// Validates class-membership invariants: f(1) = 0 within 1e-12,
    /// f''(1) > 0, and the declared second derivative against a central
    /// finite difference at 1 (1e-6 relative).
    pub fn validate(&self) -> FuncResult<()> {
        match self {
            FSpec::Fs { s } => {
                if !(0.0..=1.0).contains(s) {
                    return Err(FuncError::InvalidSpec(format!("fs parameter s = {s}")));
                }
            }
            FSpec::Conical { alpha, beta, .. } => {
                if *alpha < 0.0 || *beta < 0.0 || alpha + beta <= 0.0 {
                    return Err(FuncError::InvalidSpec(format!(
                        "conical weights ({alpha}, {beta})"
                    )));
                }
            }
            FSpec::Custom(c) => {
                if c.xs.len() < 3 || c.xs.len() != c.ys.len() {
                    return Err(FuncError::InvalidSpec("custom table too short".into()));
                }
                if c.xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(FuncError::InvalidSpec("custom xs not increasing".into()));
                }
            }
            _ => {}
        }
        let at1 = self.eval(1.0)?;
        if at1.abs() > 1e-12 {
            return Err(FuncError::InvalidSpec(format!("f(1) = {at1:.3e} != 0")));
        }
        let fpp = self.fpp1();
        if fpp <= 0.0 {
            return Err(FuncError::InvalidSpec(format!("f''(1) = {fpp} <= 0")));
        }
        let h = 1e-4;
        let fd = (self.eval(1.0 + h)? - 2.0 * at1 + self.eval(1.0 - h)?) / (h * h);
        if (fd - fpp).abs() > 1e-6 * fpp.abs().max(1.0) * 10.0 {
            return Err(FuncError::InvalidSpec(format!(
                "declared f''(1) = {fpp} vs finite difference {fd}"
            )));
        }
        Ok(())
    }

    /// Pointwise value on (0, inf).
    pub fn eval(&self, x: f64) -> FuncResult<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(FuncError::DomainError(x));
        }
        Ok(match self {
            FSpec::Xlogx => x * x.ln(),
            FSpec::Neglog => -x.ln(),
            FSpec::Square => (x - 1.0) * (x - 1.0),
            FSpec::SquareTranspose => (x - 1.0) * (x - 1.0) / x,
            FSpec::Fs { s } => (x - 1.0) * (x - 1.0) * kappa_s(*s, x),
            FSpec::Conical { alpha, beta, base } => {
                let (b, bt): (FSpec, FSpec) = match base {
                    ConicalBase::Square => (FSpec::Square, FSpec::SquareTranspose),
                    ConicalBase::Xlogx => (FSpec::Xlogx, FSpec::Neglog),
                };
                alpha * b.eval(x)? + beta * bt.eval(x)?
            }
            FSpec::Custom(c) => c.eval(x),
        })
    }

    /// f'(1), known analytically per kind.
    pub fn fprime1(&self) -> f64 {
        match self {
            FSpec::Xlogx => 1.0,
            FSpec::Neglog => -1.0,
            FSpec::Square | FSpec::SquareTranspose | FSpec::Fs { .. } => 0.0,
            FSpec::Conical { alpha, beta, base } => {
                let b = match base {
                    ConicalBase::Square => 0.0,
                    ConicalBase::Xlogx => 1.0,
                };
                (alpha - beta) * b
            }
            FSpec::Custom(c) => c.fprime1,
        }
    }

    /// f''(1), stored/known analytically per kind.
    pub fn fpp1(&self) -> f64 {
        match self {
            FSpec::Xlogx | FSpec::Neglog => 1.0,
            FSpec::Square | FSpec::SquareTranspose | FSpec::Fs { .. } => 2.0,
            FSpec::Conical { alpha, beta, base } => {
                let b = match base {
                    ConicalBase::Square => 2.0,
                    ConicalBase::Xlogx => 1.0,
                };
                (alpha + beta) * b
            }
            FSpec::Custom(c) => c.fpp1,
        }
    }

    /// f(0+), f'(inf) = lim f(x)/x, and f''(1).
    pub fn limits(&self) -> FLimits {
        let (f0, fprime_inf) = match self {
            FSpec::Xlogx => (LimitValue::Finite(0.0), LimitValue::Infinite),
            FSpec::Neglog => (LimitValue::Infinite, LimitValue::Finite(0.0)),
            FSpec::Square => (LimitValue::Finite(1.0), LimitValue::Infinite),
            FSpec::SquareTranspose => (LimitValue::Infinite, LimitValue::Finite(1.0)),
            FSpec::Fs { s } => {
                if *s > 0.0 {
                    let v = (1.0 + s) * (1.0 + s) / (2.0 * s);
                    (LimitValue::Finite(v), LimitValue::Finite(v))
                } else {
                    (LimitValue::Infinite, LimitValue::Infinite)
                }
            }
            FSpec::Conical { alpha, beta, base } => {
                let (b0, binf) = match base {
                    ConicalBase::Square => (LimitValue::Finite(1.0), LimitValue::Infinite),
                    ConicalBase::Xlogx => (LimitValue::Finite(0.0), LimitValue::Infinite),
                };
                // transpose swaps the endpoint data: f~(0+) = f'(inf), f~'(inf) = f(0+)
                let combine = |wa: f64, la: LimitValue, wb: f64, lb: LimitValue| {
                    match (la, lb) {
                        (LimitValue::Finite(a), LimitValue::Finite(b)) => {
                            LimitValue::Finite(wa * a + wb * b)
                        }
                        (LimitValue::Infinite, _) if wa > 0.0 => LimitValue::Infinite,
                        (_, LimitValue::Infinite) if wb > 0.0 => LimitValue::Infinite,
                        (LimitValue::Finite(a), _) => LimitValue::Finite(wa * a),
                        (_, LimitValue::Finite(b)) => LimitValue::Finite(wb * b),
                        (LimitValue::Infinite, LimitValue::Infinite) => LimitValue::Finite(0.0),
                    }
                };
                (
                    combine(*alpha, b0, *beta, binf),
                    combine(*alpha, binf, *beta, b0),
                )
            }
            FSpec::Custom(c) => {
                // best effort from the table endpoints
                let lo = c.eval(c.xs[0]);
                let n = c.xs.len();
                let hi = c.eval(c.xs[n - 1]) / c.xs[n - 1];
                (LimitValue::Finite(lo), LimitValue::Finite(hi))
            }
        };
        FLimits {
            f0,
            fprime_inf,
            fpp1: self.fpp1(),
        }
    }

    /// The transpose f~(x) := x f(1/x).
    pub fn transpose(&self) -> FSpec {
        match self {
            FSpec::Xlogx => FSpec::Neglog,
            FSpec::Neglog => FSpec::Xlogx,
            FSpec::Square => FSpec::SquareTranspose,
            FSpec::SquareTranspose => FSpec::Square,
            FSpec::Fs { s } => FSpec::Fs { s: *s },
            FSpec::Conical { alpha, beta, base } => FSpec::Conical {
                alpha: *beta,
                beta: *alpha,
                base: *base,
            },
            FSpec::Custom(c) => {
                let mut pairs: Vec<(f64, f64)> = c
                    .xs
                    .iter()
                    .zip(&c.ys)
                    .filter(|(&x, _)| x > 0.0)
                    .map(|(&x, &y)| (1.0 / x, y / x))
                    .collect();
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                FSpec::Custom(CustomF {
                    xs: pairs.iter().map(|p| p.0).collect(),
                    ys: pairs.iter().map(|p| p.1).collect(),
                    fprime1: -c.fprime1,
                    fpp1: c.fpp1,
                })
            }
        }
    }

    /// f_sym(x) := (f(x) + f~(x)) / f''(1); satisfies x g(1/x) = g(x)
    /// and g''(1) = 2.
    pub fn symmetrize(&self) -> FSpec {
        match self {
            FSpec::Xlogx | FSpec::Neglog => FSpec::Conical {
                alpha: 1.0,
                beta: 1.0,
                base: ConicalBase::Xlogx,
            },
            FSpec::Square | FSpec::SquareTranspose => FSpec::Conical {
                alpha: 0.5,
                beta: 0.5,
                base: ConicalBase::Square,
            },
            FSpec::Fs { s } => FSpec::Fs { s: *s },
            FSpec::Conical { base, .. } => match base {
                ConicalBase::Square => FSpec::Conical {
                    alpha: 0.5,
                    beta: 0.5,
                    base: ConicalBase::Square,
                },
                ConicalBase::Xlogx => FSpec::Conical {
                    alpha: 1.0,
                    beta: 1.0,
                    base: ConicalBase::Xlogx,
                },
            },
            FSpec::Custom(c) => {
                let t = self.transpose();
                let fpp = c.fpp1;
                let xs = c.xs.clone();
                let ys: Vec<f64> = xs
                    .iter()
                    .map(|&x| (c.eval(x) + t.eval(x).unwrap_or(f64::NAN)) / fpp)
                    .collect();
                FSpec::Custom(CustomF {
                    xs,
                    ys,
                    fprime1: 0.0,
                    fpp1: 2.0,
                })
            }
        }
    }

    /// The induced kernel kappa_f(x) := (f(x) + f~(x)) / (f''(1)(x-1)^2).
    pub fn induced_kappa(&self) -> FuncResult<KappaSpec> {
        Ok(match self {
            FSpec::Xlogx | FSpec::Neglog => KappaSpec::Bkm,
            FSpec::Square | FSpec::SquareTranspose => KappaSpec::Max,
            FSpec::Fs { s } => KappaSpec::Ks { s: *s },
            FSpec::Conical { base, .. } => match base {
                ConicalBase::Square => KappaSpec::Max,
                ConicalBase::Xlogx => KappaSpec::Bkm,
            },
            FSpec::Custom(_) => return Err(FuncError::UnsupportedCustom),
        })
    }

    /// Integral-representation data driving the classical integral
    /// relation; `None` for custom tables.
    pub fn classical_integral_data(&self) -> Option<ClassicalIntegralData> {
        match self {
            FSpec::Xlogx => Some(ClassicalIntegralData {
                c: 0.0,
                mu0: 0.0,
                atoms: vec![],
                density: Some(DensityWeights { alpha: 1.0, beta: 0.0 }),
            }),
            FSpec::Neglog => Some(ClassicalIntegralData {
                c: 0.0,
                mu0: 0.0,
                atoms: vec![],
                density: Some(DensityWeights { alpha: 0.0, beta: 1.0 }),
            }),
            FSpec::Square => Some(ClassicalIntegralData {
                c: 1.0,
                mu0: 0.0,
                atoms: vec![],
                density: None,
            }),
            FSpec::SquareTranspose => Some(ClassicalIntegralData {
                c: 0.0,
                mu0: 1.0,
                atoms: vec![],
                density: None,
            }),
            FSpec::Fs { s } => {
                let s = *s;
                if s <= 0.0 {
                    // f_0 = (x-1)^2 (x+1)/(2x) = ((x-1)^2 + (x-1)^2/x) / 2
                    return Some(ClassicalIntegralData {
                        c: 0.5,
                        mu0: 0.5,
                        atoms: vec![],
                        density: None,
                    });
                }
                Some(ClassicalIntegralData {
                    c: 0.0,
                    mu0: 0.0,
                    atoms: vec![
                        (s, (1.0 + s) / 2.0),
                        (1.0 / s, (1.0 + s) / (2.0 * s)),
                    ],
                    density: None,
                })
            }
            FSpec::Conical { alpha, beta, base } => match base {
                ConicalBase::Square => Some(ClassicalIntegralData {
                    c: *alpha,
                    mu0: *beta,
                    atoms: vec![],
                    density: None,
                }),
                ConicalBase::Xlogx => Some(ClassicalIntegralData {
                    c: 0.0,
                    mu0: 0.0,
                    atoms: vec![],
                    density: Some(DensityWeights {
                        alpha: *alpha,
                        beta: *beta,
                    }),
                }),
            },
            FSpec::Custom(_) => None,
        }
    }
}

/// Limit data of an f in F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FLimits {
    pub f0: LimitValue,
    pub fprime_inf: LimitValue,
    pub fpp1: f64,
}

/// Decomposition of f - f'(1)(x-1) into c (x-1)^2 + mu0 (x-1)^2/x +
/// integral of (x-1)^2/(x+t) dmu(t), expressed in the form consumed by
/// the classical integral relation:
///
///   D_f^cl = c |X|^2_{k,gamma} + mu0 |X|^2_{k,rho}
///          + sum_j w_j/(1+t_j) |X|^2_{k, gamma + X/(1+t_j)}
///          + int_0^1 (alpha u + beta (1-u)) |X|^2_{k, gamma + (1-u) X} du
///
/// with X = rho - gamma. The density weights correspond to
/// dmu(t) = (alpha t + beta)/(1+t)^2 dt under u = t/(1+t).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalIntegralData {
    pub c: f64,
    pub mu0: f64,
    /// point masses (t_j, w_j) of mu on (0, inf)
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<DensityWeights>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityWeights {
    pub alpha: f64,
    pub beta: f64,
}

/// The extreme-point kernels kappa_s(x) = (1+s)/2 (1/(x+s) + 1/(sx+1)).
pub fn kappa_s(s: f64, x: f64) -> f64 {
    0.5 * (1.0 + s) * (1.0 / (x + s) + 1.0 / (s * x + 1.0))
}

/// h_s(x) = (1+s)^2 (1-x) / ((1+s)^2 (1-x) + 4 s x), the Bloch-ball
/// profile of kappa_s.
pub fn h_s(s: f64, x: f64) -> f64 {
    let num = (1.0 + s) * (1.0 + s) * (1.0 - x);
    let den = num + 4.0 * s * x;
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

fn bkm_kernel(x: f64) -> f64 {
    let u = x - 1.0;
    if u.abs() < 1e-5 {
        // log(1+u)/u, series to keep 0/0 away from the removable point
        1.0 + u * (-0.5 + u * (1.0 / 3.0 + u * (-0.25 + u / 5.0)))
    } else {
        x.ln() / u
    }
}

/// h-profile of the BKM kernel, integrated in closed form from the
/// mixing density 2/(1+s)^2.
pub fn h_bkm(x: f64) -> f64 {
    if x < 1e-14 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let r = x.sqrt();
    if 1.0 - r < 1e-300 {
        return 0.0;
    }
    (1.0 - x) / (2.0 * r) * ((1.0 + r) / (1.0 - r)).ln()
}

/// Symbolic description of a kernel in the class K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaSpec {
    /// (x+1)/(2x): the largest kernel
    Max,
    /// log x / (x-1): Kubo-Mori
    Bkm,
    /// 2/(x+1): the smallest kernel
    Min,
    /// extreme point kappa_s, s in [0, 1]
    Ks { s: f64 },
    /// power kernel x^a, a in (-1, 0), entering the metric through its
    /// symmetrisation (x^a + x^(-1-a))/2
    Alpha { a: f64 },
    /// finite mixture sum w_i kappa_{s_i}, weights summing to 1
    Mixture { terms: Vec<(f64, f64)> },
}

impl KappaSpec {
    /// Checks kappa(1) = 1, monotone decrease, and the kappa_min/
    /// kappa_max envelope on a log grid over [1e-6, 1e6].
    pub fn validate(&self) -> FuncResult<()> {
        match self {
            KappaSpec::Ks { s } => {
                if !(0.0..=1.0).contains(s) {
                    return Err(FuncError::InvalidSpec(format!("ks parameter s = {s}")));
                }
            }
            KappaSpec::Alpha { a } => {
                if !(-1.0..0.0).contains(a) {
                    return Err(FuncError::InvalidSpec(format!("alpha parameter a = {a}")));
                }
            }
            KappaSpec::Mixture { terms } => {
                let total: f64 = terms.iter().map(|t| t.0).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(FuncError::InvalidSpec(format!(
                        "mixture weights sum to {total}"
                    )));
                }
                for &(w, s) in terms {
                    if w < 0.0 || !(0.0..=1.0).contains(&s) {
                        return Err(FuncError::InvalidSpec(format!(
                            "mixture term (w = {w}, s = {s})"
                        )));
                    }
                }
            }
            _ => {}
        }
        let at1 = self.eval(1.0)?;
        if (at1 - 1.0).abs() > 1e-12 {
            return Err(FuncError::InvalidSpec(format!("kappa(1) = {at1} != 1")));
        }
        let grid: Vec<f64> = (0..=48).map(|k| 10f64.powf(-6.0 + 0.25 * k as f64)).collect();
        let mut prev = f64::INFINITY;
        for &x in &grid {
            let v = self.eval(x)?;
            if v > prev + 1e-9 * prev.abs().max(1.0) {
                return Err(FuncError::InvalidSpec(format!(
                    "kappa not non-increasing at x = {x}"
                )));
            }
            let lo = 2.0 / (x + 1.0);
            let hi = (x + 1.0) / (2.0 * x);
            if v < lo - 1e-9 * lo || v > hi + 1e-9 * hi {
                return Err(FuncError::InvalidSpec(format!(
                    "kappa({x}) = {v} escapes the [kappa_min, kappa_max] envelope"
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// Pointwise value on (0, inf).
    pub fn eval(&self, x: f64) -> FuncResult<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(FuncError::DomainError(x));
        }
        Ok(match self {
            KappaSpec::Max => (x + 1.0) / (2.0 * x),
            KappaSpec::Bkm => bkm_kernel(x),
            KappaSpec::Min => 2.0 / (x + 1.0),
            KappaSpec::Ks { s } => kappa_s(*s, x),
            KappaSpec::Alpha { a } => 0.5 * (x.powf(*a) + x.powf(-1.0 - a)),
            KappaSpec::Mixture { terms } => {
                terms.iter().map(|&(w, s)| w * kappa_s(s, x)).sum()
            }
        })
    }

    /// kappa(0+); infinite exactly when the kernel is unbounded.
    pub fn zero_limit(&self) -> LimitValue {
        match self {
            KappaSpec::Max | KappaSpec::Bkm | KappaSpec::Alpha { .. } => LimitValue::Infinite,
            KappaSpec::Min => LimitValue::Finite(2.0),
            KappaSpec::Ks { s } => {
                if *s > 0.0 {
                    LimitValue::Finite((1.0 + s) * (1.0 + s) / (2.0 * s))
                } else {
                    LimitValue::Infinite
                }
            }
            KappaSpec::Mixture { terms } => {
                if terms.iter().any(|&(w, s)| w > 0.0 && s <= 0.0) {
                    LimitValue::Infinite
                } else {
                    LimitValue::Finite(
                        terms
                            .iter()
                            .map(|&(w, s)| w * (1.0 + s) * (1.0 + s) / (2.0 * s))
                            .sum(),
                    )
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.zero_limit().is_finite()
    }

    /// Bloch-ball h-profile h(x) = int h_s(x) dm(s) for kernels with a
    /// known mixing measure m.
    pub fn h(&self, x: f64) -> FuncResult<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FuncError::DomainError(x));
        }
        Ok(match self {
            KappaSpec::Max => 1.0,
            KappaSpec::Min => 1.0 - x,
            KappaSpec::Ks { s } => h_s(*s, x),
            KappaSpec::Bkm => h_bkm(x),
            KappaSpec::Mixture { terms } => {
                terms.iter().map(|&(w, s)| w * h_s(s, x)).sum()
            }
            KappaSpec::Alpha { .. } => return Err(FuncError::UnknownMeasure),
        })
    }

    /// Whether a mixing measure (hence an h-profile) is available.
    pub fn has_mixing_measure(&self) -> bool {
        !matches!(self, KappaSpec::Alpha { .. })
    }
}
