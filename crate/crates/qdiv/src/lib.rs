//! # qdiv
//!
//! A numerical laboratory for quantum f-divergences, monotone Riemannian
//! (chi^2) semi-norms, and the contraction / expansion / relative
//! expansion coefficients of quantum channels, with certificate
//! calculators for equality, equivalence, recoverability, and Markov
//! convergence statements.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |---|---|
//! | [`opcore`] | Hermitian linear algebra, states, tangents, random generators |
//! | [`funcs`] | operator convex functions f and kernels kappa, limits, transposes |
//! | [`divergences`] | classical/standard/maximal f-divergences, chi^2 semi-norms |
//! | [`channels`] | channel families, Kraus/Choi/transfer/Bloch forms, primitivity |
//! | [`coefficients`] | contraction/expansion coefficients, exact and sampled |
//! | [`certificates`] | no-RDPI witnesses, equality checks, inequivalence scans |
//! | [`recovery`] | Petz and universal recovery maps, fidelity, sufficiency chains |
//! | [`markov`] | Markov trajectories, mixing-time bounds, convergence envelopes |
//!
//! All randomness is seeded (ChaCha8) and every sampled estimate carries
//! a `direction` flag recording what is exact and what is a bound.
//! Logarithms are natural everywhere.

pub mod channels;
pub mod coefficients;
pub mod certificates;
pub mod divergences;
pub mod funcs;
pub mod markov;
pub mod numeric;
pub mod opcore;
pub mod recovery;

pub use channels::{build_channel, Channel, ChannelSpec};
pub use coefficients::{CoefficientEstimate, Direction, Mode, RelExpOpts};
pub use divergences::DivergenceValue;
pub use funcs::{FSpec, KappaSpec, LimitValue};
pub use opcore::{DensityOperator, HermitianMatrix, TangentVector};
