//! qdiv: command-line front end for the quantum f-divergence laboratory.
//!
//! Subcommands: div, chi2, coeff, certify, witness, recover, markov,
//! suite. All randomness is seeded; reports are reproducible byte for
//! byte apart from the timestamp header line. Floats print with 12
//! significant digits.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdiv::certificates::{
    equality_check, inequivalence_scan, no_rdpi_witness, primitive_expansion_certificate,
    EqualityVerdict,
};
use qdiv::channels::{build_channel, identity_channel, Channel, ChannelSpec};
use qdiv::coefficients::{
    div_rel_expansion, riem_coeff_fixed_ref, riem_rel_expansion, schatten2_rel_expansion,
    Mode, RelExpOpts,
};
use qdiv::divergences::{
    chi2_seminorm, classical_f_div, maximal_f_div, qubit_chi2_closed_form, standard_f_div,
};
use qdiv::funcs::{FSpec, KappaSpec};
use qdiv::markov::{convergence_trace, mixing_time_bound};
use qdiv::opcore::{make_tangent, DensityOperator, HermitianMatrix, MatrixJson};
use qdiv::recovery::{sufficiency_report, DropKind, UniversalQuadrature};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "qdiv",
    about = "Quantum f-divergences, Riemannian semi-norms, and channel coefficients",
    version
)]
struct Cli {
    /// Worker threads (default: available parallelism; QDIV_THREADS overrides)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root random seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report to this path instead of stdout
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an f-divergence between two states
    Div(DivArgs),
    /// Evaluate a chi^2 Riemannian semi-norm
    Chi2(Chi2Args),
    /// Compute a contraction/expansion coefficient
    Coeff(CoeffArgs),
    /// Equality certificates, primitive certificates, the inequivalence scan
    Certify(CertifyArgs),
    /// Build the no-reverse-DPI witness family table (CSV)
    Witness(WitnessArgs),
    /// Recovery-map sufficiency report
    Recover(RecoverArgs),
    /// Markov trajectory with convergence envelopes (CSV)
    Markov(MarkovArgs),
    /// Named experiment suites with per-row pass verdicts (CSV)
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
struct DivArgs {
    /// f spec: shorthand (xlogx, neglog, square, square_transpose) or JSON
    #[arg(long)]
    f: String,
    /// rho: matrix JSON (inline or @file)
    #[arg(long)]
    rho: String,
    /// gamma: matrix JSON (inline or @file)
    #[arg(long)]
    gamma: String,
    #[arg(long, value_enum, default_value_t = DivKind::Std)]
    kind: DivKind,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DivKind {
    Std,
    Max,
    Classical,
}

#[derive(Args, Debug)]
struct Chi2Args {
    /// kappa spec: shorthand (max, bkm, min) or JSON
    #[arg(long)]
    kappa: String,
    /// base state rho: matrix JSON (inline or @file)
    #[arg(long)]
    rho: Option<String>,
    /// tangent X: matrix JSON (inline or @file)
    #[arg(long)]
    x: Option<String>,
    /// Bloch vector of the base state (closed form), e.g. --w 0.1,0,0.5
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    /// orthonormal-Pauli coordinates of X (closed form)
    #[arg(long, value_delimiter = ',')]
    y: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct CoeffArgs {
    #[arg(long, value_enum)]
    kind: CoeffKind,
    /// channel N (JSON or @file)
    #[arg(long)]
    channel_n: String,
    /// channel M (JSON or @file); defaults to the identity on N's input
    #[arg(long)]
    channel_m: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Inf)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Budget::Medium)]
    budget: Budget,
    /// reference state for fixed-ref coefficients (JSON or @file);
    /// defaults to the channel's fixed point
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CoeffKind {
    Riem,
    Div,
    Schatten2,
    FixedRef,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Inf,
    Sup,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Budget {
    Small,
    Medium,
    Large,
}

impl Budget {
    fn opts(self, seed: u64) -> RelExpOpts {
        let mut o = match self {
            Budget::Small => RelExpOpts::small(),
            Budget::Medium => RelExpOpts::medium(),
            Budget::Large => RelExpOpts::large(),
        };
        o.seed = seed;
        o
    }
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, value_enum)]
    kind: CertifyKind,
    #[arg(long)]
    channel_n: Option<String>,
    #[arg(long)]
    channel_m: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    /// iterate index m for the primitive certificate
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// alpha grid for the inequivalence scan
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.4])]
    alphas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Budget::Medium)]
    budget: Budget,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CertifyKind {
    Equality,
    Primitive,
    Scan,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[arg(long)]
    channel: String,
    #[arg(long, default_value = "xlogx")]
    f: String,
    /// epsilon grid
    #[arg(long, value_delimiter = ',', default_values_t = vec![3e-2, 1e-2, 3e-3, 1e-3])]
    eps: Vec<f64>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[arg(long)]
    channel: String,
    #[arg(long)]
    rho: String,
    #[arg(long)]
    gamma: String,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
}

#[derive(Args, Debug)]
struct MarkovArgs {
    #[arg(long)]
    channel: String,
    /// initial state (JSON or @file); defaults to a seeded random state
    #[arg(long)]
    rho0: Option<String>,
    #[arg(long, default_value = "bkm")]
    kappa: String,
    #[arg(long, default_value_t = 50)]
    n_max: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// suite name: equality | dpi | inequivalence
    #[arg(long)]
    name: String,
    #[arg(long, value_enum, default_value_t = Budget::Small)]
    budget: Budget,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn read_arg(raw: &str) -> Result<String, CliError> {
    if let Some(path) = raw.strip_prefix('@') {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))
    } else {
        Ok(raw.to_string())
    }
}

fn parse_f(raw: &str) -> Result<FSpec, CliError> {
    let text = read_arg(raw)?;
    let spec: FSpec = match text.trim() {
        "xlogx" => FSpec::Xlogx,
        "neglog" => FSpec::Neglog,
        "square" => FSpec::Square,
        "square_transpose" => FSpec::SquareTranspose,
        other => serde_json::from_str(other)
            .map_err(|e| CliError::Validation(format!("bad f spec: {e}")))?,
    };
    spec.validate().map_err(validation)?;
    Ok(spec)
}

fn parse_kappa(raw: &str) -> Result<KappaSpec, CliError> {
    let text = read_arg(raw)?;
    let spec: KappaSpec = match text.trim() {
        "max" => KappaSpec::Max,
        "bkm" => KappaSpec::Bkm,
        "min" => KappaSpec::Min,
        other => serde_json::from_str(other)
            .map_err(|e| CliError::Validation(format!("bad kappa spec: {e}")))?,
    };
    spec.validate().map_err(validation)?;
    Ok(spec)
}

fn parse_channel(raw: &str) -> Result<Channel, CliError> {
    let text = read_arg(raw)?;
    let spec: ChannelSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad channel spec: {e}")))?;
    build_channel(&spec).map_err(validation)
}

fn parse_state(raw: &str) -> Result<DensityOperator, CliError> {
    let text = read_arg(raw)?;
    let js: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad matrix JSON: {e}")))?;
    let h = js.to_hermitian().map_err(validation)?;
    DensityOperator::validate(h, 1e-8).map_err(validation)
}

fn parse_hermitian(raw: &str) -> Result<HermitianMatrix, CliError> {
    let text = read_arg(raw)?;
    let js: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad matrix JSON: {e}")))?;
    js.to_hermitian().map_err(validation)
}

fn sig12(x: f64) -> String {
    format!("{x:.12e}")
}

/// Provenance header: timestamp (excluded from reproducibility), config
/// hash, seed, and tolerances.
fn header(config: &str, seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::new();
    for b in digest.iter().take(16) {
        let _ = write!(hex, "{b:02x}");
    }
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# generated_at: {ts}\n# config_sha256: {hex}\n# seed: {seed}\n# tolerances: support=1e-8 cptp=1e-10 solver=1e-4\n"
    )
}

fn emit(out: Option<&std::path::PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Numerical(e.to_string())),
    }
}

#[derive(Serialize)]
struct DivReport {
    value: f64,
    terms_skipped: usize,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Div(a) => {
            let f = parse_f(&a.f)?;
            let rho = parse_state(&a.rho)?;
            let gamma = parse_state(&a.gamma)?;
            let v = match a.kind {
                DivKind::Std => standard_f_div(&f, &rho, &gamma).map_err(numerical)?,
                DivKind::Max => maximal_f_div(&f, &rho, &gamma).map_err(numerical)?,
                DivKind::Classical => {
                    let p: Vec<f64> = rho.spectral().eigenvalues.to_vec();
                    let q: Vec<f64> = gamma.spectral().eigenvalues.to_vec();
                    classical_f_div(&f, &p, &q).map_err(numerical)?
                }
            };
            serde_json::to_string_pretty(&DivReport {
                value: v.value,
                terms_skipped: v.terms_skipped,
            })
            .map(|s| s + "\n")
            .map_err(numerical)
        }
        Command::Chi2(a) => {
            let kappa = parse_kappa(&a.kappa)?;
            let v = match (&a.rho, &a.x, &a.w, &a.y) {
                (Some(rho), Some(x), None, None) => {
                    let rho = parse_state(rho)?;
                    let xh = parse_hermitian(x)?;
                    let tangent = make_tangent(&rho, &xh, 1e-8).map_err(validation)?;
                    chi2_seminorm(&kappa, &rho, &tangent).map_err(numerical)?
                }
                (None, None, Some(w), Some(y)) => {
                    if w.len() != 3 || y.len() != 3 {
                        return Err(CliError::Validation(
                            "--w and --y need three comma-separated components".into(),
                        ));
                    }
                    let w = [w[0], w[1], w[2]];
                    let y = [y[0], y[1], y[2]];
                    qubit_chi2_closed_form(&kappa, &w, &y).map_err(numerical)?
                }
                _ => {
                    return Err(CliError::Validation(
                        "provide either --rho/--x or --w/--y".into(),
                    ))
                }
            };
            serde_json::to_string_pretty(&DivReport {
                value: v.value,
                terms_skipped: v.terms_skipped,
            })
            .map(|s| s + "\n")
            .map_err(numerical)
        }
        Command::Coeff(a) => {
            let n = parse_channel(&a.channel_n)?;
            let m = match &a.channel_m {
                Some(raw) => parse_channel(raw)?,
                None => identity_channel(n.d_in()),
            };
            let mode = match a.mode {
                ModeArg::Inf => Mode::Inf,
                ModeArg::Sup => Mode::Sup,
            };
            let opts = a.budget.opts(cli.seed);
            let est = match a.kind {
                CoeffKind::Riem => {
                    let kappa = parse_kappa(a.kappa.as_deref().ok_or_else(|| {
                        CliError::Validation("riem coefficients need --kappa".into())
                    })?)?;
                    riem_rel_expansion(&kappa, &n, &m, mode, &opts).map_err(numerical)?
                }
                CoeffKind::Div => {
                    let f = parse_f(a.f.as_deref().ok_or_else(|| {
                        CliError::Validation("div coefficients need --f".into())
                    })?)?;
                    div_rel_expansion(&f, &n, &m, mode, &opts).map_err(numerical)?
                }
                CoeffKind::Schatten2 => schatten2_rel_expansion(&n, &m).map_err(numerical)?,
                CoeffKind::FixedRef => {
                    let kappa = parse_kappa(a.kappa.as_deref().ok_or_else(|| {
                        CliError::Validation("fixed-ref coefficients need --kappa".into())
                    })?)?;
                    let reference = match &a.reference {
                        Some(raw) => parse_state(raw)?,
                        None => {
                            let cert =
                                qdiv::channels::is_primitive(&n, 1e-9).map_err(numerical)?;
                            cert.fixed_point.ok_or_else(|| {
                                CliError::Numerical("no fixed point found".into())
                            })?
                        }
                    };
                    riem_coeff_fixed_ref(&kappa, &n, &reference, mode, None)
                        .map_err(numerical)?
                }
            };
            serde_json::to_string_pretty(&est)
                .map(|s| s + "\n")
                .map_err(numerical)
        }
        Command::Certify(a) => match a.kind {
            CertifyKind::Equality => {
                let f = parse_f(a.f.as_deref().ok_or_else(|| {
                    CliError::Validation("equality certificates need --f".into())
                })?)?;
                let n = parse_channel(a.channel_n.as_deref().ok_or_else(|| {
                    CliError::Validation("equality certificates need --channel-n".into())
                })?)?;
                let m = parse_channel(a.channel_m.as_deref().ok_or_else(|| {
                    CliError::Validation("equality certificates need --channel-m".into())
                })?)?;
                let rep = equality_check(&f, &n, &m, &a.budget.opts(cli.seed), 1e-3)
                    .map_err(numerical)?;
                serde_json::to_string_pretty(&rep)
                    .map(|s| s + "\n")
                    .map_err(numerical)
            }
            CertifyKind::Primitive => {
                let n = parse_channel(a.channel_n.as_deref().ok_or_else(|| {
                    CliError::Validation("primitive certificates need --channel-n".into())
                })?)?;
                let kappa = parse_kappa(a.kappa.as_deref().unwrap_or("bkm"))?;
                let cert =
                    primitive_expansion_certificate(&n, &kappa, a.m, &a.budget.opts(cli.seed))
                        .map_err(numerical)?;
                serde_json::to_string_pretty(&cert)
                    .map(|s| s + "\n")
                    .map_err(numerical)
            }
            CertifyKind::Scan => {
                let kappa = parse_kappa(a.kappa.as_deref().unwrap_or("bkm"))?;
                let rows = inequivalence_scan(&kappa, &a.alphas, &a.budget.opts(cli.seed))
                    .map_err(numerical)?;
                let mut csv = String::from("alpha,eta,normalized\n");
                for r in rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{}",
                        sig12(r.alpha),
                        sig12(r.eta),
                        sig12(r.normalized)
                    );
                }
                Ok(csv)
            }
        },
        Command::Witness(a) => {
            let ch = parse_channel(&a.channel)?;
            let f = parse_f(&a.f)?;
            let fam = no_rdpi_witness(&ch, &f, &a.eps, cli.seed).map_err(numerical)?;
            let mut csv = String::from("eps,d_in,d_out,ratio\n");
            for r in &fam.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    sig12(r.eps),
                    sig12(r.d_in),
                    sig12(r.d_out),
                    sig12(r.ratio)
                );
            }
            let _ = writeln!(csv, "# input_slope,{}", sig12(fam.input_slope));
            let _ = writeln!(csv, "# input_rate,{}", sig12(fam.input_rate));
            let _ = writeln!(csv, "# output_slope,{}", sig12(fam.output_slope));
            Ok(csv)
        }
        Command::Recover(a) => {
            let ch = parse_channel(&a.channel)?;
            let rho = parse_state(&a.rho)?;
            let gamma = parse_state(&a.gamma)?;
            let kind = match (&a.f, &a.kappa) {
                (Some(f), None) => DropKind::Divergence(parse_f(f)?),
                (None, Some(k)) => DropKind::Chi2(parse_kappa(k)?),
                (None, None) => DropKind::Divergence(FSpec::Xlogx),
                _ => {
                    return Err(CliError::Validation(
                        "provide at most one of --f and --kappa".into(),
                    ))
                }
            };
            let rep =
                sufficiency_report(&ch, &rho, &gamma, &kind, UniversalQuadrature::default())
                    .map_err(numerical)?;
            serde_json::to_string_pretty(&rep)
                .map(|s| s + "\n")
                .map_err(numerical)
        }
        Command::Markov(a) => {
            let ch = parse_channel(&a.channel)?;
            let kappa = parse_kappa(&a.kappa)?;
            let rho0 = match &a.rho0 {
                Some(raw) => parse_state(raw)?,
                None => qdiv::opcore::random_state(ch.d_in(), ch.d_in(), cli.seed)
                    .map_err(numerical)?,
            };
            let rep = convergence_trace(&ch, &rho0, &kappa, a.n_max, None).map_err(numerical)?;
            let mix = mixing_time_bound(&ch, &kappa, a.delta).map_err(numerical)?;
            let mut csv = String::from("n,dist,upper,lower\n");
            for r in &rep.trajectory {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    r.n,
                    sig12(r.trace_dist),
                    sig12(r.upper_env),
                    r.lower_env.map_or(String::new(), sig12)
                );
            }
            let _ = writeln!(csv, "# eta,{}", sig12(rep.eta));
            let _ = writeln!(csv, "# eta_check,{}", sig12(rep.eta_check));
            let _ = writeln!(csv, "# m_start,{}", rep.m_start);
            let _ = writeln!(csv, "# t_mix(delta={}),{}", a.delta, mix.t);
            let _ = writeln!(csv, "# a_posteriori_ok,{}", mix.a_posteriori_ok);
            let _ = writeln!(
                csv,
                "# lambda_min_interpretation,smallest eigenvalue of the fixed point"
            );
            Ok(csv)
        }
        Command::Suite(a) => run_suite(a, cli.seed),
    }
}

fn run_suite(a: &SuiteArgs, seed: u64) -> Result<String, CliError> {
    let opts = a.budget.opts(seed);
    match a.name.as_str() {
        "equality" => {
            let n = build_channel(&ChannelSpec::Dephasing { p: 0.5 }).map_err(numerical)?;
            let m = build_channel(&ChannelSpec::Dephasing { p: 0.25 }).map_err(numerical)?;
            let fs: Vec<(&str, FSpec)> = vec![
                ("xlogx", FSpec::Xlogx),
                ("neglog", FSpec::Neglog),
                ("square", FSpec::Square),
                ("square_transpose", FSpec::SquareTranspose),
            ];
            let mut csv = String::from("f,div_estimate,riem_estimate,gap,pass\n");
            let mut all_ok = true;
            for (name, f) in fs {
                let rep = equality_check(&f, &n, &m, &opts, 1e-3).map_err(numerical)?;
                let ok = rep.verdict == EqualityVerdict::ConsistentWithEquality;
                all_ok &= ok;
                let _ = writeln!(
                    csv,
                    "{name},{},{},{},{ok}",
                    sig12(rep.div_estimate.value),
                    sig12(rep.riem_estimate.value),
                    sig12(rep.gap)
                );
            }
            if all_ok {
                Ok(csv)
            } else {
                emit(None, &csv).ok();
                Err(CliError::Numerical("equality suite gap exceeded".into()))
            }
        }
        "dpi" => {
            let mut csv = String::from("instance,f,before,after,pass\n");
            let mut all_ok = true;
            for i in 0..64u64 {
                let ch = qdiv::channels::random_channel(2, 2, seed.wrapping_add(i));
                let rho = qdiv::opcore::random_state(2, 2, seed.wrapping_add(1000 + i))
                    .map_err(numerical)?;
                let gam = qdiv::opcore::random_state(2, 2, seed.wrapping_add(2000 + i))
                    .map_err(numerical)?;
                let f = FSpec::Xlogx;
                let before = standard_f_div(&f, &rho, &gam).map_err(numerical)?.value;
                let after = standard_f_div(
                    &f,
                    &ch.apply_state(&rho).map_err(numerical)?,
                    &ch.apply_state(&gam).map_err(numerical)?,
                )
                .map_err(numerical)?
                .value;
                let ok = after <= before + 1e-9;
                all_ok &= ok;
                let _ = writeln!(csv, "{i},xlogx,{},{},{ok}", sig12(before), sig12(after));
            }
            if all_ok {
                Ok(csv)
            } else {
                Err(CliError::Numerical("DPI violated".into()))
            }
        }
        "inequivalence" => {
            let mut csv = String::from("kappa,alpha,eta,normalized\n");
            for (name, kappa) in [("min", KappaSpec::Min), ("bkm", KappaSpec::Bkm)] {
                let rows = inequivalence_scan(&kappa, &[0.05, 0.1, 0.2, 0.4], &opts)
                    .map_err(numerical)?;
                for r in rows {
                    let _ = writeln!(
                        csv,
                        "{name},{},{},{}",
                        sig12(r.alpha),
                        sig12(r.eta),
                        sig12(r.normalized)
                    );
                }
            }
            Ok(csv)
        }
        other => Err(CliError::Validation(format!(
            "unknown suite '{other}' (expected equality | dpi | inequivalence)"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("QDIV_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let config = format!("{:?} seed={}", cli.command, cli.seed);
    match run(&cli) {
        Ok(body) => {
            let full = format!("{}{}", header(&config, cli.seed), body);
            match emit(cli.out.as_ref(), &full) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {}", e.message());
                    ExitCode::from(e.code())
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
