//! Quantum channels: named families compiled to Kraus operators, Choi
//! matrices, real transfer matrices on an orthonormal Hermitian basis,
//! and (for qubits) Bloch affine form. Composition, adjoints, fixed
//! points, primitivity, and output-eigenvalue extremes.

use crate::numeric::nelder_mead;
use crate::opcore::{
    eigh, ginibre, hs_inner_raw, CMat, DensityOperator, HermitianMatrix, MatrixJson, C64,
};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type RMat = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("not CPTP: {0}")]
    NotCptp(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("no fixed point found (numerical failure)")]
    NoFixedPoint,
    #[error(transparent)]
    Op(#[from] crate::opcore::OpError),
}

pub type ChannelResult<T> = Result<T, ChannelError>;

/// Declarative channel description; compiled by [`build_channel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    /// T = diag(1-p, 1-p, 1) on the Bloch ball.
    Dephasing { p: f64 },
    /// T = diag(sqrt(1-g), sqrt(1-g), 1-g), t = (0, 0, g).
    AmplitudeDamping { g: f64 },
    /// w -> (alpha w_1, 0, tau): the classical-quantum family.
    CqPhi { alpha: f64, tau: f64 },
    /// Pauli mixture with identity weight 1 - px - py - pz.
    Pauli { px: f64, py: f64, pz: f64 },
    /// Schur multiplication rho -> Gamma (hadamard) rho; Gamma PSD with
    /// unit diagonal.
    GeneralizedDephasing { gamma: MatrixJson },
    /// rho -> (1-nu) rho  (+) nu |e><e| on d+1 output dimensions.
    Erasure { nu: f64, d: usize },
    /// rho -> (1-p) rho + p I/d.
    Depolarizing { p: f64, d: usize },
    /// rho -> sigma for a fixed state sigma.
    Replacer { sigma: MatrixJson },
    /// rho -> U rho U*.
    Unitary { u: MatrixJson },
    /// Explicit Kraus operators.
    Kraus { ops: Vec<MatrixJson> },
    /// Qubit channel from an affine Bloch map w -> T w + t; the Choi
    /// positivity check gates acceptance.
    Bloch { t: [[f64; 3]; 3], v: [f64; 3] },
}

/// A compiled channel: all representations kept consistent.
#[derive(Debug, Clone)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMat>,
    choi: CMat,
    transfer: RMat,
    bloch: Option<(Matrix3<f64>, Vector3<f64>)>,
}

/// Orthonormal Hermitian basis of B(C^d)_sa: B_0 = I/sqrt(d) followed by
/// d^2 - 1 traceless elements (generalised Gell-Mann matrices).
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(CMat::identity(d, d).unscale((d as f64).sqrt()));
    let s = 1.0 / 2.0_f64.sqrt();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMat::zeros(d, d);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            basis.push(sym);
            let mut asym = CMat::zeros(d, d);
            asym[(j, k)] = C64::new(0.0, -s);
            asym[(k, j)] = C64::new(0.0, s);
            basis.push(asym);
        }
    }
    for k in 1..d {
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut diag = CMat::zeros(d, d);
        for i in 0..k {
            diag[(i, i)] = C64::new(norm, 0.0);
        }
        diag[(k, k)] = C64::new(-(k as f64) * norm, 0.0);
        basis.push(diag);
    }
    basis
}

fn kraus_apply(kraus: &[CMat], a: &CMat) -> CMat {
    let d_out = kraus[0].nrows();
    let mut out = CMat::zeros(d_out, d_out);
    for k in kraus {
        out += k * a * k.adjoint();
    }
    out
}

fn kraus_adjoint_apply(kraus: &[CMat], a: &CMat) -> CMat {
    let d_in = kraus[0].ncols();
    let mut out = CMat::zeros(d_in, d_in);
    for k in kraus {
        out += k.adjoint() * a * k;
    }
    out
}

fn choi_from_kraus(kraus: &[CMat], d_in: usize) -> CMat {
    let d_out = kraus[0].nrows();
    let dim = d_in * d_out;
    let mut choi = CMat::zeros(dim, dim);
    for k in kraus {
        // vec(K) with index (a, b) -> a*d_out + b holding K[b, a]
        let mut v = DVector::zeros(dim);
        for a in 0..d_in {
            for b in 0..d_out {
                v[a * d_out + b] = k[(b, a)];
            }
        }
        choi += &v * v.adjoint();
    }
    choi
}

fn kraus_from_choi(choi: &CMat, d_in: usize, d_out: usize) -> Vec<CMat> {
    let (vals, vecs) = eigh(choi);
    let mut kraus = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > 1e-12 {
            let col = vecs.column(i);
            let mut k = CMat::zeros(d_out, d_in);
            for a in 0..d_in {
                for b in 0..d_out {
                    k[(b, a)] = col[a * d_out + b] * C64::new(v.sqrt(), 0.0);
                }
            }
            kraus.push(k);
        }
    }
    kraus
}

fn transfer_from_kraus(kraus: &[CMat], d_in: usize, d_out: usize) -> RMat {
    let bin = hermitian_basis(d_in);
    let bout = hermitian_basis(d_out);
    let mut t = RMat::zeros(d_out * d_out, d_in * d_in);
    for (j, bj) in bin.iter().enumerate() {
        let image = kraus_apply(kraus, bj);
        for (i, bi) in bout.iter().enumerate() {
            t[(i, j)] = hs_inner_raw(bi, &image).re;
        }
    }
    t
}

fn bloch_from_transfer(transfer: &RMat) -> (Matrix3<f64>, Vector3<f64>) {
    // qubit basis order: I/sqrt(2), sx/sqrt(2), sy/sqrt(2), sz/sqrt(2);
    // on this basis T[i+1][j+1] and T[i+1][0] are exactly the Bloch
    // matrix and translation entries
    let mut t = Matrix3::zeros();
    let mut v = Vector3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            t[(i, j)] = transfer[(i + 1, j + 1)];
        }
        v[i] = transfer[(i + 1, 0)];
    }
    (t, v)
}

impl Channel {
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// Real transfer matrix on the orthonormal Hermitian basis,
    /// (d_out^2) x (d_in^2) with the identity coordinate first.
    pub fn transfer(&self) -> &RMat {
        &self.transfer
    }

    /// The traceless block of the transfer matrix.
    pub fn transfer_traceless(&self) -> RMat {
        let r = self.d_out * self.d_out - 1;
        let c = self.d_in * self.d_in - 1;
        let mut t = RMat::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                t[(i, j)] = self.transfer[(i + 1, j + 1)];
            }
        }
        t
    }

    /// Affine Bloch form (T, t), cached for qubit-to-qubit channels.
    pub fn bloch(&self) -> Option<(Matrix3<f64>, Vector3<f64>)> {
        self.bloch
    }

    /// Apply the channel to an arbitrary operator (Kraus sum).
    pub fn apply_raw(&self, a: &CMat) -> ChannelResult<CMat> {
        if a.nrows() != self.d_in {
            return Err(ChannelError::DimMismatch(a.nrows(), self.d_in));
        }
        Ok(kraus_apply(&self.kraus, a))
    }

    pub fn apply(&self, a: &HermitianMatrix) -> ChannelResult<HermitianMatrix> {
        Ok(HermitianMatrix::symmetrize(self.apply_raw(a.matrix())?))
    }

    pub fn apply_state(&self, rho: &DensityOperator) -> ChannelResult<DensityOperator> {
        let out = self.apply_raw(rho.matrix())?;
        DensityOperator::validate(HermitianMatrix::symmetrize(out), 1e-8).map_err(ChannelError::Op)
    }

    /// The adjoint (positive, unital) map sum_k K* A K.
    pub fn adjoint_apply(&self, a: &HermitianMatrix) -> ChannelResult<HermitianMatrix> {
        if a.dim() != self.d_out {
            return Err(ChannelError::DimMismatch(a.dim(), self.d_out));
        }
        Ok(HermitianMatrix::symmetrize(kraus_adjoint_apply(
            &self.kraus,
            a.matrix(),
        )))
    }

    /// outer . inner, with the Kraus list re-canonicalised through the
    /// composed Choi matrix so iterated compositions stay at most
    /// d_in * d_out operators.
    pub fn compose(outer: &Channel, inner: &Channel) -> ChannelResult<Channel> {
        if inner.d_out != outer.d_in {
            return Err(ChannelError::DimMismatch(inner.d_out, outer.d_in));
        }
        let d_in = inner.d_in;
        let d_out = outer.d_out;
        let dim = d_in * d_out;
        let mut choi = CMat::zeros(dim, dim);
        for a in 0..d_in {
            for ap in 0..d_in {
                let mut unit = CMat::zeros(d_in, d_in);
                unit[(a, ap)] = C64::new(1.0, 0.0);
                let img = kraus_apply(&outer.kraus, &kraus_apply(&inner.kraus, &unit));
                for b in 0..d_out {
                    for bp in 0..d_out {
                        choi[(a * d_out + b, ap * d_out + bp)] = img[(b, bp)];
                    }
                }
            }
        }
        let kraus = kraus_from_choi(&choi, d_in, d_out);
        let transfer = &outer.transfer * &inner.transfer;
        let bloch = if d_in == 2 && d_out == 2 {
            Some(bloch_from_transfer(&transfer))
        } else {
            None
        };
        Ok(Channel {
            d_in,
            d_out,
            kraus,
            choi,
            transfer,
            bloch,
        })
    }

    /// n-fold composition; n = 0 gives the identity channel.
    pub fn iterate(&self, n: usize) -> ChannelResult<Channel> {
        if self.d_in != self.d_out {
            return Err(ChannelError::DimMismatch(self.d_in, self.d_out));
        }
        let mut acc = identity_channel(self.d_in);
        for _ in 0..n {
            acc = Channel::compose(self, &acc)?;
        }
        Ok(acc)
    }
}

pub fn identity_channel(d: usize) -> Channel {
    let kraus = vec![CMat::identity(d, d)];
    let choi = choi_from_kraus(&kraus, d);
    let transfer = RMat::identity(d * d, d * d);
    let bloch = if d == 2 {
        Some((Matrix3::identity(), Vector3::zeros()))
    } else {
        None
    };
    Channel {
        d_in: d,
        d_out: d,
        kraus,
        choi,
        transfer,
        bloch,
    }
}

fn check_param(ok: bool, msg: &str) -> ChannelResult<()> {
    if ok {
        Ok(())
    } else {
        Err(ChannelError::BadParameter(msg.to_string()))
    }
}

/// Kraus operators of a measure-and-prepare channel
/// rho -> sum_i Tr(F_i rho) sigma_i.
fn measure_prepare_kraus(povm: &[CMat], outputs: &[CMat]) -> Vec<CMat> {
    let mut kraus = Vec::new();
    for (f, sig) in povm.iter().zip(outputs) {
        let (fvals, fvecs) = eigh(f);
        let (svals, svecs) = eigh(sig);
        for (i, &fi) in fvals.iter().enumerate() {
            if fi <= 1e-14 {
                continue;
            }
            for (j, &sj) in svals.iter().enumerate() {
                if sj <= 1e-14 {
                    continue;
                }
                let k =
                    svecs.column(j) * fvecs.column(i).adjoint() * C64::new((fi * sj).sqrt(), 0.0);
                kraus.push(k);
            }
        }
    }
    kraus
}

/// Compile a [`ChannelSpec`] to a [`Channel`], verifying complete
/// positivity and trace preservation.
pub fn build_channel(spec: &ChannelSpec) -> ChannelResult<Channel> {
    let (kraus, d_in, d_out): (Vec<CMat>, usize, usize) = match spec {
        ChannelSpec::Dephasing { p } => {
            check_param((0.0..=1.0).contains(p), "dephasing p must lie in [0, 1]")?;
            // phase flip with probability p/2 gives T = diag(1-p, 1-p, 1)
            let i2 = CMat::identity(2, 2).scale((1.0 - p / 2.0).sqrt());
            let z = crate::opcore::pauli_z().into_matrix().scale((p / 2.0).sqrt());
            (vec![i2, z], 2, 2)
        }
        ChannelSpec::AmplitudeDamping { g } => {
            check_param((0.0..=1.0).contains(g), "damping g must lie in [0, 1]")?;
            let mut k0 = CMat::identity(2, 2);
            k0[(1, 1)] = C64::new((1.0 - g).sqrt(), 0.0);
            let mut k1 = CMat::zeros(2, 2);
            k1[(0, 1)] = C64::new(g.sqrt(), 0.0);
            (vec![k0, k1], 2, 2)
        }
        ChannelSpec::CqPhi { alpha, tau } => {
            check_param(
                alpha * alpha + tau * tau <= 1.0 + 1e-12,
                "cq_phi needs alpha^2 + tau^2 <= 1",
            )?;
            // measure (I +- sigma_x)/2, prepare (I +- alpha sigma_x + tau sigma_z)/2
            let sx = crate::opcore::pauli_x().into_matrix();
            let sz = crate::opcore::pauli_z().into_matrix();
            let i2 = CMat::identity(2, 2);
            let povm = [(&i2 + &sx).scale(0.5), (&i2 - &sx).scale(0.5)];
            let outs = [
                (&i2 + sx.scale(*alpha) + sz.scale(*tau)).scale(0.5),
                (&i2 - sx.scale(*alpha) + sz.scale(*tau)).scale(0.5),
            ];
            (measure_prepare_kraus(&povm, &outs), 2, 2)
        }
        ChannelSpec::Pauli { px, py, pz } => {
            check_param(
                *px >= 0.0 && *py >= 0.0 && *pz >= 0.0 && px + py + pz <= 1.0,
                "pauli weights must be nonnegative and sum to at most 1",
            )?;
            let p0 = 1.0 - px - py - pz;
            let mut kraus = Vec::new();
            if p0 > 0.0 {
                kraus.push(CMat::identity(2, 2).scale(p0.sqrt()));
            }
            for (w, m) in [
                (*px, crate::opcore::pauli_x()),
                (*py, crate::opcore::pauli_y()),
                (*pz, crate::opcore::pauli_z()),
            ] {
                if w > 0.0 {
                    kraus.push(m.into_matrix().scale(w.sqrt()));
                }
            }
            (kraus, 2, 2)
        }
        ChannelSpec::GeneralizedDephasing { gamma } => {
            let g = gamma.to_cmat()?;
            let d = g.nrows();
            check_param(d == g.ncols(), "gamma must be square")?;
            for i in 0..d {
                check_param(
                    (g[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-10,
                    "gamma must have unit diagonal",
                )?;
            }
            let h = HermitianMatrix::new(g.clone())
                .map_err(|e| ChannelError::BadParameter(format!("gamma: {e}")))?;
            let (vals, vecs) = eigh(h.matrix());
            check_param(
                vals.iter().all(|&v| v > -1e-10),
                "gamma must be positive semidefinite",
            )?;
            let mut kraus = Vec::new();
            for (i, &v) in vals.iter().enumerate() {
                if v > 1e-14 {
                    let mut k = CMat::zeros(d, d);
                    for r in 0..d {
                        k[(r, r)] = vecs[(r, i)] * C64::new(v.sqrt(), 0.0);
                    }
                    kraus.push(k);
                }
            }
            (kraus, d, d)
        }
        ChannelSpec::Erasure { nu, d } => {
            check_param((0.0..=1.0).contains(nu), "erasure nu must lie in [0, 1]")?;
            check_param(*d >= 1, "erasure input dimension must be positive")?;
            let d_in = *d;
            let d_out = d_in + 1;
            let mut kraus = Vec::new();
            if *nu < 1.0 {
                let mut embed = CMat::zeros(d_out, d_in);
                for i in 0..d_in {
                    embed[(i, i)] = C64::new((1.0 - nu).sqrt(), 0.0);
                }
                kraus.push(embed);
            }
            if *nu > 0.0 {
                for i in 0..d_in {
                    let mut k = CMat::zeros(d_out, d_in);
                    k[(d_in, i)] = C64::new(nu.sqrt(), 0.0);
                    kraus.push(k);
                }
            }
            (kraus, d_in, d_out)
        }
        ChannelSpec::Depolarizing { p, d } => {
            check_param((0.0..=1.0).contains(p), "depolarizing p must lie in [0, 1]")?;
            check_param(*d >= 2, "depolarizing dimension must be at least 2")?;
            let d = *d;
            let mut kraus = Vec::new();
            if *p < 1.0 {
                kraus.push(CMat::identity(d, d).scale((1.0 - p).sqrt()));
            }
            if *p > 0.0 {
                let w = (p / d as f64).sqrt();
                for i in 0..d {
                    for j in 0..d {
                        let mut k = CMat::zeros(d, d);
                        k[(i, j)] = C64::new(w, 0.0);
                        kraus.push(k);
                    }
                }
            }
            (kraus, d, d)
        }
        ChannelSpec::Replacer { sigma } => {
            let s = sigma.to_hermitian()?;
            let d = s.dim();
            let st = DensityOperator::validate(s, 1e-9)
                .map_err(|e| ChannelError::BadParameter(format!("sigma: {e}")))?;
            let (vals, vecs) = eigh(st.matrix());
            let mut kraus = Vec::new();
            for (k, &v) in vals.iter().enumerate() {
                if v > 1e-14 {
                    for i in 0..d {
                        let mut op = CMat::zeros(d, d);
                        let col = vecs.column(k);
                        for r in 0..d {
                            op[(r, i)] = col[r] * C64::new(v.sqrt(), 0.0);
                        }
                        kraus.push(op);
                    }
                }
            }
            (kraus, d, d)
        }
        ChannelSpec::Unitary { u } => {
            let m = u.to_cmat()?;
            let d = m.nrows();
            check_param(d == m.ncols(), "unitary must be square")?;
            let dev = (m.adjoint() * &m - CMat::identity(d, d)).norm();
            check_param(dev < 1e-10, "matrix is not unitary")?;
            (vec![m], d, d)
        }
        ChannelSpec::Kraus { ops } => {
            check_param(!ops.is_empty(), "need at least one Kraus operator")?;
            let mats: Vec<CMat> = ops.iter().map(|m| m.to_cmat()).collect::<Result<_, _>>()?;
            let d_out = mats[0].nrows();
            let d_in = mats[0].ncols();
            check_param(
                mats.iter().all(|m| m.nrows() == d_out && m.ncols() == d_in),
                "Kraus operators must share dimensions",
            )?;
            (mats, d_in, d_out)
        }
        ChannelSpec::Bloch { t, v } => {
            // N(A) = (Tr A/2)(I + t.sigma) + (T a).sigma, a_k = Tr(sigma_k A)/2
            let paulis = [
                crate::opcore::pauli_x().into_matrix(),
                crate::opcore::pauli_y().into_matrix(),
                crate::opcore::pauli_z().into_matrix(),
            ];
            let dim = 4;
            let mut choi = CMat::zeros(dim, dim);
            for a in 0..2 {
                for ap in 0..2 {
                    let mut unit = CMat::zeros(2, 2);
                    unit[(a, ap)] = C64::new(1.0, 0.0);
                    let tr = unit.trace();
                    let coords: Vec<C64> = paulis
                        .iter()
                        .map(|s| (s * &unit).trace() * C64::new(0.5, 0.0))
                        .collect();
                    let mut img = CMat::identity(2, 2) * tr * C64::new(0.5, 0.0);
                    for i in 0..3 {
                        img += &paulis[i] * tr * C64::new(0.5 * v[i], 0.0);
                        let mut c = C64::new(0.0, 0.0);
                        for j in 0..3 {
                            c += C64::new(t[i][j], 0.0) * coords[j];
                        }
                        img += &paulis[i] * c;
                    }
                    for b in 0..2 {
                        for bp in 0..2 {
                            choi[(a * 2 + b, ap * 2 + bp)] = img[(b, bp)];
                        }
                    }
                }
            }
            let (cvals, _) = eigh(&choi);
            check_param(
                cvals.iter().all(|&x| x > -1e-10),
                "Bloch map is not completely positive (Choi not PSD)",
            )?;
            (kraus_from_choi(&choi, 2, 2), 2, 2)
        }
    };

    // CPTP verification on the compiled Kraus set
    let mut ksum = CMat::zeros(d_in, d_in);
    for k in &kraus {
        ksum += k.adjoint() * k;
    }
    let tp_dev = (&ksum - CMat::identity(d_in, d_in)).norm();
    if tp_dev > 1e-10 {
        return Err(ChannelError::NotCptp(format!(
            "sum K*K deviates from identity by {tp_dev:.3e}"
        )));
    }
    let choi = choi_from_kraus(&kraus, d_in);
    let (cvals, _) = eigh(&choi);
    if cvals.iter().any(|&v| v < -1e-10) {
        return Err(ChannelError::NotCptp(format!(
            "Choi matrix has eigenvalue {:.3e}",
            cvals[0]
        )));
    }
    let transfer = transfer_from_kraus(&kraus, d_in, d_out);
    let bloch = if d_in == 2 && d_out == 2 {
        Some(bloch_from_transfer(&transfer))
    } else {
        None
    };
    Ok(Channel {
        d_in,
        d_out,
        kraus,
        choi,
        transfer,
        bloch,
    })
}

/// Random CPTP channel of the given Kraus rank via a Haar isometry.
pub fn random_channel(d: usize, kraus_rank: usize, seed: u64) -> Channel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // QR of a tall Ginibre matrix gives a Haar isometry C^d -> C^{dk}
    let g = ginibre(&mut rng, d * kraus_rank, d);
    let qr = g.qr();
    let q = qr.q();
    let kraus: Vec<CMat> = (0..kraus_rank)
        .map(|k| {
            let mut op = CMat::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    op[(r, c)] = q[(k * d + r, c)];
                }
            }
            op
        })
        .collect();
    let choi = choi_from_kraus(&kraus, d);
    let transfer = transfer_from_kraus(&kraus, d, d);
    let bloch = if d == 2 {
        Some(bloch_from_transfer(&transfer))
    } else {
        None
    };
    Channel {
        d_in: d,
        d_out: d,
        kraus,
        choi,
        transfer,
        bloch,
    }
}

/// Fixed states of a channel, taken from the eigenvalue-1 eigenspace of
/// the transfer matrix intersected with the state set.
pub fn fixed_points(ch: &Channel, tol: f64) -> ChannelResult<Vec<DensityOperator>> {
    if ch.d_in != ch.d_out {
        return Err(ChannelError::DimMismatch(ch.d_in, ch.d_out));
    }
    let d = ch.d_in;
    let n = d * d;
    let m = ch.transfer.clone() - RMat::identity(n, n);
    let svd = m.svd(true, true);
    let vt = svd.v_t.as_ref().unwrap();
    let basis = hermitian_basis(d);
    let mut found: Vec<DensityOperator> = Vec::new();
    let push_state = |mat: CMat, found: &mut Vec<DensityOperator>| {
        let tr: f64 = (0..d).map(|i| mat[(i, i)].re).sum();
        if tr.abs() < 1e-9 {
            return;
        }
        let cand = mat.unscale(tr);
        if let Ok(st) = DensityOperator::validate(HermitianMatrix::symmetrize(cand), 1e-7) {
            if found
                .iter()
                .all(|f| (f.matrix() - st.matrix()).norm() > 1e-7)
            {
                found.push(st);
            }
        }
    };
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol.max(1e-10) {
            let row = vt.row(i);
            let mut mat = CMat::zeros(d, d);
            for (j, b) in basis.iter().enumerate() {
                mat += b.scale(row[j]);
            }
            push_state(mat.clone(), &mut found);
            push_state(-mat, &mut found);
        }
    }
    if found.is_empty() {
        // Cesaro average of iterates from the maximally mixed state
        let mut coord = state_to_coords(ch, &DensityOperator::maximally_mixed(d));
        let mut acc = coord.clone();
        for _ in 0..2048 {
            coord = &ch.transfer * coord;
            acc += &coord;
        }
        acc /= 2049.0;
        let mat = coords_to_matrix(d, &acc);
        push_state(mat, &mut found);
    }
    if found.is_empty() {
        return Err(ChannelError::NoFixedPoint);
    }
    Ok(found)
}

pub(crate) fn state_to_coords(ch: &Channel, rho: &DensityOperator) -> DVector<f64> {
    let basis = hermitian_basis(ch.d_in);
    DVector::from_iterator(
        basis.len(),
        basis.iter().map(|b| hs_inner_raw(b, rho.matrix()).re),
    )
}

pub(crate) fn coords_to_matrix(d: usize, v: &DVector<f64>) -> CMat {
    let basis = hermitian_basis(d);
    let mut m = CMat::zeros(d, d);
    for (j, b) in basis.iter().enumerate() {
        m += b.scale(v[j]);
    }
    m
}

/// Output-eigenvalue extremes over the state set, with witnesses.
///
/// Both extremes are attained at pure inputs (the output's smallest
/// eigenvalue is concave in the state, the largest convex). For qubits
/// the boundary maximisation of |T w + t| over the sphere is solved
/// through the trust-region secular equation, so the values are exact to
/// floating point; higher dimensions use multi-start Nelder-Mead over
/// pure-state parameters and the reported lambda_min is an upper bound
/// of the true minimum (lambda_max a lower bound of the maximum).
#[derive(Debug, Clone)]
pub struct LambdaExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub witness_min: DensityOperator,
    pub witness_max: DensityOperator,
    /// true when the qubit secular solve applied
    pub exact: bool,
}

fn qubit_max_radius(t: &Matrix3<f64>, v: &Vector3<f64>) -> (f64, Vector3<f64>) {
    // maximise |T w + v| over |w| = 1 (convexity puts the optimum on
    // the sphere): stationary points solve (lam I - T^T T) w = T^T v.
    let a = t.transpose() * t;
    let b = t.transpose() * v;
    let se = nalgebra::SymmetricEigen::new(a);
    let evals = se.eigenvalues;
    let evecs = se.eigenvectors;
    let bb = evecs.transpose() * b;
    let lam_top = evals.max();
    let objective = |w: &Vector3<f64>| (t * w + v).norm();
    let mut best = (f64::NEG_INFINITY, Vector3::zeros());
    let mut consider = |w: Vector3<f64>| {
        let n = w.norm();
        if n > 1e-14 {
            let wn = w / n;
            let val = objective(&wn);
            if val > best.0 {
                best = (val, wn);
            }
        }
    };
    if b.norm() < 1e-13 {
        // pure quadratic: maximiser is any top eigenvector
        for k in 0..3 {
            if (evals[k] - lam_top).abs() < 1e-12 {
                consider(evecs.column(k).into());
            }
        }
    } else {
        let norm_w = |lam: f64| -> f64 {
            (0..3)
                .map(|k| (bb[k] / (lam - evals[k])).powi(2))
                .sum::<f64>()
        };
        let mut lo = lam_top + 1e-14;
        let mut hi = lam_top.abs().max(1.0) + b.norm() + 1.0;
        while norm_w(hi) > 1.0 {
            hi *= 2.0;
        }
        if norm_w(lo) >= 1.0 {
            // secular root on (lam_top, hi)
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if norm_w(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lam = 0.5 * (lo + hi);
            let mut w = Vector3::zeros();
            for k in 0..3 {
                w += evecs.column(k) * (bb[k] / (lam - evals[k]));
            }
            consider(w);
        } else {
            // hard case: b orthogonal to the top eigenspace
            let mut w0 = Vector3::zeros();
            for k in 0..3 {
                if (evals[k] - lam_top).abs() > 1e-12 {
                    w0 += evecs.column(k) * (bb[k] / (lam_top - evals[k]));
                }
            }
            let rem = (1.0 - w0.norm_squared()).max(0.0).sqrt();
            for k in 0..3 {
                if (evals[k] - lam_top).abs() < 1e-12 {
                    consider(w0 + evecs.column(k) * rem);
                    consider(w0 - evecs.column(k) * rem);
                }
            }
            consider(w0);
        }
    }
    // coarse sphere grid guards the secular branch selection
    for iphi in 0..72 {
        for ith in 0..=36 {
            let phi = iphi as f64 * std::f64::consts::PI / 36.0;
            let th = ith as f64 * std::f64::consts::PI / 36.0;
            consider(Vector3::new(
                th.sin() * phi.cos(),
                th.sin() * phi.sin(),
                th.cos(),
            ));
        }
    }
    (best.0, best.1)
}

pub fn lambda_extremes(ch: &Channel) -> LambdaExtremes {
    if let Some((t, v)) = ch.bloch {
        let (r, w) = qubit_max_radius(&t, &v);
        let r = r.min(1.0);
        let wit = bloch_pure(&w);
        // the largest-output-radius input carries both extremes (1 -+ r)/2
        return LambdaExtremes {
            lambda_min: ((1.0 - r) / 2.0).max(0.0),
            lambda_max: (1.0 + r) / 2.0,
            witness_min: wit.clone(),
            witness_max: wit,
            exact: true,
        };
    }
    let d = ch.d_in;
    let obj = |params: &[f64], minimize_min: bool| -> f64 {
        let mut v = DVector::zeros(d);
        for i in 0..d {
            v[i] = C64::new(params[2 * i], params[2 * i + 1]);
        }
        let n = v.norm();
        if n < 1e-12 {
            return f64::INFINITY;
        }
        let v = v.unscale(n);
        let rho = &v * v.adjoint();
        let out = kraus_apply(&ch.kraus, &rho);
        let (vals, _) = eigh(&out);
        if minimize_min {
            vals[0]
        } else {
            -vals[vals.len() - 1]
        }
    };
    let mut best_min: (f64, Vec<f64>) = (f64::INFINITY, vec![1.0; 2 * d]);
    let mut best_max: (f64, Vec<f64>) = (f64::INFINITY, vec![1.0; 2 * d]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ab);
    for restart in 0..32 {
        let x0: Vec<f64> = if restart < d {
            let mut x = vec![0.0; 2 * d];
            x[2 * restart] = 1.0;
            x
        } else {
            (0..2 * d).map(|_| rng.gen::<f64>() - 0.5).collect()
        };
        let rmin = nelder_mead(|x| obj(x, true), &x0, 1.0, 400, 1e-12);
        if rmin.fx < best_min.0 {
            best_min = (rmin.fx, rmin.x);
        }
        let rmax = nelder_mead(|x| obj(x, false), &x0, 1.0, 400, 1e-12);
        if rmax.fx < best_max.0 {
            best_max = (rmax.fx, rmax.x);
        }
    }
    let to_state = |params: &[f64]| -> DensityOperator {
        let mut v = DVector::zeros(d);
        for i in 0..d {
            v[i] = C64::new(params[2 * i], params[2 * i + 1]);
        }
        DensityOperator::pure(&v)
    };
    let wmin = to_state(&best_min.1);
    let wmax = to_state(&best_max.1);
    let omin = ch.apply_state(&wmin).unwrap();
    let omax = ch.apply_state(&wmax).unwrap();
    LambdaExtremes {
        lambda_min: omin.min_eig(),
        lambda_max: omax.max_eig(),
        witness_min: wmin,
        witness_max: wmax,
        exact: false,
    }
}

/// Pure qubit state with Bloch direction `w` (normalised internally).
pub fn bloch_pure(w: &Vector3<f64>) -> DensityOperator {
    let n = w.norm().max(1e-300);
    bloch_state(&(w / n))
}

/// Qubit state (I + w.sigma)/2.
pub fn bloch_state(w: &Vector3<f64>) -> DensityOperator {
    let m = CMat::identity(2, 2).scale(0.5)
        + crate::opcore::pauli_x().into_matrix().scale(0.5 * w[0])
        + crate::opcore::pauli_y().into_matrix().scale(0.5 * w[1])
        + crate::opcore::pauli_z().into_matrix().scale(0.5 * w[2]);
    DensityOperator::new_unchecked_from(m).unwrap()
}

/// Bloch vector of a qubit state.
pub fn bloch_vector(rho: &DensityOperator) -> Vector3<f64> {
    Vector3::new(
        (crate::opcore::pauli_x().matrix() * rho.matrix()).trace().re,
        (crate::opcore::pauli_y().matrix() * rho.matrix()).trace().re,
        (crate::opcore::pauli_z().matrix() * rho.matrix()).trace().re,
    )
}

/// Primitivity: unique fixed point, full rank, trivial peripheral
/// spectrum, plus a positivity check on an iterate (index bound
/// 2(d^2 - d + 1)).
#[derive(Debug, Clone)]
pub struct PrimitivityCertificate {
    pub primitive: bool,
    pub fixed_point: Option<DensityOperator>,
    pub fixed_space_dim: usize,
    pub fixed_point_min_eig: f64,
    pub peripheral_count: usize,
    pub second_modulus: f64,
    /// smallest m with lambda_min(N^m) above tolerance, if found
    pub positive_iterate: Option<(usize, f64)>,
}

pub fn is_primitive(ch: &Channel, tol: f64) -> ChannelResult<PrimitivityCertificate> {
    if ch.d_in != ch.d_out {
        return Err(ChannelError::DimMismatch(ch.d_in, ch.d_out));
    }
    let d = ch.d_in;
    let n = d * d;
    let m = ch.transfer.clone() - RMat::identity(n, n);
    let svd = m.svd(false, false);
    let scale = ch.transfer.norm().max(1.0);
    let fixed_space_dim = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= tol.max(1e-9) * scale)
        .count();
    let eigs = ch.transfer.clone().complex_eigenvalues();
    let mut mods: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let peripheral_count = mods.iter().filter(|&&m| m >= 1.0 - tol.max(1e-9)).count();
    let second_modulus = mods.get(1).copied().unwrap_or(0.0);
    let fps = fixed_points(ch, tol)?;
    let fixed_point = fps.first().cloned();
    let fixed_point_min_eig = fixed_point.as_ref().map_or(0.0, |f| f.min_eig());
    let mut positive_iterate = None;
    let unique_full_rank =
        fixed_space_dim == 1 && peripheral_count == 1 && fixed_point_min_eig > tol.max(1e-9);
    if unique_full_rank {
        let bound = 2 * (d * d - d + 1);
        let mut iter = identity_channel(d);
        for m in 1..=bound {
            iter = Channel::compose(ch, &iter)?;
            let ext = lambda_extremes(&iter);
            if ext.lambda_min > tol.max(1e-9) {
                positive_iterate = Some((m, ext.lambda_min));
                break;
            }
        }
    }
    Ok(PrimitivityCertificate {
        primitive: unique_full_rank && positive_iterate.is_some(),
        fixed_point,
        fixed_space_dim,
        fixed_point_min_eig,
        peripheral_count,
        second_modulus,
        positive_iterate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{pauli_x, pauli_z, random_state};
    use approx::assert_abs_diff_eq;

    fn dephasing(p: f64) -> Channel {
        build_channel(&ChannelSpec::Dephasing { p }).unwrap()
    }

    #[test]
    fn dephasing_bloch_form() {
        let ch = dephasing(0.3);
        let (t, v) = ch.bloch().unwrap();
        assert_abs_diff_eq!(t[(0, 0)], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(1, 1)], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(2, 2)], 1.0, epsilon = 1e-12);
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn amplitude_damping_bloch_form() {
        let ch = build_channel(&ChannelSpec::AmplitudeDamping { g: 0.36 }).unwrap();
        let (t, v) = ch.bloch().unwrap();
        assert_abs_diff_eq!(t[(0, 0)], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(1, 1)], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(2, 2)], 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], 0.36, epsilon = 1e-12);
    }

    #[test]
    fn cq_phi_bloch_form() {
        let ch = build_channel(&ChannelSpec::CqPhi {
            alpha: 0.6,
            tau: 0.8,
        })
        .unwrap();
        let (t, v) = ch.bloch().unwrap();
        assert_abs_diff_eq!(t[(0, 0)], 0.6, epsilon = 1e-10);
        for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)] {
            assert_abs_diff_eq!(t[(i, j)], 0.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(v[2], 0.8, epsilon = 1e-10);
        assert!(build_channel(&ChannelSpec::CqPhi {
            alpha: 0.9,
            tau: 0.9
        })
        .is_err());
    }

    #[test]
    fn apply_identity_and_replacer() {
        let id = identity_channel(3);
        let rho = random_state(3, 3, 1).unwrap();
        let out = id.apply(rho.hermitian()).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-12);

        let sigma = random_state(2, 2, 2).unwrap();
        let rep = build_channel(&ChannelSpec::Replacer {
            sigma: MatrixJson::from_cmat(sigma.matrix()),
        })
        .unwrap();
        let any = random_state(2, 2, 3).unwrap();
        let out = rep.apply_state(&any).unwrap();
        assert!((out.matrix() - sigma.matrix()).norm() < 1e-9);
    }

    #[test]
    fn generalized_dephasing_is_schur_product() {
        let mut g = CMat::identity(3, 3);
        g[(0, 1)] = C64::new(0.5, 0.1);
        g[(1, 0)] = C64::new(0.5, -0.1);
        g[(0, 2)] = C64::new(0.3, 0.0);
        g[(2, 0)] = C64::new(0.3, 0.0);
        g[(1, 2)] = C64::new(0.4, -0.2);
        g[(2, 1)] = C64::new(0.4, 0.2);
        let ch = build_channel(&ChannelSpec::GeneralizedDephasing {
            gamma: MatrixJson::from_cmat(&g),
        })
        .unwrap();
        let rho = random_state(3, 3, 4).unwrap();
        let out = ch.apply(rho.hermitian()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = g[(i, j)] * rho.matrix()[(i, j)];
                assert!((out.matrix()[(i, j)] - want).norm() < 1e-10);
            }
        }
        // diagonal states are preserved
        let diag = DensityOperator::new_unchecked_from(CMat::from_diagonal(
            &DVector::from_vec(vec![
                C64::new(0.5, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.2, 0.0),
            ]),
        ))
        .unwrap();
        let out = ch.apply_state(&diag).unwrap();
        assert!((out.matrix() - diag.matrix()).norm() < 1e-10);
    }

    #[test]
    fn compose_and_iterate() {
        let p = 0.4;
        let ch = dephasing(p);
        let sq = Channel::compose(&ch, &ch).unwrap();
        let (t, _) = sq.bloch().unwrap();
        assert_abs_diff_eq!(t[(0, 0)], (1.0 - p) * (1.0 - p), epsilon = 1e-12);
        assert_abs_diff_eq!(t[(2, 2)], 1.0, epsilon = 1e-12);

        let id = ch.iterate(0).unwrap();
        assert!((id.transfer() - RMat::identity(4, 4)).norm() < 1e-12);

        let sigma = random_state(2, 2, 5).unwrap();
        let rep = build_channel(&ChannelSpec::Replacer {
            sigma: MatrixJson::from_cmat(sigma.matrix()),
        })
        .unwrap();
        let rep2 = rep.iterate(2).unwrap();
        assert!((rep2.transfer() - rep.transfer()).norm() < 1e-8);
    }

    #[test]
    fn unitary_iterates_are_transfer_powers() {
        let h = 1.0 / 2.0_f64.sqrt();
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(h, 0.0);
        m[(0, 1)] = C64::new(h, 0.0);
        m[(1, 0)] = C64::new(h, 0.0);
        m[(1, 1)] = C64::new(-h, 0.0);
        let u = build_channel(&ChannelSpec::Unitary {
            u: MatrixJson::from_cmat(&m),
        })
        .unwrap();
        let u3 = u.iterate(3).unwrap();
        let t3 = u.transfer() * u.transfer() * u.transfer();
        assert!((u3.transfer() - t3).norm() < 1e-10);
    }

    #[test]
    fn transfer_and_kraus_agree() {
        for seed in 0..6 {
            let ch = random_channel(3, 2, seed);
            let rho = random_state(3, 3, 40 + seed).unwrap();
            let via_kraus = ch.apply(rho.hermitian()).unwrap();
            let coords = state_to_coords(&ch, &rho);
            let out_coords = ch.transfer() * coords;
            let via_transfer = coords_to_matrix(3, &out_coords);
            assert!((via_kraus.matrix() - via_transfer).norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_properties() {
        let h = 1.0 / 2.0_f64.sqrt();
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(h, 0.0);
        m[(0, 1)] = C64::new(h, 0.0);
        m[(1, 0)] = C64::new(h, 0.0);
        m[(1, 1)] = C64::new(-h, 0.0);
        let u = build_channel(&ChannelSpec::Unitary {
            u: MatrixJson::from_cmat(&m),
        })
        .unwrap();
        let rho = random_state(2, 2, 6).unwrap();
        let fwd = u.apply(rho.hermitian()).unwrap();
        let back = u.adjoint_apply(&fwd).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-10);

        for seed in 0..4 {
            let ch = random_channel(2, 3, 60 + seed);
            let ident = ch.adjoint_apply(&HermitianMatrix::identity(2)).unwrap();
            assert!((ident.matrix() - CMat::identity(2, 2)).norm() < 1e-10);
            // duality <N(X), Y> = <X, N^(Y)>
            let x = random_state(2, 2, 80 + seed).unwrap();
            let y = random_state(2, 2, 90 + seed).unwrap();
            let lhs = hs_inner_raw(ch.apply(x.hermitian()).unwrap().matrix(), y.matrix());
            let rhs = hs_inner_raw(
                x.matrix(),
                ch.adjoint_apply(y.hermitian()).unwrap().matrix(),
            );
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn fixed_points_and_primitivity() {
        let dep = build_channel(&ChannelSpec::Depolarizing { p: 0.5, d: 2 }).unwrap();
        let fps = fixed_points(&dep, 1e-9).unwrap();
        assert_eq!(fps.len(), 1);
        assert!((fps[0].matrix() - CMat::identity(2, 2).scale(0.5)).norm() < 1e-9);
        let cert = is_primitive(&dep, 1e-9).unwrap();
        assert!(cert.primitive);

        let ad = build_channel(&ChannelSpec::AmplitudeDamping { g: 0.3 }).unwrap();
        let fps = fixed_points(&ad, 1e-9).unwrap();
        assert_eq!(fps.len(), 1);
        // fixed point |0><0| at Bloch (0,0,1)
        assert_abs_diff_eq!(fps[0].matrix()[(0, 0)].re, 1.0, epsilon = 1e-8);
        let cert = is_primitive(&ad, 1e-9).unwrap();
        assert!(!cert.primitive, "amplitude damping fixed point is pure");

        let cq = build_channel(&ChannelSpec::CqPhi {
            alpha: 0.6,
            tau: 0.6,
        })
        .unwrap();
        let cert = is_primitive(&cq, 1e-9).unwrap();
        assert!(cert.primitive, "cq_phi with alpha^2+tau^2 < 1 is primitive");

        let uni = identity_channel(2);
        let cert = is_primitive(&uni, 1e-9).unwrap();
        assert!(!cert.primitive);
    }

    #[test]
    fn lambda_extremes_examples() {
        let dep = build_channel(&ChannelSpec::Depolarizing { p: 0.4, d: 2 }).unwrap();
        let ext = lambda_extremes(&dep);
        assert!(ext.exact);
        assert_abs_diff_eq!(ext.lambda_min, 0.2, epsilon = 1e-10);
        assert_abs_diff_eq!(ext.lambda_max, 0.8, epsilon = 1e-10);

        let deph = dephasing(0.3);
        let ext = lambda_extremes(&deph);
        assert_abs_diff_eq!(ext.lambda_min, 0.0, epsilon = 1e-10);

        let sigma = random_state(3, 3, 7).unwrap();
        let rep = build_channel(&ChannelSpec::Replacer {
            sigma: MatrixJson::from_cmat(sigma.matrix()),
        })
        .unwrap();
        let ext = lambda_extremes(&rep);
        assert_abs_diff_eq!(ext.lambda_min, sigma.min_eig(), epsilon = 1e-7);
        assert_abs_diff_eq!(ext.lambda_max, sigma.max_eig(), epsilon = 1e-7);
    }

    #[test]
    fn lambda_extremes_amplitude_damping_offset() {
        // non-unital qubit channel exercises the offset branch
        let ch = build_channel(&ChannelSpec::AmplitudeDamping { g: 0.36 }).unwrap();
        let ext = lambda_extremes(&ch);
        // w = (0,0,1) is fixed and pure: output radius 1
        assert_abs_diff_eq!(ext.lambda_min, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ext.lambda_max, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn erasure_dimensions_and_action() {
        let nu = 0.25;
        let ch = build_channel(&ChannelSpec::Erasure { nu, d: 2 }).unwrap();
        assert_eq!((ch.d_in(), ch.d_out()), (2, 3));
        let rho = random_state(2, 2, 8).unwrap();
        let out = ch.apply_state(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = rho.matrix()[(i, j)] * C64::new(1.0 - nu, 0.0);
                assert!((out.matrix()[(i, j)] - want).norm() < 1e-12);
            }
        }
        assert_abs_diff_eq!(out.matrix()[(2, 2)].re, nu, epsilon = 1e-12);
    }

    #[test]
    fn pauli_channels_are_unital() {
        let ch = build_channel(&ChannelSpec::Pauli {
            px: 0.1,
            py: 0.15,
            pz: 0.2,
        })
        .unwrap();
        let half = DensityOperator::maximally_mixed(2);
        let out = ch.apply_state(&half).unwrap();
        assert!((out.matrix() - half.matrix()).norm() < 1e-12);
    }

    #[test]
    fn bloch_spec_matches_named_channel() {
        let direct = build_channel(&ChannelSpec::Bloch {
            t: [[0.8, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.64]],
            v: [0.0, 0.0, 0.36],
        })
        .unwrap();
        let named = build_channel(&ChannelSpec::AmplitudeDamping { g: 0.36 }).unwrap();
        let rho = random_state(2, 2, 9).unwrap();
        let a = direct.apply_state(&rho).unwrap();
        let b = named.apply_state(&rho).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-9);
        // an inadmissible Bloch map is rejected via the Choi check
        assert!(build_channel(&ChannelSpec::Bloch {
            t: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
            v: [0.0, 0.0, 0.0],
        })
        .is_err());
    }

    #[test]
    fn bloch_consistency_on_random_channels() {
        for seed in 0..6 {
            let ch = random_channel(2, 2, 100 + seed);
            let (t, v) = ch.bloch().unwrap();
            let rho = random_state(2, 2, 200 + seed).unwrap();
            let w = bloch_vector(&rho);
            let expected = bloch_state(&(t * w + v));
            let out = ch.apply_state(&rho).unwrap();
            assert!((out.matrix() - expected.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn choi_is_cptp_for_every_builder() {
        let specs = vec![
            ChannelSpec::Dephasing { p: 0.3 },
            ChannelSpec::AmplitudeDamping { g: 0.5 },
            ChannelSpec::CqPhi {
                alpha: 0.5,
                tau: 0.5,
            },
            ChannelSpec::Pauli {
                px: 0.1,
                py: 0.1,
                pz: 0.1,
            },
            ChannelSpec::Erasure { nu: 0.5, d: 2 },
            ChannelSpec::Depolarizing { p: 0.7, d: 3 },
        ];
        for spec in specs {
            let ch = build_channel(&spec).unwrap();
            let (cvals, _) = eigh(ch.choi());
            assert!(cvals[0] > -1e-10, "{spec:?} violates Choi PSD");
            // partial trace over the output slot gives the identity
            let d_in = ch.d_in();
            let d_out = ch.d_out();
            let mut pt = CMat::zeros(d_in, d_in);
            for a in 0..d_in {
                for ap in 0..d_in {
                    let mut s = C64::new(0.0, 0.0);
                    for b in 0..d_out {
                        s += ch.choi()[(a * d_out + b, ap * d_out + b)];
                    }
                    pt[(a, ap)] = s;
                }
            }
            assert!((pt - CMat::identity(d_in, d_in)).norm() < 1e-10);
        }
    }

    #[test]
    fn pauli_strictly_positive_output() {
        let ch = build_channel(&ChannelSpec::Pauli {
            px: 0.1,
            py: 0.1,
            pz: 0.1,
        })
        .unwrap();
        let ext = lambda_extremes(&ch);
        assert!(ext.lambda_min > 0.05, "lambda_min = {}", ext.lambda_min);
    }
}
