//! Independent verification machinery: seeded Haar-random modes, exact
//! fermionic and truncated bosonic Fock-space diagonalization, restricted
//! spectrum bounds and the standard-form decomposition.

use rand_core::{RngCore, SeedableRng};

use crate::boson::{self, BosonicState};
use crate::error::{Error, Result};
use crate::fermion::{self, FermionicState};
use crate::linalg::{
    self, hermitian_eigen, max_abs, orthonormal_complete, symplectic_complete, C64, CMat, CVec,
    Mat, RVec,
};
use crate::tol;

/// Largest fermionic mode count the exact oracle accepts (`2^N <= 256`).
pub const FERMION_ORACLE_MAX_MODES: usize = 8;
/// Largest bosonic mode count of the truncated oracle.
pub const BOSON_ORACLE_MAX_MODES: usize = 2;
/// Largest per-mode occupation cutoff of the truncated oracle.
pub const BOSON_ORACLE_MAX_CUTOFF: usize = 60;

// ---------------------------------------------------------------------------
// Seeded sampling
// ---------------------------------------------------------------------------

/// Deterministic Gaussian sampler: ChaCha12 keyed by `(seed, stream)`,
/// uniform doubles from the top 53 bits, normals by Box-Muller. The same
/// `(seed, stream)` yields the same draw sequence on every platform.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    rng: rand_chacha::ChaCha12Rng,
    seed: u64,
    draws: u64,
    cached: Option<f64>,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self::for_stream(seed, 0)
    }

    /// Independent stream (e.g. one per sample index) under one seed.
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream.to_le_bytes());
        key[16] = 0x9e;
        key[17] = 0x37;
        SeededSampler {
            rng: rand_chacha::ChaCha12Rng::from_seed(key),
            seed,
            draws: 0,
            cached: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of normal draws made so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform in `[0, 1)` from the top 53 bits of the stream.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    pub fn normal(&mut self) -> f64 {
        self.draws += 1;
        if let Some(z) = self.cached.take() {
            return z;
        }
        loop {
            let u1 = self.uniform();
            if u1 <= f64::MIN_POSITIVE {
                continue;
            }
            let u2 = self.uniform();
            let radius = (-2.0 * u1.ln()).sqrt();
            let angle = 2.0 * std::f64::consts::PI * u2;
            self.cached = Some(radius * angle.sin());
            return radius * angle.cos();
        }
    }

    pub fn normal_vec(&mut self, len: usize) -> RVec {
        RVec::from_fn(len, |_, _| self.normal())
    }
}

/// Draws a Haar-random mode: two standard-normal covectors orthonormalized
/// with respect to the inner product induced by `g`. Near-collinear draws
/// (Gram determinant below `1e-12`) are redrawn a bounded number of times.
pub fn haar_random_mode(g: &Mat, sampler: &mut SeededSampler) -> Result<(RVec, RVec)> {
    let n = g.nrows();
    let inner = |a: &RVec, b: &RVec| (a.transpose() * g * b)[(0, 0)];
    for _ in 0..16 {
        let raw_x = sampler.normal_vec(n);
        let raw_k = sampler.normal_vec(n);
        let gxx = inner(&raw_x, &raw_x);
        let gxk = inner(&raw_x, &raw_k);
        let gkk = inner(&raw_k, &raw_k);
        let gram = gxx * gkk - gxk * gxk;
        if gram < 1e-12 {
            continue;
        }
        let x = &raw_x / gxx.sqrt();
        let overlap = inner(&x, &raw_k);
        let mut k = raw_k - &x * overlap;
        let nk = inner(&k, &k).max(0.0).sqrt();
        if nk < 1e-9 {
            continue;
        }
        k /= nk;
        return Ok((x, k));
    }
    Err(Error::DecompositionFailed(
        "Haar sampling exhausted its redraw budget".into(),
    ))
}

// ---------------------------------------------------------------------------
// Exact fermionic Fock oracle
// ---------------------------------------------------------------------------

fn pauli_x() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

fn pauli_y() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    )
}

fn eye_c(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Jordan-Wigner Majorana-type operators normalized to
/// `{xi_a, xi_b} = delta_ab`, interleaved `(q_1, p_1, ..., q_N, p_N)`.
fn majorana_operators(n_modes: usize) -> Vec<CMat> {
    let mut ops = Vec::with_capacity(2 * n_modes);
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for site in 0..n_modes {
        for local in [pauli_x(), pauli_y()] {
            let mut m = eye_c(1);
            for other in 0..n_modes {
                let factor = if other < site {
                    pauli_z()
                } else if other == site {
                    local.clone()
                } else {
                    eye_c(2)
                };
                m = m.kronecker(&factor);
            }
            ops.push(m * inv_sqrt2);
        }
    }
    ops
}

/// Exact Fock-space diagonalization of a quadratic fermionic Hamiltonian
/// on up to [`FERMION_ORACLE_MAX_MODES`] modes.
pub struct FermionFock {
    n_modes: usize,
    xi: Vec<CMat>,
    hamiltonian: CMat,
    energies: RVec,
    eigvecs: CMat,
}

impl FermionFock {
    pub fn new(h: &Mat) -> Result<Self> {
        let dim = h.nrows();
        let n_modes = dim / 2;
        if n_modes > FERMION_ORACLE_MAX_MODES {
            return Err(Error::OracleTooLarge {
                requested: n_modes,
                limit: FERMION_ORACLE_MAX_MODES,
            });
        }
        let scale = max_abs(h).max(1.0);
        if max_abs(&(h.transpose() + h)) > tol::STRUCTURAL * scale {
            return Err(Error::InvalidSpec("bilinear form must be antisymmetric".into()));
        }
        let xi = majorana_operators(n_modes);
        let fock_dim = 1usize << n_modes;
        let mut ham = CMat::zeros(fock_dim, fock_dim);
        for a in 0..dim {
            for b in a + 1..dim {
                let coeff = h[(a, b)];
                if coeff.abs() < 1e-300 {
                    continue;
                }
                // (i/2) h_ab [xi_a, xi_b] = i h_ab xi_a xi_b for a != b.
                ham += (&xi[a] * &xi[b]) * C64::new(0.0, coeff);
            }
        }
        let herm_defect = linalg::max_abs_c(&(ham.adjoint() - &ham));
        if herm_defect > 1e-10 * scale {
            return Err(Error::NumericalInconsistency(format!(
                "Fock Hamiltonian not Hermitian: {herm_defect:.3e}"
            )));
        }
        let (energies, eigvecs) = hermitian_eigen(&ham);
        Ok(FermionFock {
            n_modes,
            xi,
            hamiltonian: ham,
            energies,
            eigvecs,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// All eigenenergies, ascending.
    pub fn energies(&self) -> &RVec {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_vector(&self) -> CVec {
        self.eigvecs.column(0).clone_owned()
    }

    /// `<psi| op |psi>` for an explicit operator matrix.
    pub fn expectation(&self, psi: &CVec, op: &CMat) -> C64 {
        (psi.adjoint() * op * psi)[(0, 0)]
    }

    /// `<psi| xi_{a1} ... xi_{an} |psi>`.
    pub fn npoint(&self, psi: &CVec, indices: &[usize]) -> C64 {
        let mut v = psi.clone();
        for &a in indices.iter().rev() {
            v = &self.xi[a] * v;
        }
        (psi.adjoint() * v)[(0, 0)]
    }

    /// Covariance of a state vector, from the two-point function
    /// `<xi_a xi_b> = (G^{ab} + i Omega^{ab}) / 2`.
    pub fn covariance(&self, psi: &CVec) -> Mat {
        let dim = 2 * self.n_modes;
        let applied: Vec<CVec> = (0..dim).map(|a| &self.xi[a] * psi).collect();
        Mat::from_fn(dim, dim, |a, b| {
            let fwd = (applied[a].adjoint() * &applied[b])[(0, 0)];
            2.0 * fwd.im
        })
    }

    /// Energy of the Gaussian state with (pure) covariance `cov`,
    /// evaluated exactly by preparing the state as the ground state of an
    /// auxiliary Hamiltonian whose bilinear form is the covariance itself.
    pub fn energy_of_gaussian(&self, cov: &Mat) -> Result<f64> {
        let aux = FermionFock::new(cov)?;
        let psi = aux.ground_vector();
        Ok(self.expectation(&psi, &self.hamiltonian).re)
    }

    /// Entanglement entropy (bits) of a mode subset in the ground state,
    /// computed by relabeling the requested modes to the front of the
    /// chain, rediagonalizing and tracing out the complement.
    pub fn reduced_entropy(&self, h: &Mat, modes: &[usize]) -> Result<f64> {
        let n = self.n_modes;
        if modes.iter().any(|&m| m >= n) {
            return Err(Error::DimensionMismatch("mode index out of range".into()));
        }
        let mut order: Vec<usize> = modes.to_vec();
        for m in 0..n {
            if !order.contains(&m) {
                order.push(m);
            }
        }
        let dim = 2 * n;
        let mut perm = Mat::zeros(dim, dim);
        for (new, &old) in order.iter().enumerate() {
            perm[(2 * new, 2 * old)] = 1.0;
            perm[(2 * new + 1, 2 * old + 1)] = 1.0;
        }
        let h_perm = &perm * h * perm.transpose();
        let front = FermionFock::new(&h_perm)?;
        let psi = front.ground_vector();
        let rows = 1usize << modes.len();
        let cols = 1usize << (n - modes.len());
        let m = CMat::from_fn(rows, cols, |i, j| psi[i * cols + j]);
        let rho = &m * m.adjoint();
        let (probs, _) = hermitian_eigen(&rho);
        let mut s = 0.0;
        for p in probs.iter() {
            if *p > 1e-14 {
                s -= p * p.log2();
            }
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Truncated bosonic Fock oracle
// ---------------------------------------------------------------------------

enum FockTerm {
    /// coeff * (op on mode 0)
    Mode0(C64, CMat),
    /// coeff * (op on mode 1)
    Mode1(C64, CMat),
    /// coeff * (op on mode 0) (op on mode 1)
    Both(C64, CMat, CMat),
}

/// Truncated Fock-space model of a quadratic bosonic Hamiltonian on one
/// or two modes, diagonalized by Lanczos iteration.
pub struct BosonFock {
    n_modes: usize,
    dim_per_mode: usize,
    quadratures: Vec<CMat>,
    terms: Vec<FockTerm>,
}

impl BosonFock {
    pub fn new(h: &Mat, f: &RVec, cutoff: usize) -> Result<Self> {
        let n_modes = h.nrows() / 2;
        if n_modes == 0 || n_modes > BOSON_ORACLE_MAX_MODES {
            return Err(Error::OracleTooLarge {
                requested: n_modes,
                limit: BOSON_ORACLE_MAX_MODES,
            });
        }
        if cutoff < 6 || cutoff > BOSON_ORACLE_MAX_CUTOFF {
            return Err(Error::InvalidSpec(format!(
                "cutoff must lie in [6, {BOSON_ORACLE_MAX_CUTOFF}], got {cutoff}"
            )));
        }
        let d = cutoff + 1;
        let mut lower = CMat::zeros(d, d);
        for n in 1..d {
            lower[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let raise = lower.adjoint();
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let q_op = (&lower + &raise) * inv_sqrt2;
        let p_op = (&raise - &lower) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        // Interleaved quadratures (q_1, p_1, q_2, p_2).
        let mut quadratures = Vec::with_capacity(2 * n_modes);
        for _ in 0..n_modes {
            quadratures.push(q_op.clone());
            quadratures.push(p_op.clone());
        }
        let mut terms = Vec::new();
        let dim = 2 * n_modes;
        for a in 0..dim {
            for b in 0..dim {
                let coeff = 0.5 * h[(a, b)];
                if coeff.abs() < 1e-300 {
                    continue;
                }
                terms.push(Self::product_term(
                    n_modes,
                    C64::new(coeff, 0.0),
                    a,
                    b,
                    &quadratures,
                ));
            }
            let lin = f[a];
            if lin.abs() > 1e-300 {
                let op = quadratures[a].clone();
                terms.push(if n_modes == 1 || a < 2 {
                    FockTerm::Mode0(C64::new(lin, 0.0), op)
                } else {
                    FockTerm::Mode1(C64::new(lin, 0.0), op)
                });
            }
        }
        Ok(BosonFock {
            n_modes,
            dim_per_mode: d,
            quadratures,
            terms,
        })
    }

    fn product_term(n_modes: usize, coeff: C64, a: usize, b: usize, quads: &[CMat]) -> FockTerm {
        let mode_of = |idx: usize| idx / 2;
        let (ma, mb) = (mode_of(a), mode_of(b));
        if n_modes == 1 || (ma == 0 && mb == 0) {
            FockTerm::Mode0(coeff, &quads[a] * &quads[b])
        } else if ma == 1 && mb == 1 {
            FockTerm::Mode1(coeff, &quads[a] * &quads[b])
        } else if ma == 0 && mb == 1 {
            FockTerm::Both(coeff, quads[a].clone(), quads[b].clone())
        } else {
            // ma == 1, mb == 0: operators on distinct modes commute.
            FockTerm::Both(coeff, quads[b].clone(), quads[a].clone())
        }
    }

    pub fn fock_dim(&self) -> usize {
        self.dim_per_mode.pow(self.n_modes as u32)
    }

    /// Applies the Hamiltonian. States of two modes are reshaped to a
    /// `d x d` matrix with the first mode as the row index.
    fn matvec(&self, psi: &CVec) -> CVec {
        let d = self.dim_per_mode;
        if self.n_modes == 1 {
            let mut out = CVec::zeros(d);
            for term in &self.terms {
                if let FockTerm::Mode0(c, op) = term {
                    out += op * psi * *c;
                }
            }
            return out;
        }
        let m = CMat::from_fn(d, d, |i, j| psi[i * d + j]);
        let mut out = CMat::zeros(d, d);
        for term in &self.terms {
            match term {
                FockTerm::Mode0(c, op) => out += op * &m * *c,
                FockTerm::Mode1(c, op) => out += &m * op.transpose() * *c,
                FockTerm::Both(c, op0, op1) => out += op0 * &m * op1.transpose() * *c,
            }
        }
        CVec::from_fn(d * d, |idx, _| out[(idx / d, idx % d)])
    }

    /// Applies a single quadrature operator.
    fn apply_quadrature(&self, idx: usize, psi: &CVec) -> CVec {
        let d = self.dim_per_mode;
        let op = &self.quadratures[idx];
        if self.n_modes == 1 || idx < 2 {
            if self.n_modes == 1 {
                return op * psi;
            }
            let m = CMat::from_fn(d, d, |i, j| psi[i * d + j]);
            let out = op * m;
            CVec::from_fn(d * d, |k, _| out[(k / d, k % d)])
        } else {
            let m = CMat::from_fn(d, d, |i, j| psi[i * d + j]);
            let out = m * op.transpose();
            CVec::from_fn(d * d, |k, _| out[(k / d, k % d)])
        }
    }

    pub fn energy_of(&self, psi: &CVec) -> f64 {
        let hpsi = self.matvec(psi);
        (psi.adjoint() * hpsi)[(0, 0)].re
    }

    /// Ground energy and vector by Lanczos with full reorthogonalization.
    pub fn ground(&self) -> Result<(f64, CVec)> {
        let dim = self.fock_dim();
        lanczos_ground(dim, |v| self.matvec(v), 420, 1e-13)
    }

    /// `<xi_a>` and the symmetric covariance of a state vector.
    pub fn observables(&self, psi: &CVec) -> (RVec, Mat) {
        let dim = 2 * self.n_modes;
        let applied: Vec<CVec> = (0..dim).map(|a| self.apply_quadrature(a, psi)).collect();
        let z = RVec::from_fn(dim, |a, _| (psi.adjoint() * &applied[a])[(0, 0)].re);
        let cov = Mat::from_fn(dim, dim, |a, b| {
            let fwd = (applied[a].adjoint() * &applied[b])[(0, 0)];
            2.0 * fwd.re - 2.0 * z[a] * z[b]
        });
        (z, cov)
    }

    /// `<psi| xi_{a1} ... xi_{an} |psi>` (operators are not displaced).
    pub fn npoint(&self, psi: &CVec, indices: &[usize]) -> C64 {
        let mut v = psi.clone();
        for &a in indices.iter().rev() {
            v = self.apply_quadrature(a, &v);
        }
        (psi.adjoint() * v)[(0, 0)]
    }

    /// Reduced-density-matrix entropy (bits) of one mode of a two-mode
    /// state.
    pub fn reduced_entropy(&self, psi: &CVec, mode: usize) -> Result<f64> {
        if self.n_modes != 2 || mode > 1 {
            return Err(Error::InvalidSpec(
                "reduced entropy needs a two-mode oracle and mode index 0/1".into(),
            ));
        }
        let d = self.dim_per_mode;
        let m = CMat::from_fn(d, d, |i, j| psi[i * d + j]);
        let rho = if mode == 0 {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        let (probs, _) = hermitian_eigen(&rho);
        let mut s = 0.0;
        for p in probs.iter() {
            if *p > 1e-14 {
                s -= p * p.log2();
            }
        }
        Ok(s)
    }
}

/// Ground-state summary of the truncated oracle with its truncation
/// estimate (difference between `cutoff` and `cutoff - 5` results).
#[derive(Debug, Clone)]
pub struct BosonFockResult {
    pub ground_energy: f64,
    pub covariance: Mat,
    pub displacement: RVec,
    pub convergence_estimate: f64,
}

/// Runs the truncated oracle at `cutoff` and `cutoff - 5`, reporting the
/// shift as a convergence estimate; errors when it exceeds the requested
/// tolerance.
pub fn boson_fock_oracle(
    h: &Mat,
    f: &RVec,
    cutoff: usize,
    requested_tol: f64,
) -> Result<BosonFockResult> {
    let full = BosonFock::new(h, f, cutoff)?;
    let (e_full, psi_full) = full.ground()?;
    let (z_full, cov_full) = full.observables(&psi_full);

    let reduced = BosonFock::new(h, f, cutoff - 5)?;
    let (e_red, psi_red) = reduced.ground()?;
    let (_, cov_red) = reduced.observables(&psi_red);
    let estimate = (e_full - e_red)
        .abs()
        .max(max_abs(&(&cov_full - &cov_red)));
    if estimate > requested_tol {
        return Err(Error::NotConverged {
            estimate,
            requested: requested_tol,
        });
    }
    Ok(BosonFockResult {
        ground_energy: e_full,
        covariance: cov_full,
        displacement: z_full,
        convergence_estimate: estimate,
    })
}

/// Lanczos iteration for the smallest eigenpair of a Hermitian operator.
fn lanczos_ground<F>(dim: usize, matvec: F, max_iter: usize, tolerance: f64) -> Result<(f64, CVec)>
where
    F: Fn(&CVec) -> CVec,
{
    // Deterministic start vector with all Fock sectors populated.
    let mut state = 0x853c49e6748fea9bu64;
    let mut v = CVec::from_fn(dim, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        C64::new(
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5,
            (((state.wrapping_mul(2862933555777941757)) >> 11) as f64) / ((1u64 << 53) as f64)
                - 0.5,
        )
    });
    let norm = v.norm();
    v /= C64::new(norm, 0.0);

    let mut basis: Vec<CVec> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;

    for k in 0..max_iter.min(dim) {
        let mut w = matvec(&basis[k]);
        if k > 0 {
            w -= &basis[k - 1] * C64::new(betas[k - 1], 0.0);
        }
        let alpha = (basis[k].adjoint() * &w)[(0, 0)].re;
        alphas.push(alpha);
        w -= &basis[k] * C64::new(alpha, 0.0);
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let overlap = (b.adjoint() * &w)[(0, 0)];
                w -= b * overlap;
            }
        }
        let beta = w.norm();

        // Ritz check every few steps and at termination.
        let converged = {
            let m = alphas.len();
            let mut tri = Mat::zeros(m, m);
            for i in 0..m {
                tri[(i, i)] = alphas[i];
                if i + 1 < m {
                    tri[(i, i + 1)] = betas.get(i).copied().unwrap_or(0.0);
                    tri[(i + 1, i)] = tri[(i, i + 1)];
                }
            }
            let (vals, vecs) = linalg::symmetric_eigen_sorted(&tri);
            let theta = vals[0];
            let y: Vec<f64> = (0..m).map(|i| vecs[(i, 0)]).collect();
            let residual = beta * y[m - 1].abs();
            best = Some((theta, y));
            residual < tolerance * theta.abs().max(1.0)
        };
        if converged || beta < 1e-14 || k + 1 == max_iter.min(dim) {
            break;
        }
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }

    let (theta, y) = best.ok_or_else(|| Error::DecompositionFailed("Lanczos made no progress".into()))?;
    let mut ground = CVec::zeros(dim);
    for (c, b) in y.iter().zip(basis.iter()) {
        ground += b * C64::new(*c, 0.0);
    }
    let norm = ground.norm();
    ground /= C64::new(norm, 0.0);
    Ok((theta, ground))
}

// ---------------------------------------------------------------------------
// Restricted spectrum bounds
// ---------------------------------------------------------------------------

/// Outcome of the min-max bound check `omega_i <= eps_i <= omega_{N-2+i}`.
#[derive(Debug, Clone, Copy)]
pub struct BoundsReport {
    pub holds: bool,
    /// Signed margins: `(eps1 - w1, w_{N-1} - eps1, eps2 - w2, w_N - eps2)`.
    pub margins: [f64; 4],
}

/// Checks the restricted-spectrum bounds of a two-mode subsystem against
/// the full excitation energies (ascending).
pub fn spectrum_bounds_check(omegas: &[f64], eps1: f64, eps2: f64) -> Result<BoundsReport> {
    let n = omegas.len();
    if n < 2 {
        return Err(Error::InvalidSpec(
            "need at least two excitation energies".into(),
        ));
    }
    let margins = [
        eps1 - omegas[0],
        omegas[n - 2] - eps1,
        eps2 - omegas[1],
        omegas[n - 1] - eps2,
    ];
    let scale = omegas[n - 1].abs().max(1.0);
    let holds = margins.iter().all(|&m| m >= -1e-10 * scale);
    Ok(BoundsReport { holds, margins })
}

// ---------------------------------------------------------------------------
// Standard-form decomposition
// ---------------------------------------------------------------------------

/// A basis bringing the covariance into mode-wise standard form, plus the
/// squeezing parameters sorted descending.
#[derive(Debug, Clone)]
pub struct StandardFormDecomposition {
    /// Rows: `(x_1, k_1, ..., x_m, k_m | partner/filler rows ...)`.
    pub basis: Mat,
    pub r_values: Vec<f64>,
}

fn selection_rows(dim: usize, modes: &[usize]) -> Mat {
    let mut e = Mat::zeros(2 * modes.len(), dim);
    for (i, &m) in modes.iter().enumerate() {
        e[(2 * i, 2 * m)] = 1.0;
        e[(2 * i + 1, 2 * m + 1)] = 1.0;
    }
    e
}

/// Williamson-type normal form of the restriction `(G_A, Omega_A)`:
/// returns rows `w` (in the selected coordinates) with
/// `w G_A w^T = diag(c_i, c_i)` and `w Omega_A w^T` in Darboux form,
/// together with the `c_i`.
fn williamson_rows(g_a: &Mat, omega_a: &Mat) -> Result<(Mat, Vec<f64>)> {
    let g_inv_sqrt = linalg::sym_inv_sqrt(g_a);
    let b = &g_inv_sqrt * omega_a * &g_inv_sqrt;
    let (o, betas) = linalg::antisymmetric_canonical(&b)?;
    let m = betas.len();
    let mut scale = Mat::zeros(2 * m, 2 * m);
    let mut cs = Vec::with_capacity(m);
    for (i, beta) in betas.iter().enumerate() {
        if *beta <= 1e-12 {
            return Err(Error::InvalidRestriction {
                value: *beta,
                excess: 0.0,
            });
        }
        let s = 1.0 / beta.sqrt();
        scale[(2 * i, 2 * i)] = s;
        scale[(2 * i + 1, 2 * i + 1)] = s;
        cs.push(1.0 / beta);
    }
    Ok((scale * o * g_inv_sqrt, cs))
}

/// Standard-form decomposition of a bosonic state for the partition given
/// by canonical mode indices `a_modes` (the complement is `B`).
pub fn standard_form_decompose_boson(
    state: &BosonicState,
    a_modes: &[usize],
) -> Result<StandardFormDecomposition> {
    let dim = state.dim();
    let n_modes = dim / 2;
    if 2 * a_modes.len() > n_modes {
        return Err(Error::InvalidSpec(
            "partition A must not exceed half the modes".into(),
        ));
    }
    let e = selection_rows(dim, a_modes);
    let g_a = &e * state.covariance() * e.transpose();
    let omega_a = &e * state.forms().omega() * e.transpose();
    let (w, cs) = williamson_rows(&g_a, &omega_a)?;

    // Order pairs by descending c (descending r).
    let m = cs.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| cs[j].partial_cmp(&cs[i]).unwrap());

    let mut a_rows: Vec<RVec> = Vec::with_capacity(2 * m);
    let mut r_values = Vec::with_capacity(m);
    for &i in &order {
        let c = cs[i];
        if c < 1.0 - 1e-7 {
            return Err(Error::InvalidRestriction {
                value: c,
                excess: 1.0 - c,
            });
        }
        r_values.push(0.5 * c.max(1.0).acosh());
        let x = (w.row(2 * i) * &e).transpose();
        let k = (w.row(2 * i + 1) * &e).transpose();
        a_rows.push(x);
        a_rows.push(k);
    }

    // Partner rows for entangled modes.
    let mut partner_rows: Vec<Option<(RVec, RVec)>> = Vec::with_capacity(m);
    for (slot, &_i) in order.iter().enumerate() {
        let r = r_values[slot];
        if r > 1e-7 {
            let mode = boson::BosonicMode {
                x: a_rows[2 * slot].clone(),
                k: a_rows[2 * slot + 1].clone(),
            };
            let pair = boson::partner_mode(state, &mode)?;
            partner_rows.push(Some((pair.partner.x, pair.partner.k)));
        } else {
            partner_rows.push(None);
        }
    }

    // Complete symplectically, then normalize the uncorrelated rest with
    // its own Williamson form (pure rest: all c = 1).
    let mut seed = a_rows.clone();
    for p in partner_rows.iter().flatten() {
        seed.push(p.0.clone());
        seed.push(p.1.clone());
    }
    let full = symplectic_complete(state.forms().omega(), &seed)?;
    let rest_count = dim - seed.len();
    let mut rest_rows: Vec<RVec> = Vec::with_capacity(rest_count);
    if rest_count > 0 {
        let mut rest = Mat::zeros(rest_count, dim);
        for i in 0..rest_count {
            rest.set_row(i, &full.row(seed.len() + i));
        }
        let g_rest = &rest * state.covariance() * rest.transpose();
        let omega_rest = &rest * state.forms().omega() * rest.transpose();
        let (w_rest, cs_rest) = williamson_rows(&g_rest, &omega_rest)?;
        for (i, c) in cs_rest.iter().enumerate() {
            if (c - 1.0).abs() > 1e-6 {
                return Err(Error::NumericalInconsistency(format!(
                    "rest block not pure: c = {c}"
                )));
            }
            rest_rows.push((w_rest.row(2 * i) * &rest).transpose());
            rest_rows.push((w_rest.row(2 * i + 1) * &rest).transpose());
        }
    }

    // Assemble: A rows, then aligned B rows (partner or filler), then the
    // remaining filler modes.
    let mut rows: Vec<RVec> = a_rows.clone();
    let mut filler = rest_rows.into_iter();
    for p in &partner_rows {
        match p {
            Some((x, k)) => {
                rows.push(x.clone());
                rows.push(k.clone());
            }
            None => {
                rows.push(filler.next().ok_or_else(|| {
                    Error::DecompositionFailed("ran out of filler modes".into())
                })?);
                rows.push(filler.next().ok_or_else(|| {
                    Error::DecompositionFailed("ran out of filler modes".into())
                })?);
            }
        }
    }
    for rem in filler {
        rows.push(rem);
    }
    let mut basis = Mat::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        basis.set_row(i, &r.transpose());
    }

    // Verify against the expected standard form.
    let expected = expected_boson_standard_form(dim, &r_values);
    let got = &basis * state.covariance() * basis.transpose();
    let defect = max_abs(&(&got - &expected));
    let scale = max_abs(&expected).max(1.0);
    if defect > 1e-8 * scale {
        return Err(Error::NumericalInconsistency(format!(
            "standard form defect {defect:.3e}"
        )));
    }
    Ok(StandardFormDecomposition { basis, r_values })
}

/// Expected bosonic standard-form covariance for `r_values` on partition
/// sizes `(m, N - m)`.
pub fn expected_boson_standard_form(dim: usize, r_values: &[f64]) -> Mat {
    let m = r_values.len();
    let mut g = Mat::identity(dim, dim);
    for (i, r) in r_values.iter().enumerate() {
        let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let a = 2 * i;
        let b = 2 * m + 2 * i;
        g[(a, a)] = ch;
        g[(a + 1, a + 1)] = ch;
        g[(b, b)] = ch;
        g[(b + 1, b + 1)] = ch;
        g[(a, b)] = sh;
        g[(b, a)] = sh;
        g[(a + 1, b + 1)] = -sh;
        g[(b + 1, a + 1)] = -sh;
    }
    g
}

/// Standard-form decomposition of a fermionic state for the partition
/// given by canonical mode indices.
pub fn standard_form_decompose_fermion(
    state: &FermionicState,
    a_modes: &[usize],
) -> Result<StandardFormDecomposition> {
    let dim = state.dim();
    let n_modes = dim / 2;
    if 2 * a_modes.len() > n_modes {
        return Err(Error::InvalidSpec(
            "partition A must not exceed half the modes".into(),
        ));
    }
    let e = selection_rows(dim, a_modes);
    let g_a = &e * state.forms().g() * e.transpose();
    let omega_a = &e * state.covariance() * e.transpose();
    let g_inv_sqrt = linalg::sym_inv_sqrt(&g_a);
    let b = &g_inv_sqrt * &omega_a * &g_inv_sqrt;
    let (o, betas) = linalg::antisymmetric_canonical(&b)?;
    let w = &o * &g_inv_sqrt;

    let m = betas.len();
    for beta in &betas {
        if *beta > 1.0 + 1e-7 {
            return Err(Error::InvalidRestriction {
                value: *beta,
                excess: beta - 1.0,
            });
        }
    }
    // r descending means cos 2r ascending: reverse the canonical order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| betas[i].partial_cmp(&betas[j]).unwrap());

    let mut a_rows: Vec<RVec> = Vec::with_capacity(2 * m);
    let mut r_values = Vec::with_capacity(m);
    for &i in &order {
        let c = betas[i].clamp(0.0, 1.0);
        r_values.push(0.5 * c.acos());
        a_rows.push((w.row(2 * i) * &e).transpose());
        a_rows.push((w.row(2 * i + 1) * &e).transpose());
    }

    let mut partner_rows: Vec<Option<(RVec, RVec)>> = Vec::with_capacity(m);
    for slot in 0..m {
        let r = r_values[slot];
        if (2.0 * r).sin() > 1e-7 {
            let mode = fermion::FermionicMode {
                x: a_rows[2 * slot].clone(),
                k: a_rows[2 * slot + 1].clone(),
            };
            let pair = fermion::partner_mode(state, &mode)?;
            partner_rows.push(Some((pair.partner.x, pair.partner.k)));
        } else {
            partner_rows.push(None);
        }
    }

    let mut seed = a_rows.clone();
    for p in partner_rows.iter().flatten() {
        seed.push(p.0.clone());
        seed.push(p.1.clone());
    }
    let full = orthonormal_complete(state.forms().g(), &seed)?;
    let rest_count = dim - seed.len();
    let mut rest_rows: Vec<RVec> = Vec::with_capacity(rest_count);
    if rest_count > 0 {
        let mut rest = Mat::zeros(rest_count, dim);
        for i in 0..rest_count {
            rest.set_row(i, &full.row(seed.len() + i));
        }
        let omega_rest = &rest * state.covariance() * rest.transpose();
        let (o_rest, betas_rest) = linalg::antisymmetric_canonical(&omega_rest)?;
        for (i, c) in betas_rest.iter().enumerate() {
            if (c - 1.0).abs() > 1e-6 {
                return Err(Error::NumericalInconsistency(format!(
                    "rest block not pure: cos = {c}"
                )));
            }
            rest_rows.push((o_rest.row(2 * i) * &rest).transpose());
            rest_rows.push((o_rest.row(2 * i + 1) * &rest).transpose());
        }
    }

    let mut rows: Vec<RVec> = a_rows.clone();
    let mut filler = rest_rows.into_iter();
    for p in &partner_rows {
        match p {
            Some((x, k)) => {
                rows.push(x.clone());
                rows.push(k.clone());
            }
            None => {
                rows.push(filler.next().ok_or_else(|| {
                    Error::DecompositionFailed("ran out of filler modes".into())
                })?);
                rows.push(filler.next().ok_or_else(|| {
                    Error::DecompositionFailed("ran out of filler modes".into())
                })?);
            }
        }
    }
    for rem in filler {
        rows.push(rem);
    }
    let mut basis = Mat::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        basis.set_row(i, &r.transpose());
    }

    let expected = expected_fermion_standard_form(dim, &r_values);
    let got = &basis * state.covariance() * basis.transpose();
    let defect = max_abs(&(&got - &expected));
    if defect > 1e-8 {
        return Err(Error::NumericalInconsistency(format!(
            "standard form defect {defect:.3e}"
        )));
    }
    Ok(StandardFormDecomposition { basis, r_values })
}

/// Expected fermionic standard-form covariance for `r_values`.
pub fn expected_fermion_standard_form(dim: usize, r_values: &[f64]) -> Mat {
    let m = r_values.len();
    let mut om = Mat::zeros(dim, dim);
    let a2 = |m: &mut Mat, row: usize, col: usize, v: f64| {
        m[(row, col + 1)] += v;
        m[(col + 1, row)] -= v;
    };
    for (i, r) in r_values.iter().enumerate() {
        let (c, s) = ((2.0 * r).cos(), (2.0 * r).sin());
        let a = 2 * i;
        let b = 2 * m + 2 * i;
        a2(&mut om, a, a, c);
        a2(&mut om, b, b, c);
        // Cross block: Omega(x, kbar) = Omega(k, xbar) = sin 2r.
        om[(a, b + 1)] += s;
        om[(b + 1, a)] -= s;
        om[(a + 1, b)] += s;
        om[(b, a + 1)] -= s;
    }
    for i in 2 * m..dim / 2 {
        a2(&mut om, 2 * i, 2 * i, 1.0);
    }
    om
}
