//! Bosonic Gaussian states: ground states of quadratic Hamiltonians,
//! entanglement entropies, partner-mode construction and the two-mode
//! extraction-cost theory.

use crate::error::{Error, Result};
use crate::linalg::{self, abs_eigen_map, max_abs, symplectic_complete, FormPair, Mat, RVec};
use crate::tol;

/// Quadratic bosonic Hamiltonian: symmetric positive-definite bilinear
/// form `h` plus a linear part `f`, both in energy units.
#[derive(Debug, Clone)]
pub struct BosonicHamiltonian {
    h: Mat,
    f: RVec,
}

impl BosonicHamiltonian {
    pub fn new(h: Mat, f: RVec) -> Result<Self> {
        if !h.is_square() || h.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "quadratic form must be even-dimensional square".into(),
            ));
        }
        if f.len() != h.nrows() {
            return Err(Error::DimensionMismatch(
                "linear part length must match the quadratic form".into(),
            ));
        }
        let scale = max_abs(&h).max(1.0);
        if max_abs(&(h.transpose() - &h)) > tol::STRUCTURAL * scale {
            return Err(Error::InvalidSpec("quadratic form must be symmetric".into()));
        }
        Ok(BosonicHamiltonian { h, f })
    }

    /// Quadratic-only Hamiltonian (`f = 0`).
    pub fn quadratic(h: Mat) -> Result<Self> {
        let n = h.nrows();
        Self::new(h, RVec::zeros(n))
    }

    pub fn quadratic_form(&self) -> &Mat {
        &self.h
    }

    pub fn linear_part(&self) -> &RVec {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Pure bosonic Gaussian state: covariance, displacement and the derived
/// complex structure `J = -G omega^{-1}`, together with the kinematic
/// forms it lives on.
#[derive(Debug, Clone)]
pub struct BosonicState {
    cov: Mat,
    disp: RVec,
    cstruct: Mat,
    forms: FormPair,
}

impl BosonicState {
    /// Builds a state from covariance and displacement, deriving the
    /// complex structure. Purity (`J^2 = -1`) is validated.
    pub fn new(cov: Mat, disp: RVec, forms: FormPair) -> Result<Self> {
        let n = forms.dim();
        if cov.nrows() != n || disp.len() != n {
            return Err(Error::DimensionMismatch(
                "covariance/displacement size must match the forms".into(),
            ));
        }
        let cstruct = -(&cov * forms.omega_inv());
        let defect = max_abs(&(&cstruct * &cstruct + Mat::identity(n, n)));
        if defect > 1e2 * tol::STRUCTURAL * max_abs(&cov).max(1.0).powi(2) {
            return Err(Error::NumericalInconsistency(format!(
                "state is not pure: |J^2 + 1| = {defect:.3e}"
            )));
        }
        Ok(BosonicState {
            cov,
            disp,
            cstruct,
            forms,
        })
    }

    pub fn covariance(&self) -> &Mat {
        &self.cov
    }

    pub fn displacement(&self) -> &RVec {
        &self.disp
    }

    /// The linear complex structure `J`.
    pub fn complex_structure(&self) -> &Mat {
        &self.cstruct
    }

    pub fn forms(&self) -> &FormPair {
        &self.forms
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    /// Max-norm defect of the purity condition `(G omega^{-1})^2 = -1`.
    pub fn purity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.cstruct * &self.cstruct + Mat::identity(n, n)))
    }

    /// `G(a, b)` on covectors.
    pub fn cov_pairing(&self, a: &RVec, b: &RVec) -> f64 {
        (a.transpose() * &self.cov * b)[(0, 0)]
    }

    /// `omega(a, b)` on covectors.
    pub fn omega_pairing(&self, a: &RVec, b: &RVec) -> f64 {
        (a.transpose() * self.forms.omega() * b)[(0, 0)]
    }

    /// `J^T` applied to a covector.
    pub fn jt(&self, w: &RVec) -> RVec {
        self.cstruct.transpose() * w
    }
}

/// One bosonic mode: two covectors defining conjugate quadratures with
/// `omega(x, k) = 1`.
#[derive(Debug, Clone)]
pub struct BosonicMode {
    pub x: RVec,
    pub k: RVec,
}

/// A standardized mode, its partner and the shared squeezing parameter.
#[derive(Debug, Clone)]
pub struct PartnerPair {
    pub mode: BosonicMode,
    pub partner: BosonicMode,
    pub r: f64,
}

impl PartnerPair {
    /// The four covectors `(x, k, xbar, kbar)`.
    pub fn rows(&self) -> [&RVec; 4] {
        [
            &self.mode.x,
            &self.mode.k,
            &self.partner.x,
            &self.partner.k,
        ]
    }
}

/// Restricted two-mode Hamiltonian data: excitation energies, mixing
/// angles, the asymmetry scalar and the full `4 x 4` matrix in the
/// partner-mode basis.
#[derive(Debug, Clone)]
pub struct TwoModeProblem {
    pub eps1: f64,
    pub eps2: f64,
    pub theta: f64,
    pub phi: f64,
    pub delta: f64,
    pub h4: Mat,
    /// Set when `eps1 = eps2` within tolerance; `theta` is then
    /// conventionally `pi/4` and the cost is theta-independent.
    pub degenerate: bool,
}

impl TwoModeProblem {
    pub fn eps_plus(&self) -> f64 {
        0.5 * (self.eps2 + self.eps1)
    }

    pub fn eps_minus(&self) -> f64 {
        0.5 * (self.eps2 - self.eps1)
    }
}

/// Entropy and energy-cost summary of one extraction.
#[derive(Debug, Clone)]
pub struct CostReport {
    /// Extracted entanglement entropy in bits.
    pub delta_s: f64,
    /// Minimal energy cost over all mode choices with the same spectrum.
    pub delta_e_min: f64,
    /// Cost at the supplied mixing angle, when one was given.
    pub delta_e_theta: Option<f64>,
    /// Upper bound from the largest excitation energy, when supplied.
    pub delta_e_max: Option<f64>,
    /// Energy standard deviation of the post-extraction state.
    pub sigma_e: f64,
    /// Fermionic only: costs of the four candidate product states.
    pub product_costs: Option<[f64; 4]>,
}

/// Entropy of a single mode pair as a function of `cosh 2r`, in bits.
pub fn entropy_bits_boson(x: f64) -> f64 {
    let x = x.max(1.0);
    let plus = 0.5 * (x + 1.0);
    let minus = 0.5 * (x - 1.0);
    let term = |y: f64| if y > 0.0 { y * y.log2() } else { 0.0 };
    term(plus) - term(minus)
}

/// Two-mode squeezing transformation `M_r` in the basis
/// `(q_A, p_A, q_B, p_B)`.
pub fn squeezing_matrix(r: f64) -> Mat {
    let (ch, sh) = (r.cosh(), r.sinh());
    Mat::from_row_slice(
        4,
        4,
        &[
            ch, 0.0, sh, 0.0, //
            0.0, ch, 0.0, -sh, //
            sh, 0.0, ch, 0.0, //
            0.0, -sh, 0.0, ch,
        ],
    )
}

/// Generator `K(phi)` of the two-mode transformations that preserve the
/// identity covariance; `exp(theta K)` is both symplectic and orthogonal.
pub fn mixing_generator(phi: f64) -> Mat {
    let (c, s) = (phi.cos(), phi.sin());
    Mat::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, c, -s, //
            0.0, 0.0, s, c, //
            -c, -s, 0.0, 0.0, //
            s, -c, 0.0, 0.0,
        ],
    )
}

/// Ground state of a quadratic bosonic Hamiltonian: `z = -h^{-1} f` and
/// `G = -K |K^{-1}| omega` with `K = omega h`.
///
/// The absolute-value map is evaluated on the antisymmetric similarity
/// transform `L^T omega L` (with `h = L L^T`), which keeps it on its
/// numerically robust normal branch even for degenerate spectra.
pub fn ground_state(ham: &BosonicHamiltonian, forms: &FormPair) -> Result<BosonicState> {
    let n = forms.dim();
    if ham.dim() != n {
        return Err(Error::DimensionMismatch(
            "Hamiltonian and forms disagree on dimension".into(),
        ));
    }
    let chol = ham
        .h
        .clone()
        .cholesky()
        .ok_or(Error::UnboundedHamiltonian)?;
    let l = chol.l();
    let anti = l.transpose() * forms.omega() * &l;
    let anti_inv = anti
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::UnboundedHamiltonian)?;
    let abs_anti_inv = abs_eigen_map(&anti_inv)?;
    // |K^{-1}| = L^{-T} |A^{-1}| L^T with K = omega h similar to A.
    let lt = l.transpose();
    let abs_k_inv = lt
        .clone()
        .lu()
        .solve(&(abs_anti_inv * &lt))
        .ok_or(Error::UnboundedHamiltonian)?;
    let k = forms.omega() * &ham.h;
    let cov = -(&k * abs_k_inv * forms.omega());
    let cov = (&cov + cov.transpose()) * 0.5;
    let disp = -chol.solve(&ham.f);
    BosonicState::new(cov, disp, forms.clone())
}

/// Energy expectation value and standard deviation of a Gaussian state
/// under the Hamiltonian. Exact for arbitrary displacement.
pub fn energy_observables(state: &BosonicState, ham: &BosonicHamiltonian) -> Result<(f64, f64)> {
    energy_observables_raw(state.covariance(), state.displacement(), ham, state.forms())
}

/// Energy observables from raw covariance data; used for post-swap states.
pub fn energy_observables_raw(
    cov: &Mat,
    disp: &RVec,
    ham: &BosonicHamiltonian,
    forms: &FormPair,
) -> Result<(f64, f64)> {
    let h = &ham.h;
    let quad = (h * cov).trace() / 4.0;
    let zh = 0.5 * (disp.transpose() * h * disp)[(0, 0)] + ham.f.dot(disp);
    let energy = quad + zh;

    let hg = h * cov;
    let h_om = h * forms.omega();
    let mut radicand = (&hg * &hg).trace() + (&h_om * &h_om).trace();
    // Linear fluctuation term; vanishes at the minimizing displacement.
    let grad = h * disp + &ham.f;
    radicand += 8.0 * (grad.transpose() * cov * &grad)[(0, 0)];
    let scale = max_abs(h).max(1.0).powi(2) * max_abs(cov).max(1.0).powi(2);
    if radicand < -1e-12 * scale.max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "negative energy-variance radicand {radicand:.3e}"
        )));
    }
    Ok((energy, radicand.max(0.0).sqrt() / 4.0))
}

/// Restriction of the complex structure to the symplectic subspace spanned
/// by the given modes, expressed in their basis: `-G_A omega_A^{-1}`.
fn restricted_complex_structure(state: &BosonicState, modes: &[BosonicMode]) -> Result<Mat> {
    let dim = 2 * modes.len();
    let mut rows = Mat::zeros(dim, state.dim());
    for (i, m) in modes.iter().enumerate() {
        rows.set_row(2 * i, &m.x.transpose());
        rows.set_row(2 * i + 1, &m.k.transpose());
    }
    let omega_a = &rows * state.forms().omega() * rows.transpose();
    let standard = FormPair::standard(modes.len());
    if max_abs(&(&omega_a - standard.omega())) > 1e-8 {
        return Err(Error::DegenerateMode(
            "modes are not mutually commuting and normalized".into(),
        ));
    }
    let g_a = &rows * state.covariance() * rows.transpose();
    let omega_a_inv = omega_a
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMode("restricted symplectic form is singular".into()))?;
    Ok(-(g_a * omega_a_inv))
}

/// Entanglement entropy (bits) of the subsystem spanned by `modes`,
/// through the eigenvalues `± i cosh 2r_i` of the restricted complex
/// structure.
pub fn entanglement_entropy(state: &BosonicState, modes: &[BosonicMode]) -> Result<f64> {
    let j_a = restricted_complex_structure(state, modes)?;
    let cs = linalg::imaginary_pair_moduli(&j_a, 1e-8)?;
    let mut total = 0.0;
    for c in cs {
        if c < 1.0 - tol::DEGENERACY {
            return Err(Error::InvalidRestriction {
                value: c,
                excess: 1.0 - c,
            });
        }
        total += entropy_bits_boson(c);
    }
    Ok(total)
}

/// Entanglement entropy by the basis-invariant trace formula
/// `Tr[z log2 |z|]` with `z = (1 + i [J]_A)/2`, evaluated through the
/// real embedding of `z`. Kept as an independent route for cross-checks.
pub fn entanglement_entropy_log_trace(state: &BosonicState, modes: &[BosonicMode]) -> Result<f64> {
    let j_a = restricted_complex_structure(state, modes)?;
    // Similarity to an antisymmetric representative keeps the spectrum
    // and makes the real embedding of z symmetric, so the eigenvalues
    // entering nu*log|nu| carry no eigenvector-conditioning noise.
    let dim = j_a.nrows();
    let mut rows = Mat::zeros(dim, state.dim());
    for (i, m) in modes.iter().enumerate() {
        rows.set_row(2 * i, &m.x.transpose());
        rows.set_row(2 * i + 1, &m.k.transpose());
    }
    let g_a = &rows * state.covariance() * rows.transpose();
    let g_sqrt = linalg::sym_sqrt(&g_a);
    let g_inv_sqrt = linalg::sym_inv_sqrt(&g_a);
    let anti = &g_inv_sqrt * &j_a * &g_sqrt;
    let d = anti.nrows();
    let mut emb = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        emb[(i, i)] = 0.5;
        emb[(d + i, d + i)] = 0.5;
    }
    for i in 0..d {
        for j in 0..d {
            emb[(i, d + j)] = -0.5 * anti[(i, j)];
            emb[(d + i, j)] = 0.5 * anti[(i, j)];
        }
    }
    let sym_defect = max_abs(&(emb.transpose() - &emb));
    if sym_defect > 1e-6 * max_abs(&emb).max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "entropy embedding not symmetric: defect {sym_defect:.3e}"
        )));
    }
    let emb = (emb.transpose() + &emb) * 0.5;
    let (eigs, _) = linalg::symmetric_eigen_sorted(&emb);
    let mut total = 0.0;
    for nu in eigs.iter() {
        if nu.abs() > 1e-13 {
            total += nu * nu.abs().log2();
        }
    }
    Ok(total / 2.0)
}

/// Brings an arbitrary covector pair into standard mode form within its
/// span: `omega(x', k') = 1`, `G(x', x') = G(k', k') = cosh 2r`,
/// `G(x', k') = 0`; returns the mode and `r >= 0`.
pub fn standardize_mode(state: &BosonicState, x: &RVec, k: &RVec) -> Result<(BosonicMode, f64)> {
    let pairing = state.omega_pairing(x, k);
    let scale = (x.norm() * k.norm()).max(f64::MIN_POSITIVE);
    if pairing.abs() < tol::SINGULAR * scale {
        return Err(Error::DegenerateMode(format!(
            "omega(x, k) = {pairing:.3e} is numerically zero"
        )));
    }
    // Normalize the symplectic pairing, then diagonalize the restricted
    // covariance with a unit-determinant 2x2 congruence.
    let k1 = k / pairing;
    let g11 = state.cov_pairing(x, x);
    let g12 = state.cov_pairing(x, &k1);
    let g22 = state.cov_pairing(&k1, &k1);
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        return Err(Error::InvalidRestriction {
            value: det,
            excess: -det,
        });
    }
    let c = det.sqrt();
    if c < 1.0 - 1e-7 {
        return Err(Error::InvalidRestriction {
            value: c,
            excess: 1.0 - c,
        });
    }
    // S = (G_2 / c)^{-1/2} has unit determinant, so the symplectic
    // normalization survives.
    let g2 = Mat::from_row_slice(2, 2, &[g11 / c, g12 / c, g12 / c, g22 / c]);
    let s = linalg::sym_inv_sqrt(&g2);
    let x_new = x * s[(0, 0)] + &k1 * s[(0, 1)];
    let k_new = x * s[(1, 0)] + &k1 * s[(1, 1)];
    let r = 0.5 * c.max(1.0).acosh();
    Ok((BosonicMode { x: x_new, k: k_new }, r))
}

/// Squeezing parameter of an already-standardized mode.
pub fn mode_squeezing(state: &BosonicState, mode: &BosonicMode) -> Result<f64> {
    validate_standard_mode(state, mode)?;
    let c = state.cov_pairing(&mode.x, &mode.x);
    Ok(0.5 * c.max(1.0).acosh())
}

fn validate_standard_mode(state: &BosonicState, mode: &BosonicMode) -> Result<()> {
    let om = state.omega_pairing(&mode.x, &mode.k);
    let gxx = state.cov_pairing(&mode.x, &mode.x);
    let gkk = state.cov_pairing(&mode.k, &mode.k);
    let gxk = state.cov_pairing(&mode.x, &mode.k);
    let scale = gxx.abs().max(1.0);
    let ok = (om - 1.0).abs() < 1e-7
        && (gxx - gkk).abs() < 1e-7 * scale
        && gxk.abs() < 1e-7 * scale;
    if !ok {
        return Err(Error::DegenerateMode("mode is not in standard form".into()));
    }
    Ok(())
}

/// Partner of a standardized entangled mode. Fails for `r` at or below
/// tolerance: a pure mode has no partner.
pub fn partner_mode(state: &BosonicState, mode: &BosonicMode) -> Result<PartnerPair> {
    let r = mode_squeezing(state, mode)?;
    if r <= 1e-8 {
        return Err(Error::NoPartner(r));
    }
    let coth = 1.0 / (2.0 * r).tanh();
    let inv_sh = 1.0 / (2.0 * r).sinh();
    let x_bar = &mode.x * coth + state.jt(&mode.k) * inv_sh;
    let k_bar = &mode.k * (-coth) + state.jt(&mode.x) * inv_sh;
    let pair = PartnerPair {
        mode: mode.clone(),
        partner: BosonicMode { x: x_bar, k: k_bar },
        r,
    };
    validate_pair_standard_form(state, &pair)?;
    Ok(pair)
}

/// Verifies the joint 4x4 covariance of a pair against the two-mode
/// squeezed standard form.
fn validate_pair_standard_form(state: &BosonicState, pair: &PartnerPair) -> Result<()> {
    let got = pair_covariance(state, pair);
    let expected = standard_pair_covariance(pair.r);
    let defect = max_abs(&(got - expected));
    if defect > 1e-7 * (2.0 * pair.r).cosh() {
        return Err(Error::NumericalInconsistency(format!(
            "partner pair standard-form defect {defect:.3e}"
        )));
    }
    Ok(())
}

/// Restricted covariance of the pair in its own basis `(x, k, xbar, kbar)`.
pub fn pair_covariance(state: &BosonicState, pair: &PartnerPair) -> Mat {
    let rows = pair.rows();
    Mat::from_fn(4, 4, |i, j| state.cov_pairing(rows[i], rows[j]))
}

/// The two-mode squeezed standard form of the covariance matrix.
pub fn standard_pair_covariance(r: f64) -> Mat {
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    Mat::from_row_slice(
        4,
        4,
        &[
            ch, 0.0, sh, 0.0, //
            0.0, ch, 0.0, -sh, //
            sh, 0.0, ch, 0.0, //
            0.0, -sh, 0.0, ch,
        ],
    )
}

/// Unsqueezed mode quartet `(y, l, z, m)`: the two product modes whose
/// squeezing by `M_r` reproduces the pair. The restricted covariance in
/// this basis is the identity.
pub fn unsqueeze(state: &BosonicState, pair: &PartnerPair) -> Result<[RVec; 4]> {
    let r = pair.r;
    if r <= 1e-8 {
        return Err(Error::NoPartner(r));
    }
    let (ch, sh) = (r.cosh(), r.sinh());
    let x = &pair.mode.x;
    let k = &pair.mode.k;
    let jt_k = state.jt(k);
    let jt_x = state.jt(x);
    Ok([
        (x - &jt_k) / (2.0 * ch),
        (k + &jt_x) / (2.0 * ch),
        (x + &jt_k) / (2.0 * sh),
        (-k + jt_x) / (2.0 * sh),
    ])
}

/// The inner product induced by `h` on covectors:
/// `h_check(w, u) = w^T omega^T h omega u`.
fn h_check_matrix(ham: &BosonicHamiltonian, forms: &FormPair) -> Mat {
    forms.omega().transpose() * &ham.h * forms.omega()
}

/// Restricted two-mode Hamiltonian data for a partner pair on the ground
/// state of `ham`: spectrum `(eps1, eps2)`, angles `(theta, phi)` and the
/// asymmetry `delta`.
pub fn restricted_problem(
    ham: &BosonicHamiltonian,
    state: &BosonicState,
    pair: &PartnerPair,
) -> Result<TwoModeProblem> {
    validate_pair_standard_form(state, pair)?;
    let hc = h_check_matrix(ham, state.forms());
    let pairing = |a: &RVec, b: &RVec| (a.transpose() * &hc * b)[(0, 0)];
    let r = pair.r;
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let x = &pair.mode.x;
    let k = &pair.mode.k;
    let h_xx = pairing(x, x);
    let h_kk = pairing(k, k);
    let h_xk = pairing(x, k);
    let h_xjk = pairing(x, &state.jt(k));
    let delta = (h_xx + h_kk + 2.0 * ch * h_xjk) / (sh * sh);

    // Partner-side entries via the exact identities for standard pairs.
    let h_xbxb = h_xx + delta;
    let h_kbkb = h_kk + delta;
    let h_xbkb = -h_xk;
    let h_xxb = (ch * h_xx + h_xjk) / sh;
    let h_kkb = -(ch * h_kk + h_xjk) / sh;
    let h_xkb = -(ch / sh) * h_xk;
    let h_kxb = -h_xkb;

    let h4 = Mat::from_row_slice(
        4,
        4,
        &[
            h_kk, -h_xk, h_kkb, -h_kxb, //
            -h_xk, h_xx, -h_xkb, h_xxb, //
            h_kkb, -h_xkb, h_kbkb, -h_xbkb, //
            -h_kxb, h_xxb, -h_xbkb, h_xbxb,
        ],
    );

    let eps_plus = (h_xx + h_kk + delta) / (2.0 * ch);
    let eps_minus_sq =
        (4.0 * h_xk * h_xk + (h_xx - h_kk) * (h_xx - h_kk)) / (4.0 * sh * sh) + delta * delta / 4.0;
    let eps_minus = eps_minus_sq.max(0.0).sqrt();
    let eps1 = eps_plus - eps_minus;
    let eps2 = eps_plus + eps_minus;
    if eps1 <= 0.0 {
        return Err(Error::InvalidSpectrum(format!(
            "restricted spectrum not positive: eps1 = {eps1:.3e}"
        )));
    }
    let degenerate = eps_minus < tol::DEGENERACY * eps_plus;
    let (theta, phi) = if degenerate {
        (std::f64::consts::FRAC_PI_4, 0.0)
    } else {
        let cos2t = (delta / (2.0 * eps_minus)).clamp(-1.0, 1.0);
        let theta = 0.5 * cos2t.acos();
        let phi = if h_xk.abs() < 1e-13 && (h_xx - h_kk).abs() < 1e-13 {
            0.0
        } else {
            (2.0 * h_xk).atan2(h_xx - h_kk)
        };
        (theta, phi)
    };
    Ok(TwoModeProblem {
        eps1,
        eps2,
        theta,
        phi,
        delta,
        h4,
        degenerate,
    })
}

/// Minimal, theta-dependent and bounding extraction costs for a two-mode
/// spectrum `(eps1, eps2)` at squeezing `r`.
pub fn extraction_cost(
    eps1: f64,
    eps2: f64,
    r: f64,
    theta: Option<f64>,
    omega_max: Option<f64>,
) -> Result<CostReport> {
    if !(eps1 > 0.0 && eps2 >= eps1) {
        return Err(Error::InvalidSpectrum(format!(
            "need 0 < eps1 <= eps2, got ({eps1}, {eps2})"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidSqueezing(r));
    }
    let ch4 = (4.0 * r).cosh();
    let quad = eps1 * eps1 + eps2 * eps2 + 2.0 * eps1 * eps2 * ch4;
    let delta_e_min = (0.5 * (quad.sqrt() - eps1 - eps2)).max(0.0);
    let sigma_e = (2.0 * r).sinh() * ((eps1 * eps1 * eps2 * eps2 * (1.0 + ch4)) / quad).sqrt();
    let delta_s = entropy_bits_boson((2.0 * r).cosh());
    let delta_e_theta = theta.map(|th| {
        let (ea, eb) = single_mode_energies(eps1, eps2, r, th);
        (0.5 * (ea + eb - eps1 - eps2)).max(0.0)
    });
    let delta_e_max = omega_max.map(|w| 2.0 * w * r.sinh().powi(2));
    Ok(CostReport {
        delta_s,
        delta_e_min,
        delta_e_theta,
        delta_e_max,
        sigma_e,
        product_costs: None,
    })
}

/// Excitation energies `(eps_A, eps_Abar)` of the two single-mode
/// restrictions at mixing angle `theta`.
pub fn single_mode_energies(eps1: f64, eps2: f64, r: f64, theta: f64) -> (f64, f64) {
    let ep = 0.5 * (eps2 + eps1);
    let em = 0.5 * (eps2 - eps1);
    let ch2 = (2.0 * r).cosh();
    let ch4 = (4.0 * r).cosh();
    let cos2t = (2.0 * theta).cos();
    let cos4t = (4.0 * theta).cos();
    let common = 4.0 * ep * ep * ch2 * ch2 + em * em * (3.0 + cos4t - (1.0 - cos4t) * ch4);
    let cross = 8.0 * ep * em * cos2t * ch2;
    (
        0.5 * (common - cross).max(0.0).sqrt(),
        0.5 * (common + cross).max(0.0).sqrt(),
    )
}

/// Symplectic correction `M_r exp((pi/4 - theta) K(phi)) M_{-r}` mapping a
/// pair to the cost-optimal pair with the same entanglement; returns the
/// transform and the corrected pair.
pub fn optimal_correction(
    state: &BosonicState,
    pair: &PartnerPair,
    problem: &TwoModeProblem,
) -> Result<(Mat, PartnerPair)> {
    if problem.degenerate {
        return Ok((Mat::identity(4, 4), pair.clone()));
    }
    let angle = std::f64::consts::FRAC_PI_4 - problem.theta;
    let transform = squeezing_matrix(pair.r)
        * linalg::matrix_exp(&(mixing_generator(problem.phi) * angle))
        * squeezing_matrix(-pair.r);
    let rows = pair.rows();
    let mut new_rows: Vec<RVec> = Vec::with_capacity(4);
    for i in 0..4 {
        let mut w = RVec::zeros(state.dim());
        for (j, row) in rows.iter().enumerate() {
            w += *row * transform[(i, j)];
        }
        new_rows.push(w);
    }
    let corrected = PartnerPair {
        mode: BosonicMode {
            x: new_rows[0].clone(),
            k: new_rows[1].clone(),
        },
        partner: BosonicMode {
            x: new_rows[2].clone(),
            k: new_rows[3].clone(),
        },
        r: pair.r,
    };
    validate_pair_standard_form(state, &corrected)?;
    Ok((transform, corrected))
}

/// Replaces the pair block of the covariance by the product of the two
/// restricted single-mode ground states and returns the direct energy
/// difference together with the post-swap covariance.
pub fn swap_cost_direct(
    ham: &BosonicHamiltonian,
    state: &BosonicState,
    pair: &PartnerPair,
) -> Result<(f64, Mat)> {
    let n = state.dim();
    let rows = pair.rows();
    let seed: Vec<RVec> = rows.iter().map(|r| (*r).clone()).collect();
    let basis = symplectic_complete(state.forms().omega(), &seed)?;
    let cov_mode = &basis * state.covariance() * basis.transpose();

    // Restricted single-mode ground states from the diagonal blocks of
    // the pair Hamiltonian.
    let problem = restricted_problem(ham, state, pair)?;
    let forms1 = FormPair::standard(1);
    let g_a = ground_state(
        &BosonicHamiltonian::quadratic(problem.h4.view((0, 0), (2, 2)).clone_owned())?,
        &forms1,
    )?;
    let g_b = ground_state(
        &BosonicHamiltonian::quadratic(problem.h4.view((2, 2), (2, 2)).clone_owned())?,
        &forms1,
    )?;
    let mut cov_new = cov_mode;
    cov_new.view_mut((0, 0), (2, 2)).copy_from(g_a.covariance());
    cov_new.view_mut((2, 2), (2, 2)).copy_from(g_b.covariance());
    for i in 0..2 {
        for j in 2..4 {
            cov_new[(i, j)] = 0.0;
            cov_new[(j, i)] = 0.0;
        }
    }
    for i in 0..4 {
        for j in 4..n {
            cov_new[(i, j)] = 0.0;
            cov_new[(j, i)] = 0.0;
        }
    }
    let basis_inv = basis
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DecompositionFailed("mode basis not invertible".into()))?;
    let cov_full = &basis_inv * cov_new * basis_inv.transpose();
    let (e_new, _) = energy_observables_raw(&cov_full, state.displacement(), ham, state.forms())?;
    let (e_old, _) = energy_observables(state, ham)?;
    Ok((e_new - e_old, cov_full))
}

/// Excitation energies (normal-mode frequencies) of the Hamiltonian,
/// ascending. These bound every restricted two-mode spectrum.
pub fn excitation_energies(ham: &BosonicHamiltonian, forms: &FormPair) -> Result<Vec<f64>> {
    let chol = ham
        .h
        .clone()
        .cholesky()
        .ok_or(Error::UnboundedHamiltonian)?;
    let l = chol.l();
    let anti = l.transpose() * forms.omega() * &l;
    let (_, mut mus) = linalg::antisymmetric_canonical(&anti)?;
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(mus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::group_membership;

    fn sho(omega: f64) -> (BosonicHamiltonian, FormPair) {
        let h = Mat::from_row_slice(2, 2, &[omega * omega, 0.0, 0.0, 1.0]);
        (
            BosonicHamiltonian::quadratic(h).unwrap(),
            FormPair::standard(1),
        )
    }

    #[test]
    fn sho_ground_state_covariance() {
        let omega = 1.7;
        let (ham, forms) = sho(omega);
        let state = ground_state(&ham, &forms).unwrap();
        let expected = Mat::from_row_slice(2, 2, &[1.0 / omega, 0.0, 0.0, omega]);
        assert!(max_abs(&(state.covariance() - expected)) < 1e-12);
        assert!(state.purity_defect() < 1e-12);
        let expected_j = Mat::from_row_slice(2, 2, &[0.0, 1.0 / omega, -omega, 0.0]);
        assert!(max_abs(&(state.complex_structure() - expected_j)) < 1e-12);
    }

    #[test]
    fn sho_energy_and_variance() {
        let omega = 0.9;
        let (ham, forms) = sho(omega);
        let state = ground_state(&ham, &forms).unwrap();
        let (e, sigma) = energy_observables(&state, &ham).unwrap();
        assert!((e - omega / 2.0).abs() < 1e-12);
        // Exact zero up to square-root cancellation noise.
        assert!(sigma < 1e-7);
    }

    #[test]
    fn linear_part_displacement() {
        let omega = 1.3;
        let h = Mat::from_row_slice(2, 2, &[omega * omega, 0.0, 0.0, 1.0]);
        let f = RVec::from_vec(vec![0.4, -0.2]);
        let ham = BosonicHamiltonian::new(h.clone(), f.clone()).unwrap();
        let forms = FormPair::standard(1);
        let state = ground_state(&ham, &forms).unwrap();
        let expected = -h.lu().solve(&f).unwrap();
        assert!((state.displacement() - expected).norm() < 1e-12);
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let ham = BosonicHamiltonian::quadratic(h).unwrap();
        assert!(matches!(
            ground_state(&ham, &FormPair::standard(1)),
            Err(Error::UnboundedHamiltonian)
        ));
    }

    #[test]
    fn squeezing_matrix_is_symplectic_not_orthogonal() {
        let forms = FormPair::standard(2);
        let flags = group_membership(&squeezing_matrix(0.5), &forms);
        assert!(flags.symplectic && !flags.orthogonal);
    }

    #[test]
    fn mixing_exponential_is_both() {
        let forms = FormPair::standard(2);
        let n = linalg::matrix_exp(&(mixing_generator(0.7) * 0.3));
        let flags = group_membership(&n, &forms);
        assert!(flags.symplectic && flags.orthogonal);
    }

    #[test]
    fn mixing_exponential_quarter_turn_closed_form() {
        for &phi in &[0.0, 0.4, 1.3] {
            let got = linalg::matrix_exp(&(mixing_generator(phi) * std::f64::consts::FRAC_PI_4));
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let (c, sn) = (phi.cos(), phi.sin());
            let expected = Mat::from_row_slice(
                4,
                4,
                &[
                    s, 0.0, c * s, -sn * s, //
                    0.0, s, sn * s, c * s, //
                    -c * s, -sn * s, s, 0.0, //
                    sn * s, -c * s, 0.0, s,
                ],
            );
            assert!(max_abs(&(got - expected)) < 1e-12, "phi = {phi}");
        }
    }

    /// Pair built by squeezing the eigenmodes of a diagonal two-mode
    /// Hamiltonian, optionally premixed by `exp(theta K(phi))`.
    fn built_pair(
        eps1: f64,
        eps2: f64,
        r: f64,
        theta: f64,
        phi: f64,
    ) -> (BosonicHamiltonian, BosonicState, PartnerPair) {
        let h = Mat::from_diagonal(&RVec::from_vec(vec![eps1, eps1, eps2, eps2]));
        let ham = BosonicHamiltonian::quadratic(h).unwrap();
        let forms = FormPair::standard(2);
        let state = ground_state(&ham, &forms).unwrap();
        let t = squeezing_matrix(r) * linalg::matrix_exp(&(mixing_generator(phi) * theta));
        let mut rows: Vec<RVec> = Vec::new();
        for i in 0..4 {
            rows.push(RVec::from_fn(4, |j, _| t[(i, j)]));
        }
        let pair = PartnerPair {
            mode: BosonicMode {
                x: rows[0].clone(),
                k: rows[1].clone(),
            },
            partner: BosonicMode {
                x: rows[2].clone(),
                k: rows[3].clone(),
            },
            r,
        };
        (ham, state, pair)
    }

    #[test]
    fn squeezed_eigenmodes_have_theta_zero_and_eigen_spectrum() {
        let (ham, state, pair) = built_pair(1.0, 2.5, 0.6, 0.0, 0.0);
        let got = pair_covariance(&state, &pair);
        assert!(max_abs(&(got - standard_pair_covariance(0.6))) < 1e-10);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        assert!((problem.eps1 - 1.0).abs() < 1e-10);
        assert!((problem.eps2 - 2.5).abs() < 1e-10);
        assert!(problem.theta.abs() < 1e-7);
        assert!((problem.delta - 2.0 * problem.eps_minus()).abs() < 1e-9);
    }

    #[test]
    fn premixed_pair_recovers_theta_and_phi() {
        for &(theta, phi) in &[(0.3, 0.0), (0.6, 1.1), (std::f64::consts::FRAC_PI_4, 0.8)] {
            let (ham, state, pair) = built_pair(1.0, 3.0, 0.5, theta, phi);
            let problem = restricted_problem(&ham, &state, &pair).unwrap();
            assert!((problem.eps1 - 1.0).abs() < 1e-9, "theta {theta}");
            assert!((problem.eps2 - 3.0).abs() < 1e-9, "theta {theta}");
            // theta is recovered modulo the pi/2 branch and sign.
            let fold = |t: f64| {
                let t = t.rem_euclid(std::f64::consts::FRAC_PI_2);
                t.min(std::f64::consts::FRAC_PI_2 - t)
            };
            assert!(
                (fold(problem.theta) - fold(theta)).abs() < 1e-7,
                "theta {theta} got {}",
                problem.theta
            );
            // delta = 2 eps_minus cos(2 theta) holds by construction.
            assert!(
                (problem.delta - 2.0 * problem.eps_minus() * (2.0 * problem.theta).cos()).abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn partner_involution_returns_original() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.7, 0.45, 0.9);
        let back = partner_mode(&state, &pair.partner).unwrap();
        assert!((back.partner.x - &pair.mode.x).norm() < 1e-9);
        assert!((back.partner.k - &pair.mode.k).norm() < 1e-9);
        assert!((back.r - pair.r).abs() < 1e-10);
    }

    #[test]
    fn partner_of_two_mode_squeezed_vacuum_is_other_mode() {
        // Explicit construction: M_r on two equal-frequency modes puts
        // mode 2 exactly as the partner of mode 1.
        let (_, state, pair) = built_pair(1.4, 1.4, 0.8, 0.0, 0.0);
        let recomputed = partner_mode(&state, &pair.mode).unwrap();
        assert!((recomputed.partner.x - &pair.partner.x).norm() < 1e-9);
        assert!((recomputed.partner.k - &pair.partner.k).norm() < 1e-9);
    }

    #[test]
    fn pure_mode_has_no_partner() {
        let (ham, forms) = sho(1.0);
        let _ = ham;
        let h = Mat::from_diagonal(&RVec::from_vec(vec![1.0, 1.0, 2.0, 2.0]));
        let ham2 = BosonicHamiltonian::quadratic(h).unwrap();
        let forms2 = FormPair::standard(2);
        let state = ground_state(&ham2, &forms2).unwrap();
        let mut x = RVec::zeros(4);
        x[0] = 1.0;
        let mut k = RVec::zeros(4);
        k[1] = 1.0;
        let (mode, r) = standardize_mode(&state, &x, &k).unwrap();
        assert!(r < 1e-10);
        assert!(matches!(
            partner_mode(&state, &mode),
            Err(Error::NoPartner(_))
        ));
        let _ = forms;
    }

    #[test]
    fn standardize_is_fixed_point_and_symplectic_invariant() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.55, 0.2, 0.4);
        let (mode, r) = standardize_mode(&state, &pair.mode.x, &pair.mode.k).unwrap();
        assert!((r - pair.r).abs() < 1e-9);
        assert!((mode.x - &pair.mode.x).norm() < 1e-8);
        // Recombine within the span: r is invariant.
        let x2 = &pair.mode.x * 1.3 + &pair.mode.k * 0.2;
        let k2 = &pair.mode.x * (-0.5) + &pair.mode.k * 0.9;
        let (_, r2) = standardize_mode(&state, &x2, &k2).unwrap();
        assert!((r2 - pair.r).abs() < 1e-9);
    }

    #[test]
    fn unsqueezed_quartet_is_uncorrelated_basis() {
        let (_, state, pair) = built_pair(1.0, 2.7, 0.65, 0.3, 0.5);
        let quartet = unsqueeze(&state, &pair).unwrap();
        // Restricted covariance is the identity.
        let g = Mat::from_fn(4, 4, |i, j| state.cov_pairing(&quartet[i], &quartet[j]));
        assert!(max_abs(&(g - Mat::identity(4, 4))) < 1e-9);
        // Symplectic pairings are Darboux.
        let om = Mat::from_fn(4, 4, |i, j| state.omega_pairing(&quartet[i], &quartet[j]));
        assert!(max_abs(&(om - FormPair::standard(2).omega())) < 1e-9);
        // Squeezing the quartet by M_r recovers the pair covectors.
        let m = squeezing_matrix(pair.r);
        let rows = pair.rows();
        for i in 0..4 {
            let mut w = RVec::zeros(state.dim());
            for (j, q) in quartet.iter().enumerate() {
                w += q * m[(i, j)];
            }
            assert!((w - rows[i]).norm() < 1e-9, "row {i}");
        }
    }

    #[test]
    fn degenerate_cost_formula() {
        let eps = 1.3;
        let r = 0.8;
        let report = extraction_cost(eps, eps, r, None, None).unwrap();
        assert!((report.delta_e_min - 2.0 * eps * r.sinh().powi(2)).abs() < 1e-12);
        assert!((report.sigma_e - eps * (2.0 * r).sinh() / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_squeezing_costs_nothing() {
        let report = extraction_cost(1.0, 2.0, 0.0, None, None).unwrap();
        assert_eq!(report.delta_e_min, 0.0);
        assert_eq!(report.delta_s, 0.0);
    }

    #[test]
    fn theta_zero_cost_is_upper_branch() {
        let (eps1, eps2, r) = (1.0, 3.0, 0.6);
        let report = extraction_cost(eps1, eps2, r, Some(0.0), None).unwrap();
        let ep = 0.5 * (eps1 + eps2);
        assert!(
            (report.delta_e_theta.unwrap() - 2.0 * ep * r.sinh().powi(2)).abs() < 1e-10
        );
        // Ordering: min <= theta <= theta-zero bound.
        assert!(report.delta_e_min <= report.delta_e_theta.unwrap() + 1e-12);
    }

    #[test]
    fn swap_cost_matches_formula_on_built_pairs() {
        for &(eps1, eps2, r, theta) in &[
            (1.0, 1.0, 0.5, 0.0),
            (1.0, 2.0, 0.4, 0.0),
            (0.7, 2.2, 0.8, 0.7),
        ] {
            let (ham, state, pair) = built_pair(eps1, eps2, r, theta, 0.3);
            let problem = restricted_problem(&ham, &state, &pair).unwrap();
            let (direct, cov_after) = swap_cost_direct(&ham, &state, &pair).unwrap();
            let report =
                extraction_cost(problem.eps1, problem.eps2, r, Some(problem.theta), None).unwrap();
            let formula = report.delta_e_theta.unwrap();
            assert!(
                (direct - formula).abs() < 1e-9,
                "({eps1},{eps2},{r},{theta}): direct {direct} vs formula {formula}"
            );
            // The post-swap covariance is still a valid pure state.
            let post = BosonicState::new(cov_after, state.displacement().clone(), state.forms().clone());
            assert!(post.is_ok());
        }
    }

    #[test]
    fn optimal_correction_reaches_minimum_and_preserves_entropy() {
        let (ham, state, pair) = built_pair(1.0, 2.4, 0.5, 0.2, 0.6);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        let (transform, corrected) = optimal_correction(&state, &pair, &problem).unwrap();
        let flags = group_membership(&transform, &FormPair::standard(2));
        assert!(flags.symplectic);
        let corrected_problem = restricted_problem(&ham, &state, &corrected).unwrap();
        assert!(
            (corrected_problem.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-8,
            "theta after correction: {}",
            corrected_problem.theta
        );
        assert!(corrected_problem.delta.abs() < 1e-8);
        let (direct, _) = swap_cost_direct(&ham, &state, &corrected).unwrap();
        let min = extraction_cost(problem.eps1, problem.eps2, pair.r, None, None)
            .unwrap()
            .delta_e_min;
        assert!((direct - min).abs() < 1e-10, "direct {direct} vs min {min}");
        // Entropy unchanged.
        let s_before = entanglement_entropy(&state, &[pair.mode.clone()]).unwrap();
        let s_after = entanglement_entropy(&state, &[corrected.mode.clone()]).unwrap();
        assert!((s_before - s_after).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_partner_pair_vanishes_jointly() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.6, 0.35, 0.2);
        let single = entanglement_entropy(&state, &[pair.mode.clone()]).unwrap();
        assert!(single > 0.1);
        let joint = entanglement_entropy(
            &state,
            &[pair.mode.clone(), pair.partner.clone()],
        )
        .unwrap();
        assert!(joint.abs() < 1e-9, "joint entropy {joint}");
    }

    #[test]
    fn entropy_dual_formulas_agree() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.66, 0.3, 0.8);
        let a = entanglement_entropy(&state, &[pair.mode.clone()]).unwrap();
        let b = entanglement_entropy_log_trace(&state, &[pair.mode.clone()]).unwrap();
        assert!((a - b).abs() < 1e-12, "paths differ: {a} vs {b}");
        let expected = entropy_bits_boson((2.0 * pair.r).cosh());
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn entropy_value_cosh_three() {
        // cosh 2r = 3: s_b(3) = 2 log2 2 - ... = 2 - (1) * log2(1) = 2.
        let s = entropy_bits_boson(3.0);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn excitation_energies_of_diagonal_hamiltonian() {
        let h = Mat::from_diagonal(&RVec::from_vec(vec![2.0, 2.0, 0.5, 0.5, 1.0, 1.0]));
        let ham = BosonicHamiltonian::quadratic(h).unwrap();
        let omegas = excitation_energies(&ham, &FormPair::standard(3)).unwrap();
        let expected = [0.5, 1.0, 2.0];
        for (a, b) in omegas.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
