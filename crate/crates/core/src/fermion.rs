//! Fermionic Gaussian states: ground states, entanglement entropies,
//! partner modes and the piecewise extraction-cost theory with its four
//! candidate product states.

use crate::boson::CostReport;
use crate::error::{Error, Result};
use crate::linalg::{self, abs_eigen_map, max_abs, orthonormal_complete, FormPair, Mat, RVec};
use crate::tol;

/// Quadratic fermionic Hamiltonian `(i/2) h_ab xi^a xi^b` with an
/// antisymmetric nondegenerate bilinear form `h`.
#[derive(Debug, Clone)]
pub struct FermionicHamiltonian {
    h: Mat,
}

impl FermionicHamiltonian {
    pub fn new(h: Mat) -> Result<Self> {
        if !h.is_square() || h.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "bilinear form must be even-dimensional square".into(),
            ));
        }
        let scale = max_abs(&h).max(1.0);
        if max_abs(&(h.transpose() + &h)) > tol::STRUCTURAL * scale {
            return Err(Error::InvalidSpec(
                "fermionic bilinear form must be antisymmetric".into(),
            ));
        }
        Ok(FermionicHamiltonian { h })
    }

    pub fn bilinear_form(&self) -> &Mat {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }
}

/// Pure fermionic Gaussian state: antisymmetric covariance and the derived
/// complex structure `J = Omega G^{-1}`.
#[derive(Debug, Clone)]
pub struct FermionicState {
    cov: Mat,
    cstruct: Mat,
    forms: FormPair,
}

impl FermionicState {
    pub fn new(cov: Mat, forms: FormPair) -> Result<Self> {
        let n = forms.dim();
        if cov.nrows() != n {
            return Err(Error::DimensionMismatch(
                "covariance size must match the forms".into(),
            ));
        }
        let scale = max_abs(&cov).max(1.0);
        if max_abs(&(cov.transpose() + &cov)) > 1e3 * tol::STRUCTURAL * scale {
            return Err(Error::InvalidSpec(
                "fermionic covariance must be antisymmetric".into(),
            ));
        }
        let g_inv = forms
            .g()
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::InvalidSpec("metric not invertible".into()))?;
        let cstruct = &cov * g_inv;
        let defect = max_abs(&(&cstruct * &cstruct + Mat::identity(n, n)));
        if defect > 1e3 * tol::STRUCTURAL {
            return Err(Error::NumericalInconsistency(format!(
                "state is not pure: |J^2 + 1| = {defect:.3e}"
            )));
        }
        Ok(FermionicState {
            cov,
            cstruct,
            forms,
        })
    }

    pub fn covariance(&self) -> &Mat {
        &self.cov
    }

    pub fn complex_structure(&self) -> &Mat {
        &self.cstruct
    }

    pub fn forms(&self) -> &FormPair {
        &self.forms
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn purity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.cstruct * &self.cstruct + Mat::identity(n, n)))
    }

    /// `Omega(a, b)` on covectors (state covariance pairing).
    pub fn cov_pairing(&self, a: &RVec, b: &RVec) -> f64 {
        (a.transpose() * &self.cov * b)[(0, 0)]
    }

    /// `G(a, b)` on covectors (anticommutator metric).
    pub fn metric_pairing(&self, a: &RVec, b: &RVec) -> f64 {
        (a.transpose() * self.forms.g() * b)[(0, 0)]
    }

    /// `J^T` applied to a covector.
    pub fn jt(&self, w: &RVec) -> RVec {
        self.cstruct.transpose() * w
    }
}

/// One fermionic mode: two metric-orthonormal covectors.
#[derive(Debug, Clone)]
pub struct FermionicMode {
    pub x: RVec,
    pub k: RVec,
}

/// A standardized fermionic mode, its partner and the shared parameter
/// `r in [0, pi/4]` with `Omega(x, k) = cos 2r`.
#[derive(Debug, Clone)]
pub struct FermionicPartnerPair {
    pub mode: FermionicMode,
    pub partner: FermionicMode,
    pub r: f64,
}

impl FermionicPartnerPair {
    pub fn rows(&self) -> [&RVec; 4] {
        [
            &self.mode.x,
            &self.mode.k,
            &self.partner.x,
            &self.partner.k,
        ]
    }
}

/// Restricted two-mode data for a fermionic partner pair.
#[derive(Debug, Clone)]
pub struct FermionicTwoModeProblem {
    pub eps1: f64,
    pub eps2: f64,
    pub theta: f64,
    pub phi: f64,
    pub h4: Mat,
    pub degenerate: bool,
}

impl FermionicTwoModeProblem {
    pub fn eps_plus(&self) -> f64 {
        0.5 * (self.eps2 + self.eps1)
    }

    pub fn eps_minus(&self) -> f64 {
        0.5 * (self.eps2 - self.eps1)
    }
}

/// Outcome of checking whether a pair achieves the minimal cost.
#[derive(Debug, Clone, Copy)]
pub struct OptimalityReport {
    pub achieves_min: bool,
    /// `(k, l)` labels of the cheapest candidate product state.
    pub best_state: (u8, u8),
    /// Whether the cost depends on theta in this regime.
    pub theta_required: bool,
    /// Cost attainable at the pair's own mixing angle.
    pub delta_e_theta: f64,
}

/// Entropy of one fermionic mode as a function of `cos 2r`, in bits.
pub fn entropy_bits_fermion(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let term = |y: f64| if y > 0.0 { y * y.log2() } else { 0.0 };
    -term(0.5 * (1.0 + x)) - term(0.5 * (1.0 - x))
}

/// Fermionic two-mode squeezing `M_r` in the basis `(q_A, p_A, q_B, p_B)`.
pub fn squeezing_matrix(r: f64) -> Mat {
    let (c, s) = (r.cos(), r.sin());
    Mat::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            -s, 0.0, c, 0.0, //
            0.0, s, 0.0, c,
        ],
    )
}

/// The generator of covariance-preserving mixings is shared with the
/// bosonic sector.
pub use crate::boson::mixing_generator;

/// The standard `2 x 2` antisymmetric block.
pub fn a2_block() -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Covariance of the candidate product state `A^{(k, l)}`.
pub fn product_state_covariance(k: u8, l: u8) -> Mat {
    let mut m = Mat::zeros(4, 4);
    let sign_a = if k == 0 { 1.0 } else { -1.0 };
    let sign_b = if l == 0 { 1.0 } else { -1.0 };
    m.view_mut((0, 0), (2, 2)).copy_from(&(a2_block() * sign_a));
    m.view_mut((2, 2), (2, 2)).copy_from(&(a2_block() * sign_b));
    m
}

/// Joint standard-form covariance of a fermionic partner pair.
pub fn standard_pair_covariance(r: f64) -> Mat {
    let (c, s) = ((2.0 * r).cos(), (2.0 * r).sin());
    Mat::from_row_slice(
        4,
        4,
        &[
            0.0, c, 0.0, s, //
            -c, 0.0, s, 0.0, //
            0.0, -s, 0.0, c, //
            -s, 0.0, -c, 0.0,
        ],
    )
}

/// Ground state covariance `Omega = K |K^{-1}| G` with `K = G h`.
pub fn ground_state(ham: &FermionicHamiltonian, forms: &FormPair) -> Result<FermionicState> {
    let n = forms.dim();
    if ham.dim() != n {
        return Err(Error::DimensionMismatch(
            "Hamiltonian and forms disagree on dimension".into(),
        ));
    }
    let chol = forms
        .g()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidSpec("metric not positive definite".into()))?;
    let l = chol.l();
    let anti = l.transpose() * &ham.h * &l;
    let (_, mus) = linalg::antisymmetric_canonical(&anti)?;
    let smallest = mus.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = max_abs(&ham.h).max(f64::MIN_POSITIVE);
    if smallest < tol::SINGULAR.sqrt() * 1e-2 * scale {
        return Err(Error::GaplessHamiltonian(smallest));
    }
    let anti_inv = anti
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::GaplessHamiltonian(smallest))?;
    let abs_anti_inv = abs_eigen_map(&anti_inv)?;
    let lt = l.transpose();
    let abs_k_inv = lt
        .clone()
        .lu()
        .solve(&(abs_anti_inv * &lt))
        .ok_or(Error::GaplessHamiltonian(smallest))?;
    let k = forms.g() * &ham.h;
    let cov = &k * abs_k_inv * forms.g();
    let cov = (&cov - cov.transpose()) * 0.5;
    FermionicState::new(cov, forms.clone())
}

/// Energy expectation value and standard deviation of a Gaussian state
/// with covariance `Omega'` under the Hamiltonian.
pub fn energy_observables(state: &FermionicState, ham: &FermionicHamiltonian) -> Result<(f64, f64)> {
    energy_observables_raw(state.covariance(), ham, state.forms())
}

pub fn energy_observables_raw(
    cov: &Mat,
    ham: &FermionicHamiltonian,
    forms: &FormPair,
) -> Result<(f64, f64)> {
    let h = &ham.h;
    let energy = -(h * cov.transpose()).trace() / 4.0;
    let hg = h * forms.g();
    let h_om = h * cov;
    let radicand = -((&hg * &hg).trace() + (&h_om * &h_om).trace());
    let scale = (max_abs(h).max(1.0) * max_abs(cov).max(1.0)).powi(2);
    if radicand < -1e-12 * scale.max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "negative energy-variance radicand {radicand:.3e}"
        )));
    }
    Ok((energy, radicand.max(0.0).sqrt() / 4.0))
}

/// Restriction of the complex structure to the span of metric-orthonormal
/// modes, in their basis: `Omega_A G_A^{-1}`.
fn restricted_complex_structure(state: &FermionicState, modes: &[FermionicMode]) -> Result<Mat> {
    let dim = 2 * modes.len();
    let mut rows = Mat::zeros(dim, state.dim());
    for (i, m) in modes.iter().enumerate() {
        rows.set_row(2 * i, &m.x.transpose());
        rows.set_row(2 * i + 1, &m.k.transpose());
    }
    let g_a = &rows * state.forms().g() * rows.transpose();
    if max_abs(&(&g_a - Mat::identity(dim, dim))) > 1e-8 {
        return Err(Error::DegenerateMode(
            "modes are not metric-orthonormal".into(),
        ));
    }
    let omega_a = &rows * state.covariance() * rows.transpose();
    let g_a_inv = g_a
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMode("restricted metric is singular".into()))?;
    Ok(omega_a * g_a_inv)
}

/// Entanglement entropy (bits) of the subsystem spanned by `modes`, from
/// the eigenvalues `± i cos 2r_i` of the restricted complex structure.
pub fn entanglement_entropy(state: &FermionicState, modes: &[FermionicMode]) -> Result<f64> {
    let j_a = restricted_complex_structure(state, modes)?;
    let cs = linalg::imaginary_pair_moduli(&j_a, 1e-7)?;
    let mut total = 0.0;
    for c in cs {
        if c > 1.0 + tol::DEGENERACY {
            return Err(Error::InvalidRestriction {
                value: c,
                excess: c - 1.0,
            });
        }
        total += entropy_bits_fermion(c);
    }
    Ok(total)
}

/// Entanglement entropy by the trace formula `-Tr[z log2 z]` with
/// `z = (1 + i [J]_A)/2`; independent route for cross-checks.
pub fn entanglement_entropy_log_trace(
    state: &FermionicState,
    modes: &[FermionicMode],
) -> Result<f64> {
    // For metric-orthonormal modes the restricted complex structure is
    // already antisymmetric, so the real embedding of z is symmetric and
    // its eigenvalues are perfectly conditioned.
    let j_a = restricted_complex_structure(state, modes)?;
    let d = j_a.nrows();
    let anti = (&j_a - j_a.transpose()) * 0.5;
    if max_abs(&(&anti - &j_a)) > 1e-6 {
        return Err(Error::NumericalInconsistency(
            "restricted complex structure is not antisymmetric".into(),
        ));
    }
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
    let (eigs, _) = linalg::symmetric_eigen_sorted(&emb);
    let mut total = 0.0;
    for raw in eigs.iter() {
        let nu = raw.clamp(0.0, 1.0);
        if nu > 1e-13 {
            total -= nu * nu.log2();
        }
    }
    Ok(total / 2.0)
}

/// Metric-orthonormalizes a covector pair within its span and fixes the
/// orientation so `Omega(x, k) = cos 2r` with `r in [0, pi/4]`.
pub fn standardize_mode(
    state: &FermionicState,
    x: &RVec,
    k: &RVec,
) -> Result<(FermionicMode, f64)> {
    let gxx = state.metric_pairing(x, x);
    if gxx < tol::SINGULAR {
        return Err(Error::DegenerateMode("first covector has zero norm".into()));
    }
    let x1 = x / gxx.sqrt();
    let mut k1 = k - &x1 * state.metric_pairing(&x1, k);
    let gkk = state.metric_pairing(&k1, &k1);
    if gkk < tol::SINGULAR {
        return Err(Error::DegenerateMode(
            "covectors do not span a two-dimensional mode".into(),
        ));
    }
    k1 /= gkk.sqrt();
    let mut c = state.cov_pairing(&x1, &k1);
    let mut k_final = k1;
    if c < 0.0 {
        k_final = -k_final;
        c = -c;
    }
    if c > 1.0 + 1e-7 {
        return Err(Error::InvalidRestriction {
            value: c,
            excess: c - 1.0,
        });
    }
    let r = 0.5 * c.clamp(0.0, 1.0).acos();
    Ok((FermionicMode { x: x1, k: k_final }, r))
}

/// Parameter `r` of an already-standardized mode.
pub fn mode_squeezing(state: &FermionicState, mode: &FermionicMode) -> Result<f64> {
    validate_standard_mode(state, mode)?;
    let c = state.cov_pairing(&mode.x, &mode.k);
    Ok(0.5 * c.clamp(0.0, 1.0).acos())
}

fn validate_standard_mode(state: &FermionicState, mode: &FermionicMode) -> Result<()> {
    let gxx = state.metric_pairing(&mode.x, &mode.x);
    let gkk = state.metric_pairing(&mode.k, &mode.k);
    let gxk = state.metric_pairing(&mode.x, &mode.k);
    let c = state.cov_pairing(&mode.x, &mode.k);
    let ok = (gxx - 1.0).abs() < 1e-7
        && (gkk - 1.0).abs() < 1e-7
        && gxk.abs() < 1e-7
        && (-1e-7..=1.0 + 1e-7).contains(&c);
    if !ok {
        return Err(Error::DegenerateMode("mode is not in standard form".into()));
    }
    Ok(())
}

/// Partner of a standardized entangled fermionic mode; requires
/// `sin 2r` above tolerance.
pub fn partner_mode(state: &FermionicState, mode: &FermionicMode) -> Result<FermionicPartnerPair> {
    let r = mode_squeezing(state, mode)?;
    let s2r = (2.0 * r).sin();
    if s2r <= 1e-8 {
        return Err(Error::NoPartner(r));
    }
    let cot = (2.0 * r).cos() / s2r;
    let x_bar = &mode.x * cot + state.jt(&mode.k) / s2r;
    let k_bar = &mode.k * (-cot) + state.jt(&mode.x) / s2r;
    let pair = FermionicPartnerPair {
        mode: mode.clone(),
        partner: FermionicMode { x: x_bar, k: k_bar },
        r,
    };
    validate_pair_standard_form(state, &pair)?;
    Ok(pair)
}

fn validate_pair_standard_form(state: &FermionicState, pair: &FermionicPartnerPair) -> Result<()> {
    let got = pair_covariance(state, pair);
    let expected = standard_pair_covariance(pair.r);
    let defect = max_abs(&(got - expected));
    if defect > 1e-7 {
        return Err(Error::NumericalInconsistency(format!(
            "fermionic pair standard-form defect {defect:.3e}"
        )));
    }
    Ok(())
}

/// Restricted covariance of the pair in its own basis.
pub fn pair_covariance(state: &FermionicState, pair: &FermionicPartnerPair) -> Mat {
    let rows = pair.rows();
    Mat::from_fn(4, 4, |i, j| state.cov_pairing(rows[i], rows[j]))
}

/// The fermionic `h_check(v, w) = v^T G h G w` antisymmetric form.
fn h_check_matrix(ham: &FermionicHamiltonian, forms: &FormPair) -> Mat {
    forms.g() * &ham.h * forms.g()
}

/// Restricted two-mode problem for a fermionic partner pair on the ground
/// state of `ham`.
pub fn restricted_problem(
    ham: &FermionicHamiltonian,
    state: &FermionicState,
    pair: &FermionicPartnerPair,
) -> Result<FermionicTwoModeProblem> {
    validate_pair_standard_form(state, pair)?;
    let hc = h_check_matrix(ham, state.forms());
    let pairing = |a: &RVec, b: &RVec| (a.transpose() * &hc * b)[(0, 0)];
    let r = pair.r;
    let (c2, s2) = ((2.0 * r).cos(), (2.0 * r).sin());
    if s2 <= 1e-10 {
        return Err(Error::NoPartner(r));
    }
    let cot = c2 / s2;
    let x = &pair.mode.x;
    let k = &pair.mode.k;
    let h_xk = pairing(x, k);
    let h_xjx = pairing(x, &state.jt(x));
    let h_kjk = pairing(k, &state.jt(k));
    let h_xjk = pairing(x, &state.jt(k));

    let h_xxb = h_xjk / s2;
    let h_kkb = h_xxb;
    let h_xkb = -cot * h_xk + h_xjx / s2;
    let h_kxb = -cot * h_xk + h_kjk / s2;
    let h_xbkb = (cot / s2) * (h_xjx + h_kjk) - (1.0 + 2.0 * cot * cot) * h_xk;

    let h4 = Mat::from_row_slice(
        4,
        4,
        &[
            0.0, h_xk, h_xxb, h_xkb, //
            -h_xk, 0.0, h_kxb, h_kkb, //
            -h_xxb, -h_kxb, 0.0, h_xbkb, //
            -h_xkb, -h_kkb, -h_xbkb, 0.0,
        ],
    );

    let eps_plus_sq = 0.25 * ((h_xbkb + h_xk).powi(2) + (h_xkb + h_kxb).powi(2));
    // The cross term enters with unit weight: only then is eps_minus the
    // exact spectral half-gap of h4, independent of the phi angle.
    let eps_minus_sq =
        0.25 * ((h_xbkb - h_xk).powi(2) + (h_xkb - h_kxb).powi(2)) + h_xxb.powi(2);
    let eps_plus = eps_plus_sq.max(0.0).sqrt();
    let eps_minus = eps_minus_sq.max(0.0).sqrt();
    let eps1 = (eps_plus - eps_minus).max(0.0);
    let eps2 = eps_plus + eps_minus;
    let degenerate = eps_minus < tol::DEGENERACY * eps_plus.max(f64::MIN_POSITIVE);
    let (theta, phi) = if degenerate {
        (std::f64::consts::FRAC_PI_4, 0.0)
    } else {
        let cos2t = ((h_xbkb - h_xk) / (2.0 * eps_minus)).clamp(-1.0, 1.0);
        let theta = 0.5 * cos2t.acos();
        let phi = if h_xxb.abs() < 1e-13 && (h_xkb - h_kxb).abs() < 1e-13 {
            0.0
        } else {
            (2.0 * h_xxb).atan2(h_xkb - h_kxb)
        };
        (theta, phi)
    };
    Ok(FermionicTwoModeProblem {
        eps1,
        eps2,
        theta,
        phi,
        h4,
        degenerate,
    })
}

/// Costs of the four candidate product states `A^{(k, l)}` at the given
/// spectrum, squeezing and mixing angle.
pub fn product_state_costs(eps1: f64, eps2: f64, r: f64, theta: f64) -> [f64; 4] {
    let ep = 0.5 * (eps2 + eps1);
    let em = 0.5 * (eps2 - eps1);
    let c2r = (2.0 * r).cos();
    let c2t = (2.0 * theta).cos();
    [
        ep * (1.0 - c2r),
        ep - em * c2t,
        ep + em * c2t,
        ep * (1.0 + c2r),
    ]
}

/// Piecewise minimal extraction cost and companions for fermionic modes.
pub fn extraction_cost(
    eps1: f64,
    eps2: f64,
    r: f64,
    theta: Option<f64>,
    omega_max: Option<f64>,
) -> Result<CostReport> {
    if !(eps1 >= 0.0 && eps2 >= eps1) {
        return Err(Error::InvalidSpectrum(format!(
            "need 0 <= eps1 <= eps2, got ({eps1}, {eps2})"
        )));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-12).contains(&r) {
        return Err(Error::InvalidSqueezing(r));
    }
    let ep = 0.5 * (eps2 + eps1);
    let em = 0.5 * (eps2 - eps1);
    let c2r = (2.0 * r).cos();
    let subcritical = ep == 0.0 || c2r >= em / ep;
    let delta_e_min = if subcritical {
        (eps1 + eps2) * r.sin().powi(2)
    } else {
        eps1
    };
    let sigma_e = if subcritical {
        ep / 2.0_f64.sqrt() * (2.0 * r).sin()
    } else {
        0.0
    };
    let delta_s = entropy_bits_fermion(c2r);
    let delta_e_theta = theta.map(|th| {
        if subcritical {
            delta_e_min
        } else {
            ep - em * (2.0 * th).cos().abs()
        }
    });
    let product_costs = theta.map(|th| product_state_costs(eps1, eps2, r, th));
    let delta_e_max = omega_max.map(|w| 2.0 * w * r.sin().powi(2));
    Ok(CostReport {
        delta_s,
        delta_e_min,
        delta_e_theta,
        delta_e_max,
        sigma_e,
        product_costs,
    })
}

/// Checks whether a pair with the given restricted problem achieves the
/// minimal cost at its squeezing parameter.
pub fn optimality_check(problem: &FermionicTwoModeProblem, r: f64) -> OptimalityReport {
    let ep = problem.eps_plus();
    let em = problem.eps_minus();
    let c2r = (2.0 * r).cos();
    let c2t = (2.0 * problem.theta).cos();
    let subcritical = ep == 0.0 || c2r >= em / ep;
    if subcritical {
        OptimalityReport {
            achieves_min: true,
            best_state: (0, 0),
            theta_required: false,
            delta_e_theta: (problem.eps1 + problem.eps2) * r.sin().powi(2),
        }
    } else {
        OptimalityReport {
            achieves_min: (c2t.abs() - 1.0).abs() < 1e-9,
            best_state: (1, 0),
            theta_required: true,
            delta_e_theta: ep - em * c2t.abs(),
        }
    }
}

/// Replaces the pair block of the covariance by the product of the two
/// restricted single-mode ground states; returns the direct energy
/// difference and the post-swap covariance.
pub fn swap_cost_direct(
    ham: &FermionicHamiltonian,
    state: &FermionicState,
    pair: &FermionicPartnerPair,
) -> Result<(f64, Mat)> {
    let problem = restricted_problem(ham, state, pair)?;
    swap_cost_for_product(ham, state, pair, ground_product_labels(&problem))
        .map(|(de, cov, _)| (de, cov))
}

/// Labels of the product state built from the two restricted single-mode
/// ground states (the cheapest swap target).
pub fn ground_product_labels(problem: &FermionicTwoModeProblem) -> (u8, u8) {
    // Diagonal blocks of h4 are alpha * A_2; the single-mode ground state
    // is sign(alpha) * A_2.
    let alpha_a = problem.h4[(0, 1)];
    let alpha_b = problem.h4[(2, 3)];
    (
        if alpha_a >= 0.0 { 0 } else { 1 },
        if alpha_b >= 0.0 { 0 } else { 1 },
    )
}

/// Swap cost when the pair is forced into the product state `A^{(k, l)}`.
pub fn swap_cost_for_product(
    ham: &FermionicHamiltonian,
    state: &FermionicState,
    pair: &FermionicPartnerPair,
    labels: (u8, u8),
) -> Result<(f64, Mat, Mat)> {
    let n = state.dim();
    let rows = pair.rows();
    let seed: Vec<RVec> = rows.iter().map(|r| (*r).clone()).collect();
    let basis = orthonormal_complete(state.forms().g(), &seed)?;
    let cov_mode = &basis * state.covariance() * basis.transpose();
    let mut cov_new = cov_mode;
    cov_new
        .view_mut((0, 0), (4, 4))
        .copy_from(&product_state_covariance(labels.0, labels.1));
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
    let cov_full = (&cov_full - cov_full.transpose()) * 0.5;
    let (e_new, _) = energy_observables_raw(&cov_full, ham, state.forms())?;
    let (e_old, _) = energy_observables(state, ham)?;
    Ok((e_new - e_old, cov_full, basis))
}

/// Excitation energies of the Hamiltonian, ascending.
pub fn excitation_energies(ham: &FermionicHamiltonian, forms: &FormPair) -> Result<Vec<f64>> {
    let chol = forms
        .g()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidSpec("metric not positive definite".into()))?;
    let l = chol.l();
    let anti = l.transpose() * &ham.h * &l;
    let (_, mut mus) = linalg::antisymmetric_canonical(&anti)?;
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(mus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::group_membership;

    fn single_mode(omega: f64) -> (FermionicHamiltonian, FormPair) {
        let h = Mat::from_row_slice(2, 2, &[0.0, omega, -omega, 0.0]);
        (
            FermionicHamiltonian::new(h).unwrap(),
            FormPair::standard(1),
        )
    }

    #[test]
    fn single_mode_ground_state() {
        let (ham, forms) = single_mode(1.9);
        let state = ground_state(&ham, &forms).unwrap();
        assert!(max_abs(&(state.covariance() - a2_block())) < 1e-12);
        let (e, sigma) = energy_observables(&state, &ham).unwrap();
        assert!((e + 1.9 / 2.0).abs() < 1e-12);
        assert!(sigma < 1e-7);
    }

    #[test]
    fn gapless_is_rejected() {
        let h = Mat::zeros(2, 2);
        let ham = FermionicHamiltonian::new(h).unwrap();
        assert!(matches!(
            ground_state(&ham, &FormPair::standard(1)),
            Err(Error::GaplessHamiltonian(_))
        ));
    }

    /// Diagonal two-mode Hamiltonian and the pair obtained by premixing
    /// with `exp(theta K(phi))` and squeezing by `M_r`.
    fn built_pair(
        eps1: f64,
        eps2: f64,
        r: f64,
        theta: f64,
        phi: f64,
    ) -> (FermionicHamiltonian, FermionicState, FermionicPartnerPair) {
        let mut h = Mat::zeros(4, 4);
        h.view_mut((0, 0), (2, 2)).copy_from(&(a2_block() * eps1));
        h.view_mut((2, 2), (2, 2)).copy_from(&(a2_block() * eps2));
        let ham = FermionicHamiltonian::new(h).unwrap();
        let forms = FormPair::standard(2);
        let state = ground_state(&ham, &forms).unwrap();
        let t = squeezing_matrix(r) * linalg::matrix_exp(&(mixing_generator(phi) * theta));
        let rows: Vec<RVec> = (0..4).map(|i| RVec::from_fn(4, |j, _| t[(i, j)])).collect();
        let pair = FermionicPartnerPair {
            mode: FermionicMode {
                x: rows[0].clone(),
                k: rows[1].clone(),
            },
            partner: FermionicMode {
                x: rows[2].clone(),
                k: rows[3].clone(),
            },
            r,
        };
        (ham, state, pair)
    }

    #[test]
    fn ground_state_of_two_modes_is_product() {
        let (_, state, _) = built_pair(1.0, 2.0, 0.0, 0.0, 0.0);
        let mut expected = Mat::zeros(4, 4);
        expected.view_mut((0, 0), (2, 2)).copy_from(&a2_block());
        expected.view_mut((2, 2), (2, 2)).copy_from(&a2_block());
        assert!(max_abs(&(state.covariance() - expected)) < 1e-12);
    }

    #[test]
    fn squeezing_matrix_is_orthogonal_not_symplectic() {
        let forms = FormPair::standard(2);
        let flags = group_membership(&squeezing_matrix(0.4), &forms);
        // Fermionic M_r rotates the covariance: metric-preserving only.
        assert!(flags.orthogonal);
        assert!(!flags.symplectic);
    }

    #[test]
    fn built_pair_is_standard_and_recovers_spectrum() {
        let (ham, state, pair) = built_pair(1.0, 2.5, 0.5, 0.0, 0.0);
        let got = pair_covariance(&state, &pair);
        assert!(max_abs(&(got - standard_pair_covariance(0.5))) < 1e-10);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        assert!((problem.eps1 - 1.0).abs() < 1e-10);
        assert!((problem.eps2 - 2.5).abs() < 1e-10);
        assert!(problem.theta.abs() < 1e-7);
    }

    #[test]
    fn premixed_pair_recovers_theta() {
        for &(theta, phi) in &[(0.3, 0.2), (0.7, 1.0)] {
            let (ham, state, pair) = built_pair(1.0, 3.0, 0.4, theta, phi);
            let problem = restricted_problem(&ham, &state, &pair).unwrap();
            assert!((problem.eps1 - 1.0).abs() < 1e-9);
            assert!((problem.eps2 - 3.0).abs() < 1e-9);
            let fold = |t: f64| {
                let t = t.rem_euclid(std::f64::consts::FRAC_PI_2);
                t.min(std::f64::consts::FRAC_PI_2 - t)
            };
            assert!(
                (fold(problem.theta) - fold(theta)).abs() < 1e-7,
                "theta {theta} got {}",
                problem.theta
            );
        }
    }

    #[test]
    fn h_check_is_antisymmetric() {
        let (ham, state, pair) = built_pair(0.8, 1.7, 0.3, 0.4, 0.6);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        assert!(max_abs(&(problem.h4.transpose() + &problem.h4)) < 1e-12);
    }

    #[test]
    fn partner_involution_up_to_orientation() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.5, 0.3, 0.7);
        let back = partner_mode(&state, &pair.partner).unwrap();
        // The trigonometric identities flip the joint orientation of the
        // recovered mode; the mode subspace and standard form coincide.
        assert!((back.partner.x + &pair.mode.x).norm() < 1e-9);
        assert!((back.partner.k + &pair.mode.k).norm() < 1e-9);
        assert!((back.r - pair.r).abs() < 1e-10);
    }

    #[test]
    fn maximal_entanglement_pair_structure() {
        let r = std::f64::consts::FRAC_PI_4;
        let (_, state, pair) = built_pair(1.0, 1.0, r, 0.0, 0.0);
        let cov = pair_covariance(&state, &pair);
        // cos 2r = 0 diagonal blocks, sin 2r = 1 cross blocks.
        assert!(cov[(0, 1)].abs() < 1e-10);
        assert!((cov[(0, 3)] - 1.0).abs() < 1e-10);
        assert!((cov[(1, 2)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pure_mode_has_no_partner() {
        let (_, state, _) = built_pair(1.0, 2.0, 0.0, 0.0, 0.0);
        let mut x = RVec::zeros(4);
        x[0] = 1.0;
        let mut k = RVec::zeros(4);
        k[1] = 1.0;
        let (mode, r) = standardize_mode(&state, &x, &k).unwrap();
        assert!(r < 1e-8);
        assert!(matches!(partner_mode(&state, &mode), Err(Error::NoPartner(_))));
    }

    #[test]
    fn standardize_rotation_invariance() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.4, 0.2, 0.5);
        let (_, r0) = standardize_mode(&state, &pair.mode.x, &pair.mode.k).unwrap();
        // Rotate within the span.
        let (c, s) = (0.6_f64.cos(), 0.6_f64.sin());
        let x2 = &pair.mode.x * c + &pair.mode.k * s;
        let k2 = &pair.mode.x * (-s) + &pair.mode.k * c;
        let (_, r2) = standardize_mode(&state, &x2, &k2).unwrap();
        assert!((r0 - r2).abs() < 1e-9);
        assert!((r0 - pair.r).abs() < 1e-9);
    }

    #[test]
    fn entropy_limits() {
        assert!(entropy_bits_fermion(1.0).abs() < 1e-12);
        assert!((entropy_bits_fermion(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cost_all_r() {
        let eps = 1.1;
        for &r in &[0.1, 0.4, std::f64::consts::FRAC_PI_4] {
            let report = extraction_cost(eps, eps, r, None, None).unwrap();
            assert!((report.delta_e_min - 2.0 * eps * r.sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_branches_and_continuity() {
        let (eps1, eps2) = (1.0, 3.0);
        // r = pi/4: cos 2r = 0 <= 1/2, supercritical.
        let report =
            extraction_cost(eps1, eps2, std::f64::consts::FRAC_PI_4, None, None).unwrap();
        assert!((report.delta_e_min - eps1).abs() < 1e-14);
        assert_eq!(report.sigma_e, 0.0);
        // Critical point: both branches agree.
        let c_crit = (eps2 - eps1) / (eps2 + eps1);
        let r_crit = 0.5 * c_crit.acos();
        let branch_a = (eps1 + eps2) * r_crit.sin().powi(2);
        assert!((branch_a - eps1).abs() < 1e-12);
    }

    #[test]
    fn product_state_costs_match_rows() {
        let (eps1, eps2, r, theta) = (1.0, 2.0, 0.3, 0.25);
        let costs = product_state_costs(eps1, eps2, r, theta);
        let ep = 1.5;
        let em = 0.5;
        assert!((costs[0] - ep * (1.0 - (2.0 * r).cos())).abs() < 1e-14);
        assert!((costs[1] - (ep - em * (2.0 * theta).cos())).abs() < 1e-14);
        assert!((costs[2] - (ep + em * (2.0 * theta).cos())).abs() < 1e-14);
        assert!((costs[3] - ep * (1.0 + (2.0 * r).cos())).abs() < 1e-14);
    }

    #[test]
    fn invariant_product_state_under_squeezing() {
        // The supercritical final state A^{(1,0)} is invariant under the
        // two-mode squeeze.
        let m = squeezing_matrix(0.37);
        let a10 = product_state_covariance(1, 0);
        assert!(max_abs(&(&m * &a10 * m.transpose() - &a10)) < 1e-12);
        // And A^{(0,0)} is not (it squeezes into the entangled form).
        let a00 = product_state_covariance(0, 0);
        assert!(max_abs(&(&m * &a00 * m.transpose() - &a00)) > 1e-2);
    }

    #[test]
    fn optimality_check_branches() {
        // Subcritical: any theta achieves the minimum.
        let (ham, state, pair) = built_pair(1.0, 1.4, 0.2, 0.5, 0.3);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        let report = optimality_check(&problem, pair.r);
        assert!(report.achieves_min);
        assert_eq!(report.best_state, (0, 0));

        // Supercritical with theta = pi/3: misses the minimum.
        let (ham, state, pair) = built_pair(
            1.0,
            3.0,
            std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_3,
            0.0,
        );
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        let report = optimality_check(&problem, pair.r);
        assert!(!report.achieves_min);
        assert_eq!(report.best_state, (1, 0));
        let expected = problem.eps_plus() - problem.eps_minus() * 0.5;
        assert!((report.delta_e_theta - expected).abs() < 1e-9);

        // Supercritical with theta = 0: reaches eps1.
        let (ham, state, pair) =
            built_pair(1.0, 3.0, std::f64::consts::FRAC_PI_4, 0.0, 0.0);
        let problem = restricted_problem(&ham, &state, &pair).unwrap();
        let report = optimality_check(&problem, pair.r);
        assert!(report.achieves_min);
        assert!((report.delta_e_theta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn swap_cost_matches_product_formula() {
        for &(eps1, eps2, r, theta) in &[
            (1.0, 1.0, 0.3, 0.0),
            (1.0, 2.0, 0.35, 0.4),
            (1.0, 3.0, 0.7, 0.0),
        ] {
            let (ham, state, pair) = built_pair(eps1, eps2, r, theta, 0.2);
            let problem = restricted_problem(&ham, &state, &pair).unwrap();
            let (direct, _) = swap_cost_direct(&ham, &state, &pair).unwrap();
            // Ground product cost: eps_plus - (eps_A + eps_Abar)/2.
            let ep = problem.eps_plus();
            let em = problem.eps_minus();
            let c2r = (2.0 * r).cos();
            let c2t = (2.0 * problem.theta).cos();
            let ea = (ep * c2r - em * c2t).abs();
            let eb = (ep * c2r + em * c2t).abs();
            let formula = ep - 0.5 * (ea + eb);
            assert!(
                (direct - formula).abs() < 1e-9,
                "({eps1},{eps2},{r},{theta}): {direct} vs {formula}"
            );
        }
    }

    #[test]
    fn first_excited_energy_gap() {
        let (ham, state, pair) = built_pair(1.0, 3.0, std::f64::consts::FRAC_PI_4, 0.0, 0.0);
        // Force the A^{(1,0)} product state: first excited state of H.
        let (cost, _, _) = swap_cost_for_product(&ham, &state, &pair, (1, 0)).unwrap();
        assert!((cost - 1.0).abs() < 1e-9, "cost {cost}");
        let _ = state;
    }

    #[test]
    fn entropy_dual_formulas_agree() {
        let (_, state, pair) = built_pair(1.0, 2.0, 0.4, 0.3, 0.6);
        let a = entanglement_entropy(&state, &[pair.mode.clone()]).unwrap();
        let b = entanglement_entropy_log_trace(&state, &[pair.mode.clone()]).unwrap();
        assert!((a - b).abs() < 1e-12);
        let expected = entropy_bits_fermion((2.0 * pair.r).cos());
        assert!((a - expected).abs() < 1e-12);
        // Joint pair entropy vanishes.
        let joint =
            entanglement_entropy(&state, &[pair.mode.clone(), pair.partner.clone()]).unwrap();
        assert!(joint.abs() < 1e-9);
    }

    #[test]
    fn excitation_energies_of_built_hamiltonian() {
        let (ham, _, _) = built_pair(0.7, 2.3, 0.1, 0.0, 0.0);
        let omegas = excitation_energies(&ham, &FormPair::standard(2)).unwrap();
        assert!((omegas[0] - 0.7).abs() < 1e-10);
        assert!((omegas[1] - 2.3).abs() < 1e-10);
    }
}
