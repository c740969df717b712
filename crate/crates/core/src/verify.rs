//! Oracle cross-check suite: every closed-form pipeline result is
//! re-derived through exact or truncated Fock-space diagonalization and
//! the margins are reported. Drives the `verify` CLI command.

use crate::boson::{self, BosonicHamiltonian};
use crate::error::{Error, Result};
use crate::fermion::{self, FermionicHamiltonian};
use crate::linalg::{max_abs, wick_npoint, C64, CMat, FormPair, Mat, RVec, Statistics};
use crate::oracle::{
    self, boson_fock_oracle, BosonFock, FermionFock, SeededSampler,
};

/// Sizes and seed of the verification run.
#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Fermionic oracle size (modes); hard limit 8.
    pub fermion_modes: usize,
    /// Bosonic truncation (quanta per mode); hard limit 60.
    pub boson_cutoff: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 7,
            fermion_modes: 5,
            boson_cutoff: 34,
        }
    }
}

/// One cross-check with its observed margin and threshold.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn outcome(name: &'static str, margin: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        margin,
        tolerance,
        passed: margin <= tolerance,
    }
}

/// Runs the full suite. `Err` signals an oracle-level failure
/// (non-convergence or size limits), distinct from a failed margin.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut checks = Vec::new();
    checks.push(boson_sho_ground(cfg)?);
    checks.push(boson_two_mode_ground(cfg)?);
    checks.push(boson_degenerate_swap(cfg)?);
    checks.push(boson_wick_four_point(cfg)?);
    checks.push(fermion_single_mode()?);
    checks.push(fermion_random_ground(cfg)?);
    checks.push(fermion_entropies(cfg)?);
    checks.push(fermion_wick(cfg)?);
    checks.push(fermion_swap_branches(cfg)?);
    checks.push(spectrum_bounds_batch(cfg)?);
    checks.push(xy_site_entropy_vs_fock()?);
    Ok(checks)
}

fn boson_sho_ground(_cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let omega = 1.7;
    let h = Mat::from_row_slice(2, 2, &[omega * omega, 0.0, 0.0, 1.0]);
    let ham = BosonicHamiltonian::quadratic(h)?;
    let state = boson::ground_state(&ham, &FormPair::standard(1))?;
    let expected = Mat::from_row_slice(2, 2, &[1.0 / omega, 0.0, 0.0, omega]);
    let margin = max_abs(&(state.covariance() - expected));
    Ok(outcome("boson-sho-ground", margin, 1e-12))
}

fn random_boson_two_mode(sampler: &mut SeededSampler) -> Result<BosonicHamiltonian> {
    // Mild conditioning keeps the Fock truncation convergent.
    let raw = Mat::from_fn(4, 4, |_, _| 0.35 * sampler.normal());
    let h = &raw * raw.transpose() + Mat::identity(4, 4);
    BosonicHamiltonian::quadratic(h)
}

fn boson_two_mode_ground(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut sampler = SeededSampler::for_stream(cfg.seed, 10);
    let mut margin = 0.0f64;
    for _ in 0..2 {
        let ham = random_boson_two_mode(&mut sampler)?;
        let state = boson::ground_state(&ham, &FormPair::standard(2))?;
        let fock = boson_fock_oracle(
            ham.quadratic_form(),
            ham.linear_part(),
            cfg.boson_cutoff,
            1e-4,
        )?;
        margin = margin.max(max_abs(&(&fock.covariance - state.covariance())));
        let (e, _) = boson::energy_observables(&state, &ham)?;
        margin = margin.max((e - fock.ground_energy).abs());
    }
    Ok(outcome("boson-two-mode-ground-vs-fock", margin, 1e-4))
}

fn boson_degenerate_swap(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    // Degenerate two-mode Hamiltonian in its eigenmode basis; the pair is
    // obtained by squeezing the eigenmodes.
    let (eps, r) = (1.0, 0.55);
    let ham = BosonicHamiltonian::quadratic(Mat::identity(4, 4) * eps)?;
    let forms = FormPair::standard(2);
    let state = boson::ground_state(&ham, &forms)?;
    let t = boson::squeezing_matrix(r);
    let rows: Vec<RVec> = (0..4).map(|i| RVec::from_fn(4, |j, _| t[(i, j)])).collect();
    let pair = boson::PartnerPair {
        mode: boson::BosonicMode {
            x: rows[0].clone(),
            k: rows[1].clone(),
        },
        partner: boson::BosonicMode {
            x: rows[2].clone(),
            k: rows[3].clone(),
        },
        r,
    };
    let formula = 2.0 * eps * r.sinh().powi(2);
    let (direct, cov_after) = boson::swap_cost_direct(&ham, &state, &pair)?;
    let mut margin = (direct - formula).abs();

    // Exact-state route through the truncated oracle: prepare both
    // Gaussian states as ground states of auxiliary Hamiltonians and
    // evaluate the original Hamiltonian on them.
    let fock = BosonFock::new(ham.quadratic_form(), ham.linear_part(), cfg.boson_cutoff)?;
    let psi_ground = {
        let (_, psi) = fock.ground()?;
        psi
    };
    let aux_h = cov_after
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NumericalInconsistency("post-swap covariance singular".into()))?;
    let aux_h = (&aux_h + aux_h.transpose()) * 0.5;
    let aux = BosonFock::new(&aux_h, &RVec::zeros(4), cfg.boson_cutoff)?;
    let (_, psi_after) = aux.ground()?;
    let fock_cost = fock.energy_of(&psi_after) - fock.energy_of(&psi_ground);
    margin = margin.max((fock_cost - formula).abs());
    Ok(outcome("boson-degenerate-swap-cost", margin, 1e-4))
}

fn boson_wick_four_point(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut sampler = SeededSampler::for_stream(cfg.seed, 11);
    let ham = random_boson_two_mode(&mut sampler)?;
    let forms = FormPair::standard(2);
    let state = boson::ground_state(&ham, &forms)?;
    let c2 = two_point(state.covariance(), forms.omega());
    let fock = BosonFock::new(ham.quadratic_form(), ham.linear_part(), cfg.boson_cutoff)?;
    let (_, psi) = fock.ground()?;
    let mut margin = 0.0f64;
    for &idx in &[[0, 1, 2, 3], [0, 0, 1, 1], [2, 1, 3, 0], [3, 3, 2, 2]] {
        let gaussian = wick_npoint(&c2, &idx, Statistics::Boson);
        let exact = fock.npoint(&psi, &idx);
        margin = margin.max((gaussian - exact).norm());
    }
    Ok(outcome("boson-wick-four-point", margin, 1e-5))
}

/// The two-point function as a complex matrix from its symmetric and
/// antisymmetric parts: bosons pass `(covariance, omega)`, fermions pass
/// `(metric, covariance)`.
pub fn two_point(symmetric: &Mat, antisymmetric: &Mat) -> CMat {
    CMat::from_fn(symmetric.nrows(), symmetric.ncols(), |i, j| {
        C64::new(symmetric[(i, j)] / 2.0, antisymmetric[(i, j)] / 2.0)
    })
}

fn fermion_single_mode() -> Result<CheckOutcome> {
    let omega = 1.3;
    let h = Mat::from_row_slice(2, 2, &[0.0, omega, -omega, 0.0]);
    let fock = FermionFock::new(&h)?;
    let margin = (fock.ground_energy() + omega / 2.0).abs();
    Ok(outcome("fermion-single-mode-ground", margin, 1e-12))
}

fn random_fermion(sampler: &mut SeededSampler, n: usize) -> Result<FermionicHamiltonian> {
    let dim = 2 * n;
    let raw = Mat::from_fn(dim, dim, |_, _| sampler.normal());
    FermionicHamiltonian::new((&raw - raw.transpose()) * 0.5)
}

fn fermion_random_ground(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut sampler = SeededSampler::for_stream(cfg.seed, 12);
    let n = cfg.fermion_modes;
    let forms = FormPair::standard(n);
    let mut margin = 0.0f64;
    for _ in 0..3 {
        let ham = random_fermion(&mut sampler, n)?;
        let state = fermion::ground_state(&ham, &forms)?;
        let fock = FermionFock::new(ham.bilinear_form())?;
        let psi = fock.ground_vector();
        margin = margin.max(max_abs(&(fock.covariance(&psi) - state.covariance())));
        let (e, _) = fermion::energy_observables(&state, &ham)?;
        margin = margin.max((e - fock.ground_energy()).abs());
    }
    Ok(outcome("fermion-ground-vs-fock", margin, 1e-9))
}

fn fermion_entropies(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut sampler = SeededSampler::for_stream(cfg.seed, 13);
    let n = cfg.fermion_modes;
    let forms = FormPair::standard(n);
    let ham = random_fermion(&mut sampler, n)?;
    let state = fermion::ground_state(&ham, &forms)?;
    let fock = FermionFock::new(ham.bilinear_form())?;
    let mut margin = 0.0f64;
    // Single site and a site pair against reduced density matrices.
    for modes in [vec![0usize], vec![1], vec![0, 2]] {
        let dim = state.dim();
        let site_modes: Vec<fermion::FermionicMode> = modes
            .iter()
            .map(|&m| {
                let mut x = RVec::zeros(dim);
                x[2 * m] = 1.0;
                let mut k = RVec::zeros(dim);
                k[2 * m + 1] = 1.0;
                fermion::FermionicMode { x, k }
            })
            .collect();
        let gaussian = fermion::entanglement_entropy(&state, &site_modes)?;
        let exact = fock.reduced_entropy(ham.bilinear_form(), &modes)?;
        margin = margin.max((gaussian - exact).abs());
    }
    Ok(outcome("fermion-entropy-vs-fock", margin, 1e-8))
}

fn fermion_wick(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut sampler = SeededSampler::for_stream(cfg.seed, 14);
    let n = 2;
    let forms = FormPair::standard(n);
    let ham = random_fermion(&mut sampler, n)?;
    let state = fermion::ground_state(&ham, &forms)?;
    let c2 = two_point(forms.g(), state.covariance());
    let fock = FermionFock::new(ham.bilinear_form())?;
    let psi = fock.ground_vector();
    let mut margin = 0.0f64;
    for &idx in &[[0, 1, 2, 3], [0, 2, 1, 3], [3, 1, 0, 2], [1, 1, 2, 2]] {
        let gaussian = wick_npoint(&c2, &idx, Statistics::Fermion);
        let exact = fock.npoint(&psi, &idx);
        margin = margin.max((gaussian - exact).norm());
    }
    let six = [0usize, 1, 2, 3, 0, 1];
    let gaussian = wick_npoint(&c2, &six, Statistics::Fermion);
    let exact = fock.npoint(&psi, &six);
    margin = margin.max((gaussian - exact).norm());
    Ok(outcome("fermion-wick-parity", margin, 1e-10))
}

fn fermion_swap_branches(_cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let mut margin = 0.0f64;
    for &(eps1, eps2, r) in &[
        (1.0, 1.0, 0.4),
        (1.0, 3.0, 0.3),
        (1.0, 3.0, std::f64::consts::FRAC_PI_4),
    ] {
        let mut h = Mat::zeros(4, 4);
        h.view_mut((0, 0), (2, 2))
            .copy_from(&(fermion::a2_block() * eps1));
        h.view_mut((2, 2), (2, 2))
            .copy_from(&(fermion::a2_block() * eps2));
        let ham = FermionicHamiltonian::new(h.clone())?;
        let forms = FormPair::standard(2);
        let state = fermion::ground_state(&ham, &forms)?;
        let t = fermion::squeezing_matrix(r);
        let rows: Vec<RVec> = (0..4).map(|i| RVec::from_fn(4, |j, _| t[(i, j)])).collect();
        let pair = fermion::FermionicPartnerPair {
            mode: fermion::FermionicMode {
                x: rows[0].clone(),
                k: rows[1].clone(),
            },
            partner: fermion::FermionicMode {
                x: rows[2].clone(),
                k: rows[3].clone(),
            },
            r,
        };
        let report = fermion::extraction_cost(eps1, eps2, r, Some(0.0), None)?;
        let (direct, cov_after) = fermion::swap_cost_direct(&ham, &state, &pair)?;
        margin = margin.max((direct - report.delta_e_min).abs());
        // Exact route: evaluate the post-swap Gaussian state in Fock space.
        let fock = FermionFock::new(ham.bilinear_form())?;
        let e_after = fock.energy_of_gaussian(&cov_after)?;
        let fock_cost = e_after - fock.ground_energy();
        margin = margin.max((fock_cost - report.delta_e_min).abs());
    }
    Ok(outcome("fermion-swap-vs-fock", margin, 1e-10))
}

fn spectrum_bounds_batch(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let n = 6;
    let mut worst = f64::INFINITY;
    // Bosonic batch.
    let mut sampler = SeededSampler::for_stream(cfg.seed, 15);
    let raw = Mat::from_fn(2 * n, 2 * n, |_, _| sampler.normal());
    let h = &raw * raw.transpose() + Mat::identity(2 * n, 2 * n) * 0.5;
    let ham = BosonicHamiltonian::quadratic(h)?;
    let forms = FormPair::standard(n);
    let state = boson::ground_state(&ham, &forms)?;
    let omegas = boson::excitation_energies(&ham, &forms)?;
    for _ in 0..40 {
        let (x, k) = oracle::haar_random_mode(forms.g(), &mut sampler)?;
        let (mode, r) = boson::standardize_mode(&state, &x, &k)?;
        if r < 1e-6 {
            continue;
        }
        let pair = boson::partner_mode(&state, &mode)?;
        let problem = boson::restricted_problem(&ham, &state, &pair)?;
        let report = oracle::spectrum_bounds_check(&omegas, problem.eps1, problem.eps2)?;
        let m = report
            .margins
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(m);
    }
    // Fermionic batch.
    let fham = random_fermion(&mut sampler, n)?;
    let fstate = fermion::ground_state(&fham, &forms)?;
    let fomegas = fermion::excitation_energies(&fham, &forms)?;
    for _ in 0..40 {
        let (x, k) = oracle::haar_random_mode(forms.g(), &mut sampler)?;
        let (mode, r) = fermion::standardize_mode(&fstate, &x, &k)?;
        if (2.0 * r).sin() < 1e-6 {
            continue;
        }
        let pair = fermion::partner_mode(&fstate, &mode)?;
        let problem = fermion::restricted_problem(&fham, &fstate, &pair)?;
        let report = oracle::spectrum_bounds_check(&fomegas, problem.eps1, problem.eps2)?;
        let m = report
            .margins
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(m);
    }
    // Margin convention: how far the worst case sits from violating.
    Ok(outcome("spectrum-bounds-haar-batch", (-worst).max(0.0), 1e-10))
}

fn xy_site_entropy_vs_fock() -> Result<CheckOutcome> {
    let spec = crate::models::XySpec::new(6, 1.0, 0.5, 0.5)?;
    let state = crate::models::xy_ground_state(&spec)?;
    let ham = crate::models::xy_hamiltonian(&spec)?;
    let raw = crate::models::site_mode(&spec, 0);
    let (mode, r) = fermion::standardize_mode(&state, &raw.x, &raw.k)?;
    let _ = mode;
    let gaussian = fermion::entropy_bits_fermion((2.0 * r).cos());
    let fock = FermionFock::new(ham.bilinear_form())?;
    let exact = fock.reduced_entropy(ham.bilinear_form(), &[0])?;
    let margin = (gaussian - exact).abs();
    Ok(outcome("xy-site-entropy-vs-fock", margin, 1e-8))
}

/// Classifies an error into the CLI exit-status contract.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. } => 4,
        Error::UnboundedHamiltonian
        | Error::GaplessHamiltonian(_)
        | Error::InvalidSpec(_)
        | Error::InvalidSpectrum(_)
        | Error::InvalidSqueezing(_)
        | Error::OracleTooLarge { .. }
        | Error::DimensionMismatch(_)
        | Error::NoPartner(_)
        | Error::DegenerateMode(_) => 2,
        Error::NumericalInconsistency(_)
        | Error::InvalidRestriction { .. }
        | Error::DegenerateSpectrum { .. }
        | Error::DecompositionFailed(_) => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        let cfg = VerifyConfig {
            seed: 7,
            fermion_modes: 4,
            boson_cutoff: 30,
        };
        let checks = run_all(&cfg).unwrap();
        for c in &checks {
            assert!(
                c.passed,
                "{} failed: margin {:.3e} > tol {:.3e}",
                c.name, c.margin, c.tolerance
            );
        }
        assert!(checks.len() >= 10);
    }

    #[test]
    fn wick_parity_mutation_is_caught() {
        // Dropping the fermionic matching parity must break the 4-point
        // agreement with the exact oracle by far more than the margin.
        let mut sampler = SeededSampler::for_stream(7, 14);
        let ham = random_fermion(&mut sampler, 2).unwrap();
        let forms = FormPair::standard(2);
        let state = fermion::ground_state(&ham, &forms).unwrap();
        let c2 = two_point(forms.g(), state.covariance());
        let fock = FermionFock::new(ham.bilinear_form()).unwrap();
        let psi = fock.ground_vector();
        let mut worst = 0.0f64;
        for &idx in &[[0usize, 1, 2, 3], [0, 2, 1, 3], [3, 1, 0, 2]] {
            let mutated = wick_npoint(&c2, &idx, Statistics::Boson);
            let exact = fock.npoint(&psi, &idx);
            worst = worst.max((mutated - exact).norm());
        }
        assert!(worst > 1e-3, "mutation not detected: {worst}");
    }
}
