//! Correlation measures of two-qubit states.
//!
//! Quantum discord is the gap between the mutual information and the
//! classical correlation, the latter maximized over projective measurements
//! on the measured qubit. The geometric discord is the squared
//! Hilbert–Schmidt distance to the nearest zero-discord state; it is
//! computed three ways: from the singular values of ℛ′, from the top
//! eigenvalue of K = x xᵀ + R Rᵀ, and by direct minimization over
//! zero-discord states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::OptimizerError;
use crate::numerics::{
    hermitian_eigensystem, qubit_entropy, singular_values, spectrum_entropy, symmetric_eigensystem,
    SingularValueList,
};
use crate::optimize::{golden_section_max, nelder_mead, NelderMeadOptions};
use crate::states::{
    bloch_qubit, expectation_matrix, kron, pauli, reduced_expectation, to_bloch, DensityMatrix, C2, C4,
};

/// Probabilities below this contribute nothing to the conditional entropy.
const PROB_FLOOR: f64 = 1e-14;
/// Eigenvalue gap of K below which ẽ is reported as degenerate.
pub const E_TILDE_GAP: f64 = 1e-6;
/// Squared singular values within this of each other are tied.
pub const SV_TIE_TOL: f64 = 1e-12;
/// Spread of measured information below which every measurement is optimal.
pub const ISOTROPIC_TOL: f64 = 1e-10;
/// Number of grid local maxima that get refined.
const REFINED_CANDIDATES: usize = 4;

/// Which qubit is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    #[default]
    A,
    B,
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            other => Err(format!("side must be A or B, got '{other}'")),
        }
    }
}

fn oriented(rho: &DensityMatrix, side: Side) -> DensityMatrix {
    match side {
        Side::A => rho.clone(),
        Side::B => rho.swapped(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub grid_theta: usize,
    pub grid_phi: usize,
    /// Angular tolerance of the golden-section refinement.
    pub refine_tol: f64,
    /// Random restarts of the zero-discord-state minimizer.
    pub restarts: usize,
    pub seed: u64,
    /// Iteration cap for each refinement / simplex run.
    pub max_iter: usize,
    /// Accepted excess of the brute-force geometric discord over the optimum.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_theta: 64,
            grid_phi: 128,
            refine_tol: 1e-10,
            restarts: 32,
            seed: 0,
            max_iter: 5000,
            tolerance: 1e-4,
        }
    }
}

/// Projective measurement {(1 ± n·σ)/2} with n = (sinθcosφ, sinθsinφ, cosθ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementBasis {
    /// Normalizes to θ ∈ [0, π], φ ∈ [0, 2π) without changing n.
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        let mut f = phi;
        if t > PI {
            t = 2.0 * PI - t;
            f += PI;
        }
        MeasurementBasis {
            theta: t,
            phi: f.rem_euclid(2.0 * PI),
        }
    }

    pub fn from_direction(n: &Vector3<f64>) -> Self {
        let n = n.normalize();
        MeasurementBasis::new(n[2].clamp(-1.0, 1.0).acos(), n[1].atan2(n[0]))
    }

    pub fn direction(&self) -> Vector3<f64> {
        direction(self.theta, self.phi)
    }

    pub fn projectors(&self) -> [C2; 2] {
        let e1 = bloch_qubit(1.0, &self.direction());
        [e1, pauli(0) - e1]
    }

    /// The same measurement with outcome labels exchanged (n ↦ −n).
    pub fn flipped(&self) -> Self {
        MeasurementBasis::new(PI - self.theta, self.phi + PI)
    }
}

fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// ℐ(ρ) = H(ρ_A) + H(ρ_B) − H(ρ).
pub fn mutual_information(rho: &DensityMatrix) -> f64 {
    let h_ab = spectrum_entropy(&rho.eigensystem().values);
    (entropy2(&rho.reduced_a()) + entropy2(&rho.reduced_b()) - h_ab).max(0.0)
}

fn entropy2(m: &C2) -> f64 {
    qubit_entropy(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)])
}

/// Evaluates ℐ(ρ|{E_k}) for many measurements on qubit A of one state.
struct MeasuredInfo {
    rho: C4,
    h_b: f64,
}

impl MeasuredInfo {
    fn new(rho: &DensityMatrix) -> Self {
        MeasuredInfo {
            rho: *rho.entries(),
            h_b: entropy2(&rho.reduced_b()),
        }
    }

    /// Tr_A[(E⊗1)ρ].
    fn unnormalized_conditional(&self, e: &C2) -> C2 {
        let rho = &self.rho;
        C2::from_fn(|b, bp| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..2 {
                for ap in 0..2 {
                    acc += e[(a, ap)] * rho[(2 * ap + b, 2 * a + bp)];
                }
            }
            acc
        })
    }

    fn at(&self, theta: f64, phi: f64) -> f64 {
        let e1 = bloch_qubit(1.0, &direction(theta, phi));
        let e2 = pauli(0) - e1;
        let mut info = self.h_b;
        for e in [e1, e2] {
            let m = self.unnormalized_conditional(&e);
            let pk = m[(0, 0)].re + m[(1, 1)].re;
            if pk > PROB_FLOOR {
                info -= pk * qubit_entropy(m[(0, 0)].re / pk, m[(1, 1)].re / pk, m[(0, 1)] / pk);
            }
        }
        info
    }
}

/// ℐ(ρ|{E_k}) = H(ρ_B) − Σ p_k H(ρ_{B|k}) for a measurement on `side`.
pub fn measured_mutual_information(rho: &DensityMatrix, basis: &MeasurementBasis, side: Side) -> f64 {
    MeasuredInfo::new(&oriented(rho, side)).at(basis.theta, basis.phi)
}

/// 𝒞(ρ): maximum of the measured mutual information over projective
/// measurements on `side`, with a maximizing basis.
///
/// A θ×φ grid is scanned first; its best local maxima are then refined by
/// alternating golden-section searches in θ and φ.
pub fn classical_correlation(
    rho: &DensityMatrix,
    side: Side,
    cfg: &OptimizerConfig,
) -> Result<(f64, MeasurementBasis), OptimizerError> {
    let probe = MeasuredInfo::new(&oriented(rho, side));
    let nt = cfg.grid_theta.max(2);
    let np = cfg.grid_phi.max(1);
    let dt = PI / (nt - 1) as f64;
    let dp = 2.0 * PI / np as f64;

    let theta_at = |i: usize| i as f64 * dt;
    let phi_at = |j: usize| j as f64 * dp;
    let is_pole = |i: usize| i == 0 || i == nt - 1;
    let grid: Vec<Vec<f64>> = (0..nt)
        .map(|i| {
            if is_pole(i) {
                vec![probe.at(theta_at(i), 0.0); np]
            } else {
                (0..np).map(|j| probe.at(theta_at(i), phi_at(j))).collect()
            }
        })
        .collect();

    let mut local_max = Vec::new();
    for i in 0..nt {
        for j in 0..np {
            if is_pole(i) && j > 0 {
                continue;
            }
            let v = grid[i][j];
            let mut peak = true;
            for di in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                if ii < 0 || ii >= nt as i64 {
                    continue;
                }
                for dj in [-1i64, 0, 1] {
                    let jj = (j as i64 + dj).rem_euclid(np as i64) as usize;
                    if grid[ii as usize][jj] > v {
                        peak = false;
                    }
                }
            }
            if peak {
                local_max.push((v, theta_at(i), phi_at(j)));
            }
        }
    }
    local_max.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut chosen: Vec<(f64, f64, f64)> = Vec::new();
    for cand in local_max {
        let n = direction(cand.1, cand.2);
        let distinct = chosen
            .iter()
            .all(|c| n.dot(&direction(c.1, c.2)).abs() < (2.0 * dt).cos());
        if distinct {
            chosen.push(cand);
        }
        if chosen.len() == REFINED_CANDIDATES {
            break;
        }
    }

    let mut best = chosen[0];
    for &(v0, t0, p0) in &chosen {
        let refined = refine_direction(&probe, v0, t0, p0, dt, dp, cfg)?;
        if refined.0 > best.0 {
            best = refined;
        }
    }
    Ok((best.0, MeasurementBasis::new(best.1, best.2)))
}

fn refine_direction(
    probe: &MeasuredInfo,
    v0: f64,
    theta0: f64,
    phi0: f64,
    dt: f64,
    dp: f64,
    cfg: &OptimizerConfig,
) -> Result<(f64, f64, f64), OptimizerError> {
    let (mut f, mut th, mut ph) = (v0, theta0, phi0);
    let tol = cfg.refine_tol;
    for _ in 0..cfg.max_iter.max(1) {
        let f_start = f;
        let (th_old, ph_old) = (th, ph);
        let (t2, f2) = golden_section_max(|t| probe.at(t, ph), th - dt, th + dt, tol);
        if f2 > f {
            th = t2;
            f = f2;
        }
        let (p2, f3) = golden_section_max(|q| probe.at(th, q), ph - dp, ph + dp, tol);
        if f3 > f {
            ph = p2;
            f = f3;
        }
        let still = (th - th_old).abs() <= tol && (ph - ph_old).abs() * th.sin().abs() <= tol;
        let stalled = f - f_start <= 1e-15 * f.abs().max(1.0);
        if still || stalled {
            return Ok((f, th, ph));
        }
    }
    Err(OptimizerError::OptimizerFailure(format!(
        "measurement refinement did not settle within {} cycles",
        cfg.max_iter
    )))
}

/// 𝒟(ρ) = ℐ(ρ) − 𝒞(ρ), clamped at zero against round-off.
pub fn quantum_discord(
    rho: &DensityMatrix,
    side: Side,
    cfg: &OptimizerConfig,
) -> Result<(f64, MeasurementBasis), OptimizerError> {
    let (c, basis) = classical_correlation(rho, side, cfg)?;
    let d = mutual_information(rho) - c;
    Ok((if d < 0.0 && d > -1e-9 { 0.0 } else { d }, basis))
}

/// True when every projective measurement on `side` extracts the same
/// information (within 1e-10), so no optimal direction is singled out.
pub fn measurement_is_isotropic(rho: &DensityMatrix, side: Side, basis: &MeasurementBasis) -> bool {
    let probe = MeasuredInfo::new(&oriented(rho, side));
    let vals = [
        probe.at(basis.theta, basis.phi),
        probe.at(0.0, 0.0),
        probe.at(PI / 2.0, 0.0),
        probe.at(PI / 2.0, PI / 2.0),
        probe.at(1.0, 2.0),
    ];
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    max - min < ISOTROPIC_TOL
}

/// D_A^g = ¼[Σ λ_k² − max λ_k²] from the singular values of ℛ′.
pub fn gmqd_svd(rho: &DensityMatrix) -> (f64, SingularValueList) {
    let rp = reduced_expectation(&expectation_matrix(rho));
    let sv = singular_values(&DMatrix::from_fn(3, 4, |r, c| rp[(r, c)]));
    let value = 0.25 * (sv.sum_squares() - sv.max_square());
    (value.max(0.0), sv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmqdEig {
    pub value: f64,
    /// Top eigenvector of K, first non-negligible component positive.
    pub e_tilde: Vector3<f64>,
    pub k_max: f64,
    /// Top eigenvalue gap of K below 1e-6.
    pub degenerate: bool,
}

/// D_A^g = ¼(‖x‖² + ‖R‖² − k_max) with k_max the top eigenvalue of
/// K = x xᵀ + R Rᵀ.
pub fn gmqd_eig(rho: &DensityMatrix) -> GmqdEig {
    let b = to_bloch(rho);
    let k = b.k_matrix();
    let eig = symmetric_eigensystem(&DMatrix::from_fn(3, 3, |r, c| k[(r, c)])).expect("K is symmetric");
    let v = eig.vector(0);
    // Jacobi rotations on a real symmetric input keep the vectors real
    let e = fix_sign(Vector3::new(v[0].re, v[1].re, v[2].re).normalize());
    let k_max = eig.values[0];
    let value = 0.25 * (b.x.norm_squared() + b.r.norm_squared() - k_max);
    GmqdEig {
        value: value.max(0.0),
        e_tilde: e,
        k_max,
        degenerate: eig.top_gap() < E_TILDE_GAP,
    }
}

fn fix_sign(v: Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(c) if *c < 0.0 => -v,
        _ => v,
    }
}

/// Squared singular values of ℛ′ labelled by Bloch axis: each eigenpair of
/// K is assigned to the coordinate axis its eigenvector lies closest to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisFamilies {
    /// λ_k² for axes k = 1, 2, 3 (stored 0-based).
    pub squares: [f64; 3],
}

impl AxisFamilies {
    pub fn of(rho: &DensityMatrix) -> Self {
        let rp = reduced_expectation(&expectation_matrix(rho));
        let k: Matrix3<f64> = rp * rp.transpose();
        let eig = symmetric_eigensystem(&DMatrix::from_fn(3, 3, |r, c| k[(r, c)])).expect("K is symmetric");
        let weight = |axis: usize, col: usize| eig.vectors[(axis, col)].norm_sqr();
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut best = PERMS[0];
        let mut best_score = f64::NEG_INFINITY;
        for perm in PERMS {
            let score: f64 = (0..3).map(|col| weight(perm[col], col)).sum();
            if score > best_score + 1e-12 {
                best = perm;
                best_score = score;
            }
        }
        let mut squares = [0.0; 3];
        for col in 0..3 {
            squares[best[col]] = eig.values[col].max(0.0);
        }
        AxisFamilies { squares }
    }

    pub fn singular_values(&self) -> [f64; 3] {
        self.squares.map(f64::sqrt)
    }

    /// Axes whose λ² is within 1e-12 of the maximum.
    pub fn top_set(&self) -> Vec<usize> {
        let max = self.squares.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..3).filter(|&k| self.squares[k] >= max - SV_TIE_TOL).map(|k| k + 1).collect()
    }

    /// 1-based axis of the largest λ², smallest index on ties.
    pub fn branch(&self) -> usize {
        self.top_set()[0]
    }

    pub fn degenerate(&self) -> bool {
        self.top_set().len() > 1
    }
}

/// χ = p₁ Π₁⊗ρ₁ + (1 − p₁) Π₂⊗ρ₂ with Π₁ = (1 + e·σ)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDiscordCandidate {
    pub p1: f64,
    pub e: Vector3<f64>,
    pub rho1: C2,
    pub rho2: C2,
}

impl ZeroDiscordCandidate {
    pub fn from_bloch(p1: f64, e: Vector3<f64>, r1: Vector3<f64>, r2: Vector3<f64>) -> Self {
        ZeroDiscordCandidate {
            p1,
            e: e.normalize(),
            rho1: bloch_qubit(1.0, &r1),
            rho2: bloch_qubit(1.0, &r2),
        }
    }

    pub fn assemble(&self) -> C4 {
        let pi1 = bloch_qubit(1.0, &self.e);
        let pi2 = pauli(0) - pi1;
        kron(&pi1, &self.rho1) * Complex64::new(self.p1, 0.0)
            + kron(&pi2, &self.rho2) * Complex64::new(1.0 - self.p1, 0.0)
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::new(self.assemble()).expect("zero-discord candidate is a valid state")
    }
}

fn project_ball(v: Vector3<f64>) -> Vector3<f64> {
    let n = v.norm();
    if n > 1.0 {
        v / n
    } else {
        v
    }
}

fn candidate_from_params(x: &[f64]) -> ZeroDiscordCandidate {
    ZeroDiscordCandidate::from_bloch(
        x[2].clamp(0.0, 1.0),
        direction(x[0], x[1]),
        project_ball(Vector3::new(x[3], x[4], x[5])),
        project_ball(Vector3::new(x[6], x[7], x[8])),
    )
}

/// ‖ρ − χ‖² (Hilbert–Schmidt).
pub fn hs_distance_sq(rho: &C4, chi: &C4) -> f64 {
    (rho - chi).iter().map(|z| z.norm_sqr()).sum()
}

/// Direct minimization of ‖ρ − χ‖² over zero-discord states χ by
/// multi-start Nelder–Mead in the 9 parameters (θ, φ, p₁, r₁, r₂).
pub fn gmqd_bruteforce(
    rho: &DensityMatrix,
    cfg: &OptimizerConfig,
) -> Result<(f64, ZeroDiscordCandidate), OptimizerError> {
    let target = *rho.entries();
    let objective = |x: &[f64]| hs_distance_sq(&target, &candidate_from_params(x).assemble());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let opts = NelderMeadOptions {
        max_iter: cfg.max_iter,
        f_tol: 1e-15,
        x_tol: 1e-8,
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_converged = false;
    for _ in 0..cfg.restarts.max(1) {
        let x0 = random_start(&mut rng);
        let r = nelder_mead(objective, &x0, 0.25, opts);
        any_converged |= r.converged;
        if best.as_ref().is_none_or(|b| r.f < b.0) {
            best = Some((r.f, r.x));
        }
    }
    let (mut f, mut x) = best.expect("at least one restart");
    for step in [0.05, 0.01] {
        let r = nelder_mead(objective, &x, step, opts);
        any_converged |= r.converged;
        if r.f <= f {
            f = r.f;
            x = r.x;
        }
    }
    if !any_converged {
        return Err(OptimizerError::OptimizerFailure(format!(
            "no simplex run converged within {} iterations",
            cfg.max_iter
        )));
    }
    Ok((f.max(0.0), candidate_from_params(&x)))
}

fn random_start(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ball = || {
        let g = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let r: f64 = rng.gen::<f64>().cbrt();
        g.normalize() * r
    };
    let r1 = ball();
    let r2 = ball();
    let u: f64 = rng.gen();
    let theta = (1.0 - 2.0 * u).acos();
    let phi = 2.0 * PI * rng.gen::<f64>();
    let p1: f64 = rng.gen();
    vec![theta, phi, p1, r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]]
}

/// Wootters concurrence max(0, λ₁ − λ₂ − λ₃ − λ₄), λᵢ the descending square
/// roots of the eigenvalues of ρ(σ_y⊗σ_y)ρ*(σ_y⊗σ_y).
///
/// The spectrum is taken from the Hermitian √ρ ρ̃ √ρ, which shares it.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let eig = rho.eigensystem();
    let v = &eig.vectors;
    // Eigenvalues below the rounding floor are zeros; taking their square
    // root would turn 1e-17 noise into 1e-9 errors.
    let floor = |vals: &[f64]| {
        let cut = 16.0 * f64::EPSILON * vals.iter().copied().fold(0.0, f64::max);
        vals.iter().map(move |&l| if l > cut { l.sqrt() } else { 0.0 }).collect::<Vec<f64>>()
    };
    let sqrt_vals = floor(&eig.values);
    let sqrt_rho = C4::from_fn(|r, c| {
        (0..4)
            .map(|k| v[(r, k)] * v[(c, k)].conj() * sqrt_vals[k])
            .sum()
    });
    let yy = kron(&pauli(2), &pauli(2));
    let flipped = yy * rho.entries().map(|z| z.conj()) * yy;
    let m = sqrt_rho * flipped * sqrt_rho;
    let herm = DMatrix::from_fn(4, 4, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    let spec = hermitian_eigensystem(&herm).expect("Hermitian by construction");
    let l = floor(&spec.values);
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// All correlation quantities of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub side: Side,
    pub mutual_info: f64,
    pub classical_corr: f64,
    pub discord: f64,
    pub gmqd: f64,
    pub concurrence: f64,
    pub optimal_theta: f64,
    pub optimal_phi: f64,
    pub e_tilde: [f64; 3],
    pub e_tilde_degenerate: bool,
    pub singular_values: [f64; 3],
    pub k_max: f64,
}

pub fn correlation_report(
    rho: &DensityMatrix,
    side: Side,
    cfg: &OptimizerConfig,
) -> Result<CorrelationReport, OptimizerError> {
    let measured = oriented(rho, side);
    let mutual_info = mutual_information(&measured);
    let (classical_corr, basis) = classical_correlation(&measured, Side::A, cfg)?;
    let mut discord = mutual_info - classical_corr;
    if discord < 0.0 && discord > -1e-9 {
        discord = 0.0;
    }
    let (gmqd, sv) = gmqd_svd(&measured);
    let eig = gmqd_eig(&measured);
    Ok(CorrelationReport {
        side,
        mutual_info,
        classical_corr,
        discord,
        gmqd,
        concurrence: concurrence(rho),
        optimal_theta: basis.theta,
        optimal_phi: basis.phi,
        e_tilde: [eig.e_tilde[0], eig.e_tilde[1], eig.e_tilde[2]],
        e_tilde_degenerate: eig.degenerate,
        singular_values: [sv.values[0], sv.values[1], sv.values[2]],
        k_max: eig.k_max,
    })
}
