//! Two-qubit states in three interchangeable forms: the density matrix, the
//! Bloch form (x, y, R) and the 4×4 Pauli expectation matrix.
//!
//! Basis ordering is |a b⟩ ↦ index 2a + b with qubit A first, and
//! σ₃|0⟩ = |0⟩.

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix3x4, Matrix4, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::StateError;
use crate::numerics::{hermitian_eigensystem, Eigensystem, PSD_TOL};

pub type C2 = Matrix2<Complex64>;
pub type C4 = Matrix4<Complex64>;

/// Tolerance for Hermiticity and unit trace of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// σ₀ = 1, σ₁ = X, σ₂ = Y, σ₃ = Z.
pub fn pauli(i: usize) -> C2 {
    match i {
        0 => C2::new(ONE, ZERO, ZERO, ONE),
        1 => C2::new(ZERO, ONE, ONE, ZERO),
        2 => C2::new(ZERO, -I, I, ZERO),
        3 => C2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {i} out of range"),
    }
}

pub fn kron(a: &C2, b: &C2) -> C4 {
    C4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Qubit operator (1 + n·σ)/2 scaled by `weight`.
pub fn bloch_qubit(weight: f64, n: &Vector3<f64>) -> C2 {
    let mut m = pauli(0);
    for i in 0..3 {
        m += pauli(i + 1) * Complex64::new(n[i], 0.0);
    }
    m * Complex64::new(0.5 * weight, 0.0)
}

fn pauli_pair(i: usize, j: usize) -> C4 {
    kron(&pauli(i), &pauli(j))
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: C4,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: C4) -> Result<Self, StateError> {
        let defect = (entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > STATE_TOL {
            return Err(StateError::NotHermitian { defect });
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(StateError::BadTrace { trace: trace.re });
        }
        let sym = (entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
        let state = DensityMatrix { entries: sym };
        let min = state.eigensystem().values[3];
        if min < -PSD_TOL {
            return Err(StateError::NotPhysical { min_eigenvalue: min });
        }
        Ok(state)
    }

    /// Wraps a matrix produced by a trace-preserving positive map; only the
    /// Hermitian part is kept.
    pub(crate) fn from_cptp_output(entries: C4) -> Self {
        let sym = (entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
        DensityMatrix { entries: sym }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            entries: C4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// Projector onto a normalized pure state given by 4 amplitudes.
    pub fn pure(amplitudes: [Complex64; 4]) -> Result<Self, StateError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StateError::Invalid("zero state vector".into()));
        }
        let v: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        DensityMatrix::new(C4::from_fn(|r, c| v[r] * v[c].conj()))
    }

    pub fn product(a: &C2, b: &C2) -> Result<Self, StateError> {
        DensityMatrix::new(kron(a, b))
    }

    pub fn entries(&self) -> &C4 {
        &self.entries
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(4, 4, |r, c| self.entries[(r, c)])
    }

    pub fn eigensystem(&self) -> Eigensystem {
        hermitian_eigensystem(&self.to_dmatrix()).expect("density matrix is Hermitian")
    }

    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }

    pub fn reduced_a(&self) -> C2 {
        let m = &self.entries;
        C2::from_fn(|a, ap| m[(2 * a, 2 * ap)] + m[(2 * a + 1, 2 * ap + 1)])
    }

    pub fn reduced_b(&self) -> C2 {
        let m = &self.entries;
        C2::from_fn(|b, bp| m[(b, bp)] + m[(2 + b, 2 + bp)])
    }

    /// Exchanges the roles of qubits A and B.
    pub fn swapped(&self) -> Self {
        let perm = |i: usize| (i % 2) * 2 + i / 2;
        DensityMatrix {
            entries: C4::from_fn(|r, c| self.entries[(perm(r), perm(c))]),
        }
    }

    /// Tr[ρ O].
    pub fn expect(&self, op: &C4) -> Complex64 {
        (self.entries * op).trace()
    }

    /// Random full-rank state: A·A† / Tr for A with i.i.d. standard complex
    /// Gaussian entries.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a = C4::from_fn(|_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = a * a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::from_cptp_output(m / Complex64::new(tr, 0.0))
    }
}

/// Local Bloch vectors and correlation tensor:
/// ρ = ¼[1⊗1 + Σ xᵢσᵢ⊗1 + Σ yᵢ1⊗σᵢ + Σ Rᵢⱼσᵢ⊗σⱼ].
#[derive(Debug, Clone, PartialEq)]
pub struct BlochForm {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub r: Matrix3<f64>,
}

impl BlochForm {
    pub fn zero() -> Self {
        BlochForm {
            x: Vector3::zeros(),
            y: Vector3::zeros(),
            r: Matrix3::zeros(),
        }
    }

    /// K = x xᵀ + R Rᵀ.
    pub fn k_matrix(&self) -> Matrix3<f64> {
        self.x * self.x.transpose() + self.r * self.r.transpose()
    }
}

/// ℛᵢⱼ = Tr[ρ σᵢ⊗σⱼ], i, j = 0..3.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationMatrix {
    pub entries: Matrix4<f64>,
}

impl ExpectationMatrix {
    pub fn from_bloch(b: &BlochForm) -> Self {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 1.0;
        for i in 0..3 {
            m[(0, i + 1)] = b.y[i];
            m[(i + 1, 0)] = b.x[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] = b.r[(i, j)];
            }
        }
        ExpectationMatrix { entries: m }
    }

    pub fn to_bloch(&self) -> BlochForm {
        let m = &self.entries;
        BlochForm {
            x: Vector3::new(m[(1, 0)], m[(2, 0)], m[(3, 0)]),
            y: Vector3::new(m[(0, 1)], m[(0, 2)], m[(0, 3)]),
            r: m.fixed_view::<3, 3>(1, 1).into_owned(),
        }
    }

    /// ρ = ¼ Σ ℛᵢⱼ σᵢ⊗σⱼ, validated.
    pub fn to_density(&self) -> Result<DensityMatrix, StateError> {
        let mut rho = C4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let w = self.entries[(i, j)];
                if w != 0.0 {
                    rho += pauli_pair(i, j) * Complex64::new(0.25 * w, 0.0);
                }
            }
        }
        DensityMatrix::new(rho)
    }
}

/// Parameters of ¼(1⊗1 + Σ cᵢσᵢ⊗σᵢ + d σ₃⊗1 + d 1⊗σ₃).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalParams {
    pub c: [f64; 3],
    #[serde(default)]
    pub d: f64,
}

pub fn bell_diagonal(c: [f64; 3], d: f64) -> Result<DensityMatrix, StateError> {
    let mut b = BlochForm::zero();
    b.x[2] = d;
    b.y[2] = d;
    for (i, ci) in c.iter().enumerate() {
        b.r[(i, i)] = *ci;
    }
    from_bloch(&b)
}

/// Membership in the tetrahedron with vertices (−1,−1,−1), (−1,1,1),
/// (1,−1,1), (1,1,−1).
pub fn is_physical_bell_diagonal(c: [f64; 3]) -> bool {
    // Same slack as the eigenvalue check, scaled by the 1/4 in the weights.
    let slack = 4.0 * PSD_TOL;
    let inside = |v: f64| (-3.0 - slack..=1.0 + slack).contains(&v);
    let [c1, c2, c3] = c;
    inside(c1 + c2 + c3) && inside(c1 - c2 - c3) && inside(c2 - c1 - c3) && inside(c3 - c1 - c2)
}

pub fn to_bloch(rho: &DensityMatrix) -> BlochForm {
    expectation_matrix(rho).to_bloch()
}

pub fn from_bloch(b: &BlochForm) -> Result<DensityMatrix, StateError> {
    ExpectationMatrix::from_bloch(b).to_density()
}

pub fn expectation_matrix(rho: &DensityMatrix) -> ExpectationMatrix {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = rho.expect(&pauli_pair(i, j)).re;
        }
    }
    m[(0, 0)] = 1.0;
    ExpectationMatrix { entries: m }
}

/// ℛ′ = (x, R): ℛ without its first row.
pub fn reduced_expectation(r: &ExpectationMatrix) -> Matrix3x4<f64> {
    r.entries.fixed_view::<3, 4>(1, 0).into_owned()
}

/// Serialized state description accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum StateSpec {
    BellDiagonal {
        c: [f64; 3],
        #[serde(default)]
        d: f64,
    },
    Matrix {
        re: [[f64; 4]; 4],
        im: [[f64; 4]; 4],
    },
}

impl StateSpec {
    pub fn build(&self) -> Result<DensityMatrix, StateError> {
        match self {
            StateSpec::BellDiagonal { c, d } => bell_diagonal(*c, *d),
            StateSpec::Matrix { re, im } => {
                DensityMatrix::new(C4::from_fn(|r, c| Complex64::new(re[r][c], im[r][c])))
            }
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let e = rho.entries();
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = e[(r, c)].re;
                im[r][c] = e[(r, c)].im;
            }
        }
        StateSpec::Matrix { re, im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maximally_mixed_from_zero_correlations() {
        let rho = bell_diagonal([0.0; 3], 0.0).unwrap();
        assert!((rho.entries() - DensityMatrix::maximally_mixed().entries()).norm() < 1e-15);
        let b = to_bloch(&rho);
        assert_eq!(b.x.norm() + b.y.norm() + b.r.norm(), 0.0);
        let e = expectation_matrix(&rho);
        assert_eq!(e.entries, Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0)));
        assert_eq!(reduced_expectation(&e), Matrix3x4::zeros());
    }

    #[test]
    fn singlet_is_pure() {
        let rho = bell_diagonal([-1.0; 3], 0.0).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
        // singlet (|01⟩ − |10⟩)/√2
        assert_abs_diff_eq!(rho.entries()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.entries()[(1, 2)].re, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn polarized_example_state() {
        let rho = bell_diagonal([0.5, 0.0, 0.5], -0.5).unwrap();
        let b = to_bloch(&rho);
        assert_abs_diff_eq!(b.x, Vector3::new(0.0, 0.0, -0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(b.y, Vector3::new(0.0, 0.0, -0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(b.r, Matrix3::from_diagonal(&Vector3::new(0.5, 0.0, 0.5)), epsilon = 1e-15);
    }

    #[test]
    fn outside_tetrahedron_is_rejected() {
        let err = bell_diagonal([1.0, 1.0, 1.0], 0.0).unwrap_err();
        match err {
            StateError::NotPhysical { min_eigenvalue } => assert!(min_eigenvalue < -0.4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tetrahedron_predicate() {
        assert!(is_physical_bell_diagonal([-1.0, -1.0, -1.0]));
        assert!(!is_physical_bell_diagonal([1.0, 1.0, 1.0]));
        assert!(is_physical_bell_diagonal([1.0, -0.6, 0.6]));
    }

    #[test]
    fn from_bloch_examples() {
        let mut b = BlochForm::zero();
        b.r = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        let rho = from_bloch(&b).unwrap();
        let bd = bell_diagonal([1.0, -1.0, 1.0], 0.0).unwrap();
        assert!((rho.entries() - bd.entries()).norm() < 1e-15);

        let mut bad = BlochForm::zero();
        bad.x[0] = 2.0;
        assert!(matches!(from_bloch(&bad), Err(StateError::NotPhysical { .. })));
    }

    #[test]
    fn bell_diagonal_expectation_is_diagonal() {
        let rho = bell_diagonal([1.0, -0.6, 0.6], 0.0).unwrap();
        let e = expectation_matrix(&rho);
        let want = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -0.6, 0.6));
        assert!((e.entries - want).norm() < 1e-15);
        let rp = reduced_expectation(&e);
        assert_eq!(rp.column(0).norm(), 0.0);
    }

    #[test]
    fn validation_errors() {
        let mut m = C4::identity() * Complex64::new(0.25, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(StateError::NotHermitian { .. })));
        let m = C4::identity() * Complex64::new(0.3, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(StateError::BadTrace { .. })));
    }

    #[test]
    fn reduced_states_and_swap() {
        let a = bloch_qubit(1.0, &Vector3::new(0.0, 0.0, 1.0));
        let b = bloch_qubit(1.0, &Vector3::new(1.0, 0.0, 0.0));
        let rho = DensityMatrix::product(&a, &b).unwrap();
        assert!((rho.reduced_a() - a).norm() < 1e-15);
        assert!((rho.reduced_b() - b).norm() < 1e-15);
        let sw = rho.swapped();
        assert!((sw.reduced_a() - b).norm() < 1e-15);
        assert!((sw.reduced_b() - a).norm() < 1e-15);
    }

    #[test]
    fn random_states_are_valid_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let rho = DensityMatrix::random(&mut rng);
            DensityMatrix::new(*rho.entries()).unwrap();
            let b = to_bloch(&rho);
            let back = from_bloch(&b).unwrap();
            assert!((back.entries() - rho.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
            let e = expectation_matrix(&rho);
            let back2 = e.to_bloch();
            assert!((back2.r - b.r).abs().max() < 1e-12);
            let rp = reduced_expectation(&e);
            let k = rp * rp.transpose();
            assert!((k - b.k_matrix()).abs().max() < 1e-12);
            for v in b.x.iter().chain(b.y.iter()).chain(b.r.iter()) {
                assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn psd_check_agrees_with_tetrahedron_on_grid() {
        let n = 21;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let g = |t: usize| -1.0 + 2.0 * t as f64 / (n - 1) as f64;
                    let c = [g(i), g(j), g(k)];
                    assert_eq!(
                        bell_diagonal(c, 0.0).is_ok(),
                        is_physical_bell_diagonal(c),
                        "disagreement at {c:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn state_spec_json() {
        let spec: StateSpec = serde_json::from_str(r#"{"type":"bell_diagonal","c":[1,-0.6,0.6],"d":0.0}"#).unwrap();
        assert_eq!(spec, StateSpec::BellDiagonal { c: [1.0, -0.6, 0.6], d: 0.0 });
        let rho = spec.build().unwrap();
        let back: StateSpec = serde_json::from_str(&serde_json::to_string(&StateSpec::from_density(&rho)).unwrap()).unwrap();
        assert_eq!(back.build().unwrap(), rho);
    }
}
