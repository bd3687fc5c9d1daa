//! Single-qubit decoherence channels in the Kraus (Schrödinger) picture and
//! as Heisenberg-picture transmission matrices acting on the expectation
//! matrix.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ChannelError;
use crate::states::{kron, pauli, DensityMatrix, ExpectationMatrix, C2, C4};

/// Completeness tolerance for built-in channels.
pub const BUILTIN_COMPLETENESS_TOL: f64 = 1e-12;
/// Completeness tolerance for user-supplied Kraus sets.
pub const CUSTOM_COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Adc,
    Pdc,
    Dpc,
}

impl ChannelKind {
    pub fn build(self, p: f64) -> Result<KrausChannel, ChannelError> {
        match self {
            ChannelKind::Adc => adc(p),
            ChannelKind::Pdc => pdc(p),
            ChannelKind::Dpc => dpc(p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Adc => "adc",
            ChannelKind::Pdc => "pdc",
            ChannelKind::Dpc => "dpc",
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adc" => Ok(ChannelKind::Adc),
            "pdc" => Ok(ChannelKind::Pdc),
            "dpc" => Ok(ChannelKind::Dpc),
            other => Err(ChannelError::Unknown(other.to_string())),
        }
    }
}

/// A completely positive trace-preserving qubit map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<C2>,
    /// Channel strength for the built-in families; `None` for custom sets.
    p: Option<f64>,
}

impl KrausChannel {
    /// Accepts a custom Kraus set if Σ K†K = 1 within 1e-10.
    pub fn custom(operators: Vec<C2>) -> Result<Self, ChannelError> {
        Self::checked(operators, None, CUSTOM_COMPLETENESS_TOL)
    }

    fn checked(operators: Vec<C2>, p: Option<f64>, tol: f64) -> Result<Self, ChannelError> {
        if operators.is_empty() {
            return Err(ChannelError::Empty);
        }
        let ch = KrausChannel { operators, p };
        let defect = ch.completeness_defect();
        if defect > tol {
            return Err(ChannelError::Incomplete { defect });
        }
        Ok(ch)
    }

    pub fn identity() -> Self {
        KrausChannel {
            operators: vec![pauli(0)],
            p: None,
        }
    }

    pub fn operators(&self) -> &[C2] {
        &self.operators
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn s(&self) -> Option<f64> {
        self.p.map(|p| 1.0 - p)
    }

    /// max |Σ K†K − 1|.
    pub fn completeness_defect(&self) -> f64 {
        let sum: C2 = self.operators.iter().map(|k| k.adjoint() * k).sum();
        (sum - pauli(0)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ℰ(ρ) = Σ K ρ K† on a single qubit.
    pub fn apply(&self, rho: &C2) -> C2 {
        self.operators.iter().map(|k| k * rho * k.adjoint()).sum()
    }

    /// ℰ†(A) = Σ K† A K.
    pub fn adjoint_apply(&self, a: &C2) -> C2 {
        self.operators.iter().map(|k| k.adjoint() * a * k).sum()
    }

    /// Sequential composition: `then` applied after `self`.
    pub fn compose(&self, then: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.operators.len() * then.operators.len());
        for b in &then.operators {
            for a in &self.operators {
                ops.push(b * a);
            }
        }
        KrausChannel { operators: ops, p: None }
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_p(p: f64) -> Result<f64, ChannelError> {
    if (0.0..=1.0).contains(&p) {
        Ok(1.0 - p)
    } else {
        Err(ChannelError::DomainError(p))
    }
}

fn builtin(operators: Vec<C2>, p: f64) -> Result<KrausChannel, ChannelError> {
    KrausChannel::checked(operators, Some(p), BUILTIN_COMPLETENESS_TOL)
}

/// Amplitude damping: {√s|0⟩⟨0| + |1⟩⟨1|, √p|1⟩⟨0|}.
pub fn adc(p: f64) -> Result<KrausChannel, ChannelError> {
    let s = check_p(p)?;
    let z = real(0.0);
    let k0 = C2::new(real(s.sqrt()), z, z, real(1.0));
    let k1 = C2::new(z, z, real(p.sqrt()), z);
    builtin(vec![k0, k1], p)
}

/// Phase damping: {√s 1, √p|0⟩⟨0|, √p|1⟩⟨1|}.
pub fn pdc(p: f64) -> Result<KrausChannel, ChannelError> {
    let s = check_p(p)?;
    let z = real(0.0);
    let sp = real(p.sqrt());
    builtin(
        vec![
            pauli(0) * real(s.sqrt()),
            C2::new(sp, z, z, z),
            C2::new(z, z, z, sp),
        ],
        p,
    )
}

/// Depolarizing: {½√(1+3s) 1, ½√p σ_x, ½√p σ_y, ½√p σ_z}.
pub fn dpc(p: f64) -> Result<KrausChannel, ChannelError> {
    let s = check_p(p)?;
    let w = real(0.5 * p.sqrt());
    builtin(
        vec![
            pauli(0) * real(0.5 * (1.0 + 3.0 * s).sqrt()),
            pauli(1) * w,
            pauli(2) * w,
            pauli(3) * w,
        ],
        p,
    )
}

/// Heisenberg-picture matrix with ℰ†(σᵢ) = Σⱼ Mᵢⱼ σⱼ.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMatrix {
    pub m: Matrix4<f64>,
}

impl TransmissionMatrix {
    pub fn identity() -> Self {
        TransmissionMatrix { m: Matrix4::identity() }
    }

    /// Transmission matrix of `then ∘ first`.
    pub fn then(&self, first: &TransmissionMatrix) -> TransmissionMatrix {
        // ℰ₂∘ℰ₁ has adjoint ℰ₁†∘ℰ₂†, so M = M₂ M₁ in row convention
        TransmissionMatrix { m: self.m * first.m }
    }
}

/// Mᵢⱼ = ½ Tr[ℰ†(σᵢ) σⱼ].
pub fn transmission_matrix(ch: &KrausChannel) -> TransmissionMatrix {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        let heis = ch.adjoint_apply(&pauli(i));
        for j in 0..4 {
            m[(i, j)] = 0.5 * (heis * pauli(j)).trace().re;
        }
    }
    TransmissionMatrix { m }
}

/// [ℰ_A ⊗ ℰ_B](ρ) = Σ (K_μ⊗K_ν) ρ (K_μ⊗K_ν)†.
pub fn apply_local(ch_a: &KrausChannel, ch_b: &KrausChannel, rho: &DensityMatrix) -> DensityMatrix {
    let mut out = C4::zeros();
    for ka in ch_a.operators() {
        for kb in ch_b.operators() {
            let k = kron(ka, kb);
            out += k * rho.entries() * k.adjoint();
        }
    }
    DensityMatrix::from_cptp_output(out)
}

/// ℛ = M_A ℛ₀ M_Bᵀ.
pub fn evolve_expectation(
    ma: &TransmissionMatrix,
    r0: &ExpectationMatrix,
    mb: &TransmissionMatrix,
) -> ExpectationMatrix {
    ExpectationMatrix {
        entries: ma.m * r0.entries * mb.m.transpose(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausJson {
    pub re: [[f64; 2]; 2],
    pub im: [[f64; 2]; 2],
}

/// Serialized channel description accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ChannelSpec {
    Adc { p: f64 },
    Pdc { p: f64 },
    Dpc { p: f64 },
    Custom { kraus: Vec<KrausJson> },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel, ChannelError> {
        match self {
            ChannelSpec::Adc { p } => adc(*p),
            ChannelSpec::Pdc { p } => pdc(*p),
            ChannelSpec::Dpc { p } => dpc(*p),
            ChannelSpec::Custom { kraus } => KrausChannel::custom(
                kraus
                    .iter()
                    .map(|k| C2::from_fn(|r, c| Complex64::new(k.re[r][c], k.im[r][c])))
                    .collect(),
            ),
        }
    }
}
