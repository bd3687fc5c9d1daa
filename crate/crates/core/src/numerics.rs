//! Small dense kernels: Hermitian eigensystems via cyclic Jacobi, singular
//! values of small real matrices, and von Neumann entropy in bits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::NumericsError;

/// Off-diagonal Frobenius norm at which a Jacobi sweep is considered converged.
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;
/// Hermiticity tolerance accepted on input.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Negative eigenvalues down to this are treated as zero (PSD noise).
pub const PSD_TOL: f64 = 1e-10;

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }

    /// Gap between the largest and second largest eigenvalue.
    pub fn top_gap(&self) -> f64 {
        match self.values.as_slice() {
            [a, b, ..] => a - b,
            _ => f64::INFINITY,
        }
    }
}

/// Singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularValueList {
    pub values: Vec<f64>,
}

impl SingularValueList {
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_square(&self) -> f64 {
        self.values.first().map_or(0.0, |v| v * v)
    }
}

/// Eigen-decomposition of a small Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eigensystem(a: &DMatrix<Complex64>) -> Result<Eigensystem, NumericsError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(NumericsError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let asym = hermiticity_defect(a);
    if asym > HERMITIAN_TOL {
        return Err(NumericsError::NotHermitian { defect: asym });
    }

    let mut m = (a + a.adjoint()).scale(0.5);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale = m.norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigensystem { values, vectors })
}

/// Real symmetric convenience wrapper.
pub fn symmetric_eigensystem(a: &DMatrix<f64>) -> Result<Eigensystem, NumericsError> {
    hermitian_eigensystem(&a.map(|x| Complex64::new(x, 0.0)))
}

fn hermiticity_defect(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn off_diagonal_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi step annihilating entry (p, q): m <- G† m G, v <- v G with
/// G = diag(1, e^{-iα}) · real rotation, α the phase of m[p,q].
fn rotate(m: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }
    let phase = (apq / g).conj();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = phase * (-s);
    let gqq = phase * c;

    let n = m.nrows();
    // columns: m <- m G
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * gpp + mkq * gqp;
        m[(k, q)] = mkp * gpq + mkq * gqq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * gpp + vkq * gqp;
        v[(k, q)] = vkp * gpq + vkq * gqq;
    }
    // rows: m <- G† m
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = gpp.conj() * mpk + gqp.conj() * mqk;
        m[(q, k)] = gpq.conj() * mpk + gqq.conj() * mqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
}

/// Singular values of a small real matrix, as square roots of the eigenvalues
/// of A·Aᵀ. The list has one entry per row of `a`.
pub fn singular_values(a: &DMatrix<f64>) -> SingularValueList {
    let gram = a * a.transpose();
    let eig = symmetric_eigensystem(&gram).expect("A·Aᵀ is symmetric by construction");
    let values = eig
        .values
        .iter()
        .map(|&l| if l < 0.0 { 0.0 } else { l.sqrt() })
        .collect();
    SingularValueList { values }
}

/// Shannon entropy in bits of a spectrum; tiny negatives are clamped to 0.
pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&l| if l < PSD_TOL { 0.0 } else { l })
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// von Neumann entropy −Tr ρ log₂ ρ of a 2×2 or 4×4 density matrix.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64, NumericsError> {
    let eig = hermitian_eigensystem(rho)?;
    Ok(spectrum_entropy(&eig.values))
}

/// Eigenvalues (descending) of a 2×2 Hermitian matrix in closed form.
pub fn hermitian2_eigenvalues(a: f64, d: f64, b: Complex64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + half, mean - half]
}

/// Entropy in bits of a 2×2 Hermitian PSD matrix given by its entries.
pub fn qubit_entropy(a: f64, d: f64, b: Complex64) -> f64 {
    spectrum_entropy(&hermitian2_eigenvalues(a, d, b))
}
