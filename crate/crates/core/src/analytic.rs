//! Closed-form geometric discord of Bell-diagonal inputs under identical
//! local channels, and the branch pairs of the worked examples.

use serde::Serialize;

/// Two competing branches of a piecewise-smooth geometric discord; the
/// value is their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPair {
    pub d1: f64,
    pub d2: f64,
    /// 1 or 2, whichever is smaller; 1 on ties.
    pub active: u8,
}

impl BranchPair {
    pub fn new(d1: f64, d2: f64) -> Self {
        BranchPair {
            d1,
            d2,
            active: if d1 <= d2 { 1 } else { 2 },
        }
    }

    pub fn value(&self) -> f64 {
        self.d1.min(self.d2)
    }
}

fn quarter_sum_minus_max(terms: [f64; 3]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.25 * (terms.iter().sum::<f64>() - max)
}

/// Amplitude damping on both qubits.
pub fn gmqd_adc(c: [f64; 3], p: f64) -> f64 {
    let s = 1.0 - p;
    let z = p * p + c[2] * s * s;
    quarter_sum_minus_max([(s * c[0]).powi(2), (s * c[1]).powi(2), p * p + z * z])
}

/// Phase damping on both qubits.
pub fn gmqd_pdc(c: [f64; 3], p: f64) -> f64 {
    let s2 = (1.0 - p).powi(2);
    quarter_sum_minus_max([(s2 * c[0]).powi(2), (s2 * c[1]).powi(2), c[2] * c[2]])
}

/// Depolarizing noise on both qubits.
pub fn gmqd_dpc(c: [f64; 3], p: f64) -> f64 {
    let s2 = (1.0 - p).powi(2);
    quarter_sum_minus_max([(s2 * c[0]).powi(2), (s2 * c[1]).powi(2), (s2 * c[2]).powi(2)])
}

/// c = (1, −0.6, 0.6) under phase damping: 17/50·s⁴ against 9/100·(1 + s⁴).
pub fn pdc_example_branches(p: f64) -> BranchPair {
    let s4 = (1.0 - p).powi(4);
    BranchPair::new(17.0 / 50.0 * s4, 9.0 / 100.0 * (1.0 + s4))
}

/// Where the two phase-damping branches cross.
pub fn pdc_example_crossing() -> f64 {
    1.0 - (3.0_f64 / 5.0).sqrt()
}

/// Singlet under amplitude damping: ½(1 − 3p + 3p²) against ½(1 − p)².
pub fn adc_bell_branches(p: f64) -> BranchPair {
    BranchPair::new(0.5 * (1.0 - 3.0 * p + 3.0 * p * p), 0.5 * (1.0 - p).powi(2))
}

/// c = (0.5, 0, 0.5), d = −0.5 under phase damping: (1 − p)⁴/16.
pub fn third_example_gmqd(p: f64) -> f64 {
    (1.0 - p).powi(4) / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adc_singlet_is_branch_minimum() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert_abs_diff_eq!(gmqd_adc([-1.0; 3], p), adc_bell_branches(p).value(), epsilon = 1e-14);
        }
    }

    #[test]
    fn adc_limits() {
        let c = [0.3, -0.5, 0.2];
        assert_abs_diff_eq!(gmqd_adc(c, 0.0), 0.25 * (0.09 + 0.04), epsilon = 1e-15);
        assert_abs_diff_eq!(gmqd_adc(c, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pdc_example_matches_general_formula() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert_abs_diff_eq!(
                gmqd_pdc([1.0, -0.6, 0.6], p),
                pdc_example_branches(p).value(),
                epsilon = 1e-14
            );
        }
        assert_abs_diff_eq!(gmqd_pdc([0.4, 0.2, -0.3], 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gmqd_pdc([0.4, 0.2, -0.3], 0.0), 0.25 * (0.04 + 0.09), epsilon = 1e-15);
    }

    #[test]
    fn dpc_scales_static_value() {
        let c = [0.3, -0.5, 0.2];
        let base = gmqd_dpc(c, 0.0);
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            assert_abs_diff_eq!(gmqd_dpc(c, p), (1.0 - p).powi(4) * base, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(gmqd_dpc([-1.0; 3], 0.5), 1.0 / 32.0, epsilon = 1e-15);
    }

    #[test]
    fn pdc_example_branch_points() {
        let b = pdc_example_branches(0.0);
        assert_abs_diff_eq!(b.d1, 0.34, epsilon = 1e-15);
        assert_abs_diff_eq!(b.d2, 0.18, epsilon = 1e-15);
        assert_eq!(b.active, 2);
        let b = pdc_example_branches(pdc_example_crossing());
        assert_abs_diff_eq!(b.d1, b.d2, epsilon = 1e-12);
        let b = pdc_example_branches(0.8);
        assert_abs_diff_eq!(b.d1, 5.44e-4, epsilon = 1e-15);
        assert_eq!(b.active, 1);
    }

    #[test]
    fn adc_bell_branch_points() {
        let b = adc_bell_branches(0.0);
        assert_eq!((b.d1, b.d2, b.active), (0.5, 0.5, 1));
        let b = adc_bell_branches(0.25);
        assert_abs_diff_eq!(b.d1, 0.21875, epsilon = 1e-15);
        assert_abs_diff_eq!(b.d2, 0.28125, epsilon = 1e-15);
        assert_eq!(b.active, 1);
        let b = adc_bell_branches(0.5);
        assert_abs_diff_eq!(b.d1, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(b.d2, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn third_example_values() {
        assert_eq!(third_example_gmqd(0.0), 0.0625);
        assert_eq!(third_example_gmqd(1.0), 0.0);
        assert_abs_diff_eq!(third_example_gmqd(0.22), 0.78_f64.powi(4) / 16.0, epsilon = 1e-16);
        assert_abs_diff_eq!(third_example_gmqd(0.22), 0.023134, epsilon = 1e-6);
    }
}
