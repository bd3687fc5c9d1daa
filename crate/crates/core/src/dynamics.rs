//! Parameter sweeps along a channel family and detection of sudden changes
//! in the decay of the correlation quantities.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_local, ChannelKind};
use crate::correlations::{
    classical_correlation, concurrence, gmqd_eig, gmqd_svd, measured_mutual_information,
    measurement_is_isotropic, mutual_information, AxisFamilies, MeasurementBasis, OptimizerConfig, Side,
    SV_TIE_TOL,
};
use crate::error::DynamicsError;
use crate::states::{DensityMatrix, StateSpec};

pub const DEFAULT_STEPS: usize = 201;
pub const DEFAULT_KINK_THRESHOLD: f64 = 10.0;
pub const DEFAULT_ANGLE_TOL: f64 = 0.2;

/// Top λ² of two or more axis families tie.
pub const FLAG_SV_TIE: u8 = 1;
/// Top eigenvalue of K is degenerate, so ẽ is not unique.
pub const FLAG_E_TILDE: u8 = 2;
/// Every measurement direction is optimal, so θ is arbitrary.
pub const FLAG_ISOTROPIC: u8 = 4;

pub const CSV_HEADER: &str = "p,gmqd,discord,concurrence,sv1,sv2,sv3,branch,theta,phi,e1,e2,e3,degenerate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quantities {
    pub gmqd: bool,
    pub discord: bool,
    pub concurrence: bool,
    pub branches: bool,
    pub angles: bool,
}

impl Default for Quantities {
    fn default() -> Self {
        Quantities {
            gmqd: true,
            discord: true,
            concurrence: true,
            branches: true,
            angles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub state: StateSpec,
    pub channel: ChannelKind,
    #[serde(default)]
    pub side: Side,
    pub p_start: f64,
    pub p_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub quantities: Quantities,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_threshold")]
    pub kink_threshold: f64,
    #[serde(default = "default_angle_tol")]
    pub angle_tol: f64,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_threshold() -> f64 {
    DEFAULT_KINK_THRESHOLD
}

fn default_angle_tol() -> f64 {
    DEFAULT_ANGLE_TOL
}

impl SweepConfig {
    /// Full [0, 1] sweep with default grid, thresholds and optimizer.
    pub fn new(state: StateSpec, channel: ChannelKind) -> Self {
        SweepConfig {
            state,
            channel,
            side: Side::A,
            p_start: 0.0,
            p_end: 1.0,
            steps: DEFAULT_STEPS,
            quantities: Quantities::default(),
            optimizer: OptimizerConfig::default(),
            kink_threshold: DEFAULT_KINK_THRESHOLD,
            angle_tol: DEFAULT_ANGLE_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.p_start) || !unit.contains(&self.p_end) {
            return Err(DynamicsError::InvalidConfig(format!(
                "p range [{}, {}] must lie in [0, 1]",
                self.p_start, self.p_end
            )));
        }
        if self.p_start >= self.p_end {
            return Err(DynamicsError::InvalidConfig("p_start must be below p_end".into()));
        }
        if self.steps < 3 {
            return Err(DynamicsError::InvalidConfig("steps must be at least 3".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = (self.p_end - self.p_start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.p_end
                } else {
                    self.p_start + i as f64 * h
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.p_end - self.p_start) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub gmqd: f64,
    pub discord: f64,
    pub concurrence: f64,
    /// Singular values of ℛ′ labelled by Bloch axis.
    pub sv: [f64; 3],
    /// 1-based axis of the largest singular value (0 when not computed).
    pub branch: usize,
    pub theta: f64,
    pub phi: f64,
    pub e_tilde: [f64; 3],
    /// Bit set of `FLAG_*`.
    pub flags: u8,
}

impl SweepRow {
    pub fn has(&self, flag: u8) -> bool {
        self.flags & flag != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KinkKind {
    BranchSwitch,
    AngleJump,
    SecondDifference,
}

impl fmt::Display for KinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KinkKind::BranchSwitch => "branch-switch",
            KinkKind::AngleJump => "angle-jump",
            KinkKind::SecondDifference => "second-difference",
        })
    }
}

impl std::str::FromStr for KinkKind {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "branch-switch" => Ok(KinkKind::BranchSwitch),
            "angle-jump" => Ok(KinkKind::AngleJump),
            "second-difference" => Ok(KinkKind::SecondDifference),
            other => Err(DynamicsError::Csv(format!("unknown kink kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    pub quantity: String,
    pub p_kink: f64,
    pub kind: KinkKind,
    pub magnitude: f64,
}

struct RawRow {
    row: SweepRow,
    measured: DensityMatrix,
}

fn fold_basis(b: MeasurementBasis) -> MeasurementBasis {
    if b.theta > FRAC_PI_2 {
        b.flipped()
    } else {
        b
    }
}

fn compute_row(cfg: &SweepConfig, rho0: &DensityMatrix, p: f64) -> Result<RawRow, DynamicsError> {
    let ch = cfg.channel.build(p)?;
    let rho = apply_local(&ch, &ch, rho0);
    let measured = match cfg.side {
        Side::A => rho.clone(),
        Side::B => rho.swapped(),
    };
    let q = cfg.quantities;
    let nan = f64::NAN;
    let mut row = SweepRow {
        p,
        gmqd: nan,
        discord: nan,
        concurrence: nan,
        sv: [nan; 3],
        branch: 0,
        theta: nan,
        phi: nan,
        e_tilde: [nan; 3],
        flags: 0,
    };
    if q.gmqd {
        row.gmqd = gmqd_svd(&measured).0;
        let eig = gmqd_eig(&measured);
        row.e_tilde = [eig.e_tilde[0], eig.e_tilde[1], eig.e_tilde[2]];
        if eig.degenerate {
            row.flags |= FLAG_E_TILDE;
        }
    }
    if q.branches {
        let fam = AxisFamilies::of(&measured);
        row.sv = fam.singular_values();
        row.branch = fam.branch();
        if fam.degenerate() {
            row.flags |= FLAG_SV_TIE;
        }
    }
    if q.concurrence {
        row.concurrence = concurrence(&rho);
    }
    if q.discord || q.angles {
        let (c, basis) = classical_correlation(&measured, Side::A, &cfg.optimizer)
            .map_err(|source| DynamicsError::Optimizer { p, source })?;
        if q.discord {
            let d = mutual_information(&measured) - c;
            row.discord = if d < 0.0 && d > -1e-9 { 0.0 } else { d };
        }
        if q.angles {
            let basis = fold_basis(basis);
            row.theta = basis.theta;
            row.phi = basis.phi;
            if measurement_is_isotropic(&measured, Side::A, &basis) {
                row.flags |= FLAG_ISOTROPIC;
            }
        }
    }
    Ok(RawRow { row, measured })
}

/// Evaluates every grid point of the sweep. Rows are computed in parallel;
/// the φ continuity pass runs sequentially afterwards, so the output only
/// depends on the config.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, DynamicsError> {
    cfg.validate()?;
    let rho0 = cfg.state.build()?;
    let raw: Vec<RawRow> = cfg
        .grid()
        .into_par_iter()
        .map(|p| compute_row(cfg, &rho0, p))
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let mut row = r.row.clone();
        if i > 0 && cfg.quantities.angles && !row.has(FLAG_ISOTROPIC) {
            let prev_phi = rows[i - 1].phi;
            if row.theta.sin().abs() < 1e-9 {
                row.phi = prev_phi;
            } else {
                let at = |phi: f64| {
                    measured_mutual_information(&r.measured, &MeasurementBasis::new(row.theta, phi), Side::A)
                };
                if at(prev_phi) >= at(row.phi) - 1e-12 {
                    row.phi = prev_phi;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn uniform_step(ps: &[f64]) -> Result<f64, DynamicsError> {
    let h = ps[1] - ps[0];
    if h <= 0.0 {
        return Err(DynamicsError::NonUniformGrid);
    }
    for w in ps.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(DynamicsError::NonUniformGrid);
        }
    }
    Ok(h)
}

/// Second-difference kink detector.
///
/// D_i = |v_{i+1} − 2v_i + v_{i−1}| / (h² · max|slope|) is large where the
/// slope jumps. A point is flagged when D_i exceeds `threshold` and is a
/// local spike: more than twice D two grid steps away on either side. Flags
/// therefore need two neighbours on each side, which rejects the
/// logarithmic curvature of entropies next to pure or rank-deficient
/// endpoints. Adjacent flags merge into one report at the largest D.
/// Series containing non-finite values yield no reports.
pub fn detect_kinks(quantity: &str, series: &[(f64, f64)], threshold: f64) -> Result<Vec<KinkReport>, DynamicsError> {
    let n = series.len();
    if n < 5 {
        return Err(DynamicsError::GridTooCoarse(n));
    }
    let ps: Vec<f64> = series.iter().map(|s| s.0).collect();
    let h = uniform_step(&ps)?;
    if series.iter().any(|s| !s.1.is_finite()) {
        return Ok(Vec::new());
    }
    let v: Vec<f64> = series.iter().map(|s| s.1).collect();
    let scale = v.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                (v[i + 1] - 2.0 * v[i] + v[i - 1]).abs() / (h * h * scale)
            }
        })
        .collect();

    let flagged: Vec<usize> = (3..n.saturating_sub(3))
        .filter(|&i| d[i] > threshold && d[i] > 2.0 * d[i - 2].max(d[i + 2]))
        .collect();

    let mut reports = Vec::new();
    let mut k = 0;
    while k < flagged.len() {
        let mut end = k;
        while end + 1 < flagged.len() && flagged[end + 1] == flagged[end] + 1 {
            end += 1;
        }
        let peak = flagged[k..=end]
            .iter()
            .copied()
            .max_by(|&a, &b| d[a].total_cmp(&d[b]))
            .unwrap();
        reports.push(KinkReport {
            quantity: quantity.to_string(),
            p_kink: ps[peak],
            kind: KinkKind::SecondDifference,
            magnitude: d[peak],
        });
        k = end + 1;
    }
    Ok(reports)
}

fn top_set(row: &SweepRow) -> Vec<usize> {
    let sq = row.sv.map(|s| s * s);
    let max = sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..3).filter(|&k| sq[k] >= max - SV_TIE_TOL).map(|k| k + 1).collect()
}

/// Reports where the axis family carrying the largest singular value of ℛ′
/// changes.
///
/// Each row contributes the set of axes tied for the maximum. A row whose set
/// strictly contains the current one marks a crossing that fell on the grid
/// and is not compared itself; a switch is a later row whose set is disjoint
/// from the current one. The switch sits at the crossing row if one was
/// seen, else midway between the two rows.
pub fn detect_branch_switch(rows: &[SweepRow]) -> Vec<KinkReport> {
    let mut reports = Vec::new();
    let usable: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].sv.iter().all(|s| s.is_finite())).collect();
    let Some(&first) = usable.first() else {
        return reports;
    };
    let mut current = top_set(&rows[first]);
    let mut current_idx = first;
    let mut crossing: Option<usize> = None;
    for &i in &usable[1..] {
        let set = top_set(&rows[i]);
        let disjoint = set.iter().all(|k| !current.contains(k));
        let widened = set.len() > current.len() && current.iter().all(|k| set.contains(k));
        if widened {
            crossing.get_or_insert(i);
            continue;
        }
        if disjoint {
            let p_kink = match crossing {
                Some(c) => rows[c].p,
                None => 0.5 * (rows[current_idx].p + rows[i].p),
            };
            reports.push(KinkReport {
                quantity: "gmqd".into(),
                p_kink,
                kind: KinkKind::BranchSwitch,
                magnitude: slope_jump(rows, current_idx, i),
            });
        }
        current = set;
        current_idx = i;
        crossing = None;
    }
    reports
}

/// |slope after − slope before| of the geometric discord around a switch
/// between rows `a` and `b`; 0 where a one-sided slope is unavailable.
fn slope_jump(rows: &[SweepRow], a: usize, b: usize) -> f64 {
    if a == 0 || b + 1 >= rows.len() {
        return 0.0;
    }
    let before = (rows[a].gmqd - rows[a - 1].gmqd) / (rows[a].p - rows[a - 1].p);
    let after = (rows[b + 1].gmqd - rows[b].gmqd) / (rows[b + 1].p - rows[b].p);
    let jump = (after - before).abs();
    if jump.is_finite() {
        jump
    } else {
        0.0
    }
}

fn folded_theta(t: f64) -> f64 {
    if t > FRAC_PI_2 {
        std::f64::consts::PI - t
    } else {
        t
    }
}

/// Reports jumps of the optimal measurement polar angle larger than
/// `tol_rad` between adjacent usable rows. θ is folded into [0, π/2] since
/// n and −n give the same measurement; rows flagged isotropic are skipped.
pub fn detect_angle_jump(rows: &[SweepRow], tol_rad: f64) -> Vec<KinkReport> {
    let usable: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.theta.is_finite() && !r.has(FLAG_ISOTROPIC))
        .collect();
    usable
        .windows(2)
        .filter_map(|w| {
            let jump = (folded_theta(w[1].theta) - folded_theta(w[0].theta)).abs();
            (jump > tol_rad).then(|| KinkReport {
                quantity: "discord".into(),
                p_kink: 0.5 * (w[0].p + w[1].p),
                kind: KinkKind::AngleJump,
                magnitude: jump,
            })
        })
        .collect()
}

/// All kink reports for a finished sweep: branch switches and second
/// differences of the geometric discord, second differences and angle jumps
/// of the discord. Ordered by quantity, then p.
pub fn analyze(rows: &[SweepRow], threshold: f64, angle_tol: f64) -> Result<Vec<KinkReport>, DynamicsError> {
    let series = |f: fn(&SweepRow) -> f64| rows.iter().map(|r| (r.p, f(r))).collect::<Vec<_>>();
    let mut out = Vec::new();
    out.extend(detect_branch_switch(rows));
    out.extend(detect_kinks("gmqd", &series(|r| r.gmqd), threshold)?);
    out.extend(detect_kinks("discord", &series(|r| r.discord), threshold)?);
    out.extend(detect_angle_jump(rows, angle_tol));
    out.sort_by(|a, b| a.quantity.cmp(&b.quantity).then(a.p_kink.total_cmp(&b.p_kink)));
    Ok(out)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the sweep table and trailing kink comment lines.
pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow], kinks: &[KinkReport]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let floats = |vals: &[f64]| vals.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(",");
        writeln!(
            w,
            "{},{},{},{}",
            floats(&[r.p, r.gmqd, r.discord, r.concurrence, r.sv[0], r.sv[1], r.sv[2]]),
            r.branch,
            floats(&[r.theta, r.phi, r.e_tilde[0], r.e_tilde[1], r.e_tilde[2]]),
            r.flags
        )?;
    }
    for k in kinks {
        writeln!(w, "# kink,{},{},{}", k.quantity, fmt_f(k.p_kink), k.kind)?;
    }
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow], kinks: &[KinkReport]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, kinks).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Parses a sweep CSV written by [`write_csv`]. Kink magnitudes are not
/// stored in the file and come back as NaN.
pub fn parse_csv(text: &str) -> Result<(Vec<SweepRow>, Vec<KinkReport>), DynamicsError> {
    let bad = |msg: String| DynamicsError::Csv(msg);
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let mut rows = Vec::new();
    let mut kinks = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# kink,") {
            let f: Vec<&str> = rest.split(',').collect();
            if f.len() != 3 {
                return Err(bad(format!("kink line {}: {line}", lineno + 2)));
            }
            kinks.push(KinkReport {
                quantity: f[0].to_string(),
                p_kink: f[1].parse().map_err(|e| bad(format!("{e}")))?,
                kind: f[2].parse()?,
                magnitude: f64::NAN,
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(bad(format!("row {} has {} fields", lineno + 2, f.len())));
        }
        let num = |i: usize| -> Result<f64, DynamicsError> {
            f[i].parse::<f64>().map_err(|e| bad(format!("row {} field {}: {e}", lineno + 2, i)))
        };
        let int = |i: usize| -> Result<u64, DynamicsError> {
            f[i].parse::<u64>().map_err(|e| bad(format!("row {} field {}: {e}", lineno + 2, i)))
        };
        rows.push(SweepRow {
            p: num(0)?,
            gmqd: num(1)?,
            discord: num(2)?,
            concurrence: num(3)?,
            sv: [num(4)?, num(5)?, num(6)?],
            branch: int(7)? as usize,
            theta: num(8)?,
            phi: num(9)?,
            e_tilde: [num(10)?, num(11)?, num(12)?],
            flags: int(13)? as u8,
        });
    }
    Ok((rows, kinks))
}
