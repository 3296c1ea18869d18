//! Revised NIOSH lifting equation.
//!
//! Computes the six task multipliers, the Recommended Weight Limit
//!
//! ```text
//! RWL = LC x HM x VM x DM x AM x FM x CM
//! ```
//!
//! and the Lifting Index `LI = weight / RWL`, then bands LI into a
//! three-level risk class. HM/VM/DM/AM come from the closed-form expressions
//! of the revised equation; FM and CM are table lookups embedded from the
//! applications manual as versioned CSV data.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FM_TABLE_CSV: &str = include_str!("../data/fm_table.csv");
const CM_TABLE_CSV: &str = include_str!("../data/cm_table.csv");

/// Measurement system; fixes the load constant and the formula coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitSystem {
    /// Centimetres and kilograms, LC = 23 kg.
    Metric,
    /// Inches and pounds, LC = 51 lb.
    UsCustomary,
}

impl UnitSystem {
    /// Load constant: the RWL under ideal geometry.
    pub fn load_constant(self) -> f64 {
        match self {
            UnitSystem::Metric => 23.0,
            UnitSystem::UsCustomary => 51.0,
        }
    }

    /// HM numerator: HM = numerator / H.
    fn hm_numerator(self) -> f64 {
        match self {
            UnitSystem::Metric => 25.0,
            UnitSystem::UsCustomary => 10.0,
        }
    }

    /// Vertical height of the knuckles in standing posture; VM = 1 there.
    fn vertical_anchor(self) -> f64 {
        match self {
            UnitSystem::Metric => 75.0,
            UnitSystem::UsCustomary => 30.0,
        }
    }

    fn vm_coefficient(self) -> f64 {
        match self {
            UnitSystem::Metric => 0.003,
            UnitSystem::UsCustomary => 0.0075,
        }
    }

    fn dm_numerator(self) -> f64 {
        match self {
            UnitSystem::Metric => 4.5,
            UnitSystem::UsCustomary => 1.8,
        }
    }

    /// Horizontal reach beyond which HM = 0.
    fn h_limit(self) -> f64 {
        match self {
            UnitSystem::Metric => 63.0,
            UnitSystem::UsCustomary => 25.0,
        }
    }

    /// Vertical location beyond which VM = 0.
    fn v_limit(self) -> f64 {
        match self {
            UnitSystem::Metric => 175.0,
            UnitSystem::UsCustomary => 70.0,
        }
    }

    /// Travel distance beyond which DM = 0.
    fn d_limit(self) -> f64 {
        match self {
            UnitSystem::Metric => 175.0,
            UnitSystem::UsCustomary => 70.0,
        }
    }

    /// V threshold splitting the FM/CM table columns.
    fn v_low_threshold(self) -> f64 {
        self.vertical_anchor()
    }
}

/// Hand-to-object grip quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    Good,
    Fair,
    Poor,
}

impl Coupling {
    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Good => "good",
            Coupling::Fair => "fair",
            Coupling::Poor => "poor",
        }
    }

    pub fn parse(s: &str) -> Option<Coupling> {
        match s.trim().to_ascii_lowercase().as_str() {
            "good" => Some(Coupling::Good),
            "fair" => Some(Coupling::Fair),
            "poor" => Some(Coupling::Poor),
            _ => None,
        }
    }

    fn table_row(self) -> usize {
        match self {
            Coupling::Good => 0,
            Coupling::Fair => 1,
            Coupling::Poor => 2,
        }
    }
}

/// Daily lifting duration class used by the FM table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationClass {
    UpTo1h,
    UpTo2h,
    UpTo8h,
}

impl DurationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DurationClass::UpTo1h => "1h",
            DurationClass::UpTo2h => "2h",
            DurationClass::UpTo8h => "8h",
        }
    }

    pub fn parse(s: &str) -> Option<DurationClass> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1h" | "up_to_1h" => Some(DurationClass::UpTo1h),
            "2h" | "up_to_2h" => Some(DurationClass::UpTo2h),
            "8h" | "up_to_8h" => Some(DurationClass::UpTo8h),
            _ => None,
        }
    }

    fn table_column(self) -> usize {
        match self {
            DurationClass::UpTo1h => 0,
            DurationClass::UpTo2h => 1,
            DurationClass::UpTo8h => 2,
        }
    }
}

/// One lifting task: load and geometry at a single hand location.
///
/// `h`, `v`, `d` are in inches or centimetres per the unit system, `a` in
/// degrees, `frequency` in lifts per minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftingTask {
    pub weight: f64,
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub a: f64,
    pub coupling: Coupling,
    pub frequency: f64,
    pub duration: DurationClass,
}

impl LiftingTask {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, value: f64, ok: bool| -> Result<()> {
            if !value.is_finite() {
                return Err(Error::InvalidTask(format!("{name} is not finite ({value})")));
            }
            if !ok {
                return Err(Error::InvalidTask(format!("{name} out of range ({value})")));
            }
            Ok(())
        };
        check("weight", self.weight, self.weight >= 0.0)?;
        check("h", self.h, self.h > 0.0)?;
        check("v", self.v, self.v >= 0.0)?;
        check("d", self.d, self.d >= 0.0)?;
        check("a", self.a, self.a >= 0.0)?;
        check("frequency", self.frequency, self.frequency > 0.0)?;
        Ok(())
    }
}

/// The six dimensionless penalty factors, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSet {
    pub hm: f64,
    pub vm: f64,
    pub dm: f64,
    pub am: f64,
    pub fm: f64,
    pub cm: f64,
}

impl MultiplierSet {
    pub fn product(&self) -> f64 {
        self.hm * self.vm * self.dm * self.am * self.fm * self.cm
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.hm, self.vm, self.dm, self.am, self.fm, self.cm]
    }
}

/// Which end of the lift a set of geometry describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftLocation {
    Origin,
    Destination,
}

/// Recommended weight limit together with the multipliers that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwlResult {
    pub rwl: f64,
    pub multipliers: MultiplierSet,
    pub location: LiftLocation,
}

/// Risk class derived from the lifting index. Ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskLabel {
    Nominal,
    Increased,
    High,
}

impl RiskLabel {
    pub const ALL: [RiskLabel; 3] = [RiskLabel::Nominal, RiskLabel::Increased, RiskLabel::High];

    pub fn index(self) -> usize {
        match self {
            RiskLabel::Nominal => 0,
            RiskLabel::Increased => 1,
            RiskLabel::High => 2,
        }
    }

    pub fn from_index(i: usize) -> RiskLabel {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLabel::Nominal => "Nominal",
            RiskLabel::Increased => "Increased",
            RiskLabel::High => "High",
        }
    }

    /// Two-letter code used in confusion-matrix headers.
    pub fn code(self) -> &'static str {
        match self {
            RiskLabel::Nominal => "NR",
            RiskLabel::Increased => "IR",
            RiskLabel::High => "HR",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            RiskLabel::Nominal => "Nominal Risk",
            RiskLabel::Increased => "Increased Risk",
            RiskLabel::High => "High Risk",
        }
    }

    pub fn parse(s: &str) -> Option<RiskLabel> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nominal" | "nr" => Some(RiskLabel::Nominal),
            "increased" | "ir" => Some(RiskLabel::Increased),
            "high" | "hr" => Some(RiskLabel::High),
            _ => None,
        }
    }
}

impl fmt::Display for RiskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// LI boundaries between risk classes: `li <= t_nominal` is Nominal,
/// `li >= t_high` is High, anything between is Increased.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub t_nominal: f64,
    pub t_high: f64,
}

impl RiskThresholds {
    pub fn new(t_nominal: f64, t_high: f64) -> Result<Self> {
        let t = RiskThresholds { t_nominal, t_high };
        t.validate()?;
        Ok(t)
    }

    /// The textbook interpretation of the lifting index: LI up to 1.0 poses
    /// no significant risk, LI of 3.0 and beyond is high risk.
    pub fn guideline() -> Self {
        RiskThresholds { t_nominal: 1.0, t_high: 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_nominal.is_finite() && self.t_high.is_finite()) {
            return Err(Error::InvalidParameter("risk thresholds must be finite".into()));
        }
        if !(0.0 < self.t_nominal && self.t_nominal < self.t_high) {
            return Err(Error::InvalidParameter(format!(
                "risk thresholds must satisfy 0 < t_nominal < t_high, got {} and {}",
                self.t_nominal, self.t_high
            )));
        }
        Ok(())
    }
}

impl Default for RiskThresholds {
    fn default() -> Self {
        RiskThresholds { t_nominal: 1.2, t_high: 2.8 }
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Evaluate HM/VM/DM/AM and look up FM/CM for a task.
///
/// Each closed-form factor is clamped to [0, 1]; geometry beyond the
/// equation's valid range (e.g. H over 25 in) zeroes the factor outright.
pub fn compute_multipliers(task: &LiftingTask, unit: UnitSystem) -> Result<MultiplierSet> {
    task.validate()?;
    let hm = if task.h > unit.h_limit() { 0.0 } else { clamp01(unit.hm_numerator() / task.h) };
    let vm = if task.v > unit.v_limit() {
        0.0
    } else {
        clamp01(1.0 - unit.vm_coefficient() * (task.v - unit.vertical_anchor()).abs())
    };
    // d below the table minimum makes the raw expression exceed 1; the clamp
    // applies the manual's DM = 1 floor, including d = 0 (division yields inf).
    let dm = if task.d > unit.d_limit() {
        0.0
    } else {
        clamp01(0.82 + unit.dm_numerator() / task.d)
    };
    let am = if task.a > 135.0 { 0.0 } else { clamp01(1.0 - 0.0032 * task.a) };
    let fm = lookup_frequency_multiplier(task.frequency, task.duration, task.v, unit);
    let cm = lookup_coupling_multiplier(task.coupling, task.v, unit);
    Ok(MultiplierSet { hm, vm, dm, am, fm, cm })
}

struct FmTable {
    /// (frequency bin upper edge, [duration class][v_low? 0 : 1])
    rows: Vec<(f64, [[f64; 2]; 3])>,
}

fn fm_table() -> &'static FmTable {
    static TABLE: OnceLock<FmTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows = Vec::new();
        for line in data_lines(FM_TABLE_CSV).skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 7, "malformed FM table row: {line}");
            let parse = |s: &str| s.trim().parse::<f64>().expect("FM table value");
            let freq = parse(cells[0]);
            let vals = [
                [parse(cells[1]), parse(cells[2])],
                [parse(cells[3]), parse(cells[4])],
                [parse(cells[5]), parse(cells[6])],
            ];
            rows.push((freq, vals));
        }
        FmTable { rows }
    })
}

/// CM by coupling class, split by vertical hand location.
fn cm_table() -> &'static [[f64; 2]; 3] {
    static TABLE: OnceLock<[[f64; 2]; 3]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [[0.0; 2]; 3];
        for line in data_lines(CM_TABLE_CSV).skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 3, "malformed CM table row: {line}");
            let coupling = Coupling::parse(cells[0]).expect("CM table coupling");
            let parse = |s: &str| s.trim().parse::<f64>().expect("CM table value");
            table[coupling.table_row()] = [parse(cells[1]), parse(cells[2])];
        }
        table
    })
}

fn data_lines(csv: &str) -> impl Iterator<Item = &str> {
    csv.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Frequency multiplier lookup.
///
/// Takes the nearest table row at or above the requested rate (the
/// conservative direction); rates above the table maximum return 0.
pub fn lookup_frequency_multiplier(
    frequency: f64,
    duration: DurationClass,
    v: f64,
    unit: UnitSystem,
) -> f64 {
    let v_col = usize::from(v >= unit.v_low_threshold());
    let d_col = duration.table_column();
    for (bin, vals) in &fm_table().rows {
        // Tolerance keeps decimal rates like 0.2 from missing their own bin.
        if frequency <= bin + 1e-9 {
            return vals[d_col][v_col];
        }
    }
    0.0
}

/// Coupling multiplier lookup.
pub fn lookup_coupling_multiplier(coupling: Coupling, v: f64, unit: UnitSystem) -> f64 {
    let v_col = usize::from(v >= unit.v_low_threshold());
    cm_table()[coupling.table_row()][v_col]
}

/// RWL = LC times the product of the six multipliers.
pub fn recommended_weight_limit(m: &MultiplierSet, unit: UnitSystem) -> f64 {
    unit.load_constant() * m.product()
}

/// Multipliers plus RWL for one task, tagged with the lift location the
/// geometry describes.
pub fn compute_rwl(task: &LiftingTask, unit: UnitSystem, location: LiftLocation) -> Result<RwlResult> {
    let multipliers = compute_multipliers(task, unit)?;
    Ok(RwlResult { rwl: recommended_weight_limit(&multipliers, unit), multipliers, location })
}

/// LI = weight / RWL. Errors when the RWL is zero (task outside every
/// valid range), which would make the index undefined.
pub fn lifting_index(weight: f64, rwl: f64) -> Result<f64> {
    if rwl.is_nan() || rwl <= 0.0 {
        return Err(Error::UndefinedLiftingIndex);
    }
    Ok(weight / rwl)
}

/// Band an LI value into a risk class.
pub fn classify_risk(li: f64, thresholds: &RiskThresholds) -> RiskLabel {
    if li <= thresholds.t_nominal {
        RiskLabel::Nominal
    } else if li >= thresholds.t_high {
        RiskLabel::High
    } else {
        RiskLabel::Increased
    }
}

/// Decimal rounding, half away from zero, as printed reference tables round.
///
/// Plain float rounding misreads values like 0.985 (stored fractionally below
/// the midpoint) as 0.98; the small bump restores the decimal intent.
pub fn round_to_decimals(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    let rounded =
        if scaled >= 0.0 { (scaled + 0.5 + 1e-9).floor() } else { (scaled - 0.5 - 1e-9).ceil() };
    rounded / scale
}

/// Full assessment of one session task: origin RWL, LI, and risk label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub rwl: RwlResult,
    pub li: f64,
    pub label: RiskLabel,
}

/// Assess a task the way session labels are assigned: RWL at the origin,
/// LI from the task weight, and the class taken from the LI at one-decimal
/// reporting precision (the precision at which the thresholds are stated).
pub fn assess_task(
    task: &LiftingTask,
    unit: UnitSystem,
    thresholds: &RiskThresholds,
) -> Result<RiskAssessment> {
    thresholds.validate()?;
    let rwl = compute_rwl(task, unit, LiftLocation::Origin)?;
    let li = lifting_index(task.weight, rwl.rwl)?;
    let label = classify_risk(round_to_decimals(li, 1), thresholds);
    Ok(RiskAssessment { rwl, li, label })
}

/// One row of a session manifest: an identifier plus its lifting task.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub session_id: String,
    pub task: LiftingTask,
}

pub const MANIFEST_HEADER: &str =
    "session_id,load_lb,h_in,v_in,d_in,a_deg,coupling,freq_per_min,duration_class";

/// Read a session manifest CSV (U.S. customary columns).
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => return Err(Error::EmptyInput(format!("manifest {path_str} is empty"))),
    };
    if header != MANIFEST_HEADER {
        return Err(Error::MissingColumns { path: path_str, expected: MANIFEST_HEADER.into() });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 9 {
            return Err(Error::Parse {
                path: path_str,
                line: lineno,
                detail: format!("expected 9 columns, found {}", cells.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            cells[i].parse::<f64>().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                detail: format!("invalid {name}: `{}`", cells[i]),
            })
        };
        let coupling = Coupling::parse(cells[6]).ok_or_else(|| Error::Parse {
            path: path_str.clone(),
            line: lineno,
            detail: format!("invalid coupling: `{}`", cells[6]),
        })?;
        let duration = DurationClass::parse(cells[8]).ok_or_else(|| Error::Parse {
            path: path_str.clone(),
            line: lineno,
            detail: format!("invalid duration_class: `{}`", cells[8]),
        })?;
        let task = LiftingTask {
            weight: num(1, "load_lb")?,
            h: num(2, "h_in")?,
            v: num(3, "v_in")?,
            d: num(4, "d_in")?,
            a: num(5, "a_deg")?,
            coupling,
            frequency: num(7, "freq_per_min")?,
            duration,
        };
        rows.push(ManifestRow { session_id: cells[0].to_string(), task });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("manifest {path_str} has no rows")));
    }
    Ok(rows)
}

/// Write a session manifest CSV.
pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for row in rows {
        if row.session_id.contains(',') {
            return Err(Error::InvalidParameter(format!(
                "session id `{}` contains a comma",
                row.session_id
            )));
        }
        let t = &row.task;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.session_id,
            t.weight,
            t.h,
            t.v,
            t.d,
            t.a,
            t.coupling.as_str(),
            t.frequency,
            t.duration.as_str()
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_origin_task() -> LiftingTask {
        LiftingTask {
            weight: 10.0,
            h: 15.0,
            v: 14.0,
            d: 18.0,
            a: 0.0,
            coupling: Coupling::Good,
            frequency: 10.0,
            duration: DurationClass::UpTo1h,
        }
    }

    fn reference_destination_task() -> LiftingTask {
        LiftingTask { h: 24.0, v: 32.0, ..reference_origin_task() }
    }

    fn rounded(m: &MultiplierSet) -> [f64; 6] {
        let mut arr = m.to_array();
        for v in &mut arr {
            *v = round_to_decimals(*v, 2);
        }
        arr
    }

    #[test]
    fn origin_multipliers_match_reference_table() {
        let m = compute_multipliers(&reference_origin_task(), UnitSystem::UsCustomary).unwrap();
        assert_eq!(rounded(&m), [0.67, 0.88, 0.92, 1.00, 0.45, 1.00]);
    }

    #[test]
    fn destination_multipliers_match_reference_table() {
        let m =
            compute_multipliers(&reference_destination_task(), UnitSystem::UsCustomary).unwrap();
        assert_eq!(rounded(&m), [0.42, 0.99, 0.92, 1.00, 0.45, 1.00]);
    }

    #[test]
    fn neutral_posture_gives_unit_geometry_multipliers() {
        let task = LiftingTask { h: 10.0, v: 30.0, d: 10.0, a: 0.0, ..reference_origin_task() };
        let m = compute_multipliers(&task, UnitSystem::UsCustomary).unwrap();
        assert_eq!(m.hm, 1.0);
        assert_eq!(m.vm, 1.0);
        assert_eq!(m.dm, 1.0);
        assert_eq!(m.am, 1.0);
    }

    #[test]
    fn rwl_matches_frozen_exact_values() {
        let unit = UnitSystem::UsCustomary;
        let origin = compute_rwl(&reference_origin_task(), unit, LiftLocation::Origin).unwrap();
        // 51 * (10/15) * 0.88 * (0.82 + 1.8/18) * 1 * 0.45 * 1
        assert!((origin.rwl - 12.38688).abs() < 1e-9, "rwl {}", origin.rwl);
        assert!((origin.rwl - 12.40).abs() < 0.1);

        let h17 = LiftingTask { h: 17.0, ..reference_origin_task() };
        let r17 = compute_rwl(&h17, unit, LiftLocation::Origin).unwrap();
        assert!((r17.rwl - 10.9296).abs() < 1e-9, "rwl {}", r17.rwl);
        assert!((r17.rwl - 11.00).abs() < 0.1);
    }

    #[test]
    fn rwl_with_unit_multipliers_is_the_load_constant() {
        let m = MultiplierSet { hm: 1.0, vm: 1.0, dm: 1.0, am: 1.0, fm: 1.0, cm: 1.0 };
        assert_eq!(recommended_weight_limit(&m, UnitSystem::UsCustomary), 51.0);
        assert_eq!(recommended_weight_limit(&m, UnitSystem::Metric), 23.0);
    }

    #[test]
    fn lifting_index_reference_values() {
        let rwl = 12.38688;
        let rwl17 = 10.9296;
        let cases = [
            (10.0, rwl, 0.8),
            (15.0, rwl, 1.2),
            (20.0, rwl, 1.6),
            (30.0, rwl, 2.4),
            (35.0, rwl, 2.8),
            (35.0, rwl17, 3.2),
        ];
        for (w, r, expect) in cases {
            let li = lifting_index(w, r).unwrap();
            assert_eq!(round_to_decimals(li, 1), expect, "weight {w} rwl {r}");
        }
        assert_eq!(lifting_index(12.4, 12.4).unwrap(), 1.0);
    }

    #[test]
    fn lifting_index_rejects_zero_rwl() {
        assert!(matches!(lifting_index(10.0, 0.0), Err(Error::UndefinedLiftingIndex)));
    }

    #[test]
    fn lifting_index_strictly_increases_with_weight() {
        let rwl = 12.38688;
        let mut prev = -1.0;
        for i in 0..100 {
            let li = lifting_index(i as f64 * 0.5, rwl).unwrap();
            assert!(li > prev || (i == 0 && li == 0.0), "LI not increasing at step {i}");
            prev = li;
        }
    }

    #[test]
    fn risk_classification_reference_values() {
        let t = RiskThresholds::default();
        assert_eq!(classify_risk(0.8, &t), RiskLabel::Nominal);
        assert_eq!(classify_risk(1.2, &t), RiskLabel::Nominal);
        assert_eq!(classify_risk(1.6, &t), RiskLabel::Increased);
        assert_eq!(classify_risk(2.4, &t), RiskLabel::Increased);
        assert_eq!(classify_risk(2.8, &t), RiskLabel::High);
        assert_eq!(classify_risk(3.2, &t), RiskLabel::High);
    }

    #[test]
    fn risk_classification_is_monotone() {
        let t = RiskThresholds::default();
        let mut last = RiskLabel::Nominal;
        for i in 0..=400 {
            let li = i as f64 * 0.01;
            let label = classify_risk(li, &t);
            assert!(label >= last, "label order broke at li {li}");
            last = label;
        }
    }

    #[test]
    fn guideline_thresholds_preset() {
        let t = RiskThresholds::guideline();
        assert_eq!(classify_risk(1.0, &t), RiskLabel::Nominal);
        assert_eq!(classify_risk(1.2, &t), RiskLabel::Increased);
        assert_eq!(classify_risk(3.0, &t), RiskLabel::High);
    }

    #[test]
    fn frequency_multiplier_reference_lookups() {
        let unit = UnitSystem::UsCustomary;
        assert_eq!(lookup_frequency_multiplier(10.0, DurationClass::UpTo1h, 14.0, unit), 0.45);
        assert_eq!(lookup_frequency_multiplier(0.2, DurationClass::UpTo1h, 32.0, unit), 1.00);
        assert_eq!(lookup_frequency_multiplier(0.1, DurationClass::UpTo1h, 32.0, unit), 1.00);
        for duration in [DurationClass::UpTo1h, DurationClass::UpTo2h, DurationClass::UpTo8h] {
            for v in [14.0, 32.0] {
                assert_eq!(lookup_frequency_multiplier(16.0, duration, v, unit), 0.0);
            }
        }
        // Off-bin rates round up to the next row.
        assert_eq!(lookup_frequency_multiplier(2.5, DurationClass::UpTo1h, 14.0, unit), 0.88);
        // V splits the high-rate 1h column.
        assert_eq!(lookup_frequency_multiplier(13.0, DurationClass::UpTo1h, 14.0, unit), 0.00);
        assert_eq!(lookup_frequency_multiplier(13.0, DurationClass::UpTo1h, 32.0, unit), 0.34);
    }

    #[test]
    fn coupling_multiplier_reference_lookups() {
        let unit = UnitSystem::UsCustomary;
        assert_eq!(lookup_coupling_multiplier(Coupling::Good, 14.0, unit), 1.00);
        assert_eq!(lookup_coupling_multiplier(Coupling::Good, 32.0, unit), 1.00);
        assert_eq!(lookup_coupling_multiplier(Coupling::Poor, 14.0, unit), 0.90);
        assert_eq!(lookup_coupling_multiplier(Coupling::Fair, 14.0, unit), 0.95);
        assert_eq!(lookup_coupling_multiplier(Coupling::Fair, 32.0, unit), 1.00);
    }

    #[test]
    fn multipliers_stay_in_unit_interval() {
        let unit = UnitSystem::UsCustomary;
        let mut rng = crate::rng::Rng::new(99);
        for _ in 0..500 {
            let task = LiftingTask {
                weight: rng.next_f64() * 60.0,
                h: 0.5 + rng.next_f64() * 40.0,
                v: rng.next_f64() * 90.0,
                d: rng.next_f64() * 90.0,
                a: rng.next_f64() * 135.0,
                coupling: [Coupling::Good, Coupling::Fair, Coupling::Poor][rng.next_index(3)],
                frequency: 0.1 + rng.next_f64() * 20.0,
                duration: [DurationClass::UpTo1h, DurationClass::UpTo2h, DurationClass::UpTo8h]
                    [rng.next_index(3)],
            };
            let m = compute_multipliers(&task, unit).unwrap();
            for v in m.to_array() {
                assert!((0.0..=1.0).contains(&v), "{task:?} -> {m:?}");
            }
            let rwl = recommended_weight_limit(&m, unit);
            assert!((0.0..=unit.load_constant()).contains(&rwl));
        }
    }

    #[test]
    fn rwl_monotone_in_geometry() {
        let unit = UnitSystem::UsCustomary;
        let base = reference_origin_task();
        let rwl_for = |task: &LiftingTask| {
            compute_rwl(task, unit, LiftLocation::Origin).unwrap().rwl
        };
        let mut prev = f64::INFINITY;
        for i in 1..=24 {
            let r = rwl_for(&LiftingTask { h: i as f64, ..base.clone() });
            assert!(r <= prev + 1e-12, "RWL increased in h at {i}");
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=70 {
            let r = rwl_for(&LiftingTask { d: i as f64, ..base.clone() });
            assert!(r <= prev + 1e-12, "RWL increased in d at {i}");
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=135 {
            let r = rwl_for(&LiftingTask { a: i as f64, ..base.clone() });
            assert!(r <= prev + 1e-12, "RWL increased in a at {i}");
            prev = r;
        }
        // Non-increasing in |v - 30| on each side of the anchor.
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=30 {
            let r = rwl_for(&LiftingTask { v: i as f64, ..base.clone() });
            assert!(r >= prev - 1e-12, "RWL decreased approaching the anchor at v={i}");
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for i in 30..=70 {
            let r = rwl_for(&LiftingTask { v: i as f64, ..base.clone() });
            assert!(r <= prev + 1e-12, "RWL increased past the anchor at v={i}");
            prev = r;
        }
    }

    #[test]
    fn out_of_range_geometry_zeroes_factors() {
        let unit = UnitSystem::UsCustomary;
        let base = reference_origin_task();
        let m = compute_multipliers(&LiftingTask { h: 25.5, ..base.clone() }, unit).unwrap();
        assert_eq!(m.hm, 0.0);
        let m = compute_multipliers(&LiftingTask { v: 70.5, ..base.clone() }, unit).unwrap();
        assert_eq!(m.vm, 0.0);
        let m = compute_multipliers(&LiftingTask { d: 70.5, ..base.clone() }, unit).unwrap();
        assert_eq!(m.dm, 0.0);
        let m = compute_multipliers(&LiftingTask { a: 140.0, ..base }, unit).unwrap();
        assert_eq!(m.am, 0.0);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let base = reference_origin_task();
        let bad = [
            LiftingTask { h: 0.0, ..base.clone() },
            LiftingTask { h: -3.0, ..base.clone() },
            LiftingTask { v: -1.0, ..base.clone() },
            LiftingTask { d: f64::NAN, ..base.clone() },
            LiftingTask { weight: -2.0, ..base.clone() },
            LiftingTask { frequency: 0.0, ..base.clone() },
            LiftingTask { a: f64::INFINITY, ..base },
        ];
        for task in bad {
            assert!(
                matches!(compute_multipliers(&task, UnitSystem::UsCustomary), Err(Error::InvalidTask(_))),
                "{task:?} accepted"
            );
        }
    }

    #[test]
    fn metric_formulas() {
        // Matching neutral geometry in centimetres.
        let task = LiftingTask {
            weight: 10.0,
            h: 25.0,
            v: 75.0,
            d: 25.0,
            a: 0.0,
            coupling: Coupling::Good,
            frequency: 1.0,
            duration: DurationClass::UpTo1h,
        };
        let m = compute_multipliers(&task, UnitSystem::Metric).unwrap();
        assert_eq!(m.hm, 1.0);
        assert_eq!(m.vm, 1.0);
        assert_eq!(m.dm, 1.0);
        // V threshold for the FM/CM columns is 75 cm under metric units.
        assert_eq!(lookup_coupling_multiplier(Coupling::Fair, 74.0, UnitSystem::Metric), 0.95);
        assert_eq!(lookup_coupling_multiplier(Coupling::Fair, 76.0, UnitSystem::Metric), 1.00);
    }

    #[test]
    fn assessment_rounds_li_before_classifying() {
        // weight 15 at the reference geometry: exact LI is 1.2110, which the
        // one-decimal reporting precision places at the Nominal boundary.
        let task = LiftingTask { weight: 15.0, ..reference_origin_task() };
        let a = assess_task(&task, UnitSystem::UsCustomary, &RiskThresholds::default()).unwrap();
        assert!((a.li - 1.21096).abs() < 1e-4);
        assert_eq!(a.label, RiskLabel::Nominal);
    }

    #[test]
    fn decimal_rounding_half_up() {
        assert_eq!(round_to_decimals(0.985, 2), 0.99);
        assert_eq!(round_to_decimals(1.0 - 0.0075 * 2.0, 2), 0.99);
        assert_eq!(round_to_decimals(0.984, 2), 0.98);
        assert_eq!(round_to_decimals(10.0 / 15.0, 2), 0.67);
        assert_eq!(round_to_decimals(12.38688, 1), 12.4);
        assert_eq!(round_to_decimals(-0.985, 2), -0.99);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = std::env::temp_dir().join("liftrisk_manifest_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("manifest.csv");
        let rows = vec![
            ManifestRow { session_id: "s001".into(), task: reference_origin_task() },
            ManifestRow {
                session_id: "s002".into(),
                task: LiftingTask { weight: 35.0, h: 17.0, ..reference_origin_task() },
            },
        ];
        write_manifest(&path, &rows).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, rows);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn manifest_rejects_bad_header() {
        let dir = std::env::temp_dir().join("liftrisk_manifest_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_header.csv");
        std::fs::write(&path, "id,load\n1,2\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::MissingColumns { .. })));
        std::fs::remove_file(&path).ok();
    }
}
