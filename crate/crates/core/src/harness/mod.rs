//! Convergence, penalty-sweep and condition-number studies, and the
//! property battery, with CSV output.

mod battery;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

pub use battery::{
    boundary_orthogonality_defect, consistency_residual, normal_jump_defect, pressure_mean,
    projected_divergence_norm, run_property_battery,
    BatteryOptions, BatteryReport, CheckResult,
};

use crate::assembly::{
    assemble_system, pressure_error_1h, pressure_error_l2, velocity_error_0h, velocity_error_l2,
    Formulation,
};
use crate::cases::{case_by_name, ManufacturedCase, MeshFamily};
use crate::fe::{FeFunction, MixedSpace, MAX_ORDER};
use crate::linalg::{condition_number_l2, solve};
use crate::{Error, Result};

/// Largest circle refinement level accepted by the studies.
pub const CIRCLE_MAX_LEVEL: usize = 4;

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub case: String,
    pub formulation: Formulation,
    pub order: usize,
    /// Subdivisions per side (square, annulus) or refinement index (circle).
    pub levels: Vec<usize>,
    /// Boundary weight `h^-exponent`; `None` uses 1 for the Nitsche schemes
    /// and `k + 1` for the penalty scheme.
    pub gamma_exponent: Option<f64>,
    pub out: Option<PathBuf>,
}

impl StudyConfig {
    pub fn new(case: &str, formulation: Formulation, order: usize, levels: &[usize]) -> Self {
        Self {
            case: case.to_string(),
            formulation,
            order,
            levels: levels.to_vec(),
            gamma_exponent: None,
            out: None,
        }
    }

    pub fn with_gamma_exponent(mut self, exponent: f64) -> Self {
        self.gamma_exponent = Some(exponent);
        self
    }

    pub fn gamma_exponent(&self) -> f64 {
        self.gamma_exponent.unwrap_or(match self.formulation {
            Formulation::Penalty => self.order as f64 + 1.0,
            Formulation::NitscheSym | Formulation::NitscheNonsym => 1.0,
        })
    }

    /// Checks the configuration and resolves the case.
    pub fn validate(&self) -> Result<ManufacturedCase> {
        let case = case_by_name(&self.case)?;
        if self.order > MAX_ORDER {
            return Err(Error::Configuration(format!(
                "order {} not supported (max {MAX_ORDER})",
                self.order
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::Configuration("no levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Configuration(format!(
                "levels must be strictly increasing, got {:?}",
                self.levels
            )));
        }
        if case.family == MeshFamily::UnitCircleTri {
            if self.order > 1 || self.levels.iter().any(|&l| l > CIRCLE_MAX_LEVEL) {
                return Err(Error::Configuration(format!(
                    "circle studies are limited to order <= 1 and level <= {CIRCLE_MAX_LEVEL}"
                )));
            }
        } else if self.levels.contains(&0) {
            return Err(Error::Configuration("level 0 is not a valid subdivision count".into()));
        }
        let e = self.gamma_exponent();
        if !(0.0..=self.order as f64 + 3.0).contains(&e) {
            return Err(Error::Configuration(format!(
                "gamma exponent {e} outside [0, {}]",
                self.order + 3
            )));
        }
        Ok(case)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    pub err_u_0h: f64,
    pub err_p_1h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub u_l2: f64,
    pub p_l2: f64,
    pub u_0h: f64,
    pub p_1h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub formulation: Formulation,
    pub order: usize,
    pub gamma_exponent: f64,
    pub levels: Vec<LevelResult>,
    /// Least-squares slopes over the finest three levels.
    pub rates: Rates,
}

/// Least-squares slope of `log y` against `log x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn finest_rate(levels: &[LevelResult], metric: impl Fn(&LevelResult) -> f64) -> f64 {
    let tail = &levels[levels.len().saturating_sub(3)..];
    if tail.len() < 2 {
        return f64::NAN;
    }
    let h: Vec<f64> = tail.iter().map(|l| l.h).collect();
    let e: Vec<f64> = tail.iter().map(metric).collect();
    least_squares_slope(&h, &e)
}

/// `(||u - u_h||, ||p - p_h||)` in `L2` over the mesh domain.
pub fn l2_errors(u_h: &FeFunction, p_h: &FeFunction, case: &ManufacturedCase) -> (f64, f64) {
    let u = |x| case.u(x);
    let p = |x| case.p(x);
    (velocity_error_l2(u_h, &u), pressure_error_l2(p_h, &p))
}

/// Assembles, solves and measures one level.
pub fn run_level(
    case: &ManufacturedCase,
    formulation: Formulation,
    order: usize,
    level: usize,
    gamma_exponent: f64,
) -> Result<LevelResult> {
    let mesh = Arc::new(case.mesh(level)?);
    let weight = mesh.h_max.powf(-gamma_exponent);
    let space = Arc::new(MixedSpace::new(mesh.clone(), order)?);
    let system = assemble_system(&space, formulation, weight, case)?;
    let sol = solve(&system)?;
    let (err_u_l2, err_p_l2) = l2_errors(&sol.velocity, &sol.pressure, case);
    let u = |x| case.u(x);
    let p = |x| case.p(x);
    let grad_p = |x| case.grad_p(x);
    Ok(LevelResult {
        level,
        h: mesh.h_max,
        n_dofs: space.n_velocity_dofs() + space.n_pressure_dofs(),
        err_u_l2,
        err_p_l2,
        err_u_0h: velocity_error_0h(&sol.velocity, &u, weight),
        err_p_1h: pressure_error_1h(&sol.pressure, &p, &grad_p, formulation.pressure_norm()),
    })
}

pub fn run_convergence(config: &StudyConfig) -> Result<ConvergenceReport> {
    let case = config.validate()?;
    let exponent = config.gamma_exponent();
    let mut levels = Vec::with_capacity(config.levels.len());
    for &level in &config.levels {
        let r = run_level(&case, config.formulation, config.order, level, exponent)
            .map_err(|e| e.at_level(level))?;
        log::info!(
            "{} {} k={} level {level}: h={:.4e} err_u={:.4e} err_p={:.4e}",
            case.name,
            config.formulation,
            config.order,
            r.h,
            r.err_u_l2,
            r.err_p_l2
        );
        levels.push(r);
    }
    let rates = Rates {
        u_l2: finest_rate(&levels, |l| l.err_u_l2),
        p_l2: finest_rate(&levels, |l| l.err_p_l2),
        u_0h: finest_rate(&levels, |l| l.err_u_0h),
        p_1h: finest_rate(&levels, |l| l.err_p_1h),
    };
    let report = ConvergenceReport {
        case: config.case.clone(),
        formulation: config.formulation,
        order: config.order,
        gamma_exponent: exponent,
        levels,
        rates,
    };
    if let Some(path) = &config.out {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

pub const CONVERGENCE_HEADER: &str = "level,h,n_dofs,err_u_l2,err_p_l2,err_u_0h,err_p_1h";

fn write_row(w: &mut impl Write, prefix: &str, l: &LevelResult) -> std::io::Result<()> {
    writeln!(
        w,
        "{prefix}{},{:e},{},{:e},{:e},{:e},{:e}",
        l.level, l.h, l.n_dofs, l.err_u_l2, l.err_p_l2, l.err_u_0h, l.err_p_1h
    )
}

impl Rates {
    fn comment(&self) -> String {
        format!(
            "rate_u_l2={:e} rate_p_l2={:e} rate_u_0h={:e} rate_p_1h={:e}",
            self.u_l2, self.p_l2, self.u_0h, self.p_1h
        )
    }
}

impl ConvergenceReport {
    /// Header, one row per level, and a `# rate_...` comment line. Floats are
    /// written in shortest round-trip form.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        for l in &self.levels {
            write_row(&mut w, "", l)?;
        }
        writeln!(w, "# {}", self.rates.comment())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn finest(&self) -> &LevelResult {
        self.levels.last().expect("at least one level")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub curves: Vec<ConvergenceReport>,
}

/// Default exponents `{0, 1/2, 1, k, k+1, k+2}`, deduplicated and sorted.
pub fn default_sweep_exponents(order: usize) -> Vec<f64> {
    let k = order as f64;
    let mut e = vec![0.0, 0.5, 1.0, k, k + 1.0, k + 2.0];
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

/// One convergence curve per boundary-weight exponent.
pub fn run_penalty_sweep(config: &StudyConfig, exponents: &[f64]) -> Result<SweepReport> {
    if exponents.is_empty() {
        return Err(Error::Configuration("no exponents given".into()));
    }
    let mut curves = Vec::new();
    for &e in exponents {
        let mut c = config.clone().with_gamma_exponent(e);
        c.out = None;
        curves.push(run_convergence(&c)?);
    }
    let report = SweepReport { curves };
    if let Some(path) = &config.out {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

impl SweepReport {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "gamma_exp,{CONVERGENCE_HEADER}")?;
        for c in &self.curves {
            for l in &c.levels {
                write_row(&mut w, &format!("{:e},", c.gamma_exponent), l)?;
            }
        }
        for c in &self.curves {
            writeln!(w, "# gamma_exp={:e} {}", c.gamma_exponent, c.rates.comment())?;
        }
        Ok(())
    }

    pub fn curve(&self, exponent: f64) -> Option<&ConvergenceReport> {
        self.curves.iter().find(|c| c.gamma_exponent == exponent)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionLevel {
    pub level: usize,
    pub h: f64,
    pub n_unknowns: usize,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub levels: Vec<ConditionLevel>,
    /// Least-squares slope of `log cond` against `log h` over the finest
    /// three levels.
    pub slope: f64,
}

impl ConditionReport {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "level,h,n_unknowns,cond")?;
        for l in &self.levels {
            writeln!(w, "{},{:e},{},{:e}", l.level, l.h, l.n_unknowns, l.condition)?;
        }
        writeln!(w, "# slope={:e}", self.slope)
    }
}

/// `l2` condition number of the full assembled matrix per level.
pub fn run_condition_study(config: &StudyConfig) -> Result<ConditionReport> {
    let case = config.validate()?;
    let exponent = config.gamma_exponent();
    let mut levels = Vec::new();
    for &level in &config.levels {
        let run = || -> Result<ConditionLevel> {
            let mesh = Arc::new(case.mesh(level)?);
            let weight = mesh.h_max.powf(-exponent);
            let space = Arc::new(MixedSpace::new(mesh.clone(), config.order)?);
            let system = assemble_system(&space, config.formulation, weight, &case)?;
            let condition = condition_number_l2(&system.matrix)?;
            if !condition.is_finite() {
                return Err(Error::Solver("matrix is singular".into()));
            }
            Ok(ConditionLevel {
                level,
                h: mesh.h_max,
                n_unknowns: system.n_unknowns(),
                condition,
            })
        };
        let l = run().map_err(|e| e.at_level(level))?;
        log::info!("level {level}: h={:.4e} cond={:.4e}", l.h, l.condition);
        levels.push(l);
    }
    let tail = &levels[levels.len().saturating_sub(3)..];
    let h: Vec<f64> = tail.iter().map(|l| l.h).collect();
    let c: Vec<f64> = tail.iter().map(|l| l.condition).collect();
    let slope = if tail.len() >= 2 { least_squares_slope(&h, &c) } else { f64::NAN };
    let report = ConditionReport { levels, slope };
    if let Some(path) = &config.out {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.5, 0.25, 0.125];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((least_squares_slope(&h, &e) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let ok = StudyConfig::new("unit-square-tri", Formulation::NitscheSym, 1, &[2, 4]);
        assert!(ok.validate().is_ok());
        for bad in [
            StudyConfig::new("nope", Formulation::NitscheSym, 1, &[2, 4]),
            StudyConfig::new("unit-square-tri", Formulation::NitscheSym, 3, &[2, 4]),
            StudyConfig::new("unit-square-tri", Formulation::NitscheSym, 1, &[4, 2]),
            StudyConfig::new("unit-square-tri", Formulation::NitscheSym, 1, &[]),
            StudyConfig::new("unit-circle-tri", Formulation::NitscheSym, 2, &[1, 2]),
            StudyConfig::new("unit-circle-tri", Formulation::NitscheSym, 1, &[4, 5]),
            StudyConfig::new("unit-square-tri", Formulation::Penalty, 0, &[2]).with_gamma_exponent(4.0),
        ] {
            assert_eq!(bad.validate().unwrap_err().exit_code(), 1, "{bad:?}");
        }
    }

    #[test]
    fn default_exponents() {
        assert_eq!(default_sweep_exponents(1), vec![0.0, 0.5, 1.0, 2.0, 3.0]);
        assert_eq!(default_sweep_exponents(0), vec![0.0, 0.5, 1.0, 2.0]);
        assert_eq!(default_sweep_exponents(2), vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_layout() {
        let c = StudyConfig::new("unit-square-quad", Formulation::NitscheSym, 0, &[2, 4, 8]);
        let r = run_convergence(&c).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CONVERGENCE_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("# rate_u_l2="));
        // Rates are recomputable from the printed columns.
        let cols: Vec<Vec<f64>> = lines[1..4]
            .iter()
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        let h: Vec<f64> = cols.iter().map(|c| c[1]).collect();
        let e: Vec<f64> = cols.iter().map(|c| c[3]).collect();
        assert!((least_squares_slope(&h, &e) - r.rates.u_l2).abs() < 1e-12);
    }
}
