//! Subcommand configs and runners behind the `spinsqueeze` binary.
//!
//! Each runner computes everything in memory and returns the files to write,
//! so a failing run never leaves partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dicke::{covariance_tangent, DickeBasis};
use crate::error::{invalid, Error, Result};
use crate::gate::{
    evolve_analytic, evolve_numeric, phase_vs_m, samples_per_loop, GateParams, JointState,
};
use crate::oracle::{self, CheckResult};
use crate::squeezing::{
    chi_t_grid, coherent_state, minimize_xi, oat_evolve, overlap_grid, squeezing_db, xi_sweep,
};
use crate::sweep::SweepResult;
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Flag values that override config-file values when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub n: Option<usize>,
    pub chi_t_max: Option<f64>,
    pub grid: Option<usize>,
    pub lambda_over_delta: Option<f64>,
    pub loops: Option<u32>,
    pub n_max_override: Option<usize>,
}

fn unsupported(command: &str, flag: &str) -> Error {
    invalid(format!("--{flag} does not apply to {command}"))
}

/// Parses a JSON config, rejecting unknown keys.
pub fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| invalid(format!("bad config {}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XiSweepConfig {
    pub n: usize,
    pub chi_t_max: f64,
    /// Points on (0, chi_t_max]; chi_t = 0 is always emitted as the first row.
    pub grid: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for XiSweepConfig {
    fn default() -> Self {
        Self {
            n: 50,
            chi_t_max: 0.5,
            grid: 2000,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

impl XiSweepConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.lambda_over_delta.is_some() {
            return Err(unsupported("xi-sweep", "lambda-over-delta"));
        }
        if o.loops.is_some() {
            return Err(unsupported("xi-sweep", "loops"));
        }
        if o.n_max_override.is_some() {
            return Err(unsupported("xi-sweep", "n-max-override"));
        }
        set(&mut self.out, &o.out);
        set(&mut self.format, &o.format);
        set(&mut self.n, &o.n);
        set(&mut self.chi_t_max, &o.chi_t_max);
        set(&mut self.grid, &o.grid);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        DickeBasis::new(self.n)?;
        if self.grid == 0 {
            return Err(invalid("chi_t grid is empty (grid = 0)"));
        }
        chi_t_grid(self.chi_t_max, self.grid)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiConfig {
    pub n: usize,
    pub chi_t_values: Vec<f64>,
    /// Probe angles span [-theta_max, theta_max] and [-phi_max, phi_max].
    pub theta_max: f64,
    pub phi_max: f64,
    /// Points per angle axis.
    pub grid: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self {
            n: 50,
            chi_t_values: vec![0.0, 0.05, 0.1],
            theta_max: 0.8,
            phi_max: 0.8,
            grid: 81,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

impl HusimiConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.lambda_over_delta.is_some() {
            return Err(unsupported("husimi", "lambda-over-delta"));
        }
        if o.loops.is_some() {
            return Err(unsupported("husimi", "loops"));
        }
        if o.n_max_override.is_some() {
            return Err(unsupported("husimi", "n-max-override"));
        }
        if o.chi_t_max.is_some() {
            return Err(unsupported("husimi", "chi-t-max"));
        }
        set(&mut self.out, &o.out);
        set(&mut self.format, &o.format);
        set(&mut self.n, &o.n);
        set(&mut self.grid, &o.grid);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        DickeBasis::new(self.n)?;
        if self.grid == 0 {
            return Err(invalid("angle grid is empty (grid = 0)"));
        }
        if self.chi_t_values.is_empty() {
            return Err(invalid("chi_t_values is empty"));
        }
        if self.chi_t_values.iter().any(|c| !c.is_finite()) {
            return Err(invalid("chi_t_values must be finite"));
        }
        for (name, v) in [("theta_max", self.theta_max), ("phi_max", self.phi_max)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }

    fn axis(&self, max: f64) -> Vec<f64> {
        if self.grid == 1 {
            return vec![0.0];
        }
        let last = (self.grid - 1) as f64;
        (0..self.grid)
            .map(|i| -max + 2.0 * max * i as f64 / last)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseGateConfig {
    pub n: usize,
    /// λ/δ′; time is measured in units of 1/δ′.
    pub lambda_over_delta: f64,
    pub loops: u32,
    pub n_max_override: Option<usize>,
    /// Initial |0⟩|M_J⟩ sectors traced over time; all M_J ≥ 0 when absent.
    pub trace_m: Option<Vec<f64>>,
    pub samples_per_loop: usize,
    pub eta: f64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for PhaseGateConfig {
    fn default() -> Self {
        Self {
            n: 10,
            lambda_over_delta: 0.05,
            loops: 5,
            n_max_override: None,
            trace_m: None,
            samples_per_loop: 128,
            eta: 0.1,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

impl PhaseGateConfig {
    pub fn trace_values(&self, basis: DickeBasis) -> Vec<f64> {
        match &self.trace_m {
            Some(ms) => ms.clone(),
            None => basis.m_values().into_iter().filter(|m| *m >= 0.0).collect(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.chi_t_max.is_some() {
            return Err(unsupported("phase-gate", "chi-t-max"));
        }
        set(&mut self.out, &o.out);
        set(&mut self.format, &o.format);
        set(&mut self.n, &o.n);
        set(&mut self.samples_per_loop, &o.grid);
        set(&mut self.lambda_over_delta, &o.lambda_over_delta);
        set(&mut self.loops, &o.loops);
        if o.n_max_override.is_some() {
            self.n_max_override = o.n_max_override;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<GateParams> {
        let p = GateParams::from_ratio(self.n, self.lambda_over_delta, self.loops)?
            .with_eta(self.eta)?;
        match self.n_max_override {
            Some(n_max) => p.with_n_max(n_max),
            None => Ok(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.params()?;
        let basis = p.basis();
        let trace_m = self.trace_values(basis);
        if trace_m.is_empty() {
            return Err(invalid("trace_m is empty"));
        }
        for &m in &trace_m {
            if basis.index_of(m).is_none() {
                return Err(invalid(format!(
                    "M_J = {m} is not in the N = {} Dicke basis",
                    self.n
                )));
            }
        }
        if self.samples_per_loop < crate::gate::MIN_SAMPLES_PER_LOOP {
            return Err(invalid(format!(
                "samples_per_loop must be at least {}",
                crate::gate::MIN_SAMPLES_PER_LOOP
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleCheckConfig {
    /// Checks every N in 1..=max_n.
    pub max_n: usize,
    pub out: PathBuf,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            max_n: 8,
            out: PathBuf::from("out"),
        }
    }
}

impl OracleCheckConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        for (flag, present) in [
            ("chi-t-max", o.chi_t_max.is_some()),
            ("grid", o.grid.is_some()),
            ("lambda-over-delta", o.lambda_over_delta.is_some()),
            ("loops", o.loops.is_some()),
            ("n-max-override", o.n_max_override.is_some()),
            ("format", o.format.is_some()),
        ] {
            if present {
                return Err(unsupported("oracle-check", flag));
            }
        }
        set(&mut self.out, &o.out);
        set(&mut self.max_n, &o.n);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(invalid("max_n must be at least 1"));
        }
        if self.max_n > oracle::MAX_PARTICLES {
            return Err(Error::Resource(format!(
                "oracle-check N = {} exceeds the limit {}",
                self.max_n,
                oracle::MAX_PARTICLES
            )));
        }
        Ok(())
    }
}

fn set<T: Clone>(target: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *target = v.clone();
    }
}

/// Files to write plus the line printed on standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
    /// Nonzero when the run completed but a check failed.
    pub exit_code: i32,
}

fn json_bytes(value: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn table_files(
    stem: &str,
    table: &SweepResult,
    format: OutputFormat,
    files: &mut Vec<(String, Vec<u8>)>,
) {
    match format {
        OutputFormat::Csv => {
            files.push((format!("{stem}.csv"), table.to_csv_string().into_bytes()))
        }
        OutputFormat::Json => files.push((format!("{stem}.json"), json_bytes(&table.to_json()))),
    }
}

fn header(command: &str, config: &impl Serialize) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("version".into(), json!(VERSION));
    m.insert(
        "config".into(),
        serde_json::to_value(config).expect("configs serialize"),
    );
    m
}

pub fn run_xi_sweep(cfg: &XiSweepConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut chi = vec![0.0];
    chi.extend(chi_t_grid(cfg.chi_t_max, cfg.grid)?);
    let table = xi_sweep(cfg.n, &chi)?;
    let best = minimize_xi(cfg.n, cfg.chi_t_max, cfg.grid)?;
    let lengths = table.column("bloch_length").expect("column exists");
    let monotone = lengths.windows(2).all(|w| w[1] <= w[0]);

    let mut meta = header("xi-sweep", cfg);
    meta.insert("columns".into(), json!(["chi_t", "xi", "bloch_length"]));
    meta.insert("argmin_chi_t".into(), json!(best.chi_t));
    meta.insert("min_xi".into(), json!(best.xi));
    meta.insert("bloch_length_monotone".into(), json!(monotone));

    let mut files = Vec::new();
    table_files("xi_sweep", &table, cfg.format, &mut files);
    files.push((
        "xi_sweep.meta.json".into(),
        json_bytes(&Value::Object(meta)),
    ));
    Ok(RunOutput {
        files,
        summary: format!("argmin chi_t = {:.6}, min xi = {:.6}", best.chi_t, best.xi),
        exit_code: 0,
    })
}

pub fn run_husimi(cfg: &HusimiConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let thetas = cfg.axis(cfg.theta_max);
    let phis = cfg.axis(cfg.phi_max);
    let cs = coherent_state(cfg.n)?;
    let mut files = Vec::new();
    let mut panels = Vec::new();
    for (i, &chi) in cfg.chi_t_values.iter().enumerate() {
        let state = oat_evolve(&cs, chi)?;
        let grid = overlap_grid(&state, &thetas, &phis)?;
        let (ti, pj, max) = grid.argmax();
        let stem = format!("husimi_{i}");
        table_files(&stem, &grid.to_sweep_result(), cfg.format, &mut files);
        let tangent = covariance_tangent(&state).ok().map(|tc| {
            let (lo, hi) = tc.eigenvalues();
            json!({
                "lambda_min": lo,
                "lambda_max": hi,
                "min_axis_angle": tc.min_axis_angle(),
            })
        });
        panels.push(json!({
            "file": format!("{stem}.{}", if cfg.format == OutputFormat::Csv { "csv" } else { "json" }),
            "chi_t": chi,
            "rows": thetas.len() * phis.len(),
            "max_probability": max,
            "argmax_theta": thetas[ti],
            "argmax_phi": phis[pj],
            "tangent_covariance": tangent,
        }));
    }
    let mut meta = header("husimi", cfg);
    meta.insert("columns".into(), json!(["theta", "phi", "probability"]));
    meta.insert(
        "probe".into(),
        json!("|<CS| exp(-i theta Jy) exp(i phi Jz) |psi>|^2; CS mean spin along +x, theta tilts towards +z"),
    );
    meta.insert("panels".into(), Value::Array(panels));
    files.push(("husimi.meta.json".into(), json_bytes(&Value::Object(meta))));
    Ok(RunOutput {
        summary: format!("wrote {} overlap grids", cfg.chi_t_values.len()),
        files,
        exit_code: 0,
    })
}

pub fn run_phase_gate(cfg: &PhaseGateConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let params = cfg.params()?;
    let warnings = params.validate()?;
    let basis = params.basis();

    let mut amps = vec![num_complex::Complex64::from(0.0); basis.dim()];
    for m in cfg.trace_values(basis) {
        amps[basis.index_of(m).expect("validated")] = num_complex::Complex64::from(1.0);
    }
    let spin = crate::dicke::SpinState::normalized(basis, amps)?;
    let initial = JointState::ground_product(params.n_max, &spin);
    let per_loop = cfg.samples_per_loop.max(samples_per_loop(&params));
    let samples = per_loop * params.loops as usize + 1;
    let (trace, _) = evolve_numeric(&params, &initial, params.gate_time(), samples)?;

    let mut table = trace.to_sweep_result();
    let mut nbar_an = Vec::new();
    let mut phase_an = Vec::new();
    let mut max_nbar_dev = 0.0f64;
    let mut max_phase_dev = 0.0f64;
    for s in &trace.sectors {
        for (i, &t) in trace.times.iter().enumerate() {
            let (alpha, phase) = evolve_analytic(&params, s.m, t);
            nbar_an.push(alpha.norm_sqr());
            phase_an.push(phase);
            max_nbar_dev = max_nbar_dev.max((alpha.norm_sqr() - s.nbar[i]).abs());
            max_phase_dev = max_phase_dev.max((phase - s.phase[i]).abs());
        }
    }
    table.push_column("nbar_analytic", nbar_an);
    table.push_column("phase_analytic", phase_an);

    // ⟨n̂⟩ at each loop closure
    let closures: Vec<Value> = trace
        .sectors
        .iter()
        .map(|s| {
            let nbar_at: Vec<f64> = trace
                .closure_times
                .iter()
                .map(|&tc| {
                    let i = trace
                        .times
                        .iter()
                        .position(|&t| (t - tc).abs() <= 1e-9 * tc)
                        .expect("closures fall on samples");
                    s.nbar[i]
                })
                .collect();
            json!({"m": s.m, "nbar": nbar_at, "return_fidelity": s.closure_fidelity})
        })
        .collect();

    let fit = phase_vs_m(&params)?;
    let mut fit_table = fit.table.clone();
    let ms: Vec<f64> = fit_table.column("m").expect("column").to_vec();
    fit_table.push_column(
        "phase_analytic",
        ms.iter()
            .map(|&m| evolve_analytic(&params, m, params.gate_time()).1)
            .collect(),
    );
    fit_table.metadata.clear();

    let mut meta = header("phase-gate", cfg);
    meta.insert(
        "params".into(),
        serde_json::to_value(params).expect("serializes"),
    );
    meta.insert("time_unit".into(), json!("1/delta_p (delta_p = 1)"));
    meta.insert("warnings".into(), json!(warnings));
    meta.insert("n_max".into(), json!(params.n_max));
    meta.insert(
        "convergence".into(),
        serde_json::to_value(trace.convergence).expect("serializes"),
    );
    meta.insert(
        "trace_columns".into(),
        json!([
            "t",
            "m",
            "nbar",
            "phase",
            "return_fidelity",
            "nbar_analytic",
            "phase_analytic"
        ]),
    );
    meta.insert("trace_max_nbar_deviation".into(), json!(max_nbar_dev));
    meta.insert("trace_max_phase_deviation".into(), json!(max_phase_dev));
    meta.insert("loop_closures".into(), Value::Array(closures));
    meta.insert(
        "phase_fit".into(),
        json!({
            "columns": ["m", "phase", "fit_residual", "phase_analytic"],
            "coefficient": fit.coefficient,
            "analytic_coefficient": fit.analytic_coefficient,
            "relative_error": fit.relative_error,
            "max_residual": fit.max_residual,
            "odd_component": fit.odd_component,
            "reference_curve": {
                "expression": "loops*4*pi*lambda^2*M_J^2/delta_p",
                "coefficient": fit.reference_curve_coefficient,
                "ratio_to_fit": fit.reference_curve_ratio,
                "note": "not dimensionless as written; reported for comparison only",
            },
        }),
    );
    meta.insert(
        "defaults_note".into(),
        json!("lambda/delta_p, N and loops are demo choices"),
    );

    let mut files = Vec::new();
    table_files("phase_gate_trace", &table, cfg.format, &mut files);
    table_files("phase_vs_m", &fit_table, cfg.format, &mut files);
    files.push((
        "phase_gate.meta.json".into(),
        json_bytes(&Value::Object(meta)),
    ));
    Ok(RunOutput {
        files,
        summary: format!(
            "phase coefficient a = {:.12e} (analytic {:.12e}, relative error {:.3e})",
            fit.coefficient, fit.analytic_coefficient, fit.relative_error
        ),
        exit_code: 0,
    })
}

pub fn run_oracle_check(cfg: &OracleCheckConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut checks: Vec<CheckResult> = Vec::new();
    for n in 1..=cfg.max_n {
        checks.extend(oracle::verify_subspace(n)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    let max_dev = checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
    let mut meta = header("oracle-check", cfg);
    meta.insert("passed".into(), json!(passed));
    meta.insert("max_deviation".into(), json!(max_dev));
    meta.insert(
        "checks".into(),
        serde_json::to_value(&checks).expect("serializes"),
    );
    Ok(RunOutput {
        files: vec![("oracle_check.json".into(), json_bytes(&Value::Object(meta)))],
        summary: format!(
            "{} checks, {}; max deviation {max_dev:.3e}",
            checks.len(),
            if passed { "all passed" } else { "FAILED" }
        ),
        exit_code: if passed { 0 } else { 3 },
    })
}

pub fn run_squeeze_db(var_squeezed: f64, var_unsqueezed: f64) -> Result<RunOutput> {
    let db = squeezing_db(var_squeezed, var_unsqueezed)?;
    Ok(RunOutput {
        files: Vec::new(),
        summary: format!("{db:.6} dB"),
        exit_code: 0,
    })
}

/// Writes every file or none: each goes to a temporary name first, then all are renamed.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    if files.is_empty() {
        return Ok(());
    }
    let io = |e: std::io::Error| Error::Resource(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io(e));
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, dir.join(name)).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_rejected() {
        let err = serde_json::from_str::<XiSweepConfig>(r#"{"n": 10, "bogus": 1}"#);
        assert!(err.is_err());
        let ok: XiSweepConfig = serde_json::from_str(r#"{"n": 10}"#).unwrap();
        assert_eq!(ok.grid, 2000);
    }

    #[test]
    fn flags_win_over_config() {
        let mut cfg: XiSweepConfig = serde_json::from_str(r#"{"n": 10, "grid": 5}"#).unwrap();
        cfg.apply(&Overrides {
            n: Some(20),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((cfg.n, cfg.grid), (20, 5));
        assert!(cfg
            .apply(&Overrides {
                loops: Some(2),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn empty_grid_is_usage_error() {
        let cfg = XiSweepConfig {
            grid: 0,
            ..Default::default()
        };
        assert_eq!(run_xi_sweep(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn oracle_limit_is_resource_error() {
        let cfg = OracleCheckConfig {
            max_n: 13,
            ..Default::default()
        };
        assert_eq!(run_oracle_check(&cfg).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn trace_m_must_exist() {
        let cfg = PhaseGateConfig {
            n: 4,
            trace_m: Some(vec![3.0]),
            ..Default::default()
        };
        assert_eq!(run_phase_gate(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn default_trace_covers_nonnegative_m() {
        let cfg = PhaseGateConfig {
            n: 3,
            ..Default::default()
        };
        assert_eq!(
            cfg.trace_values(DickeBasis::new(3).unwrap()),
            vec![1.5, 0.5]
        );
    }

    #[test]
    fn write_outputs_is_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            ("a.csv".to_string(), b"x\n".to_vec()),
            ("b.json".into(), b"{}".to_vec()),
        ];
        write_outputs(dir.path(), &files).unwrap();
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["a.csv", "b.json"]);
    }
}
