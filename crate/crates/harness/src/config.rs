//! Scenario configuration: flat `key = value` text, one pair per line,
//! `#` comments, arrays as comma lists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nmpc_core::dynamics::{PlantParams, State};
use nmpc_core::integrator::DiscretizationConfig;
use nmpc_core::qp::QpSettings;
use nmpc_core::sqp::{HorizonProblem, LineSearchSettings};
use nmpc_core::NmpcSettings;

use crate::HarnessError;

/// Solver knobs; everything is optional in the file and defaults to the
/// values the controller stack ships with.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_sqp_iters: usize,
    pub step_tol: f64,
    pub qp_max_iters: usize,
    pub qp_tau: f64,
    pub qp_adaptive_tau: bool,
    pub qp_residual_tol: f64,
    pub qp_early_exit: bool,
    pub ls_max_backtracks: usize,
    pub ls_armijo_eta: f64,
    pub ls_violation_eta: f64,
    pub ls_shrink: f64,
    pub warm_start_duals: bool,
    pub divergence_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let nmpc = NmpcSettings::default();
        Self {
            max_sqp_iters: nmpc.max_sqp_iters,
            step_tol: nmpc.step_tol,
            qp_max_iters: nmpc.qp.max_iters,
            qp_tau: nmpc.qp.tau,
            qp_adaptive_tau: nmpc.qp.adaptive_tau,
            qp_residual_tol: nmpc.qp.residual_tol,
            qp_early_exit: nmpc.qp.early_exit,
            ls_max_backtracks: nmpc.line_search.max_backtracks,
            ls_armijo_eta: nmpc.line_search.armijo_eta,
            ls_violation_eta: nmpc.line_search.violation_eta,
            ls_shrink: nmpc.line_search.shrink,
            warm_start_duals: nmpc.warm_start_duals,
            divergence_bound: nmpc_core::integrator::DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

impl SolverConfig {
    pub fn to_nmpc_settings(&self) -> NmpcSettings {
        NmpcSettings {
            max_sqp_iters: self.max_sqp_iters,
            step_tol: self.step_tol,
            qp: QpSettings {
                max_iters: self.qp_max_iters,
                tau: self.qp_tau,
                adaptive_tau: self.qp_adaptive_tau,
                residual_tol: self.qp_residual_tol,
                early_exit: self.qp_early_exit,
            },
            line_search: LineSearchSettings {
                max_backtracks: self.ls_max_backtracks,
                armijo_eta: self.ls_armijo_eta,
                violation_eta: self.ls_violation_eta,
                shrink: self.ls_shrink,
            },
            warm_start_duals: self.warm_start_duals,
            debug_dump: None,
        }
    }
}

/// One closed-loop scenario: plant, horizon problem, episode and output
/// settings.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub plant: PlantParams,
    pub horizon: usize,
    pub dt: f64,
    pub slices: usize,
    pub q_diag: [f64; 4],
    pub r_diag: Vec<f64>,
    pub force_min: f64,
    pub force_max: f64,
    /// Per-state lower bounds, ordering (cart_vel, cart_pos, pend_rate, pend_angle).
    pub state_lower: [Option<f64>; 4],
    pub state_upper: [Option<f64>; 4],
    pub initial_state: State,
    /// Episode duration in seconds.
    pub episode_length: f64,
    /// Plant truth uses `slices * plant_refinement` Euler slices per interval.
    pub plant_refinement: usize,
    pub out_dir: PathBuf,
    pub emit_plot_data: bool,
    pub solver: SolverConfig,
}

impl ScenarioConfig {
    pub fn tick_count(&self) -> usize {
        (self.episode_length / self.dt).round() as usize
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::from_file_with_overrides(path, &[])
    }

    /// Reads the file, then applies `overrides` (key, value) pairs on top
    /// before validation. Used by the sweep subcommand.
    pub fn from_file_with_overrides(
        path: &Path,
        overrides: &[(String, String)],
    ) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.to_owned(), e))?;
        let mut map = parse_kv(&text)?;
        for (key, value) in overrides {
            map.insert(key.clone(), value.clone());
        }
        Self::from_map(map)
    }

    pub fn from_map(mut map: BTreeMap<String, String>) -> Result<Self, HarnessError> {

        let mut plant = PlantParams::default();
        if let Some(v) = map.remove("cart_mass") {
            plant.cart_mass = parse_f64("cart_mass", &v)?;
        }
        if let Some(v) = map.remove("pend_mass") {
            plant.pend_mass = parse_f64("pend_mass", &v)?;
        }
        if let Some(v) = map.remove("pend_length") {
            plant.pend_length = parse_f64("pend_length", &v)?;
        }
        if let Some(v) = map.remove("cart_damping") {
            plant.cart_damping = parse_f64("cart_damping", &v)?;
        }
        if let Some(v) = map.remove("pend_damping") {
            plant.pend_damping = parse_f64("pend_damping", &v)?;
        }
        if let Some(v) = map.remove("gravity") {
            plant.gravity = parse_f64("gravity", &v)?;
        }
        plant.validate()?;

        let horizon = parse_usize("horizon", &required(&mut map, "horizon")?)?;
        let dt = parse_f64("dt", &required(&mut map, "dt")?)?;
        let slices = parse_usize("slices", &required(&mut map, "slices")?)?;

        let q_list = parse_f64_list("q_diag", &required(&mut map, "q_diag")?)?;
        let q_diag: [f64; 4] = q_list.as_slice().try_into().map_err(|_| {
            HarnessError::BadValue {
                key: "q_diag".into(),
                message: format!("expected 4 entries, got {}", q_list.len()),
            }
        })?;
        let r_diag = parse_f64_list("r_diag", &required(&mut map, "r_diag")?)?;
        if r_diag.is_empty() {
            return Err(HarnessError::BadValue {
                key: "r_diag".into(),
                message: "expected at least one entry".into(),
            });
        }

        let force_min = parse_f64("force_min", &required(&mut map, "force_min")?)?;
        let force_max = parse_f64("force_max", &required(&mut map, "force_max")?)?;

        let mut state_lower = [None; 4];
        let mut state_upper = [None; 4];
        let names = ["cart_vel", "cart_pos", "pend_rate", "pend_angle"];
        for (i, name) in names.iter().enumerate() {
            if let Some(v) = map.remove(&format!("{name}_min")) {
                state_lower[i] = Some(parse_f64(name, &v)?);
            }
            if let Some(v) = map.remove(&format!("{name}_max")) {
                state_upper[i] = Some(parse_f64(name, &v)?);
            }
        }

        let init = parse_f64_list("initial_state", &required(&mut map, "initial_state")?)?;
        if init.len() != 4 {
            return Err(HarnessError::BadValue {
                key: "initial_state".into(),
                message: format!("expected 4 entries, got {}", init.len()),
            });
        }
        let initial_state = State::new(init[0], init[1], init[2], init[3]);

        let episode_length = parse_f64("episode_length", &required(&mut map, "episode_length")?)?;
        if episode_length.is_nan() || episode_length <= 0.0 {
            return Err(HarnessError::BadValue {
                key: "episode_length".into(),
                message: "must be positive".into(),
            });
        }

        let plant_refinement = match map.remove("plant_refinement") {
            Some(v) => parse_usize("plant_refinement", &v)?,
            None => 10,
        };
        if plant_refinement < 1 {
            return Err(HarnessError::BadValue {
                key: "plant_refinement".into(),
                message: "must be at least 1".into(),
            });
        }

        let out_dir = map.remove("out_dir").map(PathBuf::from).unwrap_or_else(|| "out".into());
        let emit_plot_data = match map.remove("emit_plot_data") {
            Some(v) => parse_bool("emit_plot_data", &v)?,
            None => false,
        };

        let mut solver = SolverConfig::default();
        if let Some(v) = map.remove("max_sqp_iters") {
            solver.max_sqp_iters = parse_usize("max_sqp_iters", &v)?;
        }
        if let Some(v) = map.remove("step_tol") {
            solver.step_tol = parse_f64("step_tol", &v)?;
        }
        if let Some(v) = map.remove("qp_max_iters") {
            solver.qp_max_iters = parse_usize("qp_max_iters", &v)?;
        }
        if let Some(v) = map.remove("qp_tau") {
            solver.qp_tau = parse_f64("qp_tau", &v)?;
        }
        if let Some(v) = map.remove("qp_adaptive_tau") {
            solver.qp_adaptive_tau = parse_bool("qp_adaptive_tau", &v)?;
        }
        if let Some(v) = map.remove("qp_residual_tol") {
            solver.qp_residual_tol = parse_f64("qp_residual_tol", &v)?;
        }
        if let Some(v) = map.remove("qp_early_exit") {
            solver.qp_early_exit = parse_bool("qp_early_exit", &v)?;
        }
        if let Some(v) = map.remove("ls_max_backtracks") {
            solver.ls_max_backtracks = parse_usize("ls_max_backtracks", &v)?;
        }
        if let Some(v) = map.remove("ls_armijo_eta") {
            solver.ls_armijo_eta = parse_f64("ls_armijo_eta", &v)?;
        }
        if let Some(v) = map.remove("ls_violation_eta") {
            solver.ls_violation_eta = parse_f64("ls_violation_eta", &v)?;
        }
        if let Some(v) = map.remove("ls_shrink") {
            solver.ls_shrink = parse_f64("ls_shrink", &v)?;
        }
        if let Some(v) = map.remove("warm_start_duals") {
            solver.warm_start_duals = parse_bool("warm_start_duals", &v)?;
        }
        if let Some(v) = map.remove("divergence_bound") {
            solver.divergence_bound = parse_f64("divergence_bound", &v)?;
        }

        if let Some(unknown) = map.into_keys().next() {
            return Err(HarnessError::UnknownKey(unknown));
        }

        Ok(Self {
            plant,
            horizon,
            dt,
            slices,
            q_diag,
            r_diag,
            force_min,
            force_max,
            state_lower,
            state_upper,
            initial_state,
            episode_length,
            plant_refinement,
            out_dir,
            emit_plot_data,
            solver,
        })
    }

    /// Horizon problem as the controller sees it.
    pub fn build_problem(&self) -> Result<HorizonProblem<PlantParams>, HarnessError> {
        let disc = DiscretizationConfig::new(self.dt, self.slices)?;
        let q = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.q_diag));
        let r = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            self.r_diag.clone(),
        ));
        let n_u = self.r_diag.len();
        let mut problem = HorizonProblem::new(
            self.plant,
            self.horizon,
            disc,
            q,
            r,
            nalgebra::DVector::from_element(n_u, self.force_min),
            nalgebra::DVector::from_element(n_u, self.force_max),
        )?
        .with_divergence_bound(self.solver.divergence_bound);
        for i in 0..4 {
            if self.state_lower[i].is_some() || self.state_upper[i].is_some() {
                problem = problem.with_state_bound(i, self.state_lower[i], self.state_upper[i])?;
            }
        }
        Ok(problem)
    }
}

fn required(
    map: &mut BTreeMap<String, String>,
    key: &'static str,
) -> Result<String, HarnessError> {
    map.remove(key).ok_or(HarnessError::MissingKey(key))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::BadValue {
        key: key.into(),
        message: format!("`{value}` is not a number"),
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::BadValue {
        key: key.into(),
        message: format!("`{value}` is not a non-negative integer"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(HarnessError::BadValue {
            key: key.into(),
            message: format!("`{other}` is not a boolean"),
        }),
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, HarnessError> {
    value
        .split(',')
        .map(|part| parse_f64(key, part))
        .collect()
}

/// Parses the flat key-value format into a map; later occurrences of a key
/// win, matching how overrides are layered.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::ConfigSyntax {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(HarnessError::ConfigSyntax {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
        horizon = 10
        dt = 0.05
        slices = 5
        q_diag = 1, 2, 0.1, 5
        r_diag = 0.1
        force_min = -10
        force_max = 10
        initial_state = 0, 0, 0, 3.141592653589793
        episode_length = 1.0
    ";

    #[test]
    fn parses_minimal_config() {
        let cfg = ScenarioConfig::from_map(parse_kv(MINIMAL).unwrap()).unwrap();
        assert_eq!(cfg.horizon, 10);
        assert_eq!(cfg.tick_count(), 20);
        assert_eq!(cfg.plant_refinement, 10);
        assert_eq!(cfg.q_diag, [1.0, 2.0, 0.1, 5.0]);
        assert!(cfg.state_lower.iter().all(Option::is_none));
        assert!((cfg.initial_state.pend_angle - std::f64::consts::PI).abs() < 1e-12);
        cfg.build_problem().unwrap();
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# scenario\n{MINIMAL}\ncart_pos_max = 2 # bound\n");
        let cfg = ScenarioConfig::from_map(parse_kv(&text).unwrap()).unwrap();
        assert_eq!(cfg.state_upper[1], Some(2.0));
    }

    #[test]
    fn missing_required_key_is_reported() {
        let text = MINIMAL.replace("horizon = 10", "");
        let err = ScenarioConfig::from_map(parse_kv(&text).unwrap()).unwrap_err();
        assert!(matches!(err, HarnessError::MissingKey("horizon")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nhorizont = 12\n");
        let err = ScenarioConfig::from_map(parse_kv(&text).unwrap()).unwrap_err();
        assert!(matches!(err, HarnessError::UnknownKey(k) if k == "horizont"));
    }

    #[test]
    fn bad_values_are_rejected() {
        for (key, value) in [
            ("q_diag", "1, 2, 0.1"),
            ("episode_length", "-1"),
            ("dt", "zero"),
            ("plant_refinement", "0"),
        ] {
            let mut map = parse_kv(MINIMAL).unwrap();
            map.insert(key.into(), value.into());
            assert!(
                ScenarioConfig::from_map(map).is_err(),
                "{key}={value} should fail"
            );
        }
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut map = parse_kv(MINIMAL).unwrap();
        map.insert("horizon".into(), "25".into());
        let cfg = ScenarioConfig::from_map(map).unwrap();
        assert_eq!(cfg.horizon, 25);
    }
}
