//! Experiment dispatch: build models from the parsed config, run the
//! requested solver, and collect CSV/JSON artifacts.

use crate::config::{
    ExperimentConfig, FamilySourceJson, GridSpec, Kind, Method, OrderingSpec, SolverSpec,
};
use crate::output::CsvTable;
use oqdyn_core::family::uniform_grid;
use oqdyn_core::json::{matrix_from_json, matrix_to_json, BipartiteJson, ClassicalJson, GkslJson, SemiMarkovJson};
use oqdyn_core::linalg::CMatrix;
use oqdyn_core::nonmarkov::{
    blp_measure, check_cp_divisible, check_p_divisible, distinguishability_trajectory,
    helstrom_measure, intermediate_map, MeasureResult, OptConfig, PCertificate, PDivConfig,
};
use oqdyn_core::{
    BipartiteModel, ClassicalSemiMarkov, DensityMatrix, DynamicsFamily, Error, GKSLModel,
    KernelOrdering, SemiMarkovModel, StateTolerance, TalbotConfig,
};
use serde_json::json;

#[derive(Debug)]
pub enum RunError {
    /// Schema violations, invalid models, bad parameters (exit 2).
    Config(String),
    /// Numerical failure: non-invertible map, contour pole (exit 3).
    Numerical(String),
    /// A solver produced an invalid state (exit 4).
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Invariant(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Numerical(m) | RunError::Invariant(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

/// Classify an error raised while solving (models already validated).
fn solver_err(e: Error) -> RunError {
    match e {
        Error::NotInvertible { .. } | Error::ContourPole { .. } => RunError::Numerical(e.to_string()),
        Error::InvalidState { .. } | Error::NotHermitian { .. } | Error::NotCompletelyPositive { .. } => {
            RunError::Invariant(e.to_string())
        }
        other => RunError::Config(other.to_string()),
    }
}

pub struct Artifacts {
    pub series: Option<CsvTable>,
    pub summary: serde_json::Value,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    match cfg.kind {
        Kind::Semigroup => run_semigroup(cfg),
        Kind::Bipartite => run_bipartite(cfg),
        Kind::Semimarkov => run_semimarkov(cfg),
        Kind::Classical => run_classical(cfg),
        Kind::Measure => run_measure(cfg),
        Kind::Divisibility => run_divisibility(cfg),
    }
}

fn grid_times(cfg: &ExperimentConfig) -> Result<Vec<f64>, RunError> {
    let spec: &GridSpec = cfg
        .grid
        .as_ref()
        .ok_or_else(|| RunError::Config("grid: required for this experiment".into()))?;
    uniform_grid(spec.t_max, spec.n_steps).map_err(config_err)
}

fn initial_state(cfg: &ExperimentConfig, dim: usize) -> Result<DensityMatrix, RunError> {
    let j = cfg
        .initial_state
        .as_ref()
        .ok_or_else(|| RunError::Config("initial_state: required for this experiment".into()))?;
    let m = matrix_from_json(j).map_err(config_err)?;
    if m.nrows() != dim {
        return Err(RunError::Config(format!(
            "initial_state: dimension {} does not match model dimension {dim}",
            m.nrows()
        )));
    }
    DensityMatrix::new(m).map_err(config_err)
}

fn state_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..dim {
        h.push(format!("pop_{i}"));
    }
    for i in 0..dim {
        for j in 0..dim {
            h.push(format!("re_{i}_{j}"));
            h.push(format!("im_{i}_{j}"));
        }
    }
    h
}

fn state_row(t: f64, m: &CMatrix) -> Vec<f64> {
    let dim = m.nrows();
    let mut row = vec![t];
    for i in 0..dim {
        row.push(m[(i, i)].re);
    }
    for i in 0..dim {
        for j in 0..dim {
            row.push(m[(i, j)].re);
            row.push(m[(i, j)].im);
        }
    }
    row
}

struct StateStats {
    max_trace_defect: f64,
    min_eigenvalue: f64,
}

impl StateStats {
    fn new() -> Self {
        Self {
            max_trace_defect: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }

    fn record(&mut self, m: &CMatrix) {
        self.max_trace_defect = self
            .max_trace_defect
            .max((oqdyn_core::linalg::trace(m).re - 1.0).abs());
        self.min_eigenvalue = self.min_eigenvalue.min(
            oqdyn_core::linalg::min_hermitian_eigenvalue(&oqdyn_core::linalg::hermitize(m)),
        );
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "max_trace_defect": self.max_trace_defect,
            "min_state_eigenvalue": self.min_eigenvalue,
        })
    }
}

fn validate_emitted(m: &CMatrix, tol: &StateTolerance) -> Result<(), RunError> {
    DensityMatrix::with_tolerance(m.clone(), tol)
        .map(|_| ())
        .map_err(solver_err)
}

fn run_semigroup(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let model_json: GkslJson = crate::config::parse_model(&cfg.model).map_err(RunError::Config)?;
    let model = GKSLModel::try_from(&model_json).map_err(config_err)?;
    let rho0 = initial_state(cfg, model.dim())?;
    let times = grid_times(cfg)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut stats = StateStats::new();
    let mut min_choi = f64::INFINITY;
    let mut max_tp = 0.0f64;
    for &t in &times {
        let map = model.evolve(t).map_err(solver_err)?;
        let report = map.is_cptp(1e-9);
        min_choi = min_choi.min(report.min_choi_eig);
        max_tp = max_tp.max(report.tp_defect);
        let state = map.apply(&rho0).map_err(solver_err)?;
        stats.record(state.matrix());
        rows.push(state_row(t, state.matrix()));
    }
    Ok(Artifacts {
        series: Some(CsvTable {
            header: state_header(model.dim()),
            rows,
        }),
        summary: json!({
            "kind": "semigroup",
            "points": times.len(),
            "checks": {
                "states": stats.json(),
                "min_choi_eig": min_choi,
                "max_tp_defect": max_tp,
            },
        }),
    })
}

fn run_bipartite(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let model_json: BipartiteJson = crate::config::parse_model(&cfg.model).map_err(RunError::Config)?;
    let model = BipartiteModel::try_from(&model_json).map_err(config_err)?;
    let (d_s, d_e) = model.dims();
    let rho0 = initial_state(cfg, d_s)?;
    let alt = match &cfg.initial_state_alt {
        None => None,
        Some(j) => {
            let m = matrix_from_json(j).map_err(config_err)?;
            Some(DensityMatrix::new(m).map_err(config_err)?)
        }
    };
    let times = grid_times(cfg)?;
    let mut header = state_header(d_s);
    if alt.is_some() {
        header.push("info_internal".into());
        header.push("info_external".into());
    }
    let mut rows = Vec::with_capacity(times.len());
    let mut stats = StateStats::new();
    let mut info_total: Option<(f64, f64)> = None; // (initial, max drift)
    for &t in &times {
        let state = model.reduced_state(&rho0, t).map_err(solver_err)?;
        stats.record(state.matrix());
        let mut row = state_row(t, state.matrix());
        if let Some(alt_state) = &alt {
            let se1 = DensityMatrix::new(model.total_state(&rho0, t).map_err(solver_err)?)
                .map_err(solver_err)?;
            let se2 = DensityMatrix::new(model.total_state(alt_state, t).map_err(solver_err)?)
                .map_err(solver_err)?;
            let other = model.reduced_state(alt_state, t).map_err(solver_err)?;
            let internal = oqdyn_core::info_internal(&state, &other).map_err(solver_err)?;
            let external = oqdyn_core::info_external(&se1, &se2, d_s, d_e).map_err(solver_err)?;
            row.push(internal);
            row.push(external);
            let total = internal + external;
            info_total = Some(match info_total {
                None => (total, 0.0),
                Some((first, drift)) => (first, drift.max((total - first).abs())),
            });
        }
        rows.push(row);
    }

    let mut summary = json!({
        "kind": "bipartite",
        "points": times.len(),
        "checks": { "states": stats.json() },
    });
    if let Some(alt_state) = &alt {
        // bound sweep over (s, t) pairs on a capped subgrid
        let stride = times.len().div_ceil(21).max(1);
        let sub: Vec<f64> = times.iter().copied().step_by(stride).collect();
        let mut satisfied = true;
        let mut worst_margin = f64::INFINITY;
        let mut pairs = 0u32;
        for (i, &s) in sub.iter().enumerate() {
            for &t in &sub[i..] {
                let rep = model.check_bound(&rho0, alt_state, s, t).map_err(solver_err)?;
                satisfied &= rep.satisfied;
                let margin = rep.rhs_terms.iter().sum::<f64>() - rep.lhs;
                worst_margin = worst_margin.min(margin);
                pairs += 1;
            }
        }
        summary["bound"] = json!({
            "satisfied_everywhere": satisfied,
            "worst_margin": worst_margin,
            "pairs_checked": pairs,
        });
        summary["info_conservation_drift"] = json!(info_total.map(|x| x.1));
    }
    Ok(Artifacts {
        series: Some(CsvTable { header, rows }),
        summary,
    })
}

fn run_semimarkov(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let model_json: SemiMarkovJson = crate::config::parse_model(&cfg.model).map_err(RunError::Config)?;
    let model = SemiMarkovModel::try_from(&model_json).map_err(config_err)?;
    let rho0 = initial_state(cfg, model.dim())?;
    let times = grid_times(cfg)?;
    let spec = &cfg.solver;
    let talbot = TalbotConfig {
        nodes: spec.talbot_nodes,
    };
    let mut stats = StateStats::new();
    let mut rows = Vec::with_capacity(times.len());
    let mut extra = serde_json::Map::new();
    match spec.method {
        Method::Laplace => {
            for &t in &times {
                let state = model.solve_laplace(&rho0, t, &talbot).map_err(solver_err)?;
                stats.record(state.matrix());
                rows.push(state_row(t, state.matrix()));
            }
        }
        Method::Series => {
            let n_steps = times.len() - 1;
            let t_max = *times.last().expect("nonempty grid");
            let series = model
                .series_trajectory(&rho0, t_max, n_steps, spec.k_max)
                .map_err(solver_err)?;
            let mut final_tail = 0.0;
            for (s, &t) in series.iter().zip(times.iter()) {
                // trace falls short of one by exactly the classical tail
                let trace = oqdyn_core::linalg::trace(&s.matrix).re;
                if (1.0 - trace - s.tail_bound).abs() > 1e-8 {
                    return Err(RunError::Invariant(format!(
                        "series trace {trace} inconsistent with tail bound {}",
                        s.tail_bound
                    )));
                }
                stats.record(&s.matrix);
                rows.push(state_row(t, &s.matrix));
                final_tail = s.tail_bound;
            }
            extra.insert("tail_bound_final".into(), json!(final_tail));
        }
        Method::Mc => {
            let states = model
                .mc_simulate(&rho0, &times, spec.n_traj, spec.seed)
                .map_err(solver_err)?;
            for (s, &t) in states.iter().zip(times.iter()) {
                stats.record(s.matrix());
                rows.push(state_row(t, s.matrix()));
            }
            extra.insert("n_traj".into(), json!(spec.n_traj));
        }
        Method::Volterra => {
            let n_steps = times.len() - 1;
            let h = times[1] - times[0];
            let ordering = match spec.ordering {
                OrderingSpec::Micromaser => KernelOrdering::Micromaser,
                OrderingSpec::Collision => KernelOrdering::Collision,
            };
            let kernel = model
                .sample_kernel(ordering, h, n_steps, &talbot)
                .map_err(solver_err)?;
            let states = oqdyn_core::solve_volterra(&kernel, &rho0, n_steps).map_err(solver_err)?;
            let tol = StateTolerance {
                hermiticity: 1e-8,
                trace: 1e-5,
                positivity: 1e-5,
            };
            for (s, &t) in states.iter().zip(times.iter()) {
                validate_emitted(s, &tol)?;
                stats.record(s);
                rows.push(state_row(t, s));
            }
        }
        Method::Gme => {
            return Err(RunError::Config(
                "solver.method: gme applies to classical runs only".into(),
            ));
        }
    }
    let mut summary = json!({
        "kind": "semimarkov",
        "method": format!("{:?}", spec.method).to_lowercase(),
        "points": times.len(),
        "checks": { "states": stats.json() },
    });
    for (k, v) in extra {
        summary[k] = v;
    }
    Ok(Artifacts {
        series: Some(CsvTable {
            header: state_header(model.dim()),
            rows,
        }),
        summary,
    })
}

fn run_classical(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let model_json: ClassicalJson = crate::config::parse_model(&cfg.model).map_err(RunError::Config)?;
    let model = ClassicalSemiMarkov::try_from(&model_json).map_err(config_err)?;
    let p0 = cfg
        .initial_distribution
        .clone()
        .ok_or_else(|| RunError::Config("initial_distribution: required for classical runs".into()))?;
    let times = grid_times(cfg)?;
    let spec = &cfg.solver;
    let sol = match spec.method {
        Method::Gme | Method::Laplace => model
            .gme_solve(&p0, &times, spec.talbot_nodes)
            .map_err(solver_err)?,
        Method::Mc => model
            .mc(&p0, &times, spec.n_traj, spec.seed)
            .map_err(solver_err)?,
        other => {
            return Err(RunError::Config(format!(
                "solver.method: {other:?} not supported for classical runs"
            )))
        }
    };
    let n = model.sites();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.push(format!("p_{i}"));
    }
    let mut rows = Vec::with_capacity(times.len());
    let mut max_sum_defect = 0.0f64;
    let mut min_entry = f64::INFINITY;
    for (p, &t) in sol.iter().zip(times.iter()) {
        let sum: f64 = p.iter().sum();
        max_sum_defect = max_sum_defect.max((sum - 1.0).abs());
        min_entry = min_entry.min(p.iter().copied().fold(f64::INFINITY, f64::min));
        let mut row = vec![t];
        row.extend_from_slice(p);
        rows.push(row);
    }
    let tol = if matches!(spec.method, Method::Mc) { 1e-12 } else { 1e-8 };
    if max_sum_defect > tol || min_entry < -tol {
        return Err(RunError::Invariant(format!(
            "probability vector invalid: sum defect {max_sum_defect:.3e}, min entry {min_entry:.3e}"
        )));
    }
    Ok(Artifacts {
        series: Some(CsvTable { header, rows }),
        summary: json!({
            "kind": "classical",
            "method": format!("{:?}", spec.method).to_lowercase(),
            "checks": {
                "max_sum_defect": max_sum_defect,
                "min_entry": min_entry,
            },
        }),
    })
}

fn build_family(cfg: &ExperimentConfig) -> Result<DynamicsFamily, RunError> {
    let source: FamilySourceJson = crate::config::parse_model(&cfg.model).map_err(RunError::Config)?;
    match source {
        FamilySourceJson::Gksl(j) => {
            let model = GKSLModel::try_from(&j).map_err(config_err)?;
            let times = grid_times(cfg)?;
            DynamicsFamily::from_gksl(&model, &times).map_err(solver_err)
        }
        FamilySourceJson::Semimarkov(j) => {
            let model = SemiMarkovModel::try_from(&j).map_err(config_err)?;
            let spec = cfg
                .grid
                .as_ref()
                .ok_or_else(|| RunError::Config("grid: required for this experiment".into()))?;
            model
                .family(
                    spec.t_max,
                    spec.n_steps,
                    &TalbotConfig {
                        nodes: cfg.solver.talbot_nodes,
                    },
                )
                .map_err(solver_err)
        }
        FamilySourceJson::Family(j) => DynamicsFamily::try_from(&j).map_err(config_err),
    }
}

fn opt_config(spec: &SolverSpec) -> OptConfig {
    OptConfig {
        bloch_polar: spec.opt.bloch_polar,
        bloch_azimuthal: spec.opt.bloch_azimuthal,
        random_pairs: spec.opt.random_pairs,
        weight_points: spec.opt.weight_points,
        refine_rounds: spec.opt.refine_rounds,
        seed: spec.seed,
    }
}

fn measure_json(m: &MeasureResult) -> serde_json::Value {
    json!({
        "value": m.value,
        "weights": [m.weights.0, m.weights.1],
        "revivals": m.revivals,
        "pair": [matrix_to_json(m.pair.0.matrix()), matrix_to_json(m.pair.1.matrix())],
    })
}

fn run_measure(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let family = build_family(cfg)?;
    let opt = opt_config(&cfg.solver);
    let blp = blp_measure(&family, &opt).map_err(solver_err)?;
    let hel = helstrom_measure(&family, &opt).map_err(solver_err)?;
    let blp_series = distinguishability_trajectory(&family, &blp.pair.0, &blp.pair.1, 0.5, 0.5)
        .map_err(solver_err)?;
    let hel_series = distinguishability_trajectory(
        &family,
        &hel.pair.0,
        &hel.pair.1,
        hel.weights.0,
        hel.weights.1,
    )
    .map_err(solver_err)?;
    let rows = blp_series
        .iter()
        .zip(hel_series.iter())
        .map(|((t, d), (_, h))| vec![*t, *d, *h])
        .collect();
    Ok(Artifacts {
        series: Some(CsvTable {
            header: vec!["t".into(), "trace_distance_best".into(), "helstrom_best".into()],
            rows,
        }),
        summary: json!({
            "kind": "measure",
            "family": { "points": family.len(), "dim": family.dim(), "t_max": family.times().last() },
            "blp": measure_json(&blp),
            "helstrom": measure_json(&hel),
        }),
    })
}

fn run_divisibility(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let family = build_family(cfg)?;
    let spec = &cfg.solver;
    let cp = check_cp_divisible(&family, spec.divisibility_tol, spec.cond_threshold)
        .map_err(solver_err)?;
    let p = check_p_divisible(
        &family,
        &PDivConfig {
            tol: spec.divisibility_tol,
            cond_threshold: spec.cond_threshold,
            seed: spec.seed,
            ..PDivConfig::default()
        },
    )
    .map_err(solver_err)?;
    // per-step CP diagnostic series
    let mut rows = Vec::new();
    for i in 0..family.len().saturating_sub(1) {
        let step = intermediate_map(&family, i, i + 1, spec.cond_threshold).map_err(solver_err)?;
        rows.push(vec![
            family.times()[i],
            step.map.min_choi_eigenvalue(),
            step.condition_number,
        ]);
    }
    let certificate = match p.certificate {
        PCertificate::BlochScan => json!("bloch_scan"),
        PCertificate::Sampled { states } => json!({ "sampled": states }),
    };
    Ok(Artifacts {
        series: Some(CsvTable {
            header: vec!["t".into(), "step_min_choi_eig".into(), "condition_number".into()],
            rows,
        }),
        summary: json!({
            "kind": "divisibility",
            "family": { "points": family.len(), "dim": family.dim() },
            "cp": {
                "divisible": cp.divisible,
                "worst": cp.worst.map(|(i, j, eig)| json!({"i": i, "j": j, "min_choi_eig": eig})),
            },
            "p": {
                "divisible": p.p_divisible,
                "worst_step": p.worst_step.map(|(i, eig)| json!({"index": i, "min_output_eig": eig})),
                "helstrom_monotone": p.helstrom_monotone,
                "consistent": p.consistent,
                "certificate": certificate,
            },
        }),
    })
}
