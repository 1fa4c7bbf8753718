//! Experiment configuration: schema, parsing with field-path diagnostics,
//! and exhaustive pre-dispatch validation.

use oqdyn_core::json::{
    matrix_from_json, BipartiteJson, ClassicalJson, FamilyJson, GkslJson, MatrixJson,
    SemiMarkovJson,
};
use oqdyn_core::linalg::hermiticity_defect;
use oqdyn_core::DensityMatrix;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Semigroup,
    Bipartite,
    Semimarkov,
    Classical,
    Measure,
    Divisibility,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Laplace,
    Series,
    Mc,
    Volterra,
    Gme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingSpec {
    Micromaser,
    Collision,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptSpec {
    pub bloch_polar: usize,
    pub bloch_azimuthal: usize,
    pub random_pairs: usize,
    pub weight_points: usize,
    pub refine_rounds: usize,
}

impl Default for OptSpec {
    fn default() -> Self {
        let d = oqdyn_core::OptConfig::default();
        Self {
            bloch_polar: d.bloch_polar,
            bloch_azimuthal: d.bloch_azimuthal,
            random_pairs: d.random_pairs,
            weight_points: d.weight_points,
            refine_rounds: d.refine_rounds,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub seed: u64,
    pub n_traj: usize,
    pub k_max: usize,
    pub n_quad: usize,
    pub talbot_nodes: usize,
    pub method: Method,
    pub ordering: OrderingSpec,
    pub divisibility_tol: f64,
    pub cond_threshold: f64,
    pub opt: OptSpec,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_traj: 10_000,
            k_max: 24,
            n_quad: 257,
            talbot_nodes: 32,
            method: Method::Laplace,
            ordering: OrderingSpec::Micromaser,
            divisibility_tol: 1e-8,
            cond_threshold: oqdyn_core::nonmarkov::DEFAULT_COND_THRESHOLD,
            opt: OptSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub series: String,
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            series: "series.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

/// Family source for the measure/divisibility experiments.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySourceJson {
    Gksl(GkslJson),
    Semimarkov(SemiMarkovJson),
    Family(FamilyJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: serde_json::Value,
    #[serde(default)]
    pub initial_state: Option<MatrixJson>,
    #[serde(default)]
    pub initial_state_alt: Option<MatrixJson>,
    #[serde(default)]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

pub fn parse_config(bytes: &[u8]) -> Result<ExperimentConfig, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("config is not UTF-8: {e}"))?;
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        format!(
            "field `{}`: {} (line {}, column {})",
            e.path(),
            inner,
            inner.line(),
            inner.column()
        )
    })
}

pub fn parse_model<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T, String> {
    serde_path_to_error::deserialize(value.clone()).map_err(|e| format!("model.{}: {}", e.path(), e.inner()))
}

/// Collect every violation, not just the first.
pub fn diagnostics(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    // tabulated families carry their own grid
    let needs_grid = match cfg.kind {
        Kind::Measure | Kind::Divisibility => cfg.model.get("family").is_none(),
        _ => true,
    };
    if needs_grid {
        match &cfg.grid {
            None => out.push("grid: required for this experiment".into()),
            Some(g) => {
                if !(g.t_max > 0.0) {
                    out.push(format!("grid.t_max: must be positive, got {}", g.t_max));
                }
                if g.n_steps == 0 {
                    out.push("grid.n_steps: must be at least 1".into());
                }
            }
        }
    }
    match cfg.kind {
        Kind::Semigroup => match parse_model::<GkslJson>(&cfg.model) {
            Ok(m) => {
                gksl_diagnostics(&m, &mut out);
                state_diagnostics(cfg.initial_state.as_ref(), m.dim, true, &mut out);
            }
            Err(e) => out.push(e),
        },
        Kind::Bipartite => match parse_model::<BipartiteJson>(&cfg.model) {
            Ok(m) => {
                bipartite_diagnostics(&m, &mut out);
                state_diagnostics(cfg.initial_state.as_ref(), m.d_s, true, &mut out);
                state_diagnostics(cfg.initial_state_alt.as_ref(), m.d_s, false, &mut out);
            }
            Err(e) => out.push(e),
        },
        Kind::Semimarkov => match parse_model::<SemiMarkovJson>(&cfg.model) {
            Ok(m) => {
                semimarkov_diagnostics(&m, &mut out);
                state_diagnostics(cfg.initial_state.as_ref(), m.dim, true, &mut out);
            }
            Err(e) => out.push(e),
        },
        Kind::Classical => match parse_model::<ClassicalJson>(&cfg.model) {
            Ok(m) => {
                classical_diagnostics(&m, &mut out);
                match &cfg.initial_distribution {
                    None => out.push("initial_distribution: required for classical runs".into()),
                    Some(p0) => {
                        if p0.len() != m.pi.len() {
                            out.push(format!(
                                "initial_distribution: {} entries for {} sites",
                                p0.len(),
                                m.pi.len()
                            ));
                        }
                        if p0.iter().any(|&p| p < 0.0) {
                            out.push("initial_distribution: negative probability".into());
                        }
                        let sum: f64 = p0.iter().sum();
                        if (sum - 1.0).abs() > 1e-12 {
                            out.push(format!("initial_distribution: sums to {sum}, expected 1"));
                        }
                    }
                }
                if !matches!(cfg.solver.method, Method::Gme | Method::Mc) {
                    out.push("solver.method: classical runs support gme or mc".into());
                }
            }
            Err(e) => out.push(e),
        },
        Kind::Measure | Kind::Divisibility => match parse_model::<FamilySourceJson>(&cfg.model) {
            Ok(FamilySourceJson::Gksl(m)) => gksl_diagnostics(&m, &mut out),
            Ok(FamilySourceJson::Semimarkov(m)) => semimarkov_diagnostics(&m, &mut out),
            Ok(FamilySourceJson::Family(f)) => {
                if f.grid.len() != f.maps.len() {
                    out.push(format!(
                        "family: {} grid points but {} maps",
                        f.grid.len(),
                        f.maps.len()
                    ));
                }
            }
            Err(e) => out.push(e),
        },
    }
    out
}

fn state_diagnostics(
    state: Option<&MatrixJson>,
    dim: usize,
    required: bool,
    out: &mut Vec<String>,
) {
    match state {
        None if required => out.push("initial_state: required for this experiment".into()),
        None => {}
        Some(j) => match matrix_from_json(j) {
            Err(e) => out.push(format!("initial_state: {e}")),
            Ok(m) => {
                if m.nrows() != dim {
                    out.push(format!(
                        "initial_state: dimension {} does not match model dimension {dim}",
                        m.nrows()
                    ));
                }
                if let Err(e) = DensityMatrix::new(m) {
                    out.push(format!("initial_state: {e}"));
                }
            }
        },
    }
}

fn gksl_diagnostics(m: &GkslJson, out: &mut Vec<String>) {
    for (i, ch) in m.channels.iter().enumerate() {
        if ch.gamma < 0.0 {
            out.push(format!("channel {i}: negative rate {}", ch.gamma));
        }
        match matrix_from_json(&ch.operator) {
            Err(e) => out.push(format!("channel {i}: {e}")),
            Ok(op) => {
                if op.nrows() != m.dim || op.ncols() != m.dim {
                    out.push(format!("channel {i}: operator is {}x{}", op.nrows(), op.ncols()));
                }
            }
        }
    }
    match matrix_from_json(&m.hamiltonian) {
        Err(e) => out.push(format!("H: {e}")),
        Ok(h) => {
            if h.nrows() != m.dim || h.ncols() != m.dim {
                out.push(format!("H: expected {0}x{0}, got {1}x{2}", m.dim, h.nrows(), h.ncols()));
            } else {
                let defect = hermiticity_defect(&h);
                if defect > 1e-12 {
                    out.push(format!("H: hermiticity defect {defect:.3e}"));
                }
            }
        }
    }
}

fn bipartite_diagnostics(m: &BipartiteJson, out: &mut Vec<String>) {
    match matrix_from_json(&m.h_total) {
        Err(e) => out.push(format!("H_total: {e}")),
        Ok(h) => {
            if h.nrows() != m.d_s * m.d_e {
                out.push(format!(
                    "H_total: expected {}x{0}, got {}",
                    m.d_s * m.d_e,
                    h.nrows()
                ));
            } else if hermiticity_defect(&h) > 1e-12 {
                out.push(format!("H_total: hermiticity defect {:.3e}", hermiticity_defect(&h)));
            }
        }
    }
    match matrix_from_json(&m.rho_e) {
        Err(e) => out.push(format!("rho_E: {e}")),
        Ok(r) => {
            if r.nrows() != m.d_e {
                out.push(format!("rho_E: dimension {} does not match dE = {}", r.nrows(), m.d_e));
            } else if let Err(e) = DensityMatrix::new(r) {
                out.push(format!("rho_E: {e}"));
            }
        }
    }
}

fn semimarkov_diagnostics(m: &SemiMarkovJson, out: &mut Vec<String>) {
    gksl_diagnostics(&m.inter, out);
    if m.inter.dim != m.dim {
        out.push(format!(
            "F_generator: dimension {} does not match dim = {}",
            m.inter.dim, m.dim
        ));
    }
    wtd_diagnostics(&m.wtd, "wtd", out);
    match oqdyn_core::QuantumMap::try_from(&m.jump) {
        Err(e) => out.push(format!("E: {e}")),
        Ok(jump) => {
            if jump.dim_in() != m.dim {
                out.push(format!("E: dimension {} does not match dim = {}", jump.dim_in(), m.dim));
            } else {
                let rep = jump.is_cptp(1e-8);
                if !rep.cp {
                    out.push(format!("E: not completely positive (min Choi eig {:.3e})", rep.min_choi_eig));
                }
                if !rep.tp {
                    out.push(format!("E: not trace preserving (defect {:.3e})", rep.tp_defect));
                }
            }
        }
    }
}

fn wtd_diagnostics(w: &oqdyn_core::json::WtdJson, label: &str, out: &mut Vec<String>) {
    let total: f64 = w.alpha.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        out.push(format!("{label}.alpha: sums to {total}, expected 1"));
    }
    if w.alpha.iter().any(|&a| a < 0.0) {
        out.push(format!("{label}.alpha: negative entry"));
    }
    if let Err(e) = oqdyn_core::PhaseTypeWTD::try_from(w) {
        out.push(format!("{label}: {e}"));
    }
}

fn classical_diagnostics(m: &ClassicalJson, out: &mut Vec<String>) {
    let n = m.pi.len();
    for (i, row) in m.pi.iter().enumerate() {
        if row.len() != n {
            out.push(format!("pi: row {i} has {} entries, expected {n}", row.len()));
        }
    }
    if m.pi.iter().all(|r| r.len() == n) {
        for col in 0..n {
            let sum: f64 = (0..n).map(|row| m.pi[row][col]).sum();
            if (sum - 1.0).abs() > 1e-12 {
                out.push(format!("pi: column {col} sums to {sum}, expected 1"));
            }
            for row in 0..n {
                if m.pi[row][col] < 0.0 {
                    out.push(format!("pi: negative entry at ({row},{col})"));
                }
            }
        }
    }
    if m.wtds.len() != n {
        out.push(format!("wtds: {} distributions for {n} sites", m.wtds.len()));
    }
    for (i, w) in m.wtds.iter().enumerate() {
        wtd_diagnostics(w, &format!("wtds[{i}]"), out);
    }
}
