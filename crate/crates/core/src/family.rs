//! Tabulated dynamics families: a time grid with one CPTP superoperator
//! Φ(t_i, 0) per grid point.

use crate::error::{Error, Result};
use crate::gksl::GKSLModel;
use crate::linalg::{cx, expm, identity, max_abs, CMatrix};
use crate::map::QuantumMap;

/// CP/TP tolerance applied to every tabulated map at construction.
pub const FAMILY_CPTP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DynamicsFamily {
    dim: usize,
    times: Vec<f64>,
    supers: Vec<CMatrix>,
}

impl DynamicsFamily {
    /// Validates the grid (t₀ = 0, strictly increasing), the identity at the
    /// origin, and CPTP of every map within [`FAMILY_CPTP_TOL`].
    pub fn new(dim: usize, times: Vec<f64>, supers: Vec<CMatrix>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::param("grid", "empty time grid"));
        }
        if times.len() != supers.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: supers.len(),
            });
        }
        if times[0].abs() > 1e-12 {
            return Err(Error::param("grid", format!("grid must start at 0, got {}", times[0])));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::param("grid", "grid times must be strictly increasing"));
            }
        }
        let d2 = dim * dim;
        for (i, s) in supers.iter().enumerate() {
            if s.nrows() != d2 || s.ncols() != d2 {
                return Err(Error::DimensionMismatch {
                    expected: d2,
                    actual: s.nrows(),
                });
            }
            let map = QuantumMap::from_superoperator(s.clone())?;
            let report = map.is_cptp(FAMILY_CPTP_TOL);
            if !report.cp || !report.tp {
                return Err(Error::param(
                    "maps",
                    format!(
                        "map {i} fails CPTP: min Choi eig {:.3e}, TP defect {:.3e}",
                        report.min_choi_eig, report.tp_defect
                    ),
                ));
            }
        }
        if max_abs(&(&supers[0] - identity(d2))) > 1e-8 {
            return Err(Error::param("maps", "map at t=0 must be the identity"));
        }
        Ok(Self { dim, times, supers })
    }

    /// Semigroup family Φ(t_i) = exp(t_i 𝓛) of a GKSL model.
    pub fn from_gksl(model: &GKSLModel, times: &[f64]) -> Result<Self> {
        let l = model.liouvillian();
        let supers = times
            .iter()
            .map(|&t| {
                if t < 0.0 {
                    Err(Error::param("grid", format!("negative time {t}")))
                } else {
                    Ok(expm(&(&l * cx(t, 0.0))))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(model.dim(), times.to_vec(), supers)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn superoperator(&self, i: usize) -> &CMatrix {
        &self.supers[i]
    }

    pub fn map(&self, i: usize) -> QuantumMap {
        QuantumMap::from_superoperator(self.supers[i].clone()).expect("validated dims")
    }

    /// The same family in a rotated frame: Φ ↦ 𝒰 Φ 𝒰† with 𝒰 = U·U†.
    /// Unitary invariance of the trace norm makes every distinguishability
    /// trajectory of the rotated family coincide with the original one at
    /// rotated state pairs.
    pub fn conjugated_by(&self, u: &CMatrix) -> Result<Self> {
        let rot = QuantumMap::from_unitary(u)?.superoperator();
        let rot_inv = rot.adjoint();
        let supers = self.supers.iter().map(|s| &rot * s * &rot_inv).collect();
        Self::new(self.dim, self.times.clone(), supers)
    }
}

/// Uniform grid 0, h, 2h, …, t_max with `n_steps` intervals.
pub fn uniform_grid(t_max: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) {
        return Err(Error::param("t_max", format!("need t_max > 0, got {t_max}")));
    }
    if n_steps == 0 {
        return Err(Error::param("n_steps", "need at least one step"));
    }
    let h = t_max / n_steps as f64;
    Ok((0..=n_steps).map(|i| i as f64 * h).collect())
}
