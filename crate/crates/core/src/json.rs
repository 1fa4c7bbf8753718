//! Shared JSON schemas. Complex matrices serialize as row-major arrays of
//! `[re, im]` pairs; this format is common to all model files and the CLI.

use crate::bipartite::BipartiteModel;
use crate::classical::ClassicalSemiMarkov;
use crate::error::{Error, Result};
use crate::family::DynamicsFamily;
use crate::gksl::{Channel, GKSLModel};
use crate::linalg::{cx, CMatrix};
use crate::map::QuantumMap;
use crate::semimarkov::SemiMarkovModel;
use crate::state::DensityMatrix;
use crate::wtd::PhaseTypeWTD;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(j: &MatrixJson) -> Result<CMatrix> {
    let rows = j.len();
    if rows == 0 {
        return Err(Error::Json("empty matrix".into()));
    }
    let cols = j[0].len();
    if cols == 0 || j.iter().any(|r| r.len() != cols) {
        return Err(Error::Json("ragged or empty matrix rows".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, k| cx(j[i][k][0], j[i][k][1])))
}

pub fn real_matrix_from_json(j: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let rows = j.len();
    if rows == 0 {
        return Err(Error::Json("empty matrix".into()));
    }
    let cols = j[0].len();
    if cols == 0 || j.iter().any(|r| r.len() != cols) {
        return Err(Error::Json("ragged or empty matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, k| j[i][k]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub gamma: f64,
    #[serde(rename = "L")]
    pub operator: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkslJson {
    pub dim: usize,
    #[serde(rename = "H")]
    pub hamiltonian: MatrixJson,
    pub channels: Vec<ChannelJson>,
}

impl TryFrom<&GkslJson> for GKSLModel {
    type Error = Error;
    fn try_from(j: &GkslJson) -> Result<Self> {
        let h = matrix_from_json(&j.hamiltonian)?;
        if h.nrows() != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                actual: h.nrows(),
            });
        }
        let channels = j
            .channels
            .iter()
            .map(|c| {
                Ok(Channel {
                    rate: c.gamma,
                    operator: matrix_from_json(&c.operator)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GKSLModel::new(h, channels)
    }
}

impl From<&GKSLModel> for GkslJson {
    fn from(m: &GKSLModel) -> Self {
        Self {
            dim: m.dim(),
            hamiltonian: matrix_to_json(m.hamiltonian()),
            channels: m
                .channels()
                .iter()
                .map(|c| ChannelJson {
                    gamma: c.rate,
                    operator: matrix_to_json(&c.operator),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteJson {
    #[serde(rename = "dS")]
    pub d_s: usize,
    #[serde(rename = "dE")]
    pub d_e: usize,
    #[serde(rename = "H_total")]
    pub h_total: MatrixJson,
    #[serde(rename = "rho_E")]
    pub rho_e: MatrixJson,
}

impl TryFrom<&BipartiteJson> for BipartiteModel {
    type Error = Error;
    fn try_from(j: &BipartiteJson) -> Result<Self> {
        BipartiteModel::new(
            j.d_s,
            j.d_e,
            matrix_from_json(&j.h_total)?,
            DensityMatrix::new(matrix_from_json(&j.rho_e)?)?,
        )
    }
}

/// External representation of a quantum map, tagged by representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum QuantumMapJson {
    Kraus(Vec<MatrixJson>),
    Superoperator(MatrixJson),
    Choi(MatrixJson),
}

impl TryFrom<&QuantumMapJson> for QuantumMap {
    type Error = Error;
    fn try_from(j: &QuantumMapJson) -> Result<Self> {
        match j {
            QuantumMapJson::Kraus(ops) => {
                let ops = ops.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                QuantumMap::from_kraus(ops)
            }
            QuantumMapJson::Superoperator(s) => QuantumMap::from_superoperator(matrix_from_json(s)?),
            QuantumMapJson::Choi(c) => {
                let c = matrix_from_json(c)?;
                let d = (c.nrows() as f64).sqrt().round() as usize;
                if d * d != c.nrows() {
                    return Err(Error::Json(format!(
                        "choi matrix size {} is not a perfect square",
                        c.nrows()
                    )));
                }
                QuantumMap::from_choi(c, d, d)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtdJson {
    pub alpha: Vec<f64>,
    #[serde(rename = "S")]
    pub subgenerator: Vec<Vec<f64>>,
}

impl TryFrom<&WtdJson> for PhaseTypeWTD {
    type Error = Error;
    fn try_from(j: &WtdJson) -> Result<Self> {
        PhaseTypeWTD::new(j.alpha.clone(), real_matrix_from_json(&j.subgenerator)?)
    }
}

impl From<&PhaseTypeWTD> for WtdJson {
    fn from(w: &PhaseTypeWTD) -> Self {
        Self {
            alpha: w.initial().iter().copied().collect(),
            subgenerator: (0..w.stages())
                .map(|i| (0..w.stages()).map(|j| w.subgenerator()[(i, j)]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiMarkovJson {
    pub dim: usize,
    #[serde(rename = "E")]
    pub jump: QuantumMapJson,
    #[serde(rename = "F_generator")]
    pub inter: GkslJson,
    pub wtd: WtdJson,
}

impl TryFrom<&SemiMarkovJson> for SemiMarkovModel {
    type Error = Error;
    fn try_from(j: &SemiMarkovJson) -> Result<Self> {
        let jump = QuantumMap::try_from(&j.jump)?;
        if jump.dim_in() != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                actual: jump.dim_in(),
            });
        }
        SemiMarkovModel::new(jump, GKSLModel::try_from(&j.inter)?, PhaseTypeWTD::try_from(&j.wtd)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalJson {
    pub pi: Vec<Vec<f64>>,
    pub wtds: Vec<WtdJson>,
}

impl TryFrom<&ClassicalJson> for ClassicalSemiMarkov {
    type Error = Error;
    fn try_from(j: &ClassicalJson) -> Result<Self> {
        ClassicalSemiMarkov::new(
            real_matrix_from_json(&j.pi)?,
            j.wtds.iter().map(PhaseTypeWTD::try_from).collect::<Result<Vec<_>>>()?,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyJson {
    pub grid: Vec<f64>,
    pub maps: Vec<MatrixJson>,
}

impl TryFrom<&FamilyJson> for DynamicsFamily {
    type Error = Error;
    fn try_from(j: &FamilyJson) -> Result<Self> {
        let maps = j.maps.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        let d2 = maps.first().map(|m| m.nrows()).unwrap_or(0);
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 {
            return Err(Error::Json(format!("superoperator size {d2} is not a perfect square")));
        }
        DynamicsFamily::new(d, j.grid.clone(), maps)
    }
}

impl From<&DynamicsFamily> for FamilyJson {
    fn from(f: &DynamicsFamily) -> Self {
        Self {
            grid: f.times().to_vec(),
            maps: (0..f.len()).map(|i| matrix_to_json(f.superoperator(i))).collect(),
        }
    }
}
