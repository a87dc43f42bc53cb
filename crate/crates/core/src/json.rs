//! JSON interchange formats.
//!
//! Matrices: `{"dim": rows, "data": [[re, im], ...]}` in row-major order, with
//! an extra `"cols"` field only for non-square matrices. Floats are written
//! in shortest round-trip form, so save/load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decomp::ConvexDecomposition;
use crate::error::{Error, Result};
use crate::grape::{ControlPulse, SpinSystem};
use crate::linalg::{c, CMatrix};
use crate::qcore::KrausChannel;
use crate::superchan::{GenExtremeSuperchannel, SuperchannelChoi};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(r, col)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            dim: m.nrows(),
            cols: (m.ncols() != m.nrows()).then_some(m.ncols()),
            data,
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let cols = self.cols.unwrap_or(self.dim);
        if self.data.len() != self.dim * cols {
            return Err(Error::Format(format!(
                "matrix declares {}x{} but carries {} entries",
                self.dim,
                cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("matrix contains non-finite entries".into()));
        }
        Ok(CMatrix::from_fn(self.dim, cols, |r, k| {
            let [re, im] = self.data[r * cols + k];
            c(re, im)
        }))
    }
}

pub fn matrix_to_value(m: &CMatrix) -> Value {
    serde_json::to_value(MatrixJson::from(m)).expect("plain data")
}

pub fn matrix_from_value(v: &Value) -> Result<CMatrix> {
    MatrixJson::deserialize(v)?.to_matrix()
}

pub fn to_pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    fs::write(path, to_pretty(v)?)?;
    Ok(())
}

pub fn read_value(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Missing(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    matrix_from_value(&read_value(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelJson {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<MatrixJson>,
}

pub fn channel_to_value(ch: &KrausChannel) -> Value {
    serde_json::to_value(ChannelJson {
        dim_in: ch.dim_in(),
        dim_out: ch.dim_out(),
        kraus: ch.kraus().iter().map(MatrixJson::from).collect(),
    })
    .expect("plain data")
}

pub fn channel_from_value(v: &Value) -> Result<KrausChannel> {
    let j = ChannelJson::deserialize(v)?;
    let kraus = j
        .kraus
        .iter()
        .map(MatrixJson::to_matrix)
        .collect::<Result<Vec<_>>>()?;
    let ch = KrausChannel::new(kraus)?;
    if ch.dim_in() != j.dim_in || ch.dim_out() != j.dim_out {
        return Err(Error::Format(format!(
            "channel declares {} -> {} but its operators are {} -> {}",
            j.dim_in,
            j.dim_out,
            ch.dim_in(),
            ch.dim_out()
        )));
    }
    Ok(ch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ComponentJson {
    #[serde(rename = "V")]
    v: MatrixJson,
    #[serde(rename = "W")]
    w: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DecompositionJson {
    weights: Vec<f64>,
    components: Vec<ComponentJson>,
    achieved_distance: f64,
    converged: bool,
    seed: u64,
}

pub fn decomposition_to_value(d: &ConvexDecomposition) -> Value {
    serde_json::to_value(DecompositionJson {
        weights: d.weights.clone(),
        components: d
            .components
            .iter()
            .map(|g| ComponentJson {
                v: g.v().into(),
                w: g.w().into(),
            })
            .collect(),
        achieved_distance: d.achieved_distance,
        converged: d.converged,
        seed: d.seed,
    })
    .expect("plain data")
}

/// Loads a decomposition and checks its recorded distance against `target`.
pub fn decomposition_from_value(
    v: &Value,
    target: &SuperchannelChoi,
) -> Result<ConvexDecomposition> {
    let j = DecompositionJson::deserialize(v)?;
    let components = j
        .components
        .iter()
        .map(|cj| GenExtremeSuperchannel::new(cj.v.to_matrix()?, cj.w.to_matrix()?))
        .collect::<Result<Vec<_>>>()?;
    let mut d = ConvexDecomposition::new(j.weights, components, target)?;
    if (d.achieved_distance - j.achieved_distance).abs() > 1e-12 {
        return Err(Error::Invariant(format!(
            "recorded distance {} disagrees with recomputed {}",
            j.achieved_distance, d.achieved_distance
        )));
    }
    d.converged = j.converged;
    d.seed = j.seed;
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpinSystemJson {
    chemical_shifts_hz: Vec<f64>,
    /// `[i, j, J]` triples with `i < j`.
    j_couplings_hz: Vec<(usize, usize, f64)>,
}

pub fn spin_system_to_value(sys: &SpinSystem) -> Value {
    serde_json::to_value(SpinSystemJson {
        chemical_shifts_hz: sys.chemical_shifts().to_vec(),
        j_couplings_hz: sys
            .j_couplings()
            .iter()
            .map(|(&(i, j), &v)| (i, j, v))
            .collect(),
    })
    .expect("plain data")
}

pub fn spin_system_from_value(v: &Value) -> Result<SpinSystem> {
    let j = SpinSystemJson::deserialize(v)?;
    let mut couplings = std::collections::BTreeMap::new();
    for (a, b, val) in j.j_couplings_hz {
        if couplings.insert((a, b), val).is_some() {
            return Err(Error::Format(format!("coupling ({a}, {b}) listed twice")));
        }
    }
    SpinSystem::new(j.chemical_shifts_hz, couplings)
}

pub fn pulse_to_value(p: &ControlPulse) -> Value {
    serde_json::to_value(p).expect("plain data")
}

pub fn pulse_from_value(v: &Value) -> Result<ControlPulse> {
    let p = ControlPulse::deserialize(v)?;
    p.validate()?;
    Ok(p)
}
