//! JSON documents for models and networks.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are `{rows, cols, data}` with
//! `data` in row-major order.

use crate::delay::{DelayNetwork, DelaySpec};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::lti::{RationalTf, SlhModel, StateSpaceModel};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Invalid {
                op: "MatrixDoc::to_matrix",
                detail: format!("{} entries for a {}x{} matrix", self.data.len(), self.rows, self.cols),
            });
        }
        Ok(CMat::from_row_iterator(self.rows, self.cols, self.data.iter().map(|p| C64::new(p[0], p[1]))))
    }
}

/// `serde(with)` adapter for [`CMat`].
pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        MatrixDoc::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}

/// Open system given either as SLH data or as a block-layout realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelDoc {
    Slh {
        s: MatrixDoc,
        lambda_minus: MatrixDoc,
        lambda_plus: MatrixDoc,
        /// `2·modes` square doubled-up Hamiltonian, block layout.
        omega: MatrixDoc,
    },
    StateSpace {
        /// Number of state modes; `a` is `2·state_modes` square.
        state_modes: usize,
        /// Number of port modes; `d` is `2·port_modes` square.
        port_modes: usize,
        a: MatrixDoc,
        b: MatrixDoc,
        c: MatrixDoc,
        d: MatrixDoc,
    },
}

impl ModelDoc {
    pub fn from_slh(m: &SlhModel) -> Self {
        ModelDoc::Slh {
            s: MatrixDoc::from_matrix(&m.s),
            lambda_minus: MatrixDoc::from_matrix(&m.lambda_minus),
            lambda_plus: MatrixDoc::from_matrix(&m.lambda_plus),
            omega: MatrixDoc::from_matrix(&m.omega),
        }
    }

    pub fn from_state_space(ss: &StateSpaceModel) -> Self {
        ModelDoc::StateSpace {
            state_modes: ss.state_dim() / 2,
            port_modes: ss.port_dim() / 2,
            a: MatrixDoc::from_matrix(&ss.a),
            b: MatrixDoc::from_matrix(&ss.b),
            c: MatrixDoc::from_matrix(&ss.c),
            d: MatrixDoc::from_matrix(&ss.d),
        }
    }

    pub fn to_tf(&self) -> Result<RationalTf> {
        match self {
            ModelDoc::Slh { s, lambda_minus, lambda_plus, omega } => RationalTf::from_slh(&SlhModel::new(
                s.to_matrix()?,
                lambda_minus.to_matrix()?,
                lambda_plus.to_matrix()?,
                omega.to_matrix()?,
            )?),
            ModelDoc::StateSpace { state_modes, port_modes, a, b, c, d } => {
                let ss = StateSpaceModel::new(a.to_matrix()?, b.to_matrix()?, c.to_matrix()?, d.to_matrix()?)?;
                if ss.state_dim() != 2 * state_modes || ss.port_dim() != 2 * port_modes {
                    return Err(Error::DimensionMismatch {
                        op: "ModelDoc::to_tf",
                        detail: format!(
                            "declared {state_modes} state and {port_modes} port modes, matrices give {} and {}",
                            ss.state_dim() / 2,
                            ss.port_dim() / 2
                        ),
                    });
                }
                Ok(RationalTf::new(ss))
            }
        }
    }
}

/// Network description: open model, number of external port modes, loop delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub model: ModelDoc,
    /// External port modes; the remaining port modes are looped through the delays.
    pub n_external: usize,
    pub delays: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_period: Option<f64>,
}

impl NetworkDoc {
    pub fn to_network(&self) -> Result<DelayNetwork> {
        let delays = match self.base_period {
            Some(b) => DelaySpec::new(self.delays.clone(), b)?,
            None => DelaySpec::infer(self.delays.clone())?,
        };
        DelayNetwork::new(self.model.to_tf()?, self.n_external, delays)
    }

    pub fn from_slh(m: &SlhModel, n_external: usize, delays: &DelaySpec) -> Self {
        Self {
            model: ModelDoc::from_slh(m),
            n_external,
            delays: delays.delays.clone(),
            base_period: Some(delays.base_period),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = CMat::from_fn(3, 2, |i, j| c(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) * std::f64::consts::PI));
        let text = serde_json::to_string(&MatrixDoc::from_matrix(&m)).unwrap();
        let back: MatrixDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn wrong_entry_count_is_rejected() {
        let d = MatrixDoc { rows: 2, cols: 2, data: vec![[0.0, 0.0]; 3] };
        assert!(d.to_matrix().is_err());
    }
}
