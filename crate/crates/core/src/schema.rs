//! JSON model schema.
//!
//! Top-level object tagged by `"space"`:
//!
//! ```json
//! {
//!   "space": "canonical",
//!   "m": 1, "n": 0,
//!   "a": [[0.0]],
//!   "alpha": [[[0.25]]],
//!   "b": [0.2],
//!   "beta": [[-0.1]],
//!   "jump0": {"rate": 1.0, "law": {"kind": "exponential_ray", "direction": [1.0], "rate": 2.0}},
//!   "jumps": [null]
//! }
//! ```
//!
//! ```json
//! {
//!   "space": "psd",
//!   "d": 2,
//!   "b": [[2.0, 0.0], [0.0, 2.0]],
//!   "beta": [[-0.5, 0.0], [0.0, -0.5]],
//!   "q": [[1.0, 0.0], [0.0, 1.0]],
//!   "jump": {"rate": 0.5, "law": {"kind": "exponential_rank_one", "direction": [1.0, 0.0], "rate": 2.0}}
//! }
//! ```
//!
//! Matrices are row-major nested arrays; jump laws are tagged objects. The
//! schema round-trips through the domain types losslessly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AffineError, Result};
use crate::jumps::{JumpSpec, MatrixJump, MatrixJumpSpec, VectorJump};
use crate::model::{CanonicalAffineModel, WishartModel};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorLawDoc {
    PointMass { displacement: Vec<f64> },
    ExponentialRay { direction: Vec<f64>, rate: f64 },
    GammaRay { direction: Vec<f64>, shape: f64, scale: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VectorJumpDoc {
    pub rate: f64,
    pub law: VectorLawDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixLawDoc {
    PointMass { displacement: Vec<Vec<f64>> },
    ExponentialRankOne { direction: Vec<f64>, rate: f64 },
    GaussianRankOne { cov: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixJumpDoc {
    pub rate: f64,
    pub law: MatrixLawDoc,
}

/// Top-level model document, tagged by `"space"`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "space", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelDocument {
    Canonical {
        m: usize,
        n: usize,
        a: Vec<Vec<f64>>,
        alpha: Vec<Vec<Vec<f64>>>,
        b: Vec<f64>,
        beta: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jump0: Option<VectorJumpDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jumps: Option<Vec<Option<VectorJumpDoc>>>,
    },
    Psd {
        d: usize,
        b: Vec<Vec<f64>>,
        beta: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jump: Option<MatrixJumpDoc>,
    },
}

/// Either model kind, after conversion.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Canonical(CanonicalAffineModel),
    Psd(WishartModel),
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(AffineError::Dimension(format!("{name}: empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(AffineError::Dimension(format!(
            "{name}: ragged rows in matrix"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows_from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl VectorLawDoc {
    fn to_domain(&self) -> VectorJump {
        match self {
            VectorLawDoc::PointMass { displacement } => VectorJump::PointMass {
                displacement: DVector::from_vec(displacement.clone()),
            },
            VectorLawDoc::ExponentialRay { direction, rate } => VectorJump::ExponentialRay {
                direction: DVector::from_vec(direction.clone()),
                rate: *rate,
            },
            VectorLawDoc::GammaRay {
                direction,
                shape,
                scale,
            } => VectorJump::GammaRay {
                direction: DVector::from_vec(direction.clone()),
                shape: *shape,
                scale: *scale,
            },
        }
    }

    fn from_domain(law: &VectorJump) -> Self {
        match law {
            VectorJump::PointMass { displacement } => VectorLawDoc::PointMass {
                displacement: displacement.iter().copied().collect(),
            },
            VectorJump::ExponentialRay { direction, rate } => VectorLawDoc::ExponentialRay {
                direction: direction.iter().copied().collect(),
                rate: *rate,
            },
            VectorJump::GammaRay {
                direction,
                shape,
                scale,
            } => VectorLawDoc::GammaRay {
                direction: direction.iter().copied().collect(),
                shape: *shape,
                scale: *scale,
            },
        }
    }
}

impl MatrixLawDoc {
    fn to_domain(&self) -> Result<MatrixJump> {
        Ok(match self {
            MatrixLawDoc::PointMass { displacement } => MatrixJump::PointMass {
                displacement: matrix_from_rows("jump displacement", displacement)?,
            },
            MatrixLawDoc::ExponentialRankOne { direction, rate } => {
                MatrixJump::ExponentialRankOne {
                    direction: DVector::from_vec(direction.clone()),
                    rate: *rate,
                }
            }
            MatrixLawDoc::GaussianRankOne { cov } => MatrixJump::GaussianRankOne {
                cov: matrix_from_rows("jump cov", cov)?,
            },
        })
    }

    fn from_domain(law: &MatrixJump) -> Self {
        match law {
            MatrixJump::PointMass { displacement } => MatrixLawDoc::PointMass {
                displacement: rows_from_matrix(displacement),
            },
            MatrixJump::ExponentialRankOne { direction, rate } => {
                MatrixLawDoc::ExponentialRankOne {
                    direction: direction.iter().copied().collect(),
                    rate: *rate,
                }
            }
            MatrixJump::GaussianRankOne { cov } => MatrixLawDoc::GaussianRankOne {
                cov: rows_from_matrix(cov),
            },
        }
    }
}

impl ModelDocument {
    pub fn to_domain(&self) -> Result<AnyModel> {
        match self {
            ModelDocument::Canonical {
                m,
                n,
                a,
                alpha,
                b,
                beta,
                jump0,
                jumps,
            } => {
                let model = CanonicalAffineModel {
                    m: *m,
                    n: *n,
                    a: matrix_from_rows("a", a)?,
                    alpha: alpha
                        .iter()
                        .enumerate()
                        .map(|(i, rows)| matrix_from_rows(&format!("alpha[{i}]"), rows))
                        .collect::<Result<_>>()?,
                    b: DVector::from_vec(b.clone()),
                    beta: matrix_from_rows("beta", beta)?,
                    jump0: jump0.as_ref().map(|j| JumpSpec {
                        rate: j.rate,
                        law: j.law.to_domain(),
                    }),
                    jumps_linear: match jumps {
                        Some(list) => list
                            .iter()
                            .map(|j| {
                                j.as_ref().map(|j| JumpSpec {
                                    rate: j.rate,
                                    law: j.law.to_domain(),
                                })
                            })
                            .collect(),
                        None => vec![None; *m],
                    },
                };
                Ok(AnyModel::Canonical(model))
            }
            ModelDocument::Psd { d, b, beta, q, jump } => {
                let model = WishartModel {
                    d: *d,
                    b: matrix_from_rows("b", b)?,
                    beta: matrix_from_rows("beta", beta)?,
                    q: matrix_from_rows("q", q)?,
                    jump: match jump {
                        Some(j) => Some(MatrixJumpSpec {
                            rate: j.rate,
                            law: j.law.to_domain()?,
                        }),
                        None => None,
                    },
                };
                Ok(AnyModel::Psd(model))
            }
        }
    }

    pub fn from_canonical(model: &CanonicalAffineModel) -> Self {
        ModelDocument::Canonical {
            m: model.m,
            n: model.n,
            a: rows_from_matrix(&model.a),
            alpha: model.alpha.iter().map(rows_from_matrix).collect(),
            b: model.b.iter().copied().collect(),
            beta: rows_from_matrix(&model.beta),
            jump0: model.jump0.as_ref().map(|j| VectorJumpDoc {
                rate: j.rate,
                law: VectorLawDoc::from_domain(&j.law),
            }),
            jumps: if model.jumps_linear.iter().any(|j| j.is_some()) {
                Some(
                    model
                        .jumps_linear
                        .iter()
                        .map(|j| {
                            j.as_ref().map(|j| VectorJumpDoc {
                                rate: j.rate,
                                law: VectorLawDoc::from_domain(&j.law),
                            })
                        })
                        .collect(),
                )
            } else {
                None
            },
        }
    }

    pub fn from_psd(model: &WishartModel) -> Self {
        ModelDocument::Psd {
            d: model.d,
            b: rows_from_matrix(&model.b),
            beta: rows_from_matrix(&model.beta),
            q: rows_from_matrix(&model.q),
            jump: model.jump.as_ref().map(|j| MatrixJumpDoc {
                rate: j.rate,
                law: MatrixLawDoc::from_domain(&j.law),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_roundtrip() {
        let mut model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        model.jump0 = Some(JumpSpec {
            rate: 1.5,
            law: VectorJump::GammaRay {
                direction: DVector::from_element(1, 1.0),
                shape: 2.0,
                scale: 0.25,
            },
        });
        let doc = ModelDocument::from_canonical(&model);
        let json = serde_json::to_string_pretty(&doc).unwrap();
        let parsed: ModelDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, parsed);
        match parsed.to_domain().unwrap() {
            AnyModel::Canonical(back) => assert_eq!(model, back),
            AnyModel::Psd(_) => panic!("wrong space"),
        }
    }

    #[test]
    fn psd_roundtrip() {
        let model = WishartModel {
            d: 2,
            b: DMatrix::identity(2, 2) * 2.0,
            beta: DMatrix::identity(2, 2) * -0.5,
            q: DMatrix::identity(2, 2),
            jump: Some(MatrixJumpSpec {
                rate: 0.7,
                law: MatrixJump::ExponentialRankOne {
                    direction: DVector::from_vec(vec![1.0, 0.5]),
                    rate: 3.0,
                },
            }),
        };
        let doc = ModelDocument::from_psd(&model);
        let json = serde_json::to_string(&doc).unwrap();
        let parsed: ModelDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, parsed);
        match parsed.to_domain().unwrap() {
            AnyModel::Psd(back) => assert_eq!(model, back),
            AnyModel::Canonical(_) => panic!("wrong space"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let json = r#"{"space": "canonical", "m": 1, "n": 0, "a": [[0.0]],
                       "alpha": [[[0.25]]], "b": [0.2], "beta": [[-0.1]],
                       "volatility": 3.0}"#;
        assert!(serde_json::from_str::<ModelDocument>(json).is_err());
    }

    #[test]
    fn ragged_matrix_rejected() {
        let doc = ModelDocument::Canonical {
            m: 1,
            n: 1,
            a: vec![vec![0.0, 0.0], vec![0.0]],
            alpha: vec![vec![vec![1.0, 0.0], vec![0.0, 0.0]]],
            b: vec![0.1, 0.0],
            beta: vec![vec![-0.1, 0.0], vec![0.0, -0.2]],
            jump0: None,
            jumps: None,
        };
        assert!(matches!(doc.to_domain(), Err(AffineError::Dimension(_))));
    }
}
