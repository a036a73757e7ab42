//! Versioned JSON model documents.
//!
//! MLP weight arrays are base64 of little-endian `f32` bytes; linear weights,
//! standardizer statistics and the output bias are decimal strings in
//! shortest round-trip form. Loading reproduces the model bit for bit.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{LinearModel, MeanModel, MlpModel, MlpParams, ModelKind, Predictor, RegressionModel, HIDDEN_1, HIDDEN_2};
use crate::data::Standardizer;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerDocument {
    pub mean: Vec<String>,
    pub std: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeightsDocument {
    pub hidden_widths: [usize; 2],
    pub w1: String,
    pub b1: String,
    pub w2: String,
    pub b2: String,
    pub output_hidden: String,
    pub output_shortcut: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub kind: ModelKind,
    pub n_features: usize,
    pub standardizer: Option<StandardizerDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_weights: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpWeightsDocument>,
    pub bias: String,
}

fn dec(v: f64) -> String {
    format!("{v:?}")
}

fn parse_dec(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::ModelFormat(format!("not a finite decimal: {s:?}")))
}

fn encode_f32(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_f32(s: &str, expected: usize, name: &str) -> Result<Vec<f32>> {
    let bytes = B64.decode(s).map_err(|e| Error::ModelFormat(format!("{name}: {e}")))?;
    if bytes.len() != expected * 4 {
        return Err(Error::ModelFormat(format!(
            "{name}: {} bytes, expected {}",
            bytes.len(),
            expected * 4
        )));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ModelFormat(format!("{name}: non-finite weight")));
    }
    Ok(values)
}

impl RegressionModel {
    pub fn to_document(&self) -> ModelDocument {
        let standardizer = self.standardizer().map(|s| StandardizerDocument {
            mean: s.mean.iter().copied().map(dec).collect(),
            std: s.std.iter().copied().map(dec).collect(),
        });
        let (linear_weights, mlp) = match self.predictor() {
            Predictor::Linear(m) => (Some(m.weights.iter().copied().map(dec).collect()), None),
            Predictor::Mlp(m) => (
                None,
                Some(MlpWeightsDocument {
                    hidden_widths: [HIDDEN_1, HIDDEN_2],
                    w1: encode_f32(&m.params.w1),
                    b1: encode_f32(&m.params.b1),
                    w2: encode_f32(&m.params.w2),
                    b2: encode_f32(&m.params.b2),
                    output_hidden: encode_f32(&m.params.output_hidden),
                    output_shortcut: encode_f32(&m.params.output_shortcut),
                }),
            ),
            Predictor::Mean(_) => (None, None),
        };
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            n_features: self.n_features(),
            standardizer,
            linear_weights,
            mlp,
            bias: dec(self.bias()),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        let f = doc.n_features;
        let bias = parse_dec(&doc.bias)?;
        let standardizer = doc
            .standardizer
            .as_ref()
            .map(|s| -> Result<Standardizer> {
                Ok(Standardizer {
                    mean: s.mean.iter().map(|v| parse_dec(v)).collect::<Result<_>>()?,
                    std: s.std.iter().map(|v| parse_dec(v)).collect::<Result<_>>()?,
                })
            })
            .transpose()?;
        if let Some(s) = &standardizer {
            if s.mean.len() != f || s.std.len() != f {
                return Err(Error::ModelFormat("standardizer length mismatch".into()));
            }
        }
        let predictor = match doc.kind {
            ModelKind::Linear => {
                let w = doc
                    .linear_weights
                    .as_ref()
                    .ok_or_else(|| Error::ModelFormat("linear model without weights".into()))?;
                if w.len() != f {
                    return Err(Error::ModelFormat(format!("{} weights for {f} features", w.len())));
                }
                Predictor::Linear(LinearModel::new(
                    w.iter().map(|v| parse_dec(v)).collect::<Result<_>>()?,
                    bias,
                ))
            }
            ModelKind::Mean => Predictor::Mean(MeanModel {
                mean: bias,
                n_features: f,
            }),
            ModelKind::Mlp => {
                let m = doc
                    .mlp
                    .as_ref()
                    .ok_or_else(|| Error::ModelFormat("mlp model without weights".into()))?;
                if m.hidden_widths != [HIDDEN_1, HIDDEN_2] {
                    return Err(Error::ModelFormat(format!(
                        "hidden widths {:?} unsupported",
                        m.hidden_widths
                    )));
                }
                Predictor::Mlp(MlpModel {
                    params: MlpParams {
                        n_features: f,
                        w1: decode_f32(&m.w1, HIDDEN_1 * f, "w1")?,
                        b1: decode_f32(&m.b1, HIDDEN_1, "b1")?,
                        w2: decode_f32(&m.w2, HIDDEN_2 * HIDDEN_1, "w2")?,
                        b2: decode_f32(&m.b2, HIDDEN_2, "b2")?,
                        output_hidden: decode_f32(&m.output_hidden, HIDDEN_2, "output_hidden")?,
                        output_shortcut: decode_f32(&m.output_shortcut, f, "output_shortcut")?,
                    },
                    bias,
                })
            }
        };
        RegressionModel::new(predictor, standardizer)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}
