//! Decoders from embedding space to body-model shape coefficients.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genclient::transport::{self, BackendConfig, CallOutcome, HttpService};
use crate::genclient::wire::{DecodeRequest, DecodeResponse, DECODE_PATH};
use crate::model::ShapeParams;

/// Declarative decoder configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeDecoderSpec {
    /// `betas = matrix * embedding + offset`; `matrix` is n_B rows of length d.
    AffineReference { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    ExternalService(BackendConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineDecoder {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineDecoder {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != offset.len() || matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "affine decoder shape mismatch: matrix {:?}, offset {}",
                matrix.shape(),
                offset.len()
            )));
        }
        if matrix.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("affine decoder has non-finite entries".into()));
        }
        Ok(Self { matrix, offset })
    }

    /// Seeded random decoder with entries drawn from N(0, 0.8^2), zero offset.
    pub fn reference(n_betas: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = DMatrix::from_fn(n_betas, dim, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.8 * z
        });
        Self { matrix, offset: DVector::zeros(n_betas) }
    }

    pub fn n_betas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn decode(&self, embedding: &DVector<f64>) -> Result<ShapeParams> {
        if embedding.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "embedding has dimension {}, decoder expects {}",
                embedding.len(),
                self.dim()
            )));
        }
        let betas = &self.matrix * embedding + &self.offset;
        Ok(ShapeParams { betas: betas.iter().copied().collect() })
    }

    pub fn to_spec(&self) -> ShapeDecoderSpec {
        ShapeDecoderSpec::AffineReference {
            matrix: self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            offset: self.offset.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ShapeDecoder {
    Affine(AffineDecoder),
    Service { service: HttpService, n_betas: usize },
}

impl ShapeDecoder {
    /// Builds a decoder whose output must have `n_betas` coefficients.
    pub fn from_spec(spec: &ShapeDecoderSpec, n_betas: usize) -> Result<Self> {
        match spec {
            ShapeDecoderSpec::AffineReference { matrix, offset } => {
                let rows = matrix.len();
                let cols = matrix.first().map_or(0, Vec::len);
                if matrix.iter().any(|r| r.len() != cols) {
                    return Err(Error::Config("affine decoder rows differ in length".into()));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                let dec = AffineDecoder::new(
                    DMatrix::from_row_slice(rows, cols, &flat),
                    DVector::from_column_slice(offset),
                )
                .map_err(|e| Error::Config(e.to_string()))?;
                if dec.n_betas() != n_betas {
                    return Err(Error::Config(format!(
                        "affine decoder yields {} betas, body model has {n_betas}",
                        dec.n_betas()
                    )));
                }
                Ok(Self::Affine(dec))
            }
            ShapeDecoderSpec::ExternalService(cfg) => Ok(Self::Service {
                service: HttpService::new(cfg.clone().with_env_overrides(transport::ENV_DECODER_ENDPOINT))?,
                n_betas,
            }),
        }
    }

    pub fn decode_shape(&self, taxon: &str, embedding: &DVector<f64>) -> Result<ShapeParams> {
        match self {
            Self::Affine(dec) => dec.decode(embedding),
            Self::Service { service, n_betas } => {
                let req = DecodeRequest {
                    taxon: taxon.to_string(),
                    embedding: embedding.iter().copied().collect(),
                };
                let out: CallOutcome<DecodeResponse> = service.post_json(DECODE_PATH, &req)?;
                let betas = out.value.betas;
                if betas.len() != *n_betas || betas.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Protocol(format!(
                        "decoder returned {} betas, expected {n_betas} finite values",
                        betas.len()
                    )));
                }
                Ok(ShapeParams { betas })
            }
        }
    }
}
