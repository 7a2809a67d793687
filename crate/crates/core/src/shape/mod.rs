//! Per-taxon stochastic shapes: embedding banks, Gaussian priors and decoders.

pub mod bank;
pub mod decoder;
pub mod prior;

pub use bank::{default_descriptors, load_bank, synthetic_bank, write_bank, EmbeddingBank, BANK_ROWS};
pub use decoder::{AffineDecoder, ShapeDecoder, ShapeDecoderSpec};
pub use prior::{
    fit_gaussian, fit_prior, load_priors, sample_embedding, write_priors, GaussianShapePrior,
    PriorSet,
};
