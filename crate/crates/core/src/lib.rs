//! Phonetic similarity of trademark names from 2-gram feature images.
//!
//! Pipeline: [`transcription`] turns text into phonetic symbols,
//! [`codec`] maps symbols to grid coordinates, [`raster`] draws the
//! coordinate path into a 128x128 image, [`pairing`] stacks two images for
//! the classifier in [`nn`], and [`eval`] provides datasets, the cosine
//! baseline and metrics.

pub mod codec;
pub mod error;
pub mod eval;
pub mod nn;
pub mod pairing;
pub mod pipeline;
pub mod raster;
pub mod scalar;
pub mod transcription;

pub use codec::{default_dictionary, GramPath, GridPoint, SymbolDictionary, SymbolSequence};
pub use error::{Error, Result};
pub use pipeline::Featurizer;
pub use scalar::Scalar;
pub use transcription::{Lexicon, ScriptTag};

/// Single-precision feature image.
pub type Feature = raster::PhoneticFeature<f32>;
/// Single-precision two-channel classifier input.
pub type Pair = pairing::PairTensor<f32>;
/// Single-precision network parameters.
pub type Network = nn::CnnParams<f32>;
