//! Min-entropy of correlated binary sources.
//!
//! The crate covers the full path from a gbAR(p) model to entropy numbers:
//!
//! * [`generator`] samples bit sequences and defines the on-disk format;
//! * [`oracle`] computes min-entropy, average min-entropy and worst-case
//!   min-entropy exactly from the model's transition law;
//! * [`monte_carlo`] estimates the same quantities from simulated data;
//! * [`predictors`] turns prediction accuracy into entropy estimates, for a
//!   tabular multi-bit predictor and four next-bit predictors in the style
//!   of SP 800-90B.

pub mod error;
pub mod generator;
pub mod monte_carlo;
pub mod oracle;
pub mod predictors;
pub mod types;

pub use error::{Error, Result};
pub use generator::{generate, transition_prob, GeneratorConfig};
pub use monte_carlo::{mc_entropies, McConfig};
pub use oracle::{min_entropy_limit, EntropyReport, LimitValue, MarkovOracle, Method};
pub use predictors::{CountingPredictor, PredictorEstimate, Strategy};
pub use types::{make_alpha, AlphaShape, BitSequence, ContextIndex, FutureIndex, GbarParams};
