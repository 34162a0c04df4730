pub mod corpus;
pub mod embed;
pub mod eval;
pub mod features;
pub mod language;
pub mod rng;
pub mod synth;
pub mod textprep;

pub use language::LanguageId;
pub mod models;
pub mod pipeline;
