//! Front end for the semi-slant analyzer: map-spec loading, seeded point
//! sampling, report assembly and the built-in example corpus.

pub mod analyze;
pub mod config;
pub mod corpus;
pub mod error;
pub mod identities;
pub mod report;
pub mod verify;

pub use analyze::{analyze, load_spec};
pub use config::{parse_checks, sample_points, AnalysisConfig, Check, StructureSource};
pub use corpus::{builtin, builtin_corpus, load_dir, CorpusEntry, Expectation};
pub use error::{CliError, CliResult, EXIT_CHECK_FAILURE, EXIT_INPUT_ERROR, EXIT_NUMERIC};
pub use identities::{identities, IdentitiesReport};
pub use report::{from_json, to_json, Report, SCHEMA_VERSION};
pub use verify::{verify_corpus, verify_entry, CorpusOutcome, ExampleOutcome, Row};
