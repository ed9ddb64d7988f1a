//! Test support: synthetic dump generation and brute-force reference
//! implementations.
//!
//! Nothing here depends on `opinion-core`. The oracles re-derive every rule
//! from raw JSON values with the most direct code possible (nested loops,
//! full sorts) so they can be compared against the streaming implementation.

pub mod dump;
pub mod oracle;
pub mod retrieval;

pub use dump::{write_synthetic_dump, SynthConfig};
pub use oracle::{oracle_corpus, OracleSource};
pub use retrieval::{oracle_scores, synthetic_instructions, OracleDoc};
