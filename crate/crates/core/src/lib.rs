//! Checking, generating and validating cost-redundancy proofs for MaxSAT
//! instances encoded with blocking variables.

pub mod gen;
pub mod model;
pub mod oracle;
pub mod proof;
pub mod propagate;
pub mod rules;

pub use model::{Assignment, Clause, Formula, Image, Instance, Lit, Substitution, Var};
pub use proof::{Bound, Proof, ProofStep, Verdict};
pub use rules::RuleClass;
