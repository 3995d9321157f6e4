//! Sparsest-permutation (SP) learning of DAG models.
//!
//! For every ordering of the variables the SP method builds the minimal DAG
//! that is Markov to a set of conditional-independence (CI) relations and
//! keeps the sparsest ones. This crate provides:
//!
//! - [`graph`]: DAGs, d-separation, skeletons, v-structures and equivalence classes.
//! - [`oracle`]: CI backends (d-separation, exact Gaussian, λ-thresholded, Fisher-z tests).
//! - [`sp`]: the permutation search and its Cholesky-factorization counterpart.
//! - [`baselines`]: SGS and PC skeleton search with v-structure orientation.
//! - [`sem`]: random linear Gaussian structural equation models.
//! - [`assumptions`]: brute-force checkers for Markov, faithfulness-type and minimality conditions.
//! - [`harness`]: seeded simulation experiments comparing the learners.

pub mod assumptions;
pub mod baselines;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod sem;
pub mod sp;

mod par;
