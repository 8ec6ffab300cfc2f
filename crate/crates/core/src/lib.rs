pub mod cli;
pub mod closed_form;
pub mod config;
pub mod convex;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod loss;
pub mod par;
pub mod pmi;
pub mod regularization;
pub mod triplets;

pub use error::{Error, Result};
