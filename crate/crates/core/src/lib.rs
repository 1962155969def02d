//! Property-conditioned molecule generation.
//!
//! The crate is organised bottom-up:
//!
//! * [`chem`] parses, validates and canonicalises SMILES.
//! * [`descriptors`] computes MW, LogP, HBD, HBA and TPSA.
//! * [`codec`] maps SMILES and property sets onto model inputs.
//! * [`numcore`] is a small reverse-mode autodiff engine with an LSTM cell.
//! * [`cvae`] is the conditional VAE, its training loop and checkpoint format.
//! * [`generate`] drives stochastic write-out and generation campaigns.
//! * [`eval`] holds the success criterion, rates, histograms and PCA.
//! * [`dataset`] ingests corpora, caches properties and splits train/test.
//! * [`cli`] is the command-line front end.

pub mod chem;
pub mod cli;
pub mod codec;
pub mod cvae;
pub mod dataset;
pub mod descriptors;
pub mod eval;
pub mod generate;
pub mod numcore;

pub use chem::{canonicalize, is_valid, parse_smiles, Molecule};
pub use descriptors::{property_vector, PropertySet};
