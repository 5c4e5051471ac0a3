//! Link-level simulator for a dual-function radar-communication scheme that
//! conveys data through hybrid frequency and spatial index modulation.
//!
//! A carrier-agile phased array picks `K` of `M` carrier frequencies per pulse
//! and splits its `L_R` antennas into `K` sub-arrays, one per carrier. The
//! choice of carrier subset and antenna allocation *is* the message: no
//! dedicated communication waveform is transmitted. This crate provides
//!
//! - codeword-space enumeration, ranking and bit mapping ([`codeword`]),
//! - transmit-block synthesis with steering weights ([`transmit`]),
//! - channel models and noise injection ([`channel`]),
//! - the optimal ML decoder and low-complexity greedy/iterative decoders
//!   ([`decode`]),
//! - achievable-rate bounds from the Gaussian-mixture output density
//!   ([`rate`]),
//! - reduced-cardinality codebook design via distance matrices, PCA and
//!   k-means ([`codebook`]),
//! - a Monte-Carlo experiment harness with CSV output ([`sim`]).
//!
//! All library types are immutable values and all operations are pure
//! functions; Monte-Carlo trials parallelize with per-trial derived seeds.

pub mod channel;
pub mod codebook;
pub mod codeword;
pub mod combinatorics;
pub mod config;
pub mod decode;
pub mod error;
pub mod rate;
pub mod rng;
pub mod sim;
pub mod transmit;

pub use config::SystemConfig;
pub use error::Error;

use num_complex::Complex;

/// Scalar type used throughout the numeric kernels.
pub type Real = f64;
/// Complex scalar.
pub type Cplx = Complex<f64>;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<Cplx>;
/// Dynamically sized complex vector.
pub type CVec = nalgebra::DVector<Cplx>;
/// Dynamically sized real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

pub type Result<T> = std::result::Result<T, Error>;
