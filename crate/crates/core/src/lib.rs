//! Asymptotic key rates for heralded device-independent conference key
//! agreement.
//!
//! The crate covers the whole chain: Fock-space simulation of the heralded
//! GHZ distribution ([`quantum`], [`heralding`]), the parties' binary
//! measurements ([`measurements`]), parity-CHSH and SDP entropy bounds
//! ([`keyrate`], [`bff`], [`npa`], [`sdp`]).

pub mod bff;
pub mod error;
pub mod heralding;
pub mod keyrate;
pub mod measurements;
pub mod npa;
pub mod numeric;
pub mod quantum;
pub mod sdp;

pub use error::{Error, Result};
pub use numeric::NumericPolicy;
