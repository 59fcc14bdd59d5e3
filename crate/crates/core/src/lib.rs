//! GRAND-family decoding with an online confidence LLR.
//!
//! A decoder queries noise-effect patterns in order ([`patterns`]), keeps a
//! running account of how likely the true noise effect is to have been
//! queried already against how likely an erroneous code-word is to have been
//! hit ([`softout`]), and can abandon with an erasure once that log-likelihood
//! ratio falls below a threshold ([`decoder`]). [`harness`] runs seeded Monte
//! Carlo sweeps over a BPSK/AWGN channel ([`channel`]) with binary linear
//! codes ([`codes`]).

pub mod bits;
pub mod channel;
pub mod codes;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod patterns;
pub mod softout;

pub use bits::BitBlock;
pub use channel::{
    bsc_crossover, capacity_markers, transmit, CapacityMarkers, ChannelParams, SoftObservation,
};
pub use codes::{CodeKind, LinearCode};
pub use decoder::{decode, extract_message, AbandonReason, DecodeOutcome, DecodePolicy};
pub use error::{Error, Result};
pub use patterns::{OrderKind, PatternGenerator, QueryOrder, QueryPattern};
pub use softout::{ConfidenceLedger, LlrReport};
