//! Confusion network construction and minimum expected word error decoding
//! for speech recognition word lattices.

pub mod align;
pub mod apps;
pub mod cn;
pub mod decode;
pub mod edit;
pub mod error;
pub mod lattice;
pub mod lexicon;
pub mod logmath;
pub mod pipeline;
pub mod synth;

pub use align::{AlignOptions, AlignmentState, MetricVariant};
pub use cn::{ConfusionNetwork, Slot};
pub use error::{Error, Result};
pub use lattice::{Lattice, Link, LinkId, Node, NodeId, DELETION};
pub use lexicon::PronLexicon;
