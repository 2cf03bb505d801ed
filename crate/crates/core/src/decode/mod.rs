//! Hypothesis selection and error measures.

mod consensus;
mod nbest;

pub use consensus::{
    consensus_hypothesis, express_in_cn, expected_path_error, expected_slot_error, lattice_path_to_cn_path, mwe,
    Consensus,
};
pub use nbest::{
    center_hypothesis, expected_word_error, nbest_consensus, nbest_posteriors, CenterResult, Hypothesis,
    NBestConsensus, NBestList,
};

pub use crate::edit::{word_error, EditCounts};
