use thiserror::Error;

/// Errors raised while reading, validating, or decoding lattices.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },

    #[error("link {link} references unknown node {node}")]
    DanglingNode { link: u32, node: u32 },

    #[error("cycle detected through node {0}")]
    Cycle(u32),

    #[error("expected exactly one {kind} node, found {found:?}")]
    Endpoints { kind: &'static str, found: Vec<u32> },

    #[error("header declares {declared} {kind}s but {found} were given")]
    CountMismatch {
        kind: &'static str,
        declared: usize,
        found: usize,
    },

    #[error("link {link} ends before it starts ({itime} > {ftime})")]
    TimeOrder { link: u32, itime: f64, ftime: f64 },

    #[error("invalid word {0:?}")]
    InvalidWord(String),

    #[error("unknown link id {0}")]
    UnknownLink(u32),

    #[error("lattice has no links")]
    EmptyLattice,

    #[error("language model weight must be positive, got {0}")]
    InvalidLambda(f64),

    #[error("word {0:?} missing from pronunciation lexicon")]
    MissingWord(String),

    #[error("posteriors have not been computed")]
    NoPosteriors,

    #[error("classes {0} and {1} are ordered and cannot be merged")]
    OrderedMerge(usize, usize),

    #[error("sim_intra called on classes with different words ({0:?} vs {1:?})")]
    WordMismatch(String, String),

    #[error("slot {slot} posteriors sum to {sum}")]
    SlotMass { slot: usize, sum: f64 },

    #[error("token {token:?} is not a hypothesis of slot {slot}")]
    InvalidToken { slot: usize, token: String },

    #[error("path has {found} tokens but network has {expected} slots")]
    PathLength { expected: usize, found: usize },

    #[error("link {0} is not part of the confusion network")]
    UnalignedLink(u32),

    #[error("word sequence cannot be expressed as a confusion network path")]
    NotExpressible,

    #[error("n-best list is empty")]
    EmptyNBest,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors that signal a bug or broken invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::SlotMass { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
