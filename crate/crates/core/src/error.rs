use crate::evm::Status;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bytecode is not valid hex")]
    Hex(#[from] hex::FromHexError),

    #[error("malformed ABI JSON")]
    AbiJson(#[source] serde_json::Error),

    #[error("ABI entry `{entry}`: {reason}")]
    AbiEntry { entry: String, reason: String },

    #[error("ABI entry `{entry}`: unsupported type `{ty}`")]
    UnsupportedType { entry: String, ty: String },

    #[error("gene has no entry `{0}`")]
    GeneMismatch(String),

    #[error("function `{0}` is not declared in the ABI")]
    UnknownFunction(String),

    #[error("function name `{name}` is overloaded; pick one of: {}", candidates.join(", "))]
    AmbiguousFunction { name: String, candidates: Vec<String> },

    #[error("contract deployment failed with status {0}")]
    Deployment(Status),

    #[error("no init code available; pass a .bin file or use .bin-runtime")]
    MissingCode,

    #[error("seed pool is empty")]
    EmptyPool,

    #[error("campaign needs a time or iteration budget")]
    NoBudget,

    #[error("report serialization failed")]
    Report(#[source] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
