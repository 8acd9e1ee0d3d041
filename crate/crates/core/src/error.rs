use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported layer: {0}")]
    Unsupported(String),

    #[error("configuration infeasible: {0}")]
    Infeasible(String),

    #[error("address {addr} exceeds bank depth {depth}")]
    Capacity { addr: usize, depth: usize },

    #[error(
        "bank conflict at bank ({h},{w}): address {first} and {second} requested in one cycle \
         (pixels {first_pixel:?} and {second_pixel:?})"
    )]
    BankConflict {
        h: usize,
        w: usize,
        first: usize,
        second: usize,
        first_pixel: (usize, isize, isize),
        second_pixel: (usize, isize, isize),
    },

    #[error("weight buffer overflow: {needed} entries resident, capacity {capacity}")]
    WeightOverflow { needed: usize, capacity: usize },

    #[error("ping-pong violation at cycle {cycle}: buffer {buffer} read and written together")]
    PingPong { cycle: u64, buffer: usize },

    #[error("simulation deadlock at cycle {cycle}: {detail}")]
    Deadlock { cycle: u64, detail: String },

    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },

    #[error("line {line}: layer `{layer}` expects input {expected}, previous layer produces {found}")]
    ShapeChain { line: usize, layer: String, expected: String, found: String },

    #[error("line {line}: invalid attribute `{key}`: {msg}")]
    Attribute { line: usize, key: String, msg: String },

    #[error("model has no layers")]
    EmptyModel,

    #[error("{0}")]
    Io(String),
}
