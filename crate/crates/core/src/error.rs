use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range (valid range {range})")]
    IndexOutOfRange { index: usize, range: String },

    #[error("table of 2^{n} entries exceeds the cap of 2^{cap}")]
    TableTooLarge { n: usize, cap: usize },

    #[error("hex table has {got} digits, expected {expected} for n = {n}")]
    BadHexLength { n: usize, got: usize, expected: usize },

    #[error("variable x{0} assigned twice in restriction")]
    DuplicateVariable(usize),

    #[error("dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },

    #[error("tree size {size} exceeds the 2^{n} leaves available on {n} variables")]
    SizeExceedsDomain { size: usize, n: usize },

    #[error("spectrum is already attenuated")]
    AlreadyAttenuated,

    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("variable x{0} already queried on this path")]
    VariableOnPath(usize),

    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{name} = {value} out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("size budget must be at least 1")]
    BudgetZero,

    #[error("query budget of {budget} exceeded (needed {needed})")]
    BudgetExceeded { budget: u64, needed: u64 },

    #[error("bad statistical query: {0}")]
    BadQuery(String),

    #[error("invalid target spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    pub(crate) fn var_out_of_range(index: usize, n: usize) -> Self {
        Error::IndexOutOfRange {
            index,
            range: format!("1..={n}"),
        }
    }

    pub(crate) fn check_unit_open(name: &'static str, value: f64) -> Result<()> {
        if value > 0.0 && value < 1.0 {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                name,
                value,
                range: "(0, 1)",
            })
        }
    }
}
