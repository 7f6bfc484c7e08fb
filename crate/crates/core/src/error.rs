use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// CSR arrays do not describe a valid matrix.
    InvalidMatrix(&'static str),
    /// Coordinate outside the declared matrix bounds.
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    /// The same coordinate was supplied twice.
    DuplicateEntry { row: usize, col: usize },
    /// A matrix with zero rows or columns where a non-empty one is needed.
    EmptyShape,
    /// Window bounds inverted or outside the matrix.
    InvalidWindow,
    /// Tile ordinal past the end of the grid.
    TileOutOfRange { index: usize, tiles: usize },
    /// A tile range of zero.
    ZeroRange,
    /// Generator parameters that cannot be realized.
    InvalidGenerator(&'static str),
    /// Density of zero: no tile size can be estimated.
    EmptyTensor,
    /// A configuration value outside its allowed domain.
    InvalidConfig(&'static str),
    /// No candidate in the prescient ladder keeps every tile within capacity.
    NoFeasibleTile { capacity: usize },
    /// Operand tile shapes disagree on the shared dimension.
    ShapeMismatch { a_k: usize, b_k: usize },
    /// Operand dimensions do not chain (A is M×K, B must be K×N).
    DimensionMismatch { a_cols: usize, b_rows: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMatrix(why) => write!(f, "invalid matrix: {why}"),
            Error::OutOfBounds { row, col, rows, cols } => {
                write!(f, "coordinate ({row}, {col}) out of bounds for {rows}x{cols} matrix")
            }
            Error::DuplicateEntry { row, col } => write!(f, "duplicate entry at ({row}, {col})"),
            Error::EmptyShape => write!(f, "matrix has an empty shape"),
            Error::InvalidWindow => write!(f, "window is inverted or out of range"),
            Error::TileOutOfRange { index, tiles } => {
                write!(f, "tile index {index} out of range for {tiles} tiles")
            }
            Error::ZeroRange => write!(f, "tile ranges must be at least 1"),
            Error::InvalidGenerator(why) => write!(f, "invalid generator spec: {why}"),
            Error::EmptyTensor => write!(f, "cannot estimate for empty tensor"),
            Error::InvalidConfig(why) => write!(f, "invalid configuration: {why}"),
            Error::NoFeasibleTile { capacity } => {
                write!(f, "no ladder tile size fits capacity {capacity}")
            }
            Error::ShapeMismatch { a_k, b_k } => {
                write!(f, "operand tiles disagree on K range ({a_k} vs {b_k})")
            }
            Error::DimensionMismatch { a_cols, b_rows } => {
                write!(f, "A has {a_cols} columns but B has {b_rows} rows")
            }
        }
    }
}

impl core::error::Error for Error {}
