use std::path::PathBuf;

/// Everything that can go wrong while building, constraining or solving.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh has no tetrahedra")]
    EmptyMesh,

    #[error("degenerate tet {tet}: {reason}")]
    DegenerateTet { tet: usize, reason: String },

    #[error("non-manifold face {face:?} shared by {count} tets")]
    NonManifoldFace { face: [usize; 3], count: usize },

    #[error("inconsistent connectivity: {0}")]
    InconsistentConnectivity(String),

    #[error("star of vertex {vertex} is not a topological ball: {reason}")]
    NotABall { vertex: usize, reason: String },

    #[error("zero-length edge")]
    ZeroLengthEdge,

    #[error("singular local DOF map on tet {tet}")]
    SingularLocalMap { tet: usize },

    #[error("vertex {vertex}: null space of the patch map has dimension {computed}, expected {expected}")]
    ConstraintCountMismatch {
        vertex: usize,
        expected: usize,
        computed: usize,
    },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid material: lambda = {lambda}, mu = {mu} (both must be positive)")]
    InvalidMaterial { lambda: f64, mu: f64 },

    #[error("incompatible loads: rigid-motion residuals {residuals:?} exceed tolerance {tolerance:e}")]
    IncompatibleLoads { residuals: [f64; 6], tolerance: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("constraint residual {residual:e} above tolerance {tolerance:e}")]
    ConstraintResidual { residual: f64, tolerance: f64 },

    #[error("unknown manufactured case '{0}' (expected affine, poly2 or trig)")]
    UnknownCase(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
