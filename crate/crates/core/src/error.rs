use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold vertex {0}")]
    NonManifoldVertex(usize),

    #[error("degenerate face {face} (area {area:.3e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("mesh is not closed ({0} boundary edges)")]
    NotClosed(usize),

    #[error("mesh is not connected ({0} components)")]
    NotConnected(usize),

    #[error("unknown shape kind `{0}`")]
    UnknownShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("failed to parse {format} at line {line}: {msg}")]
    Parse {
        format: &'static str,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("surface fails the λ-surface precondition: max |residual| {residual:.3e} > threshold {threshold:.3e}")]
    NotLambdaSurface { residual: f64, threshold: f64 },

    #[error("unsupported surface: {0}")]
    UnsupportedSurface(String),

    #[error("eigensolver did not converge after {iterations} restarts (worst residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("integration step too large: |θ'|·h = {0:.3} exceeds π/8")]
    StepTooLarge(f64),

    #[error("profile pinched onto the axis at s = {0:.6}")]
    Pinch(f64),

    #[error("no sign change of the section defect in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),

    #[error("Jacobian is singular")]
    SingularJacobian,

    #[error("graph invariant violated: max |u·A| = {0:.4} >= 1")]
    GraphInvariant(f64),

    #[error("trajectory is open (closure defect {0:.3e})")]
    OpenTrajectory(f64),

    #[error("empty intersection with the ball")]
    EmptyPatch,

    #[error("mesh is not convex ({0} reflex edges)")]
    NotConvex(usize),
}
