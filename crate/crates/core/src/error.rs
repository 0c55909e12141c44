use thiserror::Error;

/// Errors raised by the bound engine and its oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An exact integer intermediate (Stirling number, moment) left the representable range.
    #[error("range error: {0}")]
    Range(String),

    /// Input violates a documented precondition (negative mean photon number, d = 0, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A coefficient choice cannot be normalized, i.e. b² exceeds the domain cap Γ.
    #[error("b² = {b_sq} lies outside the normalizable domain [0, Γ = {gamma_cap}]")]
    Domain { b_sq: f64, gamma_cap: f64 },

    /// Normalization c² + 2bvc + b²u = 1 does not hold.
    #[error("normalization violated: ⟨ψ|ψ⟩ = {norm} (tolerance {tol})")]
    Normalization { norm: f64, tol: f64 },

    /// The state carries no phase information and every bound is infinite.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// 1 + ωd = 0, the boundary b² = g/d where Tr(F⁻¹) diverges.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A closed form was requested outside the regime where it is the optimum.
    #[error("region error: {0}")]
    Region(String),

    #[error("cutoff {cutoff} too small: tail mass {tail:e} exceeds {tol:e}; minimal sufficient cutoff is {minimal}")]
    CutoffTooSmall {
        cutoff: usize,
        tail: f64,
        tol: f64,
        minimal: usize,
    },

    #[error("dense tensor with {size} amplitudes exceeds the limit of {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension error: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
