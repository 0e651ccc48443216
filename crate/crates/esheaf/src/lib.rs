//! Exact arithmetic for Drinfeld modules and abelian t-modules over `A = F_q[t]`.
//!
//! The crate is organized around five layers:
//!
//! * [`ffield`] — deterministic towers of finite fields `F_{q^m}` with Frobenius,
//!   traces, dual bases and `F_q`-linear solvers (Artin–Schreier roots, kernels of
//!   additive polynomials).
//! * [`ore`] — the twisted polynomial ring `K{σ}` with `σ·b = b^q σ`, acting on
//!   field elements as additive polynomials.
//! * [`tseries`] — truncated Laurent series, series vectors/matrices over a tower
//!   level, coefficientwise Frobenius twists and Smith decomposition over the
//!   power-series ring.
//! * [`drinfeld`] — Drinfeld modules / t-modules, their torsion modules and
//!   compatible division-point chains (Tate bases).
//! * [`uniformizer`] / [`lattice`] — uniformizer series built two independent
//!   ways, the `GL_n` action, Moore-type determinant formulas, the Baker
//!   function, and finite-window models of the associated discrete subspaces.
//!
//! All arithmetic is exact.  Every series and every lattice carries an explicit
//! precision window; results are only reported on windows where they are fully
//! determined by the inputs.

pub mod drinfeld;
pub mod ffield;
pub mod lattice;
pub mod ore;
pub mod tseries;
pub mod uniformizer;

pub use drinfeld::{DModule, TateSystem, XPoint};
pub use ffield::{FieldElem, FieldTower};
pub use lattice::Lattice;
pub use ore::{OreMat, OrePoly};
pub use tseries::{Series, SeriesMat, SeriesVec};
pub use uniformizer::Uniformizer;

/// Version tag for the canonical-selection policies (irreducible scan order,
/// Artin–Schreier root pick, chain normalization).  Cached artifacts key on it.
pub const POLICY_VERSION: &str = "lexmin-v1";

/// Errors shared across the crate.  Each variant maps to a stable CLI exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Requested tower level is not on the stored chain below the element's level.
    LevelError(String),
    /// Series inversion requires valuation 0 within the window.
    NotAUnit(String),
    /// Two windows have empty overlap.
    EmptyWindow(String),
    /// An operation consumed the whole precision window.
    PrecisionExhausted(String),
    DivisionByZero(String),
    DimensionMismatch(String),
    /// The constant-term action of `t` does not have characteristic shape `(x^{p^j} - b)^m`.
    NotEllipticCharacteristic(String),
    /// The chosen point collides with the characteristic of the module.
    CharacteristicCollision(String),
    /// A Tate system is too shallow for the requested precision.
    DepthTooShallow(String),
    WindowTooSmall(String),
    /// A lattice intersection expected to be a line has a different rank.
    RankNotOne(String),
    GuardBandTooNarrow(String),
    /// The scattering matrix is singular within the window.
    DegenerateDeterminant(String),
    /// Carlitz-type constructions need `theta != 0`.
    ZeroTheta(String),
    /// Tower extension would exceed the configured degree budget.
    TowerBudget(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::LevelError(m) => write!(f, "level error: {m}"),
            Error::NotAUnit(m) => write!(f, "not a unit: {m}"),
            Error::EmptyWindow(m) => write!(f, "empty window: {m}"),
            Error::PrecisionExhausted(m) => write!(f, "precision exhausted: {m}"),
            Error::DivisionByZero(m) => write!(f, "division by zero: {m}"),
            Error::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            Error::NotEllipticCharacteristic(m) => write!(f, "not an elliptic characteristic: {m}"),
            Error::CharacteristicCollision(m) => write!(f, "characteristic collision: {m}"),
            Error::DepthTooShallow(m) => write!(f, "depth too shallow: {m}"),
            Error::WindowTooSmall(m) => write!(f, "window too small: {m}"),
            Error::RankNotOne(m) => write!(f, "rank not one: {m}"),
            Error::GuardBandTooNarrow(m) => write!(f, "guard band too narrow: {m}"),
            Error::DegenerateDeterminant(m) => write!(f, "degenerate determinant: {m}"),
            Error::ZeroTheta(m) => write!(f, "zero theta: {m}"),
            Error::TowerBudget(m) => write!(f, "tower budget exceeded: {m}"),
        }
    }
}

impl std::error::Error for Error {}

/// Stable machine-readable code for an error, used by the CLI exit-code table.
impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::LevelError(_) => "LevelError",
            Error::NotAUnit(_) => "NotAUnit",
            Error::EmptyWindow(_) => "EmptyWindow",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::DivisionByZero(_) => "DivisionByZero",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotEllipticCharacteristic(_) => "NotEllipticCharacteristic",
            Error::CharacteristicCollision(_) => "CharacteristicCollision",
            Error::DepthTooShallow(_) => "DepthTooShallow",
            Error::WindowTooSmall(_) => "WindowTooSmall",
            Error::RankNotOne(_) => "RankNotOne",
            Error::GuardBandTooNarrow(_) => "GuardBandTooNarrow",
            Error::DegenerateDeterminant(_) => "DegenerateDeterminant",
            Error::ZeroTheta(_) => "ZeroTheta",
            Error::TowerBudget(_) => "TowerBudget",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
