use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("spin must be a non-negative integer or half-integer, got {0}")]
    InvalidSpin(f64),
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("operator has a non-zero imaginary part ({0:e}); real-symmetric path required")]
    NotReal(f64),
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: i64, dim: usize },
    #[error("operator is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("eigenvalue modulus deviates from one by {0:e}")]
    NumericalInstability(f64),
    #[error("state is not normalized (norm deviation {0:e})")]
    Unnormalized(f64),
    #[error("point ({q}, {p}) lies outside the phase-space disk")]
    OutsideDisk { q: f64, p: f64 },
    #[error("degenerate pair ({0}, {1}): zero gap")]
    ZeroGap(usize, usize),
    #[error("resonance {m}:{n} is outside the spectrum range")]
    ResonanceOutOfRange { m: u32, n: u32 },
    #[error("tuned tau {tuned} drifts more than 5% from the seed {seed}")]
    TauDrift { tuned: f64, seed: f64 },
    #[error("branch tracking lost the state at eps = {eps:e} (overlap {overlap})")]
    TrackingFailure { eps: f64, overlap: f64 },
    #[error("near-degenerate level {k}: phase gap {gap:e} requires the degenerate path")]
    NearDegenerate { k: usize, gap: f64 },
    #[error("matrix element {0} vanishes; resonance invisible to this kick")]
    VanishingCoupling(f64),
    #[error("first-order pair is degenerate")]
    DegenerateFirstOrder,
    #[error("no positive real root")]
    NoRoot,
    #[error("singular orbit at energy {0}")]
    SingularOrbit(f64),
    #[error("energy {0} outside the classical range")]
    EnergyOutOfRange(f64),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("fit needs at least {need} positive points, got {got}")]
    FitPoints { need: usize, got: usize },
    #[error("non-positive value {0} in power-law fit")]
    NonPositive(f64),
    #[error("Floquet-solve budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("insufficient overlap of curve ranges")]
    InsufficientOverlap,
    #[error("mismatch does not decay (fitted exponent {0})")]
    NonDecaying(f64),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Name of the module family the error originates from.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidSpin(_) | DimensionCap { .. } | NotHermitian(_) => "spin-ops",
            InvalidParams(_) | NotReal(_) | Eigensolver(_) => "lmg-model",
            DimensionMismatch(..) | NotUnitary(_) | NumericalInstability(_) => "floquet-core",
            Unnormalized(_) | OutsideDisk { .. } | TrackingFailure { .. } => "diagnostics",
            ZeroGap(..) | ResonanceOutOfRange { .. } | TauDrift { .. } | NonDecaying(_) => {
                "resonance-finder"
            }
            NearDegenerate { .. } | VanishingCoupling(_) | DegenerateFirstOrder | NoRoot => "upt",
            SingularOrbit(_) | EnergyOutOfRange(_) | Integrator(_) => "classical-dynamics",
            FitPoints { .. } | NonPositive(_) | BudgetExhausted(_) | InsufficientOverlap => {
                "scaling-lab"
            }
            OutOfRange { .. } | Invalid(_) => "core",
        }
    }
}
