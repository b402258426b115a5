use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid coefficient model: {0}")]
    InvalidModel(String),
    #[error("seed does not satisfy the violation inequality (margin {margin:.3e})")]
    SeedInvalid { margin: f64 },
    #[error("degenerate extraction: rho_k = {rho:.3e}")]
    Degenerate { rho: f64 },
    #[error("no violation seed found within the search bounds")]
    NotFound,
    #[error("derivative order {requested} exceeds available order {available}")]
    Order { requested: usize, available: usize },
    #[error("grid cannot resolve the request: {0}")]
    Resolution(String),
    #[error("aliasing: {fraction:.3e} of the norm sits in the top frequency band")]
    Aliasing { fraction: f64 },
    #[error("frequency {frequency} is inside the guard band (limit {limit})")]
    GuardBand { frequency: f64, limit: f64 },
    #[error("instability at t = {t}: log-growth {growth:.3e} exceeds bound {bound:.3e}")]
    Instability { t: f64, growth: f64, bound: f64 },
    #[error("boundary mass fraction {fraction:.3e} exceeds {threshold:.1e} at t = {t}")]
    Wrap { t: f64, fraction: f64, threshold: f64 },
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),
    #[error("degenerate harness: {0}")]
    DegenerateHarness(String),
    #[error("resource limit: {0}")]
    Resource(String),
}
