use alloc::string::String;
use core::fmt;

/// An input fell outside the domain of a pure function.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainError {
    /// Two points that must differ coincide.
    CoincidentPoints,
    /// An angle was outside its admissible range.
    AngleOutOfRange { name: &'static str, value: f64 },
    /// One of the RIS distances is inside the Fraunhofer distance.
    NearField { distance: f64, fraunhofer: f64 },
    /// A numeric argument was non-positive, non-finite or otherwise invalid.
    InvalidArgument { name: &'static str, value: f64 },
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CoincidentPoints => f.write_str("points coincide; direction undefined"),
            Self::AngleOutOfRange { name, value } => {
                write!(f, "angle `{name}` = {value} is out of range")
            }
            Self::NearField {
                distance,
                fraunhofer,
            } => write!(
                f,
                "distance {distance:.3} m is inside the Fraunhofer distance {fraunhofer:.3} m \
                 (near-field model not supported)"
            ),
            Self::InvalidArgument { name, value } => {
                write!(f, "invalid value for `{name}`: {value}")
            }
        }
    }
}

/// A configuration field failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Errors raised while running a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Config(ConfigError),
    /// A kinematic or box constraint was violated. Should be unreachable.
    ConstraintViolation {
        step: u64,
        constraint: &'static str,
        value: f64,
        limit: f64,
    },
    Domain(DomainError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "invalid config: {e}"),
            Self::ConstraintViolation {
                step,
                constraint,
                value,
                limit,
            } => write!(
                f,
                "constraint `{constraint}` violated at step {step}: {value} exceeds {limit}"
            ),
            Self::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<DomainError> for SimError {
    fn from(e: DomainError) -> Self {
        Self::Domain(e)
    }
}

impl core::error::Error for DomainError {}
impl core::error::Error for ConfigError {}
impl core::error::Error for SimError {}
