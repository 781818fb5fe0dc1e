use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("weak value undefined: pre- and post-selected states are orthogonal (overlap {overlap:e})")]
    OrthogonalSelection { overlap: f64 },

    #[error("observable does not square to the identity (max deviation {deviation:e})")]
    NotInvolutory { deviation: f64 },

    #[error("observable is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
