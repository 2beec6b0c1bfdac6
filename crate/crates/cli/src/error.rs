use steklov_core::Error as CoreError;

/// Validation failures exit with 2, numerical failures with 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_)
            | CoreError::InvalidArgument(_)
            | CoreError::NonPositiveRadius { .. }
            | CoreError::InvalidSpec(_)
            | CoreError::NonDegenerateCluster { .. }
            | CoreError::InadmissibleWeight(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(CliError::from(CoreError::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(CoreError::NonDegenerateCluster { spread: 1.0 }).exit_code(),
            2
        );
        assert_eq!(CliError::from(CoreError::AllFiltered).exit_code(), 1);
        assert_eq!(
            CliError::from(CoreError::TrackingAmbiguity { t: 1e-3, index: 2 }).exit_code(),
            1
        );
    }
}
