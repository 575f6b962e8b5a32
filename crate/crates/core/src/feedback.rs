use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corrective advice: one entry in {-1, 0, +1} per action dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Feedback(Vec<i8>);

impl Feedback {
    pub fn new(dims: Vec<i8>) -> Result<Self> {
        if let Some(v) = dims.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::usage(format!("feedback entries must be -1, 0 or +1, got {v}")));
        }
        Ok(Feedback(dims))
    }

    /// Validates numeric input such as a parsed log field or wire value.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| match v {
                v if v == -1.0 => Ok(-1),
                v if v == 0.0 => Ok(0),
                v if v == 1.0 => Ok(1),
                v => Err(Error::usage(format!("feedback entries must be -1, 0 or +1, got {v}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(Feedback)
    }

    pub fn zeros(dim: usize) -> Self {
        Feedback(vec![0; dim])
    }

    pub fn dims(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0)
    }

    /// `None` for all-zero advice.
    pub fn nonzero(self) -> Option<Self> {
        (!self.is_zero()).then_some(self)
    }
}

impl TryFrom<Vec<i8>> for Feedback {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Feedback::new(v)
    }
}

impl From<Feedback> for Vec<i8> {
    fn from(f: Feedback) -> Vec<i8> {
        f.0
    }
}
