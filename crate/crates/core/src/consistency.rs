use serde::{Deserialize, Serialize};

/// A recomputed quantity set against the value published for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub name: String,
    pub computed: f64,
    pub published: f64,
    pub tolerance: f64,
    pub consistent: bool,
    /// The published value is known not to follow from its stated inputs.
    pub known_discrepancy: bool,
}

impl ConsistencyCheck {
    pub fn new(name: impl Into<String>, computed: f64, published: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            computed,
            published,
            tolerance,
            consistent: (computed - published).abs() <= tolerance,
            known_discrepancy: false,
        }
    }

    pub fn known(mut self) -> Self {
        self.known_discrepancy = true;
        self
    }

    /// Passes when consistent, or when inconsistent and documented as such.
    pub fn as_expected(&self) -> bool {
        self.consistent != self.known_discrepancy
    }
}
