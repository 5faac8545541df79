use crate::spectral::SpectralField2D;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub n: SpectralField2D,
    pub step: u64,
    /// Size of the step that produced this state (0 for initial data).
    pub last_dt: f64,
}

impl SimState {
    pub fn new(n: SpectralField2D) -> Self {
        Self {
            t: 0.0,
            n,
            step: 0,
            last_dt: 0.0,
        }
    }

    pub fn at(t: f64, n: SpectralField2D) -> Self {
        Self {
            t,
            n,
            step: 0,
            last_dt: 0.0,
        }
    }
}
