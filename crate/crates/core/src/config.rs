//! Process-wide numeric tolerances.
//!
//! Every threshold used by the floating point layer lives here so that the
//! command line can tighten them uniformly. Callers may tighten a tolerance
//! but never loosen one past its default.

use serde::{Deserialize, Serialize};

/// Wall-proximity tolerance for spectral classification (relative).
pub const TAU_WALL: f64 = 1e-9;
/// General-position tolerance for flag transversality margins.
pub const TAU_GP: f64 = 1e-9;
/// Hull membership tolerance in limit-cone slice coordinates.
pub const TAU_HULL: f64 = 1e-8;
/// Descending-order slack accepted when validating an externally supplied
/// Weyl chamber vector.
pub const TAU_SORT: f64 = 1e-12;
/// Zero-sum slack factor: the absolute slack is `TAU_SUM * max(1, |v|)`.
pub const TAU_SUM: f64 = 1e-9;

/// Bundle of tolerances threaded through the numeric routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub wall: f64,
    pub gp: f64,
    pub hull: f64,
    pub sort: f64,
    pub sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            wall: TAU_WALL,
            gp: TAU_GP,
            hull: TAU_HULL,
            sort: TAU_SORT,
            sum: TAU_SUM,
        }
    }
}

impl Tolerances {
    /// Default tolerances with `wall` and `gp` tightened. Values larger than
    /// the defaults are clamped back to the defaults.
    pub fn tightened(wall: Option<f64>, gp: Option<f64>) -> Self {
        let mut t = Tolerances::default();
        if let Some(w) = wall {
            t.wall = t.wall.min(w.abs());
        }
        if let Some(g) = gp {
            t.gp = t.gp.min(g.abs());
        }
        t
    }
}
