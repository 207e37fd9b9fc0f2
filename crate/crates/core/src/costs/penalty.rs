use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyParams {
    pub penalty: f64,
    pub scale: f64,
    pub shift: f64,
    /// Upper bound on the exponent of the soft barrier.
    pub exp_cap: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            penalty: 100.0,
            scale: 25.0,
            shift: 7.5,
            exp_cap: 700.0,
        }
    }
}

/// Logistic function, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Boundary penalty: a steep sigmoid step at zero plus a capped soft
/// barrier that grows once `arg` exceeds the shift.
#[inline]
pub fn penalty_bnd(arg: f64, p: &PenaltyParams) -> f64 {
    let barrier = (p.scale * (arg - p.shift).min(p.exp_cap).exp()).ln_1p();
    p.penalty * (sigmoid(p.scale * arg) + barrier)
}

#[inline]
pub fn penalty_cls(arg: f64) -> f64 {
    1.0 / (1.0 + arg * arg)
}
