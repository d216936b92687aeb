use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RewardKind {
    /// 1 inside the region, decaying cliff-edge tail outside.
    Step,
    /// Tanh bump inside the region, same tail outside.
    Tanh,
    /// `2^(-rate d)` everywhere.
    Exp,
}

impl RewardKind {
    pub const ALL: [RewardKind; 3] = [RewardKind::Step, RewardKind::Tanh, RewardKind::Exp];

    pub fn label(self) -> &'static str {
        match self {
            RewardKind::Step => "step",
            RewardKind::Tanh => "tanh",
            RewardKind::Exp => "exp",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "step" => Ok(RewardKind::Step),
            "tanh" => Ok(RewardKind::Tanh),
            "exp" => Ok(RewardKind::Exp),
            other => Err(format!("unknown reward kind {other:?} (expected step, tanh or exp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    /// km
    pub region_radius: f64,
    pub cliff: f64,
    /// km
    pub decay_rho: f64,
    /// Half-life distance, km.
    pub decay_tau: f64,
    /// per km
    pub exp_rate: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { region_radius: 50.0, cliff: 0.4, decay_rho: 50.0, decay_tau: 100.0, exp_rate: 0.01 }
    }
}

fn tail(d: f64, p: &RewardParams) -> f64 {
    p.cliff * (-(d - p.decay_rho) / p.decay_tau).exp2()
}

/// Per-step reward at distance `d` km from the target.
pub fn reward(d: f64, kind: RewardKind, p: &RewardParams) -> f64 {
    match kind {
        RewardKind::Step if d < p.region_radius => 1.0,
        RewardKind::Tanh if d < p.region_radius => -((d / 20.0 - 3.0).tanh() - 1.0) / 2.0,
        RewardKind::Step | RewardKind::Tanh => tail(d, p),
        RewardKind::Exp => (-p.exp_rate * d).exp2(),
    }
}
