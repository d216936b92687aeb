use std::io::{self, Write};

use super::{Action, Termination};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based decision step.
    pub step: usize,
    pub t_s: f64,
    pub x_km: f64,
    pub y_km: f64,
    pub h_m: f64,
    pub d_km: f64,
    pub reward: f64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    /// Undiscounted return, summed in step order.
    pub total_return: f64,
    pub termination: Termination,
}

impl EpisodeTrace {
    pub fn new(records: Vec<StepRecord>, termination: Termination) -> Self {
        let total_return = records.iter().map(|r| r.reward).sum();
        Self { records, total_return, termination }
    }

    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().map(|r| (r.x_km, r.y_km))
    }
}

pub const EPISODE_CSV_HEADER: &str = "step,t_s,x_km,y_km,h_m,d_km,reward,u0,u1,u2";

pub fn write_episode_csv(trace: &EpisodeTrace, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{EPISODE_CSV_HEADER}")?;
    for r in &trace.records {
        let [u0, u1, u2] = r.action.u;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step, r.t_s, r.x_km, r.y_km, r.h_m, r.d_km, r.reward, u0, u1, u2
        )?;
    }
    Ok(())
}
