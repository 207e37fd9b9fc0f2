use std::collections::BTreeSet;

/// Clearance that re-arms crash detection for an agent, m.
pub const REARM_CLEARANCE: f64 = 0.5;

/// Counts contacts per agent. A contact opens at zero distance and stays
/// open until the separation exceeds [`REARM_CLEARANCE`].
#[derive(Debug, Clone, Default)]
pub struct CrashMonitor {
    open: BTreeSet<u32>,
    count: u32,
}

impl CrashMonitor {
    pub fn count(&self) -> u32 {
        self.count
    }

    /// Feeds the current `(agent, distance)` pairs and returns the number of
    /// new crashes. Agents not listed have left the scene and are re-armed.
    pub fn update(&mut self, distances: &[(u32, f64)]) -> u32 {
        self.open
            .retain(|id| distances.iter().any(|(a, _)| a == id));
        let mut new = 0;
        for &(id, d) in distances {
            if self.open.contains(&id) {
                if d > REARM_CLEARANCE {
                    self.open.remove(&id);
                }
            } else if d <= 0.0 {
                self.open.insert(id);
                new += 1;
            }
        }
        self.count += new;
        new
    }
}
