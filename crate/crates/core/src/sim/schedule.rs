//! Multi-rate task schedule on the physics tick.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tasks {
    pub physics: bool,
    pub replan: bool,
    pub predict: bool,
    pub trustmhe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub replan_every: u64,
    pub predict_every: u64,
}

impl Schedule {
    pub fn new(replan_every: u64, predict_every: u64) -> Self {
        assert!(replan_every > 0 && predict_every > 0);
        Self {
            replan_every,
            predict_every,
        }
    }

    /// Tasks due at physics tick `step`. Everything is due at step 0.
    pub fn due(&self, step: u64) -> Tasks {
        let predict = step % self.predict_every == 0;
        Tasks {
            physics: true,
            replan: step % self.replan_every == 0,
            predict,
            trustmhe: predict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_intervals() {
        let s = Schedule::new(20, 50);
        let all = Tasks {
            physics: true,
            replan: true,
            predict: true,
            trustmhe: true,
        };
        assert_eq!(s.due(0), all);
        assert_eq!(
            s.due(20),
            Tasks {
                physics: true,
                replan: true,
                ..Tasks::default()
            }
        );
        assert_eq!(
            s.due(7),
            Tasks {
                physics: true,
                ..Tasks::default()
            }
        );
        assert_eq!(
            s.due(50),
            Tasks {
                replan: false,
                ..all
            }
        );
        assert_eq!(s.due(100), all);
    }
}
