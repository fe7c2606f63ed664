use serde::{Deserialize, Serialize};

/// Exact detection counters over a stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub events: u64,
    /// Events flagged by the engine (any active flag, or a positive bid).
    pub alerts: u64,
    /// Alerts that were judged.
    pub inspections: u64,
    /// Events the oracle labels suspicious.
    pub positives: u64,
    /// Alerts on positive events.
    pub true_alerts: u64,
}

impl DetectionCounts {
    pub fn record(&mut self, alert: bool, positive: bool) {
        self.events += 1;
        if alert {
            self.alerts += 1;
        }
        if positive {
            self.positives += 1;
            if alert {
                self.true_alerts += 1;
            }
        }
    }

    pub fn precision(&self) -> Option<f64> {
        (self.alerts > 0).then(|| self.true_alerts as f64 / self.alerts as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.positives > 0).then(|| self.true_alerts as f64 / self.positives as f64)
    }

    pub fn inspection_fraction(&self) -> f64 {
        if self.events == 0 {
            0.0
        } else {
            self.inspections as f64 / self.events as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_and_recall() {
        let mut c = DetectionCounts::default();
        assert_eq!(c.precision(), None);
        assert_eq!(c.recall(), None);
        c.record(true, true);
        c.record(true, false);
        c.record(false, true);
        c.record(false, false);
        c.inspections = 2;
        assert_eq!(c.precision(), Some(0.5));
        assert_eq!(c.recall(), Some(0.5));
        assert_eq!(c.inspection_fraction(), 0.5);
    }
}
