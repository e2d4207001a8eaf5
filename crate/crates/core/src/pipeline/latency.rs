use serde::Serialize;

/// Per-stage latency samples, in milliseconds.
#[derive(Clone, Debug, Default)]
pub struct LatencyStats {
    decode: Vec<f64>,
    track: Vec<f64>,
    plan: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageSummary {
    pub p50: f64,
    pub p90: f64,
}

/// Nearest-rank percentile of unsorted samples.
fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn summary(samples: &[f64]) -> StageSummary {
    StageSummary {
        p50: percentile(samples, 0.5),
        p90: percentile(samples, 0.9),
    }
}

impl LatencyStats {
    pub fn record(&mut self, decode: f64, track: f64, plan: f64) {
        self.decode.push(decode);
        self.track.push(track);
        self.plan.push(plan);
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    pub fn decode(&self) -> StageSummary {
        summary(&self.decode)
    }

    pub fn track(&self) -> StageSummary {
        summary(&self.track)
    }

    pub fn plan(&self) -> StageSummary {
        summary(&self.plan)
    }

    /// Everything after ingest: tracking plus planning.
    pub fn planner(&self) -> StageSummary {
        let total: Vec<f64> = self.track.iter().zip(&self.plan).map(|(a, b)| a + b).collect();
        summary(&total)
    }
}
