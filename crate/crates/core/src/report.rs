use std::time::Duration;

use serde::Serialize;

use crate::dsp::to_db;

/// Outcome summary shared by every optimizer.
#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    /// Achieved PAPR, linear scale.
    pub objective: f64,
    pub objective_db: f64,
    /// Minimax value in the solver's native units: peak modulus `|x^t|` for the
    /// sign solvers, `max_n g_n` for the phase solver.
    pub peak: f64,
    /// Descent iterations, search nodes, or flip evaluations, depending on the solver.
    pub iterations: u64,
    /// Certified width of the interval known to contain the optimum, when one exists.
    pub bound_gap: Option<f64>,
    pub converged: bool,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    /// Resolved solver settings.
    pub settings: serde_json::Value,
}

impl SolverReport {
    pub(crate) fn new(papr: f64, peak: f64, iterations: u64, wall_time: Duration) -> Self {
        SolverReport {
            objective: papr,
            objective_db: to_db(papr),
            peak,
            iterations,
            bound_gap: None,
            converged: true,
            wall_time,
            settings: serde_json::Value::Null,
        }
    }
}

mod duration_secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}
