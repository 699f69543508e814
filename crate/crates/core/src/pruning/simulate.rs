use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{family_thresholds, FixDeg, NullModelSpec, PruneError};
use crate::hin::Hin;

/// Monte Carlo check of the analytic thresholds against their own null model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub fix_deg: FixDeg,
    pub alpha: f64,
    pub draws: u64,
    pub seed: u64,
    /// Cells per draw that belong to a family with at least one trial.
    pub cells: u64,
    /// Simulated cell weights strictly above their threshold.
    pub exceeded: u64,
    /// Simulated cell weights at or above their threshold, i.e. cells the
    /// keep rule would retain.
    pub at_or_above: u64,
    pub exceedance_rate: f64,
    pub keep_rate: f64,
    /// `alpha + 3 sqrt(alpha / draws)`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Draws `draws` weight configurations from the null model in `spec` and
/// counts how often cells clear the analytic threshold. Draw `d` uses stream
/// `d` of a ChaCha generator keyed by `seed`, so the result does not depend
/// on thread scheduling.
pub fn null_simulation(
    hin: &Hin,
    spec: &NullModelSpec,
    draws: u64,
    seed: u64,
) -> Result<CalibrationReport, PruneError> {
    spec.validate()?;
    if hin.total_weight() == 0 {
        return Err(PruneError::EmptyHin);
    }
    let draws = draws.max(1);
    let model = spec.fix_deg.model();
    let alpha = spec.effective_alpha(hin);
    let thresholds = family_thresholds(hin, model, alpha)?;
    let (n1, n2) = (hin.n1(), hin.n2());
    // None marks cells whose family has no trials; they can never hold weight.
    let cell_threshold: Vec<Option<u64>> = (0..n1 * n2)
        .map(|c| {
            let (params, t) = thresholds[model.family_of(c / n2, c % n2)];
            (params.n > 0).then_some(t)
        })
        .collect();
    let live_cells = cell_threshold.iter().filter(|t| t.is_some()).count() as u64;

    let (exceeded, at_or_above) = (0..draws)
        .into_par_iter()
        .map_init(
            || vec![0u64; n1 * n2],
            |cells, draw| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(draw);
                model.sample(hin, &mut rng, cells);
                let mut above = 0u64;
                let mut at_least = 0u64;
                for (&w, t) in cells.iter().zip(&cell_threshold) {
                    if let Some(t) = *t {
                        above += u64::from(w > t);
                        at_least += u64::from(w >= t);
                    }
                }
                (above, at_least)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let total = (live_cells * draws) as f64;
    let exceedance_rate = exceeded as f64 / total;
    let bound = alpha + 3.0 * (alpha / draws as f64).sqrt();
    Ok(CalibrationReport {
        fix_deg: spec.fix_deg,
        alpha,
        draws,
        seed,
        cells: live_cells,
        exceeded,
        at_or_above,
        exceedance_rate,
        keep_rate: at_or_above as f64 / total,
        bound,
        within_bound: exceedance_rate <= bound,
    })
}
