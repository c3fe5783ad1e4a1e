use log::warn;

use crate::model::Dataset;

/// Removes artifacts with fewer than `min_events` events. `0` keeps everything.
pub fn filter_min_events(dataset: &Dataset, min_events: usize) -> Dataset {
    if min_events == 0 {
        return dataset.clone();
    }
    let filtered = dataset
        .retain(|_, stats| stats.n_events >= min_events)
        .expect("a subset of a valid dataset is valid");
    if filtered.is_empty() {
        warn!(
            "dataset `{}`: no artifact has at least {min_events} events",
            dataset.id()
        );
    }
    filtered
}
