//! Multiclass averaged perceptron weights keyed by string features.
//!
//! Averaging uses the usual lazy timestamp trick: each weight remembers when
//! it last changed so its running total can be brought up to date on demand.

use std::collections::HashMap;

#[derive(Clone, Debug)]
struct Entry {
    weights: Vec<f64>,
    totals: Vec<f64>,
    stamps: Vec<u64>,
}

impl Entry {
    fn new(classes: usize) -> Self {
        Entry {
            weights: vec![0.0; classes],
            totals: vec![0.0; classes],
            stamps: vec![0; classes],
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Perceptron {
    classes: usize,
    entries: HashMap<String, Entry>,
    clock: u64,
}

impl Perceptron {
    pub fn new(classes: usize) -> Self {
        Perceptron {
            classes,
            entries: HashMap::new(),
            clock: 0,
        }
    }

    /// Current (non-averaged) weights of a feature.
    pub fn weights(&self, feature: &str) -> Option<&[f64]> {
        self.entries.get(feature).map(|e| e.weights.as_slice())
    }

    /// Add the current weights of `features` into `scores`.
    pub fn accumulate<S: AsRef<str>>(&self, features: &[S], scores: &mut [f64]) {
        for f in features {
            if let Some(w) = self.weights(f.as_ref()) {
                for (s, w) in scores.iter_mut().zip(w) {
                    *s += w;
                }
            }
        }
    }

    pub fn update(&mut self, feature: &str, class: usize, delta: f64) {
        let classes = self.classes;
        let clock = self.clock;
        let e = self
            .entries
            .entry(feature.to_owned())
            .or_insert_with(|| Entry::new(classes));
        e.totals[class] += (clock - e.stamps[class]) as f64 * e.weights[class];
        e.stamps[class] = clock;
        e.weights[class] += delta;
    }

    /// Advance the averaging clock by one training instance.
    pub fn tick(&mut self) {
        self.clock += 1;
    }

    /// Averaged weights, dropping features whose weights are all zero.
    pub fn averaged(mut self) -> HashMap<String, Vec<f64>> {
        let clock = self.clock;
        self.entries
            .drain()
            .filter_map(|(name, mut e)| {
                let avg: Vec<f64> = (0..e.weights.len())
                    .map(|c| {
                        if clock == 0 {
                            return e.weights[c];
                        }
                        e.totals[c] += (clock - e.stamps[c]) as f64 * e.weights[c];
                        e.totals[c] / clock as f64
                    })
                    .collect();
                avg.iter().any(|&w| w != 0.0).then_some((name, avg))
            })
            .collect()
    }
}
