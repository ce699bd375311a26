use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Batch, GraphInput, Model};

/// Rows are true classes, columns predicted classes (FF, TF, TT).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; 3]; 3],
}

impl Confusion {
    pub fn add(&mut self, label: usize, predicted: usize) {
        self.counts[label][predicted] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) {
        for r in 0..3 {
            for c in 0..3 {
                self.counts[r][c] += other.counts[r][c];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of edges whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Trace over total; zero when empty.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..3).map(|k| self.counts[k][k]).sum::<u64>() as f64 / total as f64
    }

    /// Accuracy restricted to edges of one true class.
    pub fn class_accuracy(&self, class: usize) -> f64 {
        let s = self.support(class);
        if s == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / s as f64
        }
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax_class(p: &[f64; 3]) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

/// Class probabilities for each graph, evaluated in chunks of `chunk` graphs.
pub fn predict_graphs(model: &Model, graphs: &[&GraphInput], chunk: usize) -> Result<Vec<Vec<[f64; 3]>>> {
    let mut out = Vec::with_capacity(graphs.len());
    for part in graphs.chunks(chunk.max(1)) {
        let b = Batch::new(part)?;
        let probs = model.predict(&b)?;
        let mut at = 0;
        for g in part {
            out.push(probs[at..at + g.n_edges()].to_vec());
            at += g.n_edges();
        }
    }
    Ok(out)
}

/// Confusion matrix over labeled graphs, optionally only those tagged `snr_bucket` dB.
pub fn confusion_and_accuracy(model: &Model, graphs: &[GraphInput], snr_bucket: Option<f64>) -> Result<Confusion> {
    let chosen: Vec<&GraphInput> = graphs
        .iter()
        .filter(|g| match snr_bucket {
            Some(s) => g.snr_db.is_some_and(|t| (t - s).abs() < 1e-9),
            None => true,
        })
        .collect();
    let mut cm = Confusion::default();
    if chosen.is_empty() {
        return Ok(cm);
    }
    let probs = predict_graphs(model, &chosen, 32)?;
    for (g, p) in chosen.iter().zip(&probs) {
        let labels = g.labels.as_ref().ok_or_else(|| crate::Error::Missing("edge labels".into()))?;
        for (&l, q) in labels.iter().zip(p) {
            cm.add(l, argmax_class(q));
        }
    }
    Ok(cm)
}

/// Confusion per distinct SNR tag, sorted by SNR.
pub fn confusion_by_snr(model: &Model, graphs: &[GraphInput]) -> Result<Vec<SnrMetrics>> {
    let mut tags: Vec<f64> = graphs.iter().filter_map(|g| g.snr_db).collect();
    tags.sort_by(f64::total_cmp);
    tags.dedup();
    tags.into_iter()
        .map(|snr_db| {
            let confusion = confusion_and_accuracy(model, graphs, Some(snr_db))?;
            Ok(SnrMetrics { snr_db, accuracy: confusion.accuracy(), confusion })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrMetrics {
    pub snr_db: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}
