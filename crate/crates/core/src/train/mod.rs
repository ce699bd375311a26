//! Dataset synthesis, minibatch training and edge-classification metrics.

mod dataset;
mod fit;
mod metrics;
#[cfg(test)]
mod tests;

pub use dataset::{input_spec, make_dataset, make_graphs, Dataset, SimGraph};
pub use fit::{class_weights, dataset_loss, layer_sweep, train, train_step, TrainHyper, TrainReport};
pub use metrics::{argmax_class, confusion_and_accuracy, confusion_by_snr, predict_graphs, Confusion, SnrMetrics};
