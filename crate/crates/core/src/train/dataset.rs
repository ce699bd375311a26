use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, label_edges, AssocGraph, GraphConfig};
use crate::model::{GraphInput, InputSpec};
use crate::rng::substream;
use crate::sim::{random_targets, simulate_window, RadarConfig, ScenarioConfig};
use rand::Rng;

/// A labeled association graph and the SNR shared by its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGraph {
    pub snr_db: f64,
    pub graph: AssocGraph,
}

/// Network inputs split into training and validation parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<GraphInput>,
    pub val: Vec<GraphInput>,
}

impl Dataset {
    /// Converts simulated graphs; the first 80 % (at least one) train.
    pub fn from_graphs(graphs: &[SimGraph], spec: &InputSpec) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::domain("dataset needs at least one graph"));
        }
        let n_train = ((graphs.len() as f64 * 0.8).round() as usize).clamp(1, graphs.len());
        let inputs = graphs
            .iter()
            .map(|g| Ok(GraphInput::from_graph(&g.graph, spec)?.with_snr(g.snr_db)))
            .collect::<Result<Vec<_>>>()?;
        let mut train = inputs;
        let val = train.split_off(n_train);
        Ok(Self { train, val })
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Input shape implied by a radar configuration.
pub fn input_spec(radar: &RadarConfig) -> InputSpec {
    InputSpec { n_doppler: radar.n_doppler(), patch_range: radar.patch_range_cells, v_u: radar.v_u }
}

/// Simulates `n_graphs` labeled windows of `gc.l` frames.
///
/// Graph `k` draws from substream `("dataset", k)`: one SNR from
/// `snr_list_db`, then targets at that SNR, then the window.
pub fn make_graphs(
    n_graphs: usize,
    snr_list_db: &[f64],
    radar: &RadarConfig,
    gc: &GraphConfig,
    scenario: &ScenarioConfig,
    seed: u64,
) -> Result<Vec<SimGraph>> {
    if n_graphs == 0 {
        return Err(Error::domain("dataset needs at least one graph"));
    }
    if snr_list_db.is_empty() {
        return Err(Error::config("dataset: SNR list is empty"));
    }
    radar.validate()?;
    gc.validate()?;
    (0..n_graphs)
        .map(|k| {
            let mut rng = substream(seed, "dataset", k as u64);
            let snr_db = snr_list_db[rng.random_range(0..snr_list_db.len())];
            let truths = random_targets(&scenario.at_snr(snr_db), radar, gc.l, 0, &mut rng)?;
            let window = simulate_window(&truths, 0.0, gc.l, radar, &mut rng)?;
            let (mut graph, _) = build_graph(&window, gc, radar.v_u)?;
            label_edges(&mut graph);
            Ok(SimGraph { snr_db, graph })
        })
        .collect()
}

/// [`make_graphs`] followed by the 80/20 split.
pub fn make_dataset(
    n_graphs: usize,
    snr_list_db: &[f64],
    radar: &RadarConfig,
    gc: &GraphConfig,
    scenario: &ScenarioConfig,
    seed: u64,
) -> Result<Dataset> {
    let graphs = make_graphs(n_graphs, snr_list_db, radar, gc, scenario, seed)?;
    Dataset::from_graphs(&graphs, &input_spec(radar))
}
