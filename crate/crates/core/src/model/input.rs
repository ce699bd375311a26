use super::dims::{encode_temporal, InputSpec};
use crate::error::{Error, Result};
use crate::graph::AssocGraph;

/// Network-ready arrays for one graph, already normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub n_nodes: usize,
    /// Doppler channel over `N_D`, one per node.
    pub d: Vec<f64>,
    /// SNR estimate in dB over 20.
    pub s: Vec<f64>,
    /// Temporal code, 4 per node.
    pub bits: Vec<f64>,
    /// `ln(1 + p)` of each patch, Doppler-major.
    pub patch: Vec<f64>,
    pub patch_hw: (usize, usize),
    pub edge_u: Vec<usize>,
    pub edge_w: Vec<usize>,
    /// Residuals over `v_u / 2`, 2 per edge.
    pub e: Vec<f64>,
    /// Channel difference over `N_D`.
    pub dcd: Vec<f64>,
    /// Class index per edge, when labeled.
    pub labels: Option<Vec<usize>>,
    /// Graph-level SNR tag used for bucketing.
    pub snr_db: Option<f64>,
}

impl GraphInput {
    pub fn from_graph(g: &AssocGraph, spec: &InputSpec) -> Result<Self> {
        let n = g.n_nodes();
        let cells = spec.n_doppler * spec.patch_range;
        let mut input = GraphInput {
            n_nodes: n,
            d: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            bits: Vec::with_capacity(4 * n),
            patch: Vec::with_capacity(cells * n),
            patch_hw: (spec.n_doppler, spec.patch_range),
            edge_u: Vec::with_capacity(g.n_edges()),
            edge_w: Vec::with_capacity(g.n_edges()),
            e: Vec::with_capacity(2 * g.n_edges()),
            dcd: Vec::with_capacity(g.n_edges()),
            labels: None,
            snr_db: None,
        };
        let nd = spec.n_doppler as f64;
        for z in &g.nodes {
            if (z.patch.n_doppler(), z.patch.n_range()) != (spec.n_doppler, spec.patch_range) {
                return Err(Error::shape(
                    "GraphInput",
                    &[spec.n_doppler, spec.patch_range],
                    &[z.patch.n_doppler(), z.patch.n_range()],
                ));
            }
            input.d.push(z.d as f64 / nd);
            input.s.push(z.s / 20.0);
            input.bits.extend_from_slice(&encode_temporal(z.frame)?);
            input.patch.extend(z.patch.data().iter().map(|p| p.ln_1p()));
        }
        let half = spec.v_u / 2.0;
        for ed in &g.edges {
            input.edge_u.push(ed.u);
            input.edge_w.push(ed.w);
            input.e.push(ed.e[0] / half);
            input.e.push(ed.e[1] / half);
            input.dcd.push(ed.dcd as f64 / nd);
        }
        if g.edges.iter().all(|e| e.label.is_some()) {
            input.labels = Some(g.edges.iter().filter_map(|e| e.label.map(|l| l.class())).collect());
        }
        Ok(input)
    }

    pub fn n_edges(&self) -> usize {
        self.edge_u.len()
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }
}
