use super::input::GraphInput;
use crate::error::{Error, Result};
use crate::tensor::Array;

/// Several graphs merged into one disjoint graph.
///
/// Directed message rows hold one self loop per node (rows `0..N`, zero
/// edge features) followed by both orientations of every edge: row
/// `N + 2k` is `u → w` and row `N + 2k + 1` is `w → u` with the residual
/// pair swapped.
#[derive(Debug, Clone)]
pub struct Batch {
    pub n_nodes: usize,
    pub n_graphs: usize,
    pub d: Array,
    pub s: Array,
    pub bits: Array,
    /// `[N, 1, N_D, W]`.
    pub patch: Array,
    pub edge_u: Vec<usize>,
    pub edge_w: Vec<usize>,
    /// `[E, 3]`: both residuals then the channel difference.
    pub edge_feats: Array,
    pub dir_src: Vec<usize>,
    pub dir_dst: Vec<usize>,
    /// `[D, 2]`.
    pub dir_e: Array,
    /// Symmetric degree normalization per directed row.
    pub dir_norm: Array,
    /// Owning graph of each edge.
    pub edge_graph: Vec<usize>,
    /// Edge count of each graph.
    pub graph_edges: Vec<usize>,
    pub labels: Option<Vec<usize>>,
}

impl Batch {
    pub fn new(graphs: &[&GraphInput]) -> Result<Self> {
        let first = graphs.first().ok_or_else(|| Error::domain("empty batch"))?;
        let (nd, w) = first.patch_hw;
        let cells = nd * w;
        let n: usize = graphs.iter().map(|g| g.n_nodes).sum();
        let e: usize = graphs.iter().map(|g| g.n_edges()).sum();
        let mut d = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        let mut bits = Vec::with_capacity(4 * n);
        let mut patch = Vec::with_capacity(cells * n);
        let mut edge_u = Vec::with_capacity(e);
        let mut edge_w = Vec::with_capacity(e);
        let mut feats = Vec::with_capacity(3 * e);
        let mut edge_graph = Vec::with_capacity(e);
        let mut graph_edges = Vec::with_capacity(graphs.len());
        let mut labels = Some(Vec::with_capacity(e));
        let mut offset = 0;
        for (gi, g) in graphs.iter().enumerate() {
            if g.patch_hw != first.patch_hw || g.patch.len() != cells * g.n_nodes {
                return Err(Error::shape("Batch", &[nd, w], &[g.patch_hw.0, g.patch_hw.1]));
            }
            d.extend_from_slice(&g.d);
            s.extend_from_slice(&g.s);
            bits.extend_from_slice(&g.bits);
            patch.extend_from_slice(&g.patch);
            for k in 0..g.n_edges() {
                edge_u.push(g.edge_u[k] + offset);
                edge_w.push(g.edge_w[k] + offset);
                feats.extend_from_slice(&[g.e[2 * k], g.e[2 * k + 1], g.dcd[k]]);
                edge_graph.push(gi);
            }
            graph_edges.push(g.n_edges());
            labels = match (labels, &g.labels) {
                (Some(mut acc), Some(l)) => {
                    acc.extend_from_slice(l);
                    Some(acc)
                }
                _ => None,
            };
            offset += g.n_nodes;
        }

        let rows = n + 2 * e;
        let mut dir_src = Vec::with_capacity(rows);
        let mut dir_dst = Vec::with_capacity(rows);
        let mut dir_e = vec![0.0; 2 * rows];
        dir_src.extend(0..n);
        dir_dst.extend(0..n);
        let mut degree = vec![1.0f64; n];
        for k in 0..e {
            let (u, w) = (edge_u[k], edge_w[k]);
            let (f1, f2) = (feats[3 * k], feats[3 * k + 1]);
            let r = n + 2 * k;
            dir_src.push(u);
            dir_dst.push(w);
            dir_e[2 * r] = f1;
            dir_e[2 * r + 1] = f2;
            dir_src.push(w);
            dir_dst.push(u);
            dir_e[2 * r + 2] = f2;
            dir_e[2 * r + 3] = f1;
            degree[u] += 1.0;
            degree[w] += 1.0;
        }
        let dir_norm = dir_src
            .iter()
            .zip(&dir_dst)
            .map(|(&a, &b)| 1.0 / (degree[a] * degree[b]).sqrt())
            .collect();
        Ok(Batch {
            n_nodes: n,
            n_graphs: graphs.len(),
            d: Array::new(vec![n, 1], d)?,
            s: Array::new(vec![n, 1], s)?,
            bits: Array::new(vec![n, 4], bits)?,
            patch: Array::new(vec![n, 1, nd, w], patch)?,
            edge_u,
            edge_w,
            edge_feats: Array::new(vec![e, 3], feats)?,
            dir_src,
            dir_dst,
            dir_e: Array::new(vec![rows, 2], dir_e)?,
            dir_norm: Array::new(vec![rows, 1], dir_norm)?,
            edge_graph,
            graph_edges,
            labels,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edge_u.len()
    }

    /// Concatenated raw node inputs `[N, 6 + N_D·W]` for networks without an embedding stage.
    pub fn raw_nodes(&self) -> Result<Array> {
        let n = self.n_nodes;
        let cells = self.patch.len().checked_div(n).unwrap_or(0);
        let width = 6 + cells;
        let mut out = Vec::with_capacity(n * width);
        for i in 0..n {
            out.push(self.d.data()[i]);
            out.push(self.s.data()[i]);
            out.extend_from_slice(&self.bits.data()[4 * i..4 * i + 4]);
            out.extend_from_slice(&self.patch.data()[cells * i..cells * (i + 1)]);
        }
        Array::new(vec![n, width], out)
    }
}
