use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::Batch;
use super::dims::{ModelDims, Variant, KERNEL};
use crate::error::{Error, Result};
use crate::tensor::{Array, Conv2dSpec, Tape, Var};

const ATTN_SLOPE: f64 = 0.2;

/// Named parameter arrays in layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub arrays: Vec<Array>,
}

impl ModelParams {
    pub fn tally(&self) -> usize {
        self.arrays.iter().map(Array::len).sum()
    }

    /// Parameter count of arrays whose name starts with `prefix`.
    pub fn tally_prefix(&self, prefix: &str) -> usize {
        self.names
            .iter()
            .zip(&self.arrays)
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, a)| a.len())
            .sum()
    }

    pub fn get(&self, name: &str) -> Option<&Array> {
        self.names.iter().position(|n| n == name).map(|i| &self.arrays[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.arrays[i])
    }
}

#[derive(Debug, Clone, Copy)]
struct Lin {
    w: usize,
    b: Option<usize>,
}

#[derive(Debug, Clone)]
struct Nfen {
    d: Vec<Lin>,
    s: Vec<Lin>,
    i: Vec<Lin>,
    conv: Vec<(usize, usize)>,
    proj: Lin,
}

#[derive(Debug, Clone, Copy)]
struct GatHead {
    w_g: usize,
    l_e: usize,
    w_e: usize,
    a_g: usize,
    beta: usize,
}

#[derive(Debug, Clone)]
enum Passing {
    Stef(Vec<Vec<GatHead>>),
    Gcn(Vec<usize>),
    Adapter(Lin),
}

#[derive(Debug, Clone)]
enum Head {
    Oajn { w_ed: Lin, layers: Vec<Lin> },
    Linear(Lin),
}

#[derive(Debug, Clone)]
struct Layout {
    nfen: Option<Nfen>,
    raw_adapter: Option<Lin>,
    passing: Passing,
    head: Head,
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Xavier { fan_in: usize, fan_out: usize },
    Zero,
}

#[derive(Default)]
struct Builder {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    inits: Vec<Init>,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> usize {
        self.names.push(name);
        self.shapes.push(shape);
        self.inits.push(init);
        self.names.len() - 1
    }

    fn lin(&mut self, name: &str, n_in: usize, n_out: usize, bias: bool) -> Lin {
        let w = self.add(
            format!("{name}.w"),
            vec![n_in, n_out],
            Init::Xavier { fan_in: n_in, fan_out: n_out },
        );
        let b = bias.then(|| self.add(format!("{name}.b"), vec![n_out], Init::Zero));
        Lin { w, b }
    }

    fn mlp(&mut self, name: &str, n_in: usize, width: usize, depth: usize) -> Vec<Lin> {
        (0..depth)
            .map(|k| self.lin(&format!("{name}.{k}"), if k == 0 { n_in } else { width }, width, true))
            .collect()
    }
}

fn build_layout(dims: &ModelDims, variant: Variant) -> (Layout, Builder) {
    let mut b = Builder::default();
    let fused = dims.fused_dim();
    let nfen = variant.has_nfen().then(|| {
        let d = b.mlp("nfen.d", 1, dims.n_h, dims.n_d);
        let s = b.mlp("nfen.s", 1, dims.n_h, dims.n_s);
        let i = b.mlp("nfen.i", dims.temporal_bits, dims.n_h, dims.n_i);
        let conv = dims
            .conv_channels
            .windows(2)
            .enumerate()
            .map(|(k, p)| {
                let kk = KERNEL * KERNEL;
                let w = b.add(
                    format!("nfen.a.conv{k}.w"),
                    vec![p[1], p[0], KERNEL, KERNEL],
                    Init::Xavier { fan_in: p[0] * kk, fan_out: p[1] * kk },
                );
                let bias = b.add(format!("nfen.a.conv{k}.b"), vec![p[1]], Init::Zero);
                (w, bias)
            })
            .collect();
        let proj = b.lin("nfen.a.proj", dims.conv_flat_dim(), dims.n_h, true);
        Nfen { d, s, i, conv, proj }
    });
    let raw_adapter = (!variant.has_nfen()).then(|| b.lin("adapter.raw", dims.raw_node_dim(), fused, true));

    let passing = if variant.has_stef() {
        let mut n_in = fused;
        let layers = dims
            .gat_dims
            .iter()
            .enumerate()
            .map(|(k, &width)| {
                let n = width / dims.heads;
                let heads = (0..dims.heads)
                    .map(|h| {
                        let p = format!("stef.{k}.h{h}");
                        let x = |fi, fo| Init::Xavier { fan_in: fi, fan_out: fo };
                        GatHead {
                            w_g: b.add(format!("{p}.w_g"), vec![n_in, n], x(n_in, n)),
                            l_e: b.add(format!("{p}.l_e"), vec![2, dims.n_le], x(2, dims.n_le)),
                            w_e: b.add(format!("{p}.w_e"), vec![2, dims.n_we], x(2, dims.n_we)),
                            a_g: b.add(format!("{p}.a_g"), vec![2 * n + dims.n_we, 1], x(2 * n + dims.n_we, 1)),
                            beta: b.add(format!("{p}.beta"), vec![n + dims.n_le, n], x(n + dims.n_le, n)),
                        }
                    })
                    .collect();
                n_in = width;
                heads
            })
            .collect();
        Passing::Stef(layers)
    } else if variant.has_gcn() {
        let mut n_in = fused;
        let layers = dims
            .gat_dims
            .iter()
            .enumerate()
            .map(|(k, &width)| {
                let w = b.add(format!("gcn.{k}.w"), vec![n_in, width], Init::Xavier { fan_in: n_in, fan_out: width });
                n_in = width;
                w
            })
            .collect();
        Passing::Gcn(layers)
    } else {
        Passing::Adapter(b.lin("adapter.nodes", fused, fused, true))
    };

    let nx = dims.node_out_dim(variant);
    let head = if variant.has_oajn() {
        let w_ed = b.lin("oajn.w_ed", 3, dims.n_m, true);
        let mut layers = Vec::with_capacity(dims.n_j);
        for k in 0..dims.n_j {
            let n_in = if k == 0 { 2 * nx + dims.n_m } else { dims.n_m };
            let n_out = if k + 1 == dims.n_j { 3 } else { dims.n_m };
            layers.push(b.lin(&format!("oajn.j{k}"), n_in, n_out, true));
        }
        Head::Oajn { w_ed, layers }
    } else {
        Head::Linear(b.lin("head", 2 * nx + 3, 3, true))
    };
    (Layout { nfen, raw_adapter, passing, head }, b)
}

/// Link-prediction network: node embedding, message passing and edge head.
#[derive(Debug, Clone)]
pub struct Model {
    pub dims: ModelDims,
    pub variant: Variant,
    pub params: ModelParams,
    layout: Layout,
}

/// Handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `[E, 3]` unnormalized class scores.
    pub logits: Var,
    /// `[N, fused]` embedding output.
    pub fused: Var,
    /// Node features entering the edge head.
    pub nodes: Var,
    /// Attention per layer and head, `[D, 1]` over the batch's directed rows.
    pub attention: Vec<Vec<Var>>,
}

impl Model {
    /// Fan-in/fan-out scaled uniform weights; zero biases.
    pub fn init<R: Rng + ?Sized>(dims: &ModelDims, variant: Variant, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let (layout, b) = build_layout(dims, variant);
        let arrays = b
            .shapes
            .iter()
            .zip(&b.inits)
            .map(|(shape, init)| match *init {
                Init::Zero => Array::zeros(shape),
                Init::Xavier { fan_in, fan_out } => {
                    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let n: usize = shape.iter().product();
                    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
                    Array::new(shape.clone(), data).expect("shape product matches")
                }
            })
            .collect();
        Ok(Self {
            dims: dims.clone(),
            variant,
            params: ModelParams { names: b.names, arrays },
            layout,
        })
    }

    /// Rebuilds a model from stored parameters, checking names and shapes.
    pub fn from_params(dims: ModelDims, variant: Variant, params: ModelParams) -> Result<Self> {
        dims.validate()?;
        let (layout, b) = build_layout(&dims, variant);
        if params.names != b.names || params.arrays.len() != b.shapes.len() {
            return Err(Error::config("parameter names do not match the model layout"));
        }
        for (a, s) in params.arrays.iter().zip(&b.shapes) {
            if a.shape() != s.as_slice() {
                return Err(Error::shape("from_params", s, a.shape()));
            }
        }
        Ok(Self { dims, variant, params, layout })
    }

    /// Upper bound of the uniform initializer per parameter array (zero for biases).
    pub fn init_bounds(&self) -> Vec<f64> {
        let (_, b) = build_layout(&self.dims, self.variant);
        b.inits
            .iter()
            .map(|i| match *i {
                Init::Zero => 0.0,
                Init::Xavier { fan_in, fan_out } => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            })
            .collect()
    }

    /// Registers parameters on the tape as trainable leaves.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.arrays.iter().map(|a| tape.param(a.clone())).collect()
    }

    /// Registers parameters as constants (inference only).
    pub fn bind_frozen(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.arrays.iter().map(|a| tape.constant(a.clone())).collect()
    }

    fn apply(t: &mut Tape, p: &[Var], l: Lin, x: Var) -> Result<Var> {
        let y = t.matmul(x, p[l.w])?;
        match l.b {
            Some(b) => t.add_bias(y, p[b]),
            None => Ok(y),
        }
    }

    fn mlp(t: &mut Tape, p: &[Var], layers: &[Lin], mut x: Var) -> Result<Var> {
        for &l in layers {
            let y = Self::apply(t, p, l, x)?;
            x = t.elu(y);
        }
        Ok(x)
    }

    fn embed(&self, t: &mut Tape, p: &[Var], b: &Batch) -> Result<Var> {
        if let Some(nf) = &self.layout.nfen {
            let d = t.constant(b.d.clone());
            let s = t.constant(b.s.clone());
            let bits = t.constant(b.bits.clone());
            let fd = Self::mlp(t, p, &nf.d, d)?;
            let fs = Self::mlp(t, p, &nf.s, s)?;
            let fi = Self::mlp(t, p, &nf.i, bits)?;
            let mut x = t.constant(b.patch.clone());
            for (k, &(w, bias)) in nf.conv.iter().enumerate() {
                let stride = if k == 0 { (2, 1) } else { (1, 1) };
                let c = t.conv2d(x, p[w], p[bias], Conv2dSpec { stride, pad: (1, 1) })?;
                x = t.elu(c);
            }
            let flat = t.reshape(x, &[b.n_nodes, self.dims.conv_flat_dim()])?;
            let fa = Self::mlp(t, p, std::slice::from_ref(&nf.proj), flat)?;
            t.concat_cols(&[fd, fs, fi, fa])
        } else {
            let raw = t.constant(b.raw_nodes()?);
            let l = self.layout.raw_adapter.expect("adapter exists without embedding");
            Self::mlp(t, p, &[l], raw)
        }
    }

    fn stef_layer(
        t: &mut Tape,
        p: &[Var],
        heads: &[GatHead],
        x: Var,
        b: &Batch,
        dir_e: Var,
        nb_e: Var,
    ) -> Result<(Var, Vec<Var>)> {
        let n = b.n_nodes;
        let nb_src: Vec<usize> = b.dir_src[n..].to_vec();
        let mut outs = Vec::with_capacity(heads.len());
        let mut alphas = Vec::with_capacity(heads.len());
        for h in heads {
            let wx = t.matmul(x, p[h.w_g])?;
            let src = t.gather_rows(wx, b.dir_src.clone())?;
            let dst = t.gather_rows(wx, b.dir_dst.clone())?;
            let we = t.matmul(dir_e, p[h.w_e])?;
            let cat = t.concat_cols(&[dst, src, we])?;
            let score = t.matmul(cat, p[h.a_g])?;
            let score = t.leaky_relu(score, ATTN_SLOPE);
            let alpha = t.segment_softmax(score, b.dir_dst.clone(), n)?;
            let msg = if nb_src.is_empty() {
                wx
            } else {
                let xj = t.gather_rows(wx, nb_src.clone())?;
                let le = t.matmul(nb_e, p[h.l_e])?;
                let cat = t.concat_cols(&[xj, le])?;
                let nb = t.matmul(cat, p[h.beta])?;
                t.concat_rows(&[wx, nb])?
            };
            let weighted = t.mul_rows(msg, alpha)?;
            let agg = t.scatter_add_rows(weighted, b.dir_dst.clone(), n)?;
            outs.push(t.elu(agg));
            alphas.push(alpha);
        }
        Ok((t.concat_cols(&outs)?, alphas))
    }

    /// Runs the network on `batch` with parameters bound as `p`.
    pub fn forward(&self, t: &mut Tape, p: &[Var], b: &Batch) -> Result<Forward> {
        if p.len() != self.params.arrays.len() {
            return Err(Error::shape("forward", &[self.params.arrays.len()], &[p.len()]));
        }
        let fused = self.embed(t, p, b)?;
        let mut attention = Vec::new();
        let nodes = match &self.layout.passing {
            Passing::Stef(layers) => {
                let dir_e = t.constant(b.dir_e.clone());
                let nb_rows = Array::new(
                    vec![b.dir_src.len() - b.n_nodes, 2],
                    b.dir_e.data()[2 * b.n_nodes..].to_vec(),
                )?;
                let nb_e = t.constant(nb_rows);
                let mut x = fused;
                for heads in layers {
                    let (y, a) = Self::stef_layer(t, p, heads, x, b, dir_e, nb_e)?;
                    attention.push(a);
                    x = y;
                }
                x
            }
            Passing::Gcn(layers) => {
                let norm = t.constant(b.dir_norm.clone());
                let mut x = fused;
                for &w in layers {
                    let xw = t.matmul(x, p[w])?;
                    let src = t.gather_rows(xw, b.dir_src.clone())?;
                    let scaled = t.mul_rows(src, norm)?;
                    let agg = t.scatter_add_rows(scaled, b.dir_dst.clone(), b.n_nodes)?;
                    x = t.elu(agg);
                }
                x
            }
            Passing::Adapter(l) => Self::mlp(t, p, &[*l], fused)?,
        };
        let xi = t.gather_rows(nodes, b.edge_w.clone())?;
        let xj = t.gather_rows(nodes, b.edge_u.clone())?;
        let ef = t.constant(b.edge_feats.clone());
        let logits = match &self.layout.head {
            Head::Oajn { w_ed, layers } => {
                let ed = Self::apply(t, p, *w_ed, ef)?;
                let mut h = t.concat_cols(&[xi, xj, ed])?;
                let (last, hidden) = layers.split_last().expect("n_j >= 2");
                h = Self::mlp(t, p, hidden, h)?;
                Self::apply(t, p, *last, h)?
            }
            Head::Linear(l) => {
                let f = t.concat_cols(&[xi, xj, ef])?;
                Self::apply(t, p, *l, f)?
            }
        };
        Ok(Forward { logits, fused, nodes, attention })
    }

    /// Mean over graphs of the mean per-edge cross-entropy, with optional class weights.
    /// Graphs without edges are skipped.
    pub fn loss(&self, t: &mut Tape, logits: Var, b: &Batch, class_weights: Option<[f64; 3]>) -> Result<Var> {
        let labels = b
            .labels
            .as_ref()
            .ok_or_else(|| Error::Missing("edge labels".into()))?;
        let live = b.graph_edges.iter().filter(|&&e| e > 0).count();
        if live == 0 {
            return Err(Error::domain("no graph in the batch has edges"));
        }
        let cw = class_weights.unwrap_or([1.0; 3]);
        let weights: Vec<f64> = labels
            .iter()
            .zip(&b.edge_graph)
            .map(|(&c, &g)| cw[c] / (b.graph_edges[g] as f64 * live as f64))
            .collect();
        let lsm = t.log_softmax_rows(logits)?;
        let picked = t.pick_cols(lsm, labels.clone())?;
        let weighted = t.mul_const(picked, Array::column(weights))?;
        let total = t.sum(weighted);
        Ok(t.scale(total, -1.0))
    }

    /// Class probabilities for every edge of the batch.
    pub fn predict(&self, b: &Batch) -> Result<Vec<[f64; 3]>> {
        let mut t = Tape::new();
        let p = self.bind_frozen(&mut t);
        let f = self.forward(&mut t, &p, b)?;
        let probs = t.softmax_rows(f.logits)?;
        Ok(t.value(probs).data().chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}
