use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the raw per-node inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub n_doppler: usize,
    pub patch_range: usize,
    /// Unambiguous velocity span used to normalize edge residuals.
    pub v_u: f64,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self { n_doppler: 32, patch_range: 5, v_u: 300.0 }
    }
}

/// Which sub-networks are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Full,
    NfenOnly,
    StefOnly,
    OajnOnly,
    NfenStef,
    NfenOajn,
    StefOajn,
    NfenGcnOajn,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Full,
        Variant::NfenOnly,
        Variant::StefOnly,
        Variant::OajnOnly,
        Variant::NfenStef,
        Variant::NfenOajn,
        Variant::StefOajn,
        Variant::NfenGcnOajn,
    ];

    pub fn has_nfen(self) -> bool {
        matches!(
            self,
            Variant::Full | Variant::NfenOnly | Variant::NfenStef | Variant::NfenOajn | Variant::NfenGcnOajn
        )
    }

    pub fn has_stef(self) -> bool {
        matches!(self, Variant::Full | Variant::StefOnly | Variant::NfenStef | Variant::StefOajn)
    }

    pub fn has_gcn(self) -> bool {
        self == Variant::NfenGcnOajn
    }

    pub fn has_oajn(self) -> bool {
        matches!(
            self,
            Variant::Full | Variant::OajnOnly | Variant::NfenOajn | Variant::StefOajn | Variant::NfenGcnOajn
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "NFEN+STEF+OAJN",
            Variant::NfenOnly => "NFEN",
            Variant::StefOnly => "STEF",
            Variant::OajnOnly => "OAJN",
            Variant::NfenStef => "NFEN+STEF",
            Variant::NfenOajn => "NFEN+OAJN",
            Variant::StefOajn => "STEF+OAJN",
            Variant::NfenGcnOajn => "NFEN+GCN+OAJN",
        }
    }
}

/// Layer widths and depths of the link-prediction network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDims {
    /// Output width of each embedding branch.
    pub n_h: usize,
    pub n_d: usize,
    pub n_s: usize,
    pub n_i: usize,
    /// Channel counts of the patch conv stack, input first.
    pub conv_channels: Vec<usize>,
    /// Output width of each message-passing layer.
    pub gat_dims: Vec<usize>,
    pub heads: usize,
    pub n_le: usize,
    pub n_we: usize,
    pub n_m: usize,
    pub n_j: usize,
    pub temporal_bits: usize,
    pub input: InputSpec,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            n_h: 4,
            n_d: 2,
            n_s: 2,
            n_i: 2,
            conv_channels: vec![1, 4, 4, 1],
            gat_dims: vec![32, 32, 32],
            heads: 4,
            n_le: 8,
            n_we: 8,
            n_m: 32,
            n_j: 3,
            temporal_bits: 4,
            input: InputSpec::default(),
        }
    }
}

pub(crate) const KERNEL: usize = 3;

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("model: {m}")));
        if self.n_h == 0 || self.n_m == 0 || self.heads == 0 {
            return bad("widths and head count must be positive");
        }
        if self.n_d < 1 || self.n_s < 1 || self.n_i < 1 {
            return bad("branch depths must be at least 1");
        }
        if self.n_j < 2 {
            return bad("n_j must be at least 2");
        }
        if self.temporal_bits != 4 {
            return bad("temporal_bits must be 4");
        }
        if self.conv_channels.len() < 2 || self.conv_channels[0] != 1 || self.conv_channels.contains(&0) {
            return bad("conv_channels must start at 1 and hold at least two positive entries");
        }
        if let Some(w) = self.gat_dims.iter().find(|&&w| w == 0 || w % self.heads != 0) {
            return bad(&format!("layer width {w} not divisible by {} heads", self.heads));
        }
        if self.input.n_doppler < 2 || self.input.patch_range == 0 || !(self.input.v_u > 0.0) {
            return bad("input spec must have n_doppler >= 2, patch_range >= 1, v_u > 0");
        }
        self.conv_out_hw();
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.gat_dims.len()
    }

    pub fn fused_dim(&self) -> usize {
        4 * self.n_h
    }

    /// Width of the node features entering the edge head.
    pub fn node_out_dim(&self, variant: Variant) -> usize {
        if variant.has_stef() || variant.has_gcn() {
            self.gat_dims.last().copied().unwrap_or(self.fused_dim())
        } else {
            self.fused_dim()
        }
    }

    pub fn raw_node_dim(&self) -> usize {
        2 + self.temporal_bits + self.input.n_doppler * self.input.patch_range
    }

    /// Spatial size after the conv stack: the first layer halves the Doppler axis.
    pub fn conv_out_hw(&self) -> (usize, usize) {
        let h = (self.input.n_doppler + 2 - KERNEL) / 2 + 1;
        (h, self.input.patch_range)
    }

    pub fn conv_flat_dim(&self) -> usize {
        let (h, w) = self.conv_out_hw();
        h * w * self.conv_channels.last().copied().unwrap_or(1)
    }

    /// Closed-form parameter counts of the full network.
    pub fn parameter_count(&self) -> ParamCount {
        let nh = self.n_h;
        let fc = |lead: usize, depth: usize| {
            lead * nh + depth.saturating_sub(2) * (nh + 1) * nh + if depth >= 2 { (nh + 1) * nh } else { 0 }
        };
        let m = KERNEL * KERNEL;
        let conv: usize = self
            .conv_channels
            .windows(2)
            .map(|p| (p[0] * m + 1) * p[1])
            .sum();
        let mut stef = 0;
        let mut n_in = self.fused_dim();
        for &w in &self.gat_dims {
            let n = w / self.heads;
            stef += self.heads
                * (2 * self.n_le + n_in * n + 3 * self.n_we + (self.n_le + n) * n + 2 * n);
            n_in = w;
        }
        let nx = self.node_out_dim(Variant::Full);
        let nm = self.n_m;
        let oajn = 4 * nm + (2 * nx + nm + 1) * nm + self.n_j.saturating_sub(2) * (nm + 1) * nm + 3 * (nm + 1);
        let conv_proj = (self.conv_flat_dim() + 1) * nh;
        ParamCount {
            d: fc(2, self.n_d),
            s: fc(2, self.n_s),
            i: fc(self.temporal_bits + 1, self.n_i),
            a: conv,
            a_proj: conv_proj,
            stef,
            oajn,
        }
    }
}

/// Per-module parameter tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub d: usize,
    pub s: usize,
    pub i: usize,
    /// Conv stack only.
    pub a: usize,
    /// Flatten-to-branch projection after the conv stack.
    pub a_proj: usize,
    pub stef: usize,
    pub oajn: usize,
}

impl ParamCount {
    pub fn nfen(&self) -> usize {
        self.d + self.s + self.i + self.a + self.a_proj
    }

    pub fn total(&self) -> usize {
        self.nfen() + self.stef + self.oajn
    }
}

/// Little-endian 4-bit code of a frame index.
pub fn encode_temporal(frame: usize) -> Result<[f64; 4]> {
    if frame >= 16 {
        return Err(Error::domain(format!("frame {frame} exceeds the 4-bit temporal code")));
    }
    Ok(std::array::from_fn(|b| ((frame >> b) & 1) as f64))
}
