//! Brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mfd_core::eval::OspaParams;
use mfd_core::graph::{edge_features, max_velocity_gate, AssocGraph, GraphConfig};
use mfd_core::rng::substream;
use mfd_core::sim::{random_targets, simulate_window, RadarConfig, ScanWindow, ScenarioConfig};

/// Narrow sector whose windows hold tens of plots.
pub fn small_radar(pfa1: f64) -> RadarConfig {
    RadarConfig { r_min_m: 30e3, r_max_m: 34e3, az_min_deg: -4.0, az_max_deg: 4.0, pfa1, ..RadarConfig::default() }
}

pub fn window(cfg: &RadarConfig, l: usize, seed: u64) -> ScanWindow {
    let mut rng = substream(seed, "oracle", 0);
    let truths = random_targets(&ScenarioConfig::default(), cfg, l, 0, &mut rng).unwrap();
    simulate_window(&truths, 0.0, l, cfg, &mut rng).unwrap()
}

/// Every ordered pair within `q` frames, gated independently.
pub fn all_pairs(w: &ScanWindow, gc: &GraphConfig, v_u: f64) -> Vec<(usize, usize, [f64; 2], usize)> {
    let nodes: Vec<_> = w.observations().cloned().collect();
    let mut out = Vec::new();
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            let df = nodes[j].frame as i64 - nodes[i].frame as i64;
            if df < 1 || df > gc.q as i64 {
                continue;
            }
            if max_velocity_gate(&nodes[i], &nodes[j], gc.v_max).unwrap() {
                let (e, dcd) = edge_features(&nodes[i], &nodes[j], v_u).unwrap();
                out.push((i, j, e, dcd));
            }
        }
    }
    out
}

/// True iff the graph's edges equal the all-pairs set in order, features included.
pub fn edges_match(g: &AssocGraph, oracle: &[(usize, usize, [f64; 2], usize)]) -> bool {
    g.n_edges() == oracle.len()
        && g.edges.iter().zip(oracle).all(|(e, (u, w, f, dcd))| {
            (e.u, e.w, e.dcd) == (*u, *w, *dcd) && (e.e[0] - f[0]).abs() < 1e-12 && (e.e[1] - f[1]).abs() < 1e-12
        })
}

/// Every path over accepted edges, kept when maximal and long enough.
pub fn brute_paths(g: &AssocGraph, accept: &[bool], m: usize) -> BTreeSet<Vec<usize>> {
    fn extend(g: &AssocGraph, accept: &[bool], path: &mut Vec<usize>, all: &mut Vec<Vec<usize>>) {
        all.push(path.clone());
        let v = *path.last().unwrap();
        for (k, e) in g.edges.iter().enumerate() {
            if accept[k] && e.u == v {
                path.push(e.w);
                extend(g, accept, path, all);
                path.pop();
            }
        }
    }
    let mut all = Vec::new();
    for s in 0..g.n_nodes() {
        extend(g, accept, &mut vec![s], &mut all);
    }
    let has_in = |v: usize| g.edges.iter().enumerate().any(|(k, e)| accept[k] && e.w == v);
    let has_out = |v: usize| g.edges.iter().enumerate().any(|(k, e)| accept[k] && e.u == v);
    all.into_iter()
        .filter(|p| p.len() >= m && !has_in(p[0]) && !has_out(*p.last().unwrap()))
        .collect()
}

/// OSPA by minimizing over every injection of the smaller set.
pub fn brute_ospa(x: &[[f64; 2]], y: &[[f64; 2]], p: &OspaParams) -> f64 {
    let (s, l) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    if l.is_empty() {
        return 0.0;
    }
    if s.is_empty() {
        return p.eta;
    }
    fn rec(s: &[[f64; 2]], l: &[[f64; 2]], used: &mut [bool], i: usize, p: &OspaParams) -> f64 {
        if i == s.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..l.len() {
            if !used[j] {
                used[j] = true;
                let d = (s[i][0] - l[j][0]).hypot(s[i][1] - l[j][1]).min(p.eta).powf(p.xi);
                best = best.min(d + rec(s, l, used, i + 1, p));
                used[j] = false;
            }
        }
        best
    }
    let m = rec(s, l, &mut vec![false; l.len()], 0, p);
    ((m + p.eta.powf(p.xi) * (l.len() - s.len()) as f64) / l.len() as f64).powf(1.0 / p.xi)
}
