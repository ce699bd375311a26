use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::graph::GraphConfig;
use crate::model::{InputSpec, Model, ModelDims, Variant};
use crate::rng::substream;
use crate::sim::stats::ca_cfar_pd;
use crate::sim::{db_to_lin, simulate_window, Observation, Origin, Patch, RadarConfig, ScanWindow, ScenarioConfig, TargetTruth};
use crate::train::make_dataset;

fn brute_ospa(x: &[[f64; 2]], y: &[[f64; 2]], p: &OspaParams) -> f64 {
    let (s, l) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    if l.is_empty() {
        return 0.0;
    }
    if s.is_empty() {
        return p.eta;
    }
    fn rec(s: &[[f64; 2]], l: &[[f64; 2]], used: &mut Vec<bool>, i: usize, p: &OspaParams) -> f64 {
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

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| [a, b]), 0..=max)
}

proptest! {
    #[test]
    fn ospa_matches_exhaustive_assignment(x in points(6), y in points(6), eta in 1.0..80.0f64, xi in 1.0..3.0f64) {
        let p = OspaParams { xi, eta, kappa: 0.5 };
        let fast = ospa(&x, &y, &p).unwrap();
        let slow = brute_ospa(&x, &y, &p);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0));
        prop_assert!((fast - ospa(&y, &x, &p).unwrap()).abs() < 1e-12);
        prop_assert!(fast >= 0.0 && fast <= eta + 1e-9);
    }

    #[test]
    fn hungarian_matches_exhaustive_minimum(
        n in 1usize..=5, extra in 0usize..=2,
        seed in any::<u64>(),
    ) {
        let mut rng = substream(seed, "hungarian", 0);
        let m = n + extra;
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let (assign, total) = hungarian(&cost).unwrap();
        let mut cols = assign.clone();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(cols.len(), n);
        let pts_cost = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..m).collect();
        permutations(&mut perm, 0, n, &mut |p| best = best.min(pts_cost(&p[..n])));
        prop_assert!((total - best).abs() < 1e-9);
    }
}

fn permutations(v: &mut Vec<usize>, k: usize, n: usize, f: &mut dyn FnMut(&[usize])) {
    if k == n {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, n, f);
        v.swap(k, i);
    }
}

#[test]
fn ospa_hand_cases() {
    let p = OspaParams { xi: 2.0, eta: 40.0, kappa: 0.5 };
    let a = [[1.0, 2.0], [5.0, -3.0]];
    assert_eq!(ospa(&a, &a, &p).unwrap(), 0.0);
    let d = ospa(&[[1.0, 1.0]], &[[1.0, 1.0], [9.0, 9.0]], &p).unwrap();
    assert!((d - 40.0 / 2f64.sqrt()).abs() < 1e-12);
    let far = ospa(&[[0.0, 0.0], [0.0, 100.0]], &[[500.0, 0.0], [500.0, 100.0]], &p).unwrap();
    assert!((far - 40.0).abs() < 1e-12);
    assert_eq!(ospa(&[], &[], &p).unwrap(), 0.0);
    assert_eq!(ospa(&[], &a, &p).unwrap(), 40.0);
    assert_eq!(ospa(&a, &[], &p).unwrap(), 40.0);
}

#[test]
fn ospa_params_validate() {
    assert!(OspaParams::default().validate().is_ok());
    assert!(OspaParams { kappa: 1.0, ..OspaParams::default() }.validate().is_err());
    assert!(OspaParams { xi: 0.5, ..OspaParams::default() }.validate().is_err());
    assert!(OspaParams { eta: 0.0, ..OspaParams::default() }.validate().is_err());
}

#[test]
fn smoothing_examples() {
    let t = [0.0, 1.0, 2.0, 3.0];
    let line: Vec<[f64; 2]> = t.iter().map(|t| [3.0 + 2.0 * t, -1.0 + 0.5 * t]).collect();
    let s = smooth_track(&t, &line).unwrap();
    for (a, b) in s.iter().zip(&line) {
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
    // chord from (0,0) to (2,4); outlier of +3 at the middle lifts the fit by 1
    let s = smooth_track(&[0.0, 1.0, 2.0], &[[0.0, 0.0], [1.0, 5.0], [2.0, 4.0]]).unwrap();
    let expect = [[0.0, 1.0], [1.0, 3.0], [2.0, 5.0]];
    for (a, b) in s.iter().zip(&expect) {
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
    let two = smooth_track(&[1.0, 3.0], &[[0.0, 2.0], [4.0, 6.0]]).unwrap();
    assert_eq!(two, vec![[0.0, 2.0], [4.0, 6.0]]);
    assert!(smooth_track(&[1.0], &[[0.0, 0.0]]).is_err());
    assert!(smooth_track(&[1.0, 1.0], &[[0.0, 0.0], [1.0, 1.0]]).is_err());
}

fn plot(frame: usize, x: f64, y: f64, origin: Origin) -> Observation {
    Observation {
        t: frame as f64,
        r: x.hypot(y),
        theta: y.atan2(x),
        v: 0.0,
        d: 0,
        s: 10.0,
        power: 10.0,
        frame,
        patch: Patch::new(1, 1, vec![1.0]).unwrap(),
        origin,
    }
}

fn still(id: u32, x: f64) -> TargetTruth {
    TargetTruth { id, state: [x, 0.0, 0.0, 0.0], snr_db: 10.0 }
}

#[test]
fn correctness_examples() {
    let p = OspaParams { xi: 2.0, eta: 100.0, kappa: 0.5 };
    let truth = still(1, 1000.0);
    let exact: Vec<_> = (0..3).map(|f| plot(f, 1000.0, 0.0, Origin::Target(1))).collect();
    assert!(is_correct_detection(&exact, &truth, 0.0, &OspaParams { kappa: 1e-9, ..p.clone() }).unwrap());
    let far: Vec<_> = (0..3).map(|f| plot(f, 5000.0, 0.0, Origin::Noise)).collect();
    assert!(!is_correct_detection(&far, &truth, 0.0, &p).unwrap());
    let edge: Vec<_> = (0..3).map(|f| plot(f, 1050.0, 0.0, Origin::Target(1))).collect();
    assert_eq!(track_distance(&edge, &truth, 0.0, &p).unwrap(), 50.0);
    assert!(!is_correct_detection(&edge, &truth, 0.0, &p).unwrap());
}

#[test]
fn attribution_uses_plurality_then_distance() {
    let truths = [still(1, 1000.0), still(2, 2000.0)];
    let obs = vec![
        plot(0, 1000.0, 0.0, Origin::Target(1)),
        plot(1, 2000.0, 0.0, Origin::Target(2)),
        plot(2, 2000.0, 0.0, Origin::Target(2)),
    ];
    assert_eq!(attributed_target(&obs, &truths, 0.0), Some(2));
    let tie = vec![
        plot(0, 1000.0, 0.0, Origin::Target(1)),
        plot(1, 1900.0, 0.0, Origin::Target(2)),
        plot(2, 1900.0, 0.0, Origin::Noise),
    ];
    assert_eq!(attributed_target(&tie, &truths, 0.0), Some(2));
    let noise = vec![plot(0, 1.0, 0.0, Origin::Noise), plot(1, 1.0, 0.0, Origin::Noise)];
    assert_eq!(attributed_target(&noise, &truths, 0.0), None);
}

fn window_with(frames: &[usize], n_frames: usize) -> ScanWindow {
    let mut w = ScanWindow {
        frames: vec![Vec::new(); n_frames],
        times: (0..n_frames).map(|n| n as f64).collect(),
        truths: vec![still(4, 1e5)],
    };
    for &f in frames {
        w.frames[f].push(plot(f, 1e5, 0.0, Origin::Target(4)));
    }
    w
}

#[test]
fn upper_bound_examples() {
    let gc = GraphConfig { q: 2, l: 5, m: 3, ..GraphConfig::default() };
    assert_eq!(pd_upper_bound(&window_with(&[0, 1, 2, 3, 4], 5), &gc), vec![(4, true)]);
    assert_eq!(pd_upper_bound(&window_with(&[1, 3], 5), &gc), vec![(4, false)]);
    assert_eq!(pd_upper_bound(&window_with(&[0, 1, 4], 5), &gc), vec![(4, false)]);
    assert_eq!(pd_upper_bound(&window_with(&[0, 2, 4], 5), &gc), vec![(4, true)]);
}

fn desk() -> RadarConfig {
    RadarConfig {
        n_pulses: 8,
        patch_range_cells: 3,
        r_min_m: 30e3,
        r_max_m: 33e3,
        az_min_deg: -4.0,
        az_max_deg: 4.0,
        ..RadarConfig::default()
    }
}

#[test]
fn kappa_calibration() {
    let gc = GraphConfig::default();
    let sc = ScenarioConfig::default();
    let quiet = RadarConfig { noise_coeff: 0.0, ..desk() };
    let p = OspaParams { eta: 500.0, ..OspaParams::default() };
    let z = calibrate_kappa(&quiet, &gc, &sc, &p, 20, 0.99, 1).unwrap();
    assert!(z.ratios.iter().all(|r| *r < 1e-9));

    let radar = desk();
    let p = OspaParams { eta: eta_from_radar(&radar, 31.5e3, 10.0, 5.0), ..OspaParams::default() };
    let max = calibrate_kappa(&radar, &gc, &sc, &p, 50, 1.0, 2).unwrap();
    assert_eq!(max.kappa, *max.ratios.last().unwrap());

    let cal = calibrate_kappa(&radar, &gc, &sc, &p, 600, 0.99, 3).unwrap();
    let fresh = calibrate_kappa(&radar, &gc, &sc, &p, 600, 1.0, 4).unwrap();
    let n = fresh.ratios.len() as f64;
    let pass = fresh.ratios.iter().filter(|r| **r < cal.kappa).count() as f64 / n;
    assert!(pass >= 0.99 - 3.0 * (0.99f64 * 0.01 / n).sqrt(), "pass rate {pass} over {n}");
}

#[test]
fn cfar_trials_match_closed_form() {
    let mut rng = substream(5, "cfar", 0);
    let n = 40_000;
    for snr in [6.0, 10.0] {
        let hits = (0..n).filter(|_| cfar_trial(snr, 16, 2, 1e-3, &mut rng).unwrap()).count();
        let want = ca_cfar_pd(db_to_lin(snr), 16, 1e-3);
        let sigma = (want * (1.0 - want) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - want).abs() < 3.0 * sigma, "snr {snr}");
    }
}

#[test]
fn nci_gates_and_strong_target() {
    let radar = desk();
    let gc = GraphConfig::default();
    let truths = [TargetTruth { id: 0, state: [31e3, 50.0, 0.0, 80.0], snr_db: 30.0 }];
    let win = simulate_window(&truths, 0.0, 5, &radar, &mut substream(2, "nci", 0)).unwrap();
    let loose = NciParams { fe_gate: 200.0, dcd_gate: 64, gamma_nci: 0.0 };
    let res = baseline_gated_nci(&win, radar.v_u, &gc, &loose).unwrap();
    assert!(res.confirmed.iter().any(|t| t.node_ids.iter().all(|&i| res.graph.nodes[i].origin.is_target())));
    let shut = NciParams { fe_gate: 0.0, dcd_gate: 0, gamma_nci: f64::NEG_INFINITY };
    let none = baseline_gated_nci(&win, radar.v_u, &gc, &shut).unwrap();
    assert!(none.confirmed.is_empty());
    let from = NciParams::from_radar(&radar, 10.0);
    assert!(from.fe_gate > 0.0 && from.dcd_gate >= 1);
}

#[test]
fn sub_windows_rebase_frames() {
    let radar = desk();
    let truths = [TargetTruth { id: 0, state: [31e3, 50.0, 0.0, 80.0], snr_db: 30.0 }];
    let seq = simulate_window(&truths, 0.0, 7, &radar, &mut substream(3, "seq", 0)).unwrap();
    let w = sub_window(&seq, 2, 5).unwrap();
    w.validate().unwrap();
    assert_eq!(w.times, seq.times[2..7].to_vec());
    assert!((w.truths[0].state[0] - (31e3 + 100.0)).abs() < 1e-9);
    assert!(sub_window(&seq, 3, 5).is_err());
}

#[test]
fn feature_tags_parse() {
    for f in Feature::ALL {
        assert_eq!(f.tag().parse::<Feature>().unwrap(), f);
    }
    assert!("snr".parse::<Feature>().is_ok());
    assert!("XYZ".parse::<Feature>().is_err());
}

#[test]
fn box_statistics() {
    let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
    assert_eq!((b.q1, b.median, b.q3), (2.25, 3.5, 4.75));
    assert_eq!((b.lo_whisker, b.hi_whisker), (1.0, 5.0));
    assert_eq!(b.outliers, vec![100.0]);
    assert!(box_stats(&[]).is_err());
}

fn tiny_model(seed: u64) -> Model {
    let dims = ModelDims {
        gat_dims: vec![8],
        heads: 2,
        n_m: 8,
        input: InputSpec { n_doppler: 8, patch_range: 3, v_u: 300.0 },
        ..ModelDims::default()
    };
    Model::init(&dims, Variant::Full, &mut substream(seed, "init", 0)).unwrap()
}

#[test]
fn importance_null_cases() {
    let d = make_dataset(6, &[10.0], &desk(), &GraphConfig::default(), &ScenarioConfig::default(), 1).unwrap();
    let graphs = d.train;
    let mut model = tiny_model(2);
    for f in Feature::ALL {
        let ident: Vec<usize> = (0..unit_count(&graphs, f)).collect();
        let base = crate::train::confusion_and_accuracy(&model, &graphs, None).unwrap().accuracy();
        assert_eq!(permuted_accuracy(&model, &graphs, f, &ident, None).unwrap(), base);
    }
    for (name, a) in model.params.names.iter().zip(model.params.arrays.iter_mut()) {
        if name.starts_with("nfen.s.0.w") {
            a.data_mut().fill(0.0);
        }
    }
    let imp = permutation_importance(&model, &graphs, Feature::Snr, None, 4, 9).unwrap();
    assert!(imp.drops.iter().all(|d| *d == 0.0));
    let imp = permutation_importance(&model, &graphs, Feature::Stc, Some(0), 3, 9).unwrap();
    assert_eq!(imp.drops.len(), 3);
    assert!(permutation_importance(&model, &graphs, Feature::Stc, Some(3), 3, 9).is_err());
}

#[test]
fn monte_carlo_smoke() {
    let radar = desk();
    let gc = GraphConfig::default();
    let model = tiny_model(3);
    let score = crate::track::ScoreParams { gamma2: 0.6, ..Default::default() };
    let nci = NciParams { gamma_nci: 40.0, ..NciParams::from_radar(&radar, 10.0) };
    let ospa_p = OspaParams { eta: 800.0, kappa: 0.4, xi: 2.0 };
    let det = Detectors { model: &model, score: &score, nci: &nci, ospa: &ospa_p, pfa2: 1e-4, achieved: [1e-4, 1e-4] };
    let mc = McConfig { snr_db: vec![12.0], windows: vec![1, 3], n_runs: 3, ..McConfig::default() };
    let a = monte_carlo_curves(&radar, &gc, &mc, &det, 4).unwrap();
    let b = monte_carlo_curves(&radar, &gc, &mc, &det, 4).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.rows.len(), 8);
    for r in &a.rows {
        assert!((0.0..=1.0).contains(&r.pd));
    }
    let upb1 = a.row(12.0, 1, UPB).unwrap().pd;
    let upb3 = a.row(12.0, 3, UPB).unwrap().pd;
    assert!(upb3 >= upb1);
    for e in &a.exceptions {
        assert!(e.distance < e.limit);
    }
}
