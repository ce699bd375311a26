use super::*;
use crate::graph::GraphConfig;
use crate::model::{GraphInput, InputSpec, Model, ModelDims, Variant};
use crate::rng::substream;
use crate::sim::{RadarConfig, ScenarioConfig};
use crate::tensor::AdamState;

fn radar() -> RadarConfig {
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

fn dims() -> ModelDims {
    ModelDims {
        gat_dims: vec![8, 8],
        heads: 2,
        n_le: 3,
        n_we: 3,
        n_m: 8,
        input: InputSpec { n_doppler: 8, patch_range: 3, v_u: 300.0 },
        ..ModelDims::default()
    }
}

fn small_set(n: usize, seed: u64) -> Dataset {
    make_dataset(n, &[7.0, 12.0], &radar(), &GraphConfig::default(), &ScenarioConfig::default(), seed).unwrap()
}

#[test]
fn dataset_is_seeded() {
    assert_eq!(small_set(6, 3), small_set(6, 3));
    assert_ne!(small_set(6, 3), small_set(6, 4));
}

#[test]
fn dataset_split_and_tags() {
    let d = small_set(10, 1);
    assert_eq!((d.train.len(), d.val.len()), (8, 2));
    for g in d.train.iter().chain(&d.val) {
        assert!(matches!(g.snr_db, Some(s) if s == 7.0 || s == 12.0));
        assert_eq!(g.labels.as_ref().unwrap().len(), g.n_edges());
    }
}

#[test]
fn empty_dataset_is_an_error() {
    let r = make_dataset(0, &[10.0], &radar(), &GraphConfig::default(), &ScenarioConfig::default(), 0);
    assert!(r.is_err());
}

#[test]
fn strong_targets_leave_target_chains() {
    let cfg = RadarConfig { noise_coeff: 0.05, ..radar() };
    let graphs = make_graphs(100, &[12.0], &cfg, &GraphConfig::default(), &ScenarioConfig::default(), 9).unwrap();
    let with_tt = graphs
        .iter()
        .filter(|g| g.graph.edges.iter().any(|e| e.label == Some(crate::graph::EdgeLabel::TT)))
        .count();
    assert!(with_tt >= 95, "{with_tt} of 100");
}

#[test]
fn learning_rate_schedule() {
    let h = TrainHyper::default();
    for (e, k) in [(0, 0), (199, 0), (200, 1), (399, 1), (400, 2), (799, 3)] {
        assert!((h.lr_at(e) - 0.01 * 0.1f64.powi(k)).abs() < 1e-18);
    }
}

#[test]
fn hyper_validation() {
    assert!(TrainHyper { batch_size: 0, ..TrainHyper::default() }.validate().is_err());
    assert!(TrainHyper { epochs: 0, ..TrainHyper::default() }.validate().is_err());
    assert!(TrainHyper::default().validate().is_ok());
}

#[test]
fn small_step_descends() {
    let d = small_set(3, 5);
    let g = d.train.iter().find(|g| g.n_edges() > 0).unwrap();
    let mut model = Model::init(&dims(), Variant::Full, &mut substream(0, "init", 0)).unwrap();
    let mut state = AdamState::new(&model.params.arrays);
    let before = train_step(&mut model, &[g], &mut state, 1e-4, None).unwrap().unwrap();
    let after = dataset_loss(&model, std::slice::from_ref(g), None).unwrap().unwrap();
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn training_is_deterministic() {
    let d = small_set(8, 2);
    let h = TrainHyper { epochs: 3, batch_size: 4, seed: 11, ..TrainHyper::default() };
    let (a, ra) = train(&d, &dims(), &h).unwrap();
    let (b, rb) = train(&d, &dims(), &h).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(ra, rb);
    assert_eq!(ra.train_loss.len(), 3);
    assert_eq!(ra.val_loss.len(), 3);
}

#[test]
fn overfits_a_few_graphs() {
    let graphs = small_set(5, 21).train.into_iter().chain(small_set(5, 21).val).collect::<Vec<_>>();
    let d = Dataset { train: graphs, val: Vec::new() };
    let h = TrainHyper { epochs: 800, seed: 1, ..TrainHyper::default() };
    let (model, report) = train(&d, &dims(), &h).unwrap();
    let final_loss = dataset_loss(&model, &d.train, None).unwrap().unwrap();
    assert!(final_loss <= 0.05, "loss {final_loss}, curve tail {:?}", &report.train_loss[790..]);
}

#[test]
fn uniform_predictor_scores_majority_fraction() {
    let d = small_set(6, 8);
    let mut model = Model::init(&dims(), Variant::Full, &mut substream(0, "init", 0)).unwrap();
    model.params.get_mut("oajn.j2.w").unwrap().data_mut().fill(0.0);
    let all: Vec<GraphInput> = d.train.iter().chain(&d.val).cloned().collect();
    let cm = confusion_and_accuracy(&model, &all, None).unwrap();
    let labels: Vec<usize> = all.iter().flat_map(|g| g.labels.clone().unwrap()).collect();
    let ff = labels.iter().filter(|l| **l == 0).count() as f64 / labels.len() as f64;
    assert_eq!(cm.accuracy(), ff);
    for k in 0..3 {
        assert_eq!(cm.support(k), labels.iter().filter(|l| **l == k).count() as u64);
    }
}

#[test]
fn confusion_arithmetic() {
    let mut cm = Confusion::default();
    for k in 0..3 {
        for _ in 0..=k {
            cm.add(k, k);
        }
    }
    assert_eq!(cm.accuracy(), 1.0);
    cm.add(2, 0);
    assert_eq!(cm.support(2), 4);
    assert!((cm.accuracy() - 6.0 / 7.0).abs() < 1e-15);
    assert_eq!(argmax_class(&[1.0 / 3.0; 3]), 0);
    assert_eq!(argmax_class(&[0.2, 0.5, 0.3]), 1);
}

#[test]
fn class_weights_balance_counts() {
    let mut g = small_set(1, 0).train.remove(0);
    g.labels = Some(vec![0, 0, 0, 1, 2, 2]);
    g.edge_u = vec![0; 6];
    let w = class_weights(&[g]);
    assert!((w[0] * 3.0 - w[1]).abs() < 1e-12);
    assert!((w[2] * 2.0 - w[1]).abs() < 1e-12);
    assert!((3.0 * w[0] + w[1] + 2.0 * w[2] - 6.0).abs() < 1e-12);
}

#[test]
fn layer_sweep_rows_and_repeatability() {
    let d = small_set(6, 4);
    let h = TrainHyper { epochs: 2, seed: 3, ..TrainHyper::default() };
    let a = layer_sweep(&d, &dims(), &h, &[3]).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].0, 3);
    let b = layer_sweep(&d, &dims(), &h, &[0, 1]).unwrap();
    assert_eq!(b, layer_sweep(&d, &dims(), &h, &[0, 1]).unwrap());
}
