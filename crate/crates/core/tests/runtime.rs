mod common;

use common::graph::{tensor_to_dense, OracleModel};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xtern::kernels::{Padding, QuantTensor2b};
use xtern::runtime::zoo::{self, dvs_hybrid, vgg_cifar};
use xtern::runtime::{
    load_model, run_inference, save_model, validate, Layer, LayerKind, ModelError, ModelGraph,
    Precision, Session, Tensor, Weights,
};

fn random_input(g: &ModelGraph, rng: &mut impl Rng) -> Tensor {
    let (c, h, w) = g.input;
    match g.input_precision {
        Precision::Ternary => {
            Tensor::Ternary(dense_to_ternary(&random_dense(c, h, w, -1, 1, 0.5, rng)))
        }
        _ => Tensor::TwoBit(dense_to_quant(&random_dense(c, h, w, -2, 1, 0.3, rng))),
    }
}

fn check_against_oracle(g: &ModelGraph, frames: usize, cores: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut session = Session::new(g, cores).unwrap();
    let mut reference = OracleModel::new(g);
    let mut distinct = std::collections::HashSet::new();
    for f in 0..frames {
        let x = random_input(g, &mut rng);
        let got = session.run(&x).unwrap();
        let want = reference.run(&tensor_to_dense(&x));
        assert_eq!(got.scores, want, "frame {f}");
        assert_eq!(got.macs(), zoo::graph_macs(g));
        distinct.insert(got.scores);
    }
    if frames > 1 {
        assert!(distinct.len() > 1, "scores never changed");
    }
}

#[test]
fn vgg_ternary_matches_oracle() {
    check_against_oracle(&vgg_cifar(Precision::Ternary, 40, 1).unwrap(), 2, 8, 10);
}

#[test]
fn vgg_2bit_matches_oracle() {
    check_against_oracle(&vgg_cifar(Precision::TwoBit, 32, 2).unwrap(), 2, 3, 11);
}

#[test]
fn dvs_ternary_streams_history() {
    check_against_oracle(&dvs_hybrid(Precision::Ternary, 20, 3).unwrap(), 3, 8, 12);
}

#[test]
fn dvs_2bit_matches_oracle() {
    check_against_oracle(&dvs_hybrid(Precision::TwoBit, 16, 4).unwrap(), 2, 8, 13);
}

#[test]
fn reset_clears_history() {
    let g = dvs_hybrid(Precision::Ternary, 10, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (a, b) = (random_input(&g, &mut rng), random_input(&g, &mut rng));
    let mut s = Session::new(&g, 4).unwrap();
    let first = s.run(&a).unwrap().scores;
    s.run(&b).unwrap();
    s.reset();
    assert_eq!(s.run(&a).unwrap().scores, first);
    assert_eq!(run_inference(&g, &a, 1).unwrap().scores, first);
}

#[test]
fn ternary_beats_2bit_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = vgg_cifar(Precision::Ternary, 80, 0).unwrap();
    let q = vgg_cifar(Precision::TwoBit, 64, 0).unwrap();
    let rt = run_inference(&t, &random_input(&t, &mut rng), 8).unwrap();
    let rq = run_inference(&q, &random_input(&q, &mut rng), 8).unwrap();
    assert!(rt.report.theta() > rq.report.theta());
    assert_eq!(rt.layers.len(), t.layers.len());
    assert_eq!(rt.layers.last().unwrap().output_shape, (10, 1, 1));
}

#[test]
fn input_shape_is_checked() {
    let g = vgg_cifar(Precision::Ternary, 40, 0).unwrap();
    let wrong = Tensor::TwoBit(QuantTensor2b::from_values(4, 32, 32, &[0; 4096]).unwrap());
    assert!(matches!(
        run_inference(&g, &wrong, 1),
        Err(ModelError::Shape(_))
    ));
}

#[test]
fn container_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for g in [
        dvs_hybrid(Precision::Ternary, 20, 9).unwrap(),
        vgg_cifar(Precision::TwoBit, 48, 9).unwrap(),
    ] {
        let path = dir.path().join("m.xtnm");
        save_model(&g, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), g);
        assert_eq!(ModelGraph::from_bytes(&g.to_bytes().unwrap()).unwrap(), g);
    }
}

#[test]
fn truncation_reports_offset() {
    let bytes = vgg_cifar(Precision::Ternary, 40, 0)
        .unwrap()
        .to_bytes()
        .unwrap();
    for cut in [0, 3, 10, 15, 40, bytes.len() / 2, bytes.len() - 1] {
        match ModelGraph::from_bytes(&bytes[..cut]) {
            Err(ModelError::Parse { offset, .. }) => {
                assert!(offset <= cut, "cut {cut} offset {offset}")
            }
            other => panic!("cut {cut}: {other:?}"),
        }
    }
    let mut bad = bytes.clone();
    bad[0] = b'Y';
    assert!(matches!(
        ModelGraph::from_bytes(&bad),
        Err(ModelError::Parse { offset: 0, .. })
    ));
    let mut long = bytes;
    long.push(0);
    assert!(matches!(
        ModelGraph::from_bytes(&long),
        Err(ModelError::Parse { .. })
    ));
}

#[test]
fn unknown_codes_rejected() {
    let bytes = vgg_cifar(Precision::Ternary, 40, 0)
        .unwrap()
        .to_bytes()
        .unwrap();
    // first layer record starts after the 16-byte header
    for (pos, v) in [(16, 9u8), (17, 7), (24, 5), (4, 2)] {
        let mut b = bytes.clone();
        b[pos] = v;
        assert!(
            matches!(ModelGraph::from_bytes(&b), Err(ModelError::Parse { offset, .. }) if offset == pos),
            "byte {pos}"
        );
    }
}

#[test]
fn validation_lists_every_problem() {
    let mut g = vgg_cifar(Precision::Ternary, 40, 0).unwrap();
    g.layers[0].params = xtern::runtime::LayerParams::None;
    g.layers[3].out_ch = 41;
    g.layers.swap(7, 9);
    let problems = validate(&g);
    assert!(problems.len() >= 3, "{problems:?}");
    assert!(problems[0].starts_with("layer 0 (conv2d)"));
    assert!(problems
        .iter()
        .any(|p| p.contains("fc must be the last layer")));
    assert!(matches!(Session::new(&g, 1), Err(ModelError::Validation(v)) if v == problems));
}

#[test]
fn hand_built_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = random_weights(10, 5, 3, 3, -1, 1, &mut rng);
    let th = random_thresholds(10, 45, &mut rng);
    let (_, fc) = fc_weights(3, 15, 2, 2, &mut rng, -1, 1);
    let g = ModelGraph {
        input_precision: Precision::Ternary,
        input: (5, 6, 6),
        layers: vec![
            Layer::conv2d_ternary(ternary_weights(&w), 3, Padding::Valid, th),
            Layer::maxpool(Precision::Ternary, 10, 2, 2),
            Layer::pad_channels(Precision::Ternary, 15),
            Layer::fc(Weights::Ternary(
                xtern::codec::compress_tensor(15, 3, 4, &fc).unwrap(),
            )),
        ],
    };
    assert!(validate(&g).is_empty());
    assert_eq!(g.layers[2].kind, LayerKind::PadChannels);
    check_against_oracle(&g, 20, 2, 3);
}

fn testdata(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

#[test]
fn golden_sample() {
    let bytes = std::fs::read(testdata("vgg40.xtnm")).unwrap();
    let g = load_model(testdata("vgg40.xtnm")).unwrap();
    assert_eq!(g.to_bytes().unwrap(), bytes);
    assert_eq!(&bytes[..4], b"XTNM");
    let x = Tensor::from_blob(&std::fs::read(testdata("vgg40_input.trit")).unwrap()).unwrap();
    let want: Vec<i32> = std::fs::read_to_string(testdata("vgg40_scores.txt"))
        .unwrap()
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(want.len(), 10);
    assert_eq!(run_inference(&g, &x, 8).unwrap().scores, want);
    assert_eq!(OracleModel::new(&g).run(&tensor_to_dense(&x)), want);
}

#[test]
fn six_channel_ternary_conv_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = random_weights(6, 5, 3, 3, -1, 1, &mut rng);
    let vals = weight_values(&w);
    // 6 output channels cannot be packed, so describe it with a 5-channel blob
    let mut conv = Layer::conv2d_ternary(
        xtern::codec::compress_tensor(5, 6, 9, &vals).unwrap(),
        3,
        Padding::Same,
        random_thresholds(6, 45, &mut rng),
    );
    conv.out_ch = 6;
    let (_, fc) = fc_weights(2, 5, 4, 4, &mut rng, -1, 1);
    let g = ModelGraph {
        input_precision: Precision::Ternary,
        input: (5, 4, 4),
        layers: vec![
            conv,
            Layer::fc(Weights::Ternary(
                xtern::codec::compress_tensor(5, 2, 16, &fc).unwrap(),
            )),
        ],
    };
    let problems = validate(&g);
    assert!(
        problems.iter().any(|p| p.contains("multiple of 5")),
        "{problems:?}"
    );
}

#[test]
fn zero_input_gives_zero_scores() {
    for g in [
        vgg_cifar(Precision::Ternary, 60, 4).unwrap(),
        dvs_hybrid(Precision::Ternary, 20, 4).unwrap(),
    ] {
        let (c, h, w) = g.input;
        let x = Tensor::Ternary(xtern::codec::TernaryTensor::zeros(c, h, w).unwrap());
        let r = run_inference(&g, &x, 8).unwrap();
        assert!(r.scores.iter().all(|&s| s == 0), "{:?}", r.scores);
        assert_eq!(r, run_inference(&g, &x, 8).unwrap());
    }
}

#[test]
fn scores_independent_of_core_count() {
    let g = vgg_cifar(Precision::TwoBit, 48, 5).unwrap();
    let x = zoo::random_input(&g, 1).unwrap();
    let base = run_inference(&g, &x, 1).unwrap();
    for cores in [2, 3, 8, 16] {
        let r = run_inference(&g, &x, cores).unwrap();
        assert_eq!(r.scores, base.scores);
        assert_eq!(r.macs(), base.macs());
        assert!(r.report.total() < base.report.total());
    }
}

#[test]
fn multi_blob_inputs() {
    let g = dvs_hybrid(Precision::Ternary, 20, 0).unwrap();
    let mut bytes = zoo::random_input(&g, 1).unwrap().to_blob();
    bytes.extend(zoo::random_input(&g, 2).unwrap().to_blob());
    assert_eq!(Tensor::from_blobs(&bytes).unwrap().len(), 2);
    assert!(Tensor::from_blob(&bytes).is_err());
    assert!(Tensor::from_blobs(&[]).is_err());
    assert!(Tensor::from_blobs(&bytes[..bytes.len() - 1]).is_err());
}
