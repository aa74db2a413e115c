use std::io::BufReader;

use pcgcn::training::dataset_loss;
use pcgcn::{
    build_dataset, evaluate, init_params, read_checkpoint, read_jsonl, train, write_checkpoint,
    write_jsonl, ModelConfig, TrainConfig,
};

fn jsonl_bytes(count: usize, seed: u64) -> Vec<u8> {
    let ds = build_dataset(count, 20, 3, seed).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&ds, &mut buf).unwrap();
    buf
}

#[test]
fn dataset_files_are_byte_identical() {
    assert_eq!(jsonl_bytes(30, 5), jsonl_bytes(30, 5));
    assert_ne!(jsonl_bytes(30, 5), jsonl_bytes(30, 6));
}

#[test]
fn dataset_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.jsonl");
    std::fs::write(&path, jsonl_bytes(12, 1)).unwrap();
    let back = read_jsonl(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back, build_dataset(12, 20, 3, 1).unwrap());
    for (i, s) in back.iter().enumerate() {
        assert_eq!(s.instance.id(), 1 + i as u64);
    }
}

#[test]
fn checkpoint_file_roundtrip_preserves_predictions() {
    let ds = build_dataset(20, 15, 2, 3).unwrap();
    let cfg = TrainConfig::custom(ModelConfig::new(8, 2, 4).unwrap(), 10, 2, 1e-3, 4);
    let (params, _) = train(&cfg, &ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    write_checkpoint(&params, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_checkpoint(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back, params);
    assert_eq!(
        dataset_loss(&back, &ds).unwrap(),
        dataset_loss(&params, &ds).unwrap()
    );
}

#[test]
fn training_is_independent_of_thread_count() {
    let ds = build_dataset(40, 12, 2, 8).unwrap();
    let cfg = TrainConfig::custom(ModelConfig::new(6, 1, 3).unwrap(), 20, 2, 1e-2, 1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&cfg, &ds).unwrap())
    };
    let (a, ha) = run(1);
    let (b, hb) = run(4);
    assert_eq!(a, b);
    let losses = |h: &pcgcn::LossHistory| h.records.iter().map(|r| r.loss).collect::<Vec<_>>();
    assert_eq!(losses(&ha), losses(&hb));
}

#[test]
fn baseline_column_ignores_the_model() {
    let test = build_dataset(15, 20, 3, 50).unwrap();
    let cfg = ModelConfig::new(4, 1, 5).unwrap();
    let a = evaluate(&init_params(cfg, 1).unwrap(), &test, 7).unwrap();
    let b = evaluate(&init_params(cfg, 2).unwrap(), &test, 7).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.z_baseline, y.z_baseline);
        assert_eq!(x.z_star, y.z_star);
    }
    let c = evaluate(&init_params(cfg, 1).unwrap(), &test, 8).unwrap();
    assert!(a
        .rows
        .iter()
        .zip(&c.rows)
        .any(|(x, y)| x.z_baseline != y.z_baseline));
}
