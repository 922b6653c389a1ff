use std::fs;

use strata_core::pipeline::MANIFEST_FILE;
use strata_core::{run_demo, DemoConfig, RunManifest, RunRecorder};

fn command() -> Vec<String> {
    vec!["strata".into(), "report".into(), "--all".into()]
}

#[test]
fn demo_run_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = DemoConfig::default();
    let mut summaries = Vec::new();
    for dir in [a.path(), b.path()] {
        let mut rec = RunRecorder::new(dir, command()).unwrap();
        summaries.push(run_demo(&config, &mut rec).unwrap());
        rec.finish().unwrap();
    }
    assert_eq!(summaries[0], summaries[1]);
    let ma = fs::read(a.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(ma, fs::read(b.path().join(MANIFEST_FILE)).unwrap());

    let manifest = RunManifest::load(a.path().join(MANIFEST_FILE)).unwrap();
    assert!(manifest.outputs.iter().any(|o| o.path == "embedding.svg"));
    for out in &manifest.outputs {
        let bytes = fs::read(a.path().join(&out.path)).unwrap();
        assert_eq!(strata_core::pipeline::sha256_hex(&bytes), out.sha256, "{}", out.path);
        assert_eq!(bytes, fs::read(b.path().join(&out.path)).unwrap(), "{}", out.path);
    }
    let s = &summaries[0];
    println!("{s:?}");
    assert!(s.validation_accuracy >= 0.85);
    assert_eq!(s.cluster_sizes.len(), 5);
}
