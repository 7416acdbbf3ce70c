use std::path::Path;

use graphcode::experiment::{run_experiment, ExperimentConfig};

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let cfg = ExperimentConfig::from_file(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert_eq!(cfg.kind.name(), stem, "file name should match kind");
        let bundle = run_experiment(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(bundle.provenance.kind, stem);
        n += 1;
    }
    assert_eq!(n, 6);
}
