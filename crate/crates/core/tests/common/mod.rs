#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use pyxflow::{parse, Label, Program, ProgramSpec};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.pyx` file in the corpus that has a policy next to it.
pub fn corpus_entries() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let path = e.ok()?.path();
            if path.extension()? != "pyx" || !path.with_extension("json").exists() {
                return None;
            }
            Some(path.file_stem()?.to_str()?.to_string())
        })
        .collect();
    names.sort();
    names
}

pub fn load(name: &str) -> (ProgramSpec, Program) {
    let dir = corpus_dir();
    let source = std::fs::read_to_string(dir.join(format!("{name}.pyx"))).expect("program source");
    let prog = parse(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
    let spec = ProgramSpec::load(&dir.join(format!("{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"));
    (spec, prog)
}

pub fn label(spec: &ProgramSpec, text: &str) -> Label {
    spec.parse_label(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}
