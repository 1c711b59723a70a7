use std::fs;
use std::path::{Path, PathBuf};

use udkit::conllu;
use udkit::pipeline::{run_pipeline, Manifest, PipelineError, Stage};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn run(manifest: &Manifest) -> String {
    let input = fs::read_to_string(fixture("pipeline/input.txt")).unwrap();
    conllu::serialize_document(&run_pipeline(&input, manifest).unwrap()).unwrap()
}

#[test]
fn without_parse_only_head_and_deprel_change() {
    let full_manifest = Manifest::load(fixture("pipeline/manifest.toml")).unwrap();
    let mut partial_manifest = Manifest::load(fixture("pipeline/manifest.toml")).unwrap();
    partial_manifest.stages.retain(|&s| s != Stage::Parse);
    let full = run(&full_manifest);
    let partial = run(&partial_manifest);
    assert_eq!(full.lines().count(), partial.lines().count());
    for (f, p) in full.lines().zip(partial.lines()) {
        let fc: Vec<&str> = f.split('\t').collect();
        let pc: Vec<&str> = p.split('\t').collect();
        if fc.len() != 10 || fc[0].contains('-') {
            assert_eq!(f, p);
            continue;
        }
        for col in 0..10 {
            if col == 6 || col == 7 {
                assert_eq!(pc[col], "_", "{}", p);
            } else {
                assert_eq!(fc[col], pc[col], "column {} of {}", col + 1, f);
            }
        }
    }
}

#[test]
fn missing_resource_fails_before_processing() {
    let dir = fixture("pipeline");
    let m = Manifest::parse(
        "stages = [\"tokenize\", \"tag\"]\n[tag]\nmodel = \"models/absent.txt\"\n",
        &dir,
    )
    .unwrap();
    match run_pipeline("avan vanthaan.", &m) {
        Err(PipelineError::Resource { stage: Stage::Tag, .. }) => {}
        other => panic!(
            "expected a tag resource error, got {:?}",
            other.map(|d| d.sentences.len())
        ),
    }
}

#[test]
fn multi_sentence_raw_text_validates() {
    let m = Manifest::load(fixture("pipeline/manifest.toml")).unwrap();
    let doc = run_pipeline("avanum paadattai padithaan. aval kadaiukku poothaal.", &m).unwrap();
    assert_eq!(doc.sentences.len(), 2);
    assert!(conllu::validate(&doc).is_empty());
    assert_eq!(doc.sentences[1].tokens[0].upos.as_deref(), Some("PRON"));
}
