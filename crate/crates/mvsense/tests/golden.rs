use std::path::Path;

use mvsense::script::{emit, load, parse};
use mvsense_core::scenario::{template, TEMPLATE_NAMES};

fn file(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.mvs"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn shipped_scenarios_match_the_builtins() {
    for name in TEMPLATE_NAMES {
        let text = file(name);
        let want = template(name).unwrap();
        assert_eq!(parse(&text).unwrap(), want, "{name}");
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        assert_eq!(body, emit(&want), "{name}");
    }
}

#[test]
fn builtin_and_file_specs_agree() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in TEMPLATE_NAMES {
        let from_file = load(dir.join(format!("{name}.mvs")).to_str().unwrap()).unwrap();
        assert_eq!(from_file, load(&format!("builtin:{name}")).unwrap());
    }
}
