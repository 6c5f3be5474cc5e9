//! Parse/print round-trip stability over the shipped corpus and
//! generated programs.

use rewrite_rl_core::model::{parse, print, Pragma, Stmt, TranslationUnit};
use rewrite_rl_core::testsupport::round_trip_case;

fn data_files() -> Vec<String> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let mut files = vec![format!("{root}/convolution.c")];
    let snippets = std::fs::read_dir(format!("{root}/snippets")).expect("snippets dir");
    for entry in snippets {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "c") {
            files.push(path.to_string_lossy().into_owned());
        }
    }
    files.sort();
    files
}

#[test]
fn corpus_round_trips_structurally() {
    for file in data_files() {
        let source = std::fs::read_to_string(&file).unwrap();
        let parsed = parse(&source).unwrap_or_else(|e| panic!("{file}: {e}"));
        let reparsed = parse(&print(&parsed)).unwrap_or_else(|e| panic!("{file} reprint: {e}"));
        assert_eq!(parsed, reparsed, "{file}");
        assert_eq!(print(&parsed), print(&reparsed), "{file}");
    }
}

#[test]
fn generated_programs_round_trip() {
    for seed in 0..200 {
        let unit = round_trip_case(seed);
        let text = print(&unit);
        let parsed = parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
        let reparsed = parse(&print(&parsed)).unwrap();
        assert_eq!(parsed, reparsed, "seed {seed}");
    }
}

fn pragmas_of(unit: &TranslationUnit) -> Vec<Pragma> {
    fn walk(stmts: &[Stmt], out: &mut Vec<Pragma>) {
        for stmt in stmts {
            match stmt {
                Stmt::For(f) => {
                    out.extend(f.pragmas.iter().cloned());
                    walk(&f.body.stmts, out);
                }
                Stmt::Block(b) => walk(&b.stmts, out),
                Stmt::If(ifs) => {
                    walk(&ifs.then_branch.stmts, out);
                    if let Some(e) = &ifs.else_branch {
                        walk(&e.stmts, out);
                    }
                }
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    for f in &unit.functions {
        walk(&f.body.stmts, &mut out);
    }
    out
}

#[test]
fn printing_preserves_pragma_count_and_order() {
    let src = "
void f(int a[4], int b[4][4])
{
    int i;
    int j;
    #pragma stml iteration_independent
    for (i = 0; i < 4; i++) {
        a[i] = 0;
    }
    #pragma stml loop_schedule
    #pragma stml unroll 2
    for (i = 0; i < 4; i++) {
        #pragma stml iteration_independent
        for (j = 0; j < 4; j++) {
            b[i][j] = a[i];
        }
    }
}
";
    let parsed = parse(src).unwrap();
    let reparsed = parse(&print(&parsed)).unwrap();
    let before = pragmas_of(&parsed);
    let after = pragmas_of(&reparsed);
    assert_eq!(before.len(), 4);
    assert_eq!(before, after);
}
