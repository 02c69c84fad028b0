//! Bundled subject programs with their test suites and expected outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::minilang::{
    execute, parse, parse_suite, ExecutionResult, ParseError, Program, SuiteError, TestInput,
};
use crate::trace_eval::ORIGINAL_STEP_LIMIT;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}` (expected motivating, billscar, scheduler-lite or a path to a .mut file)")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{name}: {source}")]
    Parse { name: String, source: ParseError },
    #[error("{name}: {source}")]
    Suite { name: String, source: SuiteError },
}

#[derive(Clone, Debug)]
pub struct BenchmarkCase {
    pub name: String,
    pub source: String,
    pub program: Program,
    pub suite: Vec<TestInput>,
    pub golden: Option<String>,
    pub expected_elements: Option<usize>,
    pub per_element: usize,
}

pub const NAMES: [&str; 3] = ["motivating", "billscar", "scheduler-lite"];

struct Embedded {
    name: &'static str,
    source: &'static str,
    tests: &'static str,
    golden: &'static str,
    elements: usize,
    per_element: usize,
}

const EMBEDDED: [Embedded; 3] = [
    Embedded {
        name: "motivating",
        source: include_str!("../benchmarks/motivating.mut"),
        tests: include_str!("../benchmarks/motivating.tests"),
        golden: include_str!("../benchmarks/motivating.golden"),
        elements: 6,
        per_element: 50,
    },
    Embedded {
        name: "billscar",
        source: include_str!("../benchmarks/billscar.mut"),
        tests: include_str!("../benchmarks/billscar.tests"),
        golden: include_str!("../benchmarks/billscar.golden"),
        elements: 50,
        per_element: 100,
    },
    Embedded {
        name: "scheduler-lite",
        source: include_str!("../benchmarks/scheduler-lite.mut"),
        tests: include_str!("../benchmarks/scheduler-lite.tests"),
        golden: include_str!("../benchmarks/scheduler-lite.golden"),
        elements: 115,
        per_element: 10,
    },
];

fn build(
    name: &str,
    source: String,
    tests: &str,
    golden: Option<String>,
    expected_elements: Option<usize>,
    per_element: usize,
) -> Result<BenchmarkCase, BenchmarkError> {
    let program = parse(&source).map_err(|source| BenchmarkError::Parse {
        name: name.to_string(),
        source,
    })?;
    let suite = parse_suite(tests).map_err(|source| BenchmarkError::Suite {
        name: name.to_string(),
        source,
    })?;
    Ok(BenchmarkCase {
        name: name.to_string(),
        source,
        program,
        suite,
        golden,
        expected_elements,
        per_element,
    })
}

/// Loads a bundled benchmark by name, or a `.mut` file together with the
/// sibling `.tests` (required) and `.golden` (optional) files.
pub fn load_benchmark(name: &str) -> Result<BenchmarkCase, BenchmarkError> {
    if let Some(e) = EMBEDDED.iter().find(|e| e.name == name) {
        return build(
            e.name,
            e.source.to_string(),
            e.tests,
            Some(e.golden.to_string()),
            Some(e.elements),
            e.per_element,
        );
    }
    let path = Path::new(name);
    if path.extension().is_some_and(|x| x == "mut") || path.is_file() {
        return load_path(path);
    }
    Err(BenchmarkError::Unknown(name.to_string()))
}

pub fn load_path(path: &Path) -> Result<BenchmarkCase, BenchmarkError> {
    let read = |p: PathBuf| {
        std::fs::read_to_string(&p).map_err(|source| BenchmarkError::Io { path: p, source })
    };
    let source = read(path.to_path_buf())?;
    let tests = read(path.with_extension("tests"))?;
    let golden = std::fs::read_to_string(path.with_extension("golden")).ok();
    let name = path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    build(&name, source, &tests, golden, None, 100)
}

/// One line: `name: status | printed values | returned value`.
pub fn format_result(test: &TestInput, r: &ExecutionResult) -> String {
    let printed: Vec<String> = r.output.printed.iter().map(|v| v.to_string()).collect();
    let returned = r
        .output
        .returned
        .as_ref()
        .map_or_else(|| "-".to_string(), |v| v.to_string());
    format!(
        "{}: {} | {} | {}",
        test.name,
        r.status,
        printed.join(" "),
        returned
    )
}

/// Expected-output text for every test of `case`.
pub fn golden_text(case: &BenchmarkCase) -> String {
    let mut out = String::new();
    for t in &case.suite {
        let r = execute(&case.program, t, ORIGINAL_STEP_LIMIT);
        writeln!(out, "{}", format_result(t, &r)).expect("string write");
    }
    out
}
