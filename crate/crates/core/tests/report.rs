use std::fs;
use std::path::Path;

use nasmcts::eval::{Evaluator, SyntheticOracle};
use nasmcts::harness::{
    boxplot_svg, emit_report, progression_svg, run_trials, summarize, Algorithm, ReportFormats, StopRule, TrialSettings,
    TrialTrace,
};
use nasmcts::space::DagSpace;

fn pinned_traces() -> Vec<TrialTrace> {
    let oracle = SyntheticOracle::new(DagSpace::new(4, 3), 5);
    let (_, target) = oracle.optimum().unwrap().unwrap();
    let settings = TrialSettings::desk_scale(StopRule::budget(97).with_target(target));
    let mut traces = Vec::new();
    for algorithm in [Algorithm::RandomSearch, Algorithm::RegularizedEvolution, Algorithm::HillClimb] {
        traces.extend(run_trials(algorithm, &oracle, &settings, 12, 0, 2).unwrap());
    }
    traces
}

fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else if v[n / 2 - 1].is_infinite() || v[n / 2].is_infinite() {
        f64::INFINITY
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn regenerating_reports_is_byte_identical() {
    let traces = pinned_traces();
    let formats = ReportFormats {
        svg: true,
        baseline: Some("rs".into()),
        ..ReportFormats::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = emit_report(&traces, a.path(), &formats).unwrap();
    emit_report(&traces, b.path(), &formats).unwrap();
    assert_eq!(files.len(), 5);
    for file in &files {
        let name = file.file_name().unwrap();
        assert_eq!(fs::read(file).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn trials_csv_has_one_row_per_event() {
    let traces = pinned_traces();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&traces[..1], dir.path(), &ReportFormats::default()).unwrap();
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), traces[0].events.len() + 1);
    assert!(!dir.path().join("boxplot.svg").exists());
}

#[test]
fn summary_medians_match_a_sort_based_median() {
    let traces = pinned_traces();
    let report = summarize(&traces, Some("rs"));
    for summary in &report.algorithms {
        let samples: Vec<f64> = traces
            .iter()
            .filter(|t| t.algorithm == summary.algorithm)
            .map(|t| t.samples_to_target.map_or(f64::INFINITY, |s| s as f64))
            .collect();
        assert_eq!(summary.median, sorted_median(&samples), "{}", summary.algorithm);
        assert_eq!(summary.trials, 12);
    }
}

#[test]
fn best_so_far_is_recomputable_from_accuracies() {
    for trace in pinned_traces() {
        let mut best = f64::NEG_INFINITY;
        for e in &trace.events {
            best = best.max(e.accuracy);
            assert_eq!(e.best_so_far, best);
        }
    }
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "{name} drifted; rerun with UPDATE_GOLDEN=1 if intended");
}

#[test]
fn figures_match_golden_files() {
    let traces = pinned_traces();
    let report = summarize(&traces, Some("rs"));
    let progression = progression_svg(&report);
    let boxplot = boxplot_svg(&traces);
    for svg in [&progression, &boxplot] {
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(!svg.contains("href"));
    }
    golden("progression.svg", &progression);
    golden("boxplot.svg", &boxplot);
}
