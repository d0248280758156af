use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::{mann_whitney_less, quartiles};
use super::{HarnessError, TrialTrace};

const CURVE_POINTS: usize = 200;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Which optional files to write and what to compare against.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFormats {
    pub svg: bool,
    /// Algorithm the speedup ratios are measured against.
    pub baseline: Option<String>,
    /// Free-form run metadata merged into meta.json.
    pub meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub trials: usize,
    /// Trials that reached the target.
    pub reached: usize,
    /// Quartiles of samples-to-target; unreached trials count as infinite.
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Mean best-so-far accuracy at each grid index. A trial that stopped
    /// early keeps contributing its final best.
    pub curve: Vec<(usize, f64)>,
}

impl AlgorithmSummary {
    /// Samples-to-target per trial, infinite when unreached.
    pub fn samples(traces: &[&TrialTrace]) -> Vec<f64> {
        traces
            .iter()
            .map(|t| t.samples_to_target.map_or(f64::INFINITY, |s| s as f64))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub algorithm: String,
    pub baseline: String,
    /// Baseline median over algorithm median; present only when both are
    /// finite.
    pub speedup: Option<f64>,
    /// One-sided Mann-Whitney p-value for "algorithm needs fewer samples".
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub algorithms: Vec<AlgorithmSummary>,
    pub baseline: Option<String>,
    pub comparisons: Vec<Comparison>,
}

impl BenchReport {
    pub fn summary(&self, algorithm: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }

    pub fn comparison(&self, algorithm: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.algorithm == algorithm)
    }
}

fn group(traces: &[TrialTrace]) -> Vec<(String, Vec<&TrialTrace>)> {
    let mut groups: Vec<(String, Vec<&TrialTrace>)> = Vec::new();
    for t in traces {
        match groups.iter_mut().find(|(a, _)| *a == t.algorithm) {
            Some((_, g)) => g.push(t),
            None => groups.push((t.algorithm.clone(), vec![t])),
        }
    }
    for (_, g) in &mut groups {
        g.sort_by_key(|t| t.seed);
    }
    groups
}

fn curve(traces: &[&TrialTrace]) -> Vec<(usize, f64)> {
    let longest = traces.iter().map(|t| t.events.len()).max().unwrap_or(0);
    if longest == 0 {
        return Vec::new();
    }
    let stride = longest.div_ceil(CURVE_POINTS);
    let mut grid: Vec<usize> = (1..=longest).step_by(stride).collect();
    if grid.last() != Some(&longest) {
        grid.push(longest);
    }
    grid.into_iter()
        .map(|i| {
            let sum: f64 = traces
                .iter()
                .filter_map(|t| t.events.get(i.min(t.events.len()).checked_sub(1)?))
                .map(|e| e.best_so_far)
                .sum();
            let count = traces.iter().filter(|t| !t.events.is_empty()).count().max(1);
            (i, sum / count as f64)
        })
        .collect()
}

/// Aggregates traces per algorithm (in order of first appearance) and
/// compares every other algorithm against `baseline`.
pub fn summarize(traces: &[TrialTrace], baseline: Option<&str>) -> BenchReport {
    let groups = group(traces);
    let algorithms: Vec<AlgorithmSummary> = groups
        .iter()
        .map(|(name, g)| {
            let samples = AlgorithmSummary::samples(g);
            let (q1, median, q3) = quartiles(&samples);
            AlgorithmSummary {
                algorithm: name.clone(),
                trials: g.len(),
                reached: samples.iter().filter(|s| s.is_finite()).count(),
                q1,
                median,
                q3,
                curve: curve(g),
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    if let Some(base) = baseline {
        if let Some((_, base_group)) = groups.iter().find(|(a, _)| a == base) {
            let base_samples = AlgorithmSummary::samples(base_group);
            let base_median = algorithms.iter().find(|a| a.algorithm == base).map(|a| a.median);
            for ((name, g), summary) in groups.iter().zip(&algorithms) {
                if name == base {
                    continue;
                }
                let (_, p_value) = mann_whitney_less(&AlgorithmSummary::samples(g), &base_samples);
                let speedup = base_median
                    .filter(|m| m.is_finite() && summary.median.is_finite() && summary.median > 0.0)
                    .map(|m| m / summary.median);
                comparisons.push(Comparison {
                    algorithm: name.clone(),
                    baseline: base.to_string(),
                    speedup,
                    p_value,
                });
            }
        }
    }
    BenchReport {
        algorithms,
        baseline: baseline.map(str::to_string),
        comparisons,
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn trials_csv(traces: &[TrialTrace]) -> String {
    let mut out = String::from("algorithm,seed,index,encoding,accuracy,best_so_far,cumulative_cost_epochs\n");
    for t in traces {
        for e in &t.events {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{}",
                t.algorithm, t.seed, e.index, e.encoding, e.accuracy, e.best_so_far, e.cumulative_cost_epochs
            );
        }
    }
    out
}

pub fn summary_csv(report: &BenchReport) -> String {
    let mut out = String::from("algorithm,trials,reached,q1,median,q3,baseline,speedup,p_value\n");
    for a in &report.algorithms {
        let cmp = report.comparison(&a.algorithm);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            a.algorithm,
            a.trials,
            a.reached,
            num(a.q1),
            num(a.median),
            num(a.q3),
            report.baseline.as_deref().unwrap_or(""),
            cmp.and_then(|c| c.speedup).map(num).unwrap_or_default(),
            cmp.map(|c| format!("{:.6e}", c.p_value)).unwrap_or_default(),
        );
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 50.0;

fn svg_frame(title: &str, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{x:.2}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n\
         {body}</svg>\n",
        x = W / 2.0,
        b = H - M,
        r = W - M,
    )
}

/// Mean best-so-far accuracy against unique samples, one line per algorithm.
pub fn progression_svg(report: &BenchReport) -> String {
    let max_x = report
        .algorithms
        .iter()
        .filter_map(|a| a.curve.last().map(|p| p.0))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let ys = report.algorithms.iter().flat_map(|a| a.curve.iter().map(|p| p.1));
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), y| (l.min(y), h.max(y)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let px = |x: f64| M + (x - 1.0).max(0.0) / (max_x - 1.0).max(1.0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - lo) / (hi - lo) * (H - 2.0 * M);
    let mut body = String::new();
    let _ = writeln!(body, "<text x=\"{M}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\">{lo:.4}</text>", H - M + 12.0);
    let _ = writeln!(body, "<text x=\"{M}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\">{hi:.4}</text>", M - 4.0);
    let _ = writeln!(body, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{max_x} samples</text>", W - M, H - M + 24.0);
    for (i, a) in report.algorithms.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = a.curve.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x as f64), py(y))).collect();
        let _ = writeln!(body, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", points.join(" "));
        let _ = writeln!(
            body,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            W - M - 60.0,
            M + 14.0 * i as f64,
            a.algorithm
        );
    }
    svg_frame("mean best accuracy vs unique samples", &body)
}

/// Box plot of samples-to-target per algorithm (reached trials only; the
/// reached count is printed under each box).
pub fn boxplot_svg(traces: &[TrialTrace]) -> String {
    let groups = group(traces);
    let finite: Vec<(String, Vec<f64>, usize)> = groups
        .iter()
        .map(|(name, g)| {
            let s: Vec<f64> = AlgorithmSummary::samples(g).into_iter().filter(|v| v.is_finite()).collect();
            (name.clone(), s, g.len())
        })
        .collect();
    let hi = finite.iter().flat_map(|f| f.1.iter().copied()).fold(1.0_f64, f64::max);
    let py = |y: f64| H - M - y / hi * (H - 2.0 * M);
    let slot = (W - 2.0 * M) / finite.len().max(1) as f64;
    let mut body = String::new();
    let _ = writeln!(body, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{hi}</text>", M - 4.0, M + 4.0);
    for (i, (name, s, n)) in finite.iter().enumerate() {
        let cx = M + slot * (i as f64 + 0.5);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            body,
            "<text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{name} ({}/{n})</text>",
            H - M + 16.0,
            s.len()
        );
        if s.is_empty() {
            continue;
        }
        let (q1, med, q3) = quartiles(s);
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let half = slot * 0.3;
        let _ = writeln!(body, "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>", py(lo), py(top));
        let _ = writeln!(
            body,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"white\" stroke=\"{color}\"/>",
            cx - half,
            py(q3),
            2.0 * half,
            (py(q1) - py(q3)).max(0.5)
        );
        let _ = writeln!(
            body,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            cx - half,
            py(med),
            cx + half,
            py(med)
        );
    }
    svg_frame("samples to target", &body)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes trials.csv, summary.csv, meta.json and, when requested, the two
/// SVG figures. Data files depend only on the traces, so regenerating them
/// is byte-identical; run metadata goes to meta.json alone.
pub fn emit_report(traces: &[TrialTrace], out_dir: &Path, formats: &ReportFormats) -> Result<Vec<PathBuf>, HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::Config("no traces to report".into()));
    }
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io { path: out_dir.to_path_buf(), source })?;
    let report = summarize(traces, formats.baseline.as_deref());
    let mut written = vec![
        write(out_dir, "trials.csv", &trials_csv(traces))?,
        write(out_dir, "summary.csv", &summary_csv(&report))?,
    ];
    if formats.svg {
        written.push(write(out_dir, "progression.svg", &progression_svg(&report))?);
        written.push(write(out_dir, "boxplot.svg", &boxplot_svg(traces))?);
    }
    let mut hashes = BTreeMap::new();
    for t in traces {
        hashes.entry(t.algorithm.clone()).or_insert_with(|| t.config_hash.clone());
    }
    let mut meta = serde_json::Map::new();
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("config_hashes".into(), serde_json::to_value(hashes).expect("hashes"));
    for (k, v) in &formats.meta {
        meta.insert(k.clone(), v.clone());
    }
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    written.push(write(out_dir, "meta.json", &(json + "\n"))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TraceEvent;

    fn trace(algorithm: &str, seed: u64, accs: &[f64], target: Option<usize>) -> TrialTrace {
        let mut best = f64::NEG_INFINITY;
        let events = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                best = best.max(a);
                TraceEvent {
                    index: i + 1,
                    encoding: format!("0-{i}").parse().unwrap(),
                    accuracy: a,
                    best_so_far: best,
                    cumulative_cost_epochs: 70 * (i as u64 + 1),
                }
            })
            .collect();
        TrialTrace {
            algorithm: algorithm.into(),
            seed,
            config_hash: "h".into(),
            events,
            samples_to_target: target,
            steps: accs.len() as u64,
        }
    }

    #[test]
    fn speedup_is_ratio_of_medians() {
        let traces = vec![trace("fast", 0, &[0.1], Some(30)), trace("slow", 0, &[0.1], Some(90))];
        let report = summarize(&traces, Some("slow"));
        assert_eq!(report.comparison("fast").unwrap().speedup, Some(3.0));
        assert!(report.comparison("slow").is_none());
        let csv = summary_csv(&report);
        assert!(csv.lines().nth(1).unwrap().starts_with("fast,1,1,30,30,30,slow,3,"), "{csv}");
    }

    #[test]
    fn no_speedup_without_finite_medians() {
        let traces = vec![trace("a", 0, &[0.1], None), trace("b", 0, &[0.1], Some(9))];
        let report = summarize(&traces, Some("b"));
        assert_eq!(report.comparison("a").unwrap().speedup, None);
        assert_eq!(report.summary("a").unwrap().median, f64::INFINITY);
    }

    #[test]
    fn curve_carries_final_best() {
        let traces = vec![trace("a", 0, &[0.2, 0.6], None), trace("a", 1, &[0.4], None)];
        let report = summarize(&traces, None);
        let curve = &report.algorithms[0].curve;
        assert_eq!(curve.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2]);
        assert!((curve[0].1 - 0.3).abs() < 1e-12 && (curve[1].1 - 0.5).abs() < 1e-12);
    }
}
