//! Hypothesis tests and per-facet summaries of experiment results.

mod special;

pub use special::{chi2_sf, erfc, gamma_p, gamma_q, ln_gamma, normal_sf};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n_a * n_b` evaluated with the exact Mann-Whitney distribution.
pub const EXACT_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Normal,
    ChiSquareYates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
}

/// Pearson chi-squared test with Yates' continuity correction on a 2x2
/// table, rows being the arms and columns event / no event.
///
/// The correction of each cell is capped at `|O - E|` so it never flips the
/// sign of the deviation.
pub fn chi2_yates(table: [[u64; 2]; 2]) -> Result<TestResult> {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let n = (rows[0] + rows[1]) as f64;
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DegenerateTable);
    }
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / n;
            let dev = (o as f64 - e).abs();
            let corrected = dev - dev.min(0.5);
            statistic += corrected * corrected / e;
        }
    }
    Ok(TestResult {
        statistic,
        p_value: chi2_sf(statistic, 1.0),
        method: Method::ChiSquareYates,
    })
}

/// [`chi2_yates`] from event counts and totals of two arms.
pub fn chi2_yates_counts(events_a: u64, n_a: u64, events_b: u64, n_b: u64) -> Result<TestResult> {
    if events_a > n_a || events_b > n_b {
        return Err(Error::InconsistentCounts(format!(
            "{events_a}/{n_a} vs {events_b}/{n_b}"
        )));
    }
    chi2_yates([[events_a, n_a - events_a], [events_b, n_b - events_b]])
}

/// Midranks (1-based) of the pooled sample.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Contract("NaN in sample".into()));
    }
    Ok(())
}

fn u_statistic(ranks: &[f64], n_a: usize) -> f64 {
    let r_a: f64 = ranks[..n_a].iter().sum();
    r_a - (n_a * (n_a + 1)) as f64 / 2.0
}

/// Two-sided Mann-Whitney U test, normal approximation with tie-corrected
/// variance and continuity correction. The statistic is `U` of `a`.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_samples(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let u = u_statistic(&ranks, a.len());
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        method: Method::Normal,
    })
}

/// Two-sided Mann-Whitney U test from the exact permutation distribution of
/// the rank sum, conditional on the observed ties.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_samples(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let u = u_statistic(&ranks, a.len());
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let n_a = a.len();
    let max_sum: usize = doubled.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n_a + 1];
    ways[0][0] = 1.0;
    for (i, &r) in doubled.iter().enumerate() {
        for j in (1..=n_a.min(i + 1)).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            let (from, to) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                to[s] += from[s - r];
            }
        }
    }
    let dist = &ways[n_a];
    let total: f64 = dist.iter().sum();
    let observed: usize = doubled[..n_a].iter().sum();
    let below: f64 = dist[..=observed].iter().sum();
    let above: f64 = dist[observed..].iter().sum();
    let p_value = (2.0 * below.min(above) / total).min(1.0);
    Ok(TestResult {
        statistic: u,
        p_value,
        method: Method::Exact,
    })
}

/// Exact test for small samples, normal approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() * b.len() <= EXACT_LIMIT {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Type-7 sample quantile (linear interpolation between order statistics).
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Crashes,
    Progress,
    Success,
    MinDist,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Crashes,
        Metric::Progress,
        Metric::Success,
        Metric::MinDist,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Crashes => "crashes",
            Metric::Progress => "progress",
            Metric::Success => "success",
            Metric::MinDist => "min_dist",
        }
    }

    /// Value of one run, `None` when the run does not count for the metric.
    /// Minimum distance is only meaningful for runs without a crash.
    fn value(&self, o: &Observation) -> Option<f64> {
        match self {
            Metric::Crashes => Some(o.crashes as f64),
            Metric::Progress => Some(o.progress),
            Metric::Success => Some(if o.success { 100.0 } else { 0.0 }),
            Metric::MinDist => (o.success && o.min_dist.is_finite()).then_some(o.min_dist),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    TEst,
    Mode,
    Noise,
    Scenario,
    SigmaPla,
}

impl Facet {
    pub const ALL: [Facet; 5] = [
        Facet::TEst,
        Facet::Mode,
        Facet::Noise,
        Facet::Scenario,
        Facet::SigmaPla,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Facet::TEst => "t_est",
            Facet::Mode => "mode",
            Facet::Noise => "noise",
            Facet::Scenario => "scenario",
            Facet::SigmaPla => "sigma_pla",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Facet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Facet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::config("group_by", format!("unknown facet `{s}`")))
    }
}

/// One completed run as seen by the statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub scenario: String,
    pub mode: String,
    pub noise: String,
    pub sigma_pla: f64,
    pub enabled: bool,
    pub t_est: usize,
    pub seed: u64,
    pub crashes: u32,
    pub progress: f64,
    pub success: bool,
    pub min_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
    pub median: Option<f64>,
}

impl ArmSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
        let std = mean.filter(|_| n > 1).map(|m| {
            let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        ArmSummary {
            n,
            mean,
            std,
            median: quantile(&sorted, 0.5),
        }
    }
}

/// Enabled arm against disabled arm for one facet level and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub facet: Facet,
    pub level: String,
    pub metric: Metric,
    pub enabled: ArmSummary,
    pub disabled: ArmSummary,
    pub test: Option<TestResult>,
    pub note: Option<String>,
}

fn level_of(facet: Facet, o: &Observation) -> String {
    match facet {
        Facet::TEst => o.t_est.to_string(),
        Facet::Mode => o.mode.clone(),
        Facet::Noise => o.noise.clone(),
        Facet::Scenario => o.scenario.clone(),
        Facet::SigmaPla => o.sigma_pla.to_string(),
    }
}

/// Observations of both arms for each level of `facet`. For `t_est` the
/// disabled arm does not depend on the estimation horizon, so every level
/// is compared against all disabled runs.
pub fn arms(
    observations: &[Observation],
    facet: Facet,
) -> BTreeMap<String, (Vec<&Observation>, Vec<&Observation>)> {
    let mut out: BTreeMap<String, (Vec<&Observation>, Vec<&Observation>)> = BTreeMap::new();
    if facet == Facet::TEst {
        let disabled: Vec<&Observation> = observations.iter().filter(|o| !o.enabled).collect();
        for o in observations.iter().filter(|o| o.enabled) {
            out.entry(level_of(facet, o))
                .or_insert_with(|| (Vec::new(), disabled.clone()))
                .0
                .push(o);
        }
        return out;
    }
    for o in observations {
        let entry = out.entry(level_of(facet, o)).or_default();
        if o.enabled {
            entry.0.push(o);
        } else {
            entry.1.push(o);
        }
    }
    out
}

fn compare(
    metric: Metric,
    a: &[&Observation],
    b: &[&Observation],
) -> (Option<TestResult>, Option<String>) {
    if metric == Metric::Success {
        let wins = |arm: &[&Observation]| arm.iter().filter(|o| o.success).count() as u64;
        return match chi2_yates_counts(wins(a), a.len() as u64, wins(b), b.len() as u64) {
            Ok(t) => (Some(t), None),
            Err(Error::DegenerateTable) => (
                Some(TestResult {
                    statistic: 0.0,
                    p_value: 1.0,
                    method: Method::ChiSquareYates,
                }),
                Some("empty margin; no difference to test".into()),
            ),
            Err(e) => (None, Some(e.to_string())),
        };
    }
    let values = |arm: &[&Observation]| {
        arm.iter()
            .filter_map(|o| metric.value(o))
            .collect::<Vec<_>>()
    };
    match mann_whitney_u(&values(a), &values(b)) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

pub fn summarize(observations: &[Observation], facets: &[Facet]) -> Vec<MetricSummary> {
    let mut out = Vec::new();
    for &facet in facets {
        for (level, (a, b)) in arms(observations, facet) {
            for metric in Metric::ALL {
                let values = |arm: &[&Observation]| {
                    arm.iter()
                        .filter_map(|o| metric.value(o))
                        .collect::<Vec<_>>()
                };
                let (test, note) = compare(metric, &a, &b);
                out.push(MetricSummary {
                    facet,
                    level: level.clone(),
                    metric,
                    enabled: ArmSummary::of(&values(&a)),
                    disabled: ArmSummary::of(&values(&b)),
                    test,
                    note,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub runs: usize,
    pub summaries: Vec<MetricSummary>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// Writes `summary.csv`, `report.json` and one `plot_<facet>_<metric>.csv`
/// box-plot table per facet and metric into `dir`.
pub fn write_report(dir: &Path, observations: &[Observation], facets: &[Facet]) -> Result<Report> {
    fs::create_dir_all(dir)?;
    let summaries = summarize(observations, facets);
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record([
        "facet",
        "level",
        "metric",
        "n_enabled",
        "mean_enabled",
        "std_enabled",
        "n_disabled",
        "mean_disabled",
        "std_disabled",
        "test",
        "statistic",
        "p_value",
        "note",
    ])?;
    for s in &summaries {
        let (test, stat, p) = match &s.test {
            Some(t) => (
                serde_json::to_value(t.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                format!("{:.6}", t.statistic),
                format!("{:.6e}", t.p_value),
            ),
            None => Default::default(),
        };
        w.write_record([
            s.facet.as_str().to_string(),
            s.level.clone(),
            s.metric.as_str().to_string(),
            s.enabled.n.to_string(),
            opt(s.enabled.mean),
            opt(s.enabled.std),
            s.disabled.n.to_string(),
            opt(s.disabled.mean),
            opt(s.disabled.std),
            test,
            stat,
            p,
            s.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    for &facet in facets {
        let groups = arms(observations, facet);
        for metric in Metric::ALL {
            let path = dir.join(format!("plot_{}_{}.csv", facet.as_str(), metric.as_str()));
            let mut w = csv::Writer::from_path(path)?;
            w.write_record([
                "level", "arm", "n", "min", "q1", "median", "q3", "max", "mean",
            ])?;
            for (level, (a, b)) in &groups {
                for (arm, runs) in [("enabled", a), ("disabled", b)] {
                    let mut v: Vec<f64> = runs.iter().filter_map(|o| metric.value(o)).collect();
                    v.sort_by(f64::total_cmp);
                    let q = |p| opt(quantile(&v, p));
                    w.write_record([
                        level.clone(),
                        arm.to_string(),
                        v.len().to_string(),
                        q(0.0),
                        q(0.25),
                        q(0.5),
                        q(0.75),
                        q(1.0),
                        opt(ArmSummary::of(&v).mean),
                    ])?;
                }
            }
            w.flush()?;
        }
    }

    let report = Report {
        runs: observations.len(),
        summaries,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Contract(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi2_reference_table() {
        let t = chi2_yates_counts(52, 144, 364, 720).unwrap();
        assert!((t.statistic - 9.458_344_780_219_78).abs() < 1e-9, "{t:?}");
        assert!((t.p_value - 0.002_101_906_579_702_4).abs() < 1e-12);
    }

    #[test]
    fn chi2_small_expected_counts() {
        let t = chi2_yates_counts(0, 10, 10, 10).unwrap();
        assert!((t.statistic - 16.2).abs() < 1e-12);
        assert!((t.p_value - 5.699_411_623_331_8e-5).abs() < 1e-15);
    }

    #[test]
    fn chi2_correction_never_overshoots() {
        // deviation of 0.25 per cell: without the cap the statistic would be positive
        let t = chi2_yates([[5, 5], [5, 4]]).unwrap();
        assert!(t.statistic < 0.1);
        let t = chi2_yates([[5, 5], [5, 5]]).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
    }

    #[test]
    fn chi2_rejects_bad_tables() {
        assert!(matches!(
            chi2_yates([[0, 5], [0, 5]]),
            Err(Error::DegenerateTable)
        ));
        assert!(matches!(
            chi2_yates([[0, 0], [3, 5]]),
            Err(Error::DegenerateTable)
        ));
        assert!(matches!(
            chi2_yates_counts(6, 5, 1, 5),
            Err(Error::InconsistentCounts(_))
        ));
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn mann_whitney_exact_reference() {
        let t = mann_whitney_exact(&[0.0, 0.0, 1.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 0.1).abs() < 1e-14);
        let a: Vec<f64> = (1..=8).map(f64::from).collect();
        let mut b: Vec<f64> = (9..=15).map(f64::from).collect();
        b.push(16.5);
        let t = mann_whitney_exact(&a, &b).unwrap();
        assert!((t.p_value - 1.554_001_554_001_554e-4).abs() < 1e-16);
        let t = mann_whitney_exact(&b, &a).unwrap();
        assert_eq!(t.statistic, 64.0);
    }

    #[test]
    fn mann_whitney_normal_reference() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.5];
        let t = mann_whitney_normal(&a, &b).unwrap();
        assert_eq!(t.statistic, 18.0);
        assert!((t.p_value - 0.017_006_577_801_423_665).abs() < 1e-12);

        let a: Vec<f64> = [0.0, 0.0, 0.0, 1.0, 1.0, 2.0].repeat(5);
        let b: Vec<f64> = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0].repeat(5);
        let t = mann_whitney_normal(&a, &b).unwrap();
        assert_eq!(t.statistic, 237.5);
        assert!((t.p_value - 0.001_017_356_458_307_818).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let t = mann_whitney_u(&[2.0; 30], &[2.0; 30]).unwrap();
        assert_eq!(t.p_value, 1.0);
        let t = mann_whitney_exact(&[2.0; 4], &[2.0; 5]).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn method_selection() {
        assert_eq!(
            mann_whitney_u(&[1.0; 20], &[2.0; 20]).unwrap().method,
            Method::Exact
        );
        assert_eq!(
            mann_whitney_u(&[1.0; 30], &[2.0; 30]).unwrap().method,
            Method::Normal
        );
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&v, 0.25), Some(1.75));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn arm_summary() {
        let s = ArmSummary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, Some(2.5));
        assert!((s.std.unwrap() - 1.290_994_448_735_805_6).abs() < 1e-12);
        let s = ArmSummary::of(&[]);
        assert_eq!((s.n, s.mean, s.std, s.median), (0, None, None, None));
        assert_eq!(ArmSummary::of(&[3.0]).std, None);
    }

    fn obs(enabled: bool, t_est: usize, crashes: u32, seed: u64) -> Observation {
        Observation {
            scenario: "junction".into(),
            mode: "balanced".into(),
            noise: "none".into(),
            sigma_pla: 0.1,
            enabled,
            t_est,
            seed,
            crashes,
            progress: 90.0,
            success: crashes == 0,
            min_dist: if crashes == 0 { 1.5 } else { 0.0 },
        }
    }

    #[test]
    fn t_est_levels_share_the_disabled_arm() {
        let mut runs = Vec::new();
        for seed in 0..4 {
            runs.push(obs(false, 5, 1, seed));
            runs.push(obs(true, 5, 0, seed));
            runs.push(obs(true, 10, 0, seed));
        }
        let g = arms(&runs, Facet::TEst);
        assert_eq!(g.keys().collect::<Vec<_>>(), ["10", "5"]);
        for (a, b) in g.values() {
            assert_eq!((a.len(), b.len()), (4, 4));
        }
        let g = arms(&runs, Facet::Mode);
        assert_eq!(g["balanced"].0.len(), 8);
    }

    #[test]
    fn summary_of_constant_success_is_reported() {
        let runs: Vec<Observation> = (0..6)
            .flat_map(|s| [obs(true, 5, 0, s), obs(false, 5, 0, s)])
            .collect();
        let s = summarize(&runs, &[Facet::Scenario]);
        let success = s.iter().find(|m| m.metric == Metric::Success).unwrap();
        assert_eq!(success.test.unwrap().p_value, 1.0);
        assert!(success.note.is_some());
        let dist = s.iter().find(|m| m.metric == Metric::MinDist).unwrap();
        assert_eq!(dist.enabled.mean, Some(1.5));
    }

    #[test]
    fn report_files() {
        let dir = std::env::temp_dir().join(format!("trustsim-stats-{}", std::process::id()));
        let runs: Vec<Observation> = (0..5)
            .flat_map(|s| [obs(true, 5, 0, s), obs(false, 5, s as u32 % 2, s)])
            .collect();
        let report = write_report(&dir, &runs, &Facet::ALL).unwrap();
        assert_eq!(report.runs, 10);
        let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1 + Facet::ALL.len() * 4);
        assert!(dir.join("plot_t_est_crashes.csv").exists());
        assert!(dir.join("report.json").exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn exact_and_normal_agree_roughly(
            a in prop::collection::vec(-5.0f64..5.0, 6..15),
            b in prop::collection::vec(-5.0f64..5.0, 6..15),
        ) {
            let e = mann_whitney_exact(&a, &b).unwrap();
            let n = mann_whitney_normal(&a, &b).unwrap();
            prop_assert_eq!(e.statistic, n.statistic);
            prop_assert!((e.p_value - n.p_value).abs() < 0.05, "{} vs {}", e.p_value, n.p_value);
        }

        #[test]
        fn u_statistics_complement(
            a in prop::collection::vec(-5.0f64..5.0, 1..12),
            b in prop::collection::vec(-5.0f64..5.0, 1..12),
        ) {
            let ab = mann_whitney_u(&a, &b).unwrap();
            let ba = mann_whitney_u(&b, &a).unwrap();
            prop_assert!((ab.statistic + ba.statistic - (a.len() * b.len()) as f64).abs() < 1e-9);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        }

        #[test]
        fn chi2_p_in_unit_interval(a in 0u64..50, na in 1u64..60, b in 0u64..50, nb in 1u64..60) {
            if let Ok(t) = chi2_yates_counts(a.min(na), na, b.min(nb), nb) {
                prop_assert!(t.statistic >= 0.0);
                prop_assert!((0.0..=1.0).contains(&t.p_value));
            }
        }
    }
}
