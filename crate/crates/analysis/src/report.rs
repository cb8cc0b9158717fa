//! Cluster and statistics reports, as JSON-ready structs and aligned text.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::{k_medoids, matching_matrix, select_clustering, ClusteringResult, MatchingMatrix};
use crate::encode::TrajectoryEmbedding;
use crate::stats::{bartlett, one_way_anova, shapiro_wilk, tukey_kramer, TestReport};
use crate::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub silhouette: f64,
    pub objective: f64,
    pub medoids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub embeddings: Vec<TrajectoryEmbedding>,
    pub candidates: Vec<KSummary>,
    pub selected: ClusteringResult,
    pub matching: MatchingMatrix,
}

pub fn cluster_report(
    embeddings: Vec<TrajectoryEmbedding>,
    ks: &[usize],
    seed: u64,
) -> Result<ClusterReport, AnalysisError> {
    let points: Vec<[f64; 2]> = embeddings.iter().map(|e| e.point).collect();
    let selected = select_clustering(&points, ks, seed)?;
    let mut candidates = Vec::new();
    for &k in ks {
        let r = k_medoids(&points, k, seed)?;
        candidates.push(KSummary { k, silhouette: r.silhouette, objective: r.objective, medoids: r.medoids });
    }
    let users: Vec<String> = embeddings.iter().map(|e| e.user_id.clone()).collect();
    let matching = matching_matrix(&selected, &users)?;
    Ok(ClusterReport { embeddings, candidates, selected, matching })
}

impl ClusterReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:>3}  {:>10}  {:>12}", "K", "silhouette", "objective").unwrap();
        for c in &self.candidates {
            let mark = if c.k == self.selected.k { " *" } else { "" };
            writeln!(s, "{:>3}  {:>10.4}  {:>12.4}{mark}", c.k, c.silhouette, c.objective).unwrap();
        }
        writeln!(s).unwrap();
        write!(s, "{:>8}", "cluster").unwrap();
        for u in &self.matching.users {
            write!(s, "  {u:>8}").unwrap();
        }
        writeln!(s).unwrap();
        for (c, row) in self.matching.counts.iter().enumerate() {
            write!(s, "{c:>8}").unwrap();
            for v in row {
                write!(s, "  {v:>8}").unwrap();
            }
            writeln!(s).unwrap();
        }
        write!(s, "{:>8}", "majority").unwrap();
        for u in &self.matching.users {
            write!(s, "  {:>8.3}", self.matching.majority_fraction[u]).unwrap();
        }
        writeln!(s).unwrap();
        s
    }
}

/// Every test of the battery for one metric measured under several
/// conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub conditions: Vec<String>,
    /// Normality of the residuals about each condition's mean.
    pub shapiro_wilk: TestReport,
    pub bartlett: TestReport,
    pub anova: TestReport,
    pub tukey: TestReport,
}

pub fn metric_report(
    metric: &str,
    conditions: &[(String, Vec<f64>)],
    alpha: f64,
) -> Result<MetricReport, AnalysisError> {
    let groups: Vec<Vec<f64>> = conditions.iter().map(|(_, v)| v.clone()).collect();
    let residuals: Vec<f64> = groups
        .iter()
        .flat_map(|g| {
            let m = g.iter().sum::<f64>() / g.len().max(1) as f64;
            g.iter().map(move |x| x - m)
        })
        .collect();
    Ok(MetricReport {
        metric: metric.into(),
        conditions: conditions.iter().map(|(n, _)| n.clone()).collect(),
        shapiro_wilk: shapiro_wilk(&residuals)?,
        bartlett: bartlett(&groups)?,
        anova: one_way_anova(&groups)?,
        tukey: tukey_kramer(&groups, alpha)?,
    })
}

fn sci(p: f64) -> String {
    format!("{p:.2e}")
}

/// Metric, SW p-value, Bartlett p-value.
pub fn normality_table(reports: &[MetricReport]) -> String {
    let w = reports.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
    let mut s = format!("{:<w$}  {:>12}  {:>17}\n", "Metric", "SW p-value", "Bartlett p-value");
    for r in reports {
        writeln!(s, "{:<w$}  {:>12}  {:>17}", r.metric, sci(r.shapiro_wilk.p_value), sci(r.bartlett.p_value)).unwrap();
    }
    s
}

/// Metric, source, degrees of freedom, sum and mean of squares, F and p.
pub fn anova_table(reports: &[MetricReport]) -> String {
    let w = reports.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
    let mut s = format!(
        "{:<w$}  {:<9}  {:>4}  {:>10}  {:>11}  {:>8}  {:>9}\n",
        "Metric", "Source", "Df", "Sum Sq", "Mean Sq", "F value", "p-value"
    );
    for r in reports {
        for (i, row) in r.anova.table.iter().enumerate() {
            let name = if i == 0 { r.metric.as_str() } else { "" };
            let f = row.f_value.map_or("--".to_string(), |f| format!("{f:.3}"));
            let p = row.p_value.map_or("--".to_string(), sci);
            writeln!(
                s,
                "{name:<w$}  {:<9}  {:>4}  {:>10.3}  {:>11.3}  {f:>8}  {p:>9}",
                row.source, row.df, row.sum_sq, row.mean_sq
            )
            .unwrap();
        }
    }
    s
}

/// Metric, comparison, difference with its confidence interval, and p.
pub fn comparison_table(reports: &[MetricReport]) -> String {
    let w = reports.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
    let mut s = format!("{:<w$}  {:<20}  {:<28}  {:>9}\n", "Metric", "Comparison", "Difference, [95% CI]", "p-value");
    for r in reports {
        for (i, c) in r.tukey.comparisons.iter().enumerate() {
            let name = if i == 0 { r.metric.as_str() } else { "" };
            let pair = format!("{} - {}", r.conditions[c.later], r.conditions[c.earlier]);
            let diff = format!("{:.3}, [{:.3}, {:.3}]", c.difference, c.ci_low, c.ci_high);
            writeln!(s, "{name:<w$}  {pair:<20}  {diff:<28}  {:>9}", sci(c.p_value)).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conditions() -> Vec<(String, Vec<f64>)> {
        vec![
            ("APPR".into(), vec![0.31, 0.42, 0.28, 0.35, 0.39, 0.30, 0.44, 0.36]),
            ("HEUR".into(), vec![0.61, 0.58, 0.66, 0.70, 0.55, 0.63, 0.59, 0.68, 0.64]),
            ("HUM".into(), vec![0.77, 0.82, 0.71, 0.79, 0.85, 0.74, 0.80, 0.76]),
        ]
    }

    #[test]
    fn tables_follow_the_published_layout() {
        let r = metric_report("Training Tip", &conditions(), 0.05).unwrap();
        let anova = anova_table(std::slice::from_ref(&r));
        let lines: Vec<&str> = anova.lines().collect();
        assert_eq!(lines.len(), 3);
        for col in ["Df", "Sum Sq", "Mean Sq", "F value", "p-value"] {
            assert!(lines[0].contains(col));
        }
        assert!(lines[1].starts_with("Training Tip") && lines[1].contains("Treatment"));
        assert!(lines[2].contains("Residual") && lines[2].trim_end().ends_with("--"));

        let pairs = comparison_table(std::slice::from_ref(&r));
        let order: Vec<&str> = pairs.lines().skip(1).map(|l| l[12..].trim_start().split("  ").next().unwrap()).collect();
        assert_eq!(order, ["HEUR - APPR", "HUM - APPR", "HUM - HEUR"]);
        assert_eq!(normality_table(&[r]).lines().count(), 2);
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = metric_report("Trust", &conditions(), 0.05).unwrap();
        let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
