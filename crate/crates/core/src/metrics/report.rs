//! CSV report: one row per episode and a mean ± std row per group.

use std::collections::BTreeMap;
use std::io::Write;

use super::EpisodeMetrics;

pub const CSV_HEADER: [&str; 11] =
    ["env", "variant", "policy", "seed", "E_nav", "I_nav", "S_manip", "E_manip", "I_manip", "steps", "wall_time"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub env: String,
    pub variant: String,
    pub policy: String,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
    pub steps: u64,
    /// Seconds.
    pub wall_time: f64,
}

/// Population mean and standard deviation per column of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub env: String,
    pub variant: String,
    pub policy: String,
    pub episodes: usize,
    /// E_nav, I_nav, S_manip, E_manip, I_manip, steps, wall_time.
    pub columns: [Option<(f64, f64)>; 7],
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn metric_columns(m: &EpisodeMetrics) -> [Option<f64>; 5] {
    [m.e_nav, m.i_nav, m.s_manip, m.e_manip, m.i_manip]
}

/// Groups rows by (env, variant, policy). Within a group, rows are taken in
/// seed order so the result does not depend on completion order.
pub fn aggregate_rows(rows: &[ReportRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String, String), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.env.clone(), r.variant.clone(), r.policy.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((env, variant, policy), mut group)| {
            group.sort_by_key(|r| r.seed);
            let mut columns = [None; 7];
            for (c, slot) in columns.iter_mut().enumerate().take(5) {
                let vals: Vec<f64> = group.iter().filter_map(|r| metric_columns(&r.metrics)[c]).collect();
                *slot = mean_std(&vals);
            }
            columns[5] = mean_std(&group.iter().map(|r| r.steps as f64).collect::<Vec<_>>());
            columns[6] = mean_std(&group.iter().map(|r| r.wall_time).collect::<Vec<_>>());
            AggregateRow { env, variant, policy, episodes: group.len(), columns }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn fmt_pair(v: Option<(f64, f64)>) -> String {
    v.map(|(m, s)| format!("{m:.6}±{s:.6}")).unwrap_or_default()
}

/// Writes per-episode rows sorted by group and seed, each group followed
/// by its aggregate row (seed column `mean±std`).
pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.env, &a.variant, &a.policy, a.seed).cmp(&(&b.env, &b.variant, &b.policy, b.seed)));
    let aggregates = aggregate_rows(rows);
    for agg in &aggregates {
        for r in sorted.iter().filter(|r| r.env == agg.env && r.variant == agg.variant && r.policy == agg.policy) {
            let m = metric_columns(&r.metrics);
            w.write_record([
                r.env.clone(),
                r.variant.clone(),
                r.policy.clone(),
                r.seed.to_string(),
                fmt_opt(m[0]),
                fmt_opt(m[1]),
                fmt_opt(m[2]),
                fmt_opt(m[3]),
                fmt_opt(m[4]),
                r.steps.to_string(),
                format!("{:.3}", r.wall_time),
            ])?;
        }
        let c = &agg.columns;
        w.write_record([
            agg.env.clone(),
            agg.variant.clone(),
            agg.policy.clone(),
            "mean±std".to_string(),
            fmt_pair(c[0]),
            fmt_pair(c[1]),
            fmt_pair(c[2]),
            fmt_pair(c[3]),
            fmt_pair(c[4]),
            fmt_pair(c[5]),
            c[6].map(|(m, s)| format!("{m:.3}±{s:.3}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, i_nav: f64) -> ReportRow {
        ReportRow {
            env: "maze".into(),
            variant: "layout=u,obs=3".into(),
            policy: "rrt".into(),
            seed,
            metrics: EpisodeMetrics { e_nav: Some(0.5), i_nav: Some(i_nav), ..Default::default() },
            steps: 10,
            wall_time: 0.1,
        }
    }

    #[test]
    fn population_std() {
        let agg = aggregate_rows(&[row(0, 1.0), row(1, 0.5)]);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].columns[1], Some((0.75, 0.25)));
        assert_eq!(agg[0].columns[2], None);
    }

    #[test]
    fn csv_has_episode_rows_plus_aggregate() {
        let rows: Vec<ReportRow> = (0..20).rev().map(|s| row(s, 1.0)).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 20 + 1);
        assert!(lines[1].starts_with("maze,\"layout=u,obs=3\",rrt,0,"));
        assert!(lines[21].contains("mean±std"));
        assert!(lines[21].contains("1.000000±0.000000"));
    }
}
