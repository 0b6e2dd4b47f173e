//! Score distributions, inter-indicator correlations, the field-normalized
//! citation impact (CPP/FCSm) and its comparison with peer scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BibliometricRecord, DisciplineId, Indicator, TeamId, ValidatedForm};
use crate::scoring::ScoreSummary;

/// Coefficients this close to ±1 are reported as exactly ±1.
pub const UNIT_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("DegenerateVariance: one of the series is constant")]
    DegenerateVariance,
    #[error("TooFewPairs: {0} pairs, at least 3 are needed")]
    TooFewPairs(usize),
    #[error("LengthMismatch: {0} vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("NonFinite: input contains NaN or infinity")]
    NonFinite,
    #[error("OutOfScale: score {0} outside 1..=10")]
    OutOfScale(i64),
    #[error("NoPublications: team {0} has no publications")]
    NoPublications(TeamId),
    #[error("MissingBaseline: no field baseline for {0:?}")]
    MissingBaseline(String),
    #[error("InvalidBaseline: field baseline for {0:?} must be positive")]
    InvalidBaseline(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub label: String,
    pub n: usize,
    /// Absolute counts for scores 1..=10.
    pub counts: BTreeMap<u8, usize>,
    /// Relative frequencies for scores 1..=10 (all zero when n = 0).
    pub bins: BTreeMap<u8, f64>,
}

impl Histogram {
    /// Most frequent score; the lowest one wins a tie. `None` for empty input.
    pub fn mode(&self) -> Option<u8> {
        if self.n == 0 {
            return None;
        }
        let max = *self.counts.values().max().unwrap();
        self.counts.iter().find(|(_, c)| **c == max).map(|(s, _)| *s)
    }
}

pub fn histogram(scores: &[i64], label: impl Into<String>) -> Result<Histogram, AnalyticsError> {
    let mut counts: BTreeMap<u8, usize> = (1..=10).map(|s| (s, 0)).collect();
    for &s in scores {
        if !(1..=10).contains(&s) {
            return Err(AnalyticsError::OutOfScale(s));
        }
        *counts.get_mut(&(s as u8)).unwrap() += 1;
    }
    let n = scores.len();
    let bins = counts.iter().map(|(s, c)| (*s, if n == 0 { 0.0 } else { *c as f64 / n as f64 })).collect();
    Ok(Histogram { label: label.into(), n, counts, bins })
}

/// One histogram per numeric indicator over the raw form scores. The
/// expertise self-rating gets its own histogram and is never pooled.
pub fn indicator_distributions(forms: &[ValidatedForm]) -> Vec<Histogram> {
    Indicator::NUMERIC
        .iter()
        .map(|&ind| {
            let scores: Vec<i64> = forms
                .iter()
                .filter_map(|f| match ind {
                    Indicator::ReviewerExpertise => Some(f.expertise()),
                    _ => f.score(ind),
                })
                .map(|s| s.get() as i64)
                .collect();
            histogram(&scores, ind.key()).expect("validated scores are on scale")
        })
        .collect()
}

/// All rated scores of the given forms in one histogram.
pub fn pooled_distribution(forms: &[ValidatedForm], label: impl Into<String>) -> Histogram {
    let scores: Vec<i64> = forms.iter().flat_map(|f| f.rated_scores().map(|(_, s)| s.get() as i64)).collect();
    histogram(&scores, label).expect("validated scores are on scale")
}

fn check_pairs(x: &[f64], y: &[f64]) -> Result<(), AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalyticsError::TooFewPairs(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return Err(AnalyticsError::DegenerateVariance);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Centered sums (Sxx, Syy, Sxy).
fn moments(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    (mx, my, sxx, syy, sxy)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    check_pairs(x, y)?;
    let (_, _, sxx, syy, sxy) = moments(x, y);
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::DegenerateVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(if 1.0 - r.abs() <= UNIT_SNAP { r.signum() } else { r })
}

/// Two-sided t statistic for r with n - 2 degrees of freedom.
pub fn t_statistic(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return f64::INFINITY.copysign(r);
    }
    r * (df / (1.0 - r * r)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<Indicator>,
    /// `None` marks a cell with fewer than 3 pairs or a constant series.
    pub r: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: Indicator, b: Indicator) -> Option<f64> {
        let i = self.labels.iter().position(|l| *l == a)?;
        let j = self.labels.iter().position(|l| *l == b)?;
        self.r[i][j]
    }

    /// Smallest and largest off-diagonal coefficient.
    pub fn off_diagonal_range(&self) -> Option<(f64, f64)> {
        let mut vals = Vec::new();
        for i in 0..self.labels.len() {
            for j in (i + 1)..self.labels.len() {
                if let Some(r) = self.r[i][j] {
                    vals.push(r);
                }
            }
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (!vals.is_empty()).then_some((lo, hi))
    }
}

/// Pairwise-complete correlations between the team-level weighted means of
/// every rated indicator.
pub fn indicator_correlations(summaries: &[ScoreSummary]) -> Result<CorrelationMatrix, AnalyticsError> {
    if summaries.len() < 3 {
        return Err(AnalyticsError::TooFewPairs(summaries.len()));
    }
    let labels = Indicator::RATED.to_vec();
    let k = labels.len();
    let mut r = vec![vec![None; k]; k];
    let mut n = vec![vec![0; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                summaries.iter().filter_map(|s| Some((s.mean(labels[i])?, s.mean(labels[j])?))).unzip();
            n[i][j] = xs.len();
            n[j][i] = xs.len();
            let cell = if i == j { Some(1.0) } else { pearson(&xs, &ys).ok() };
            r[i][j] = cell;
            r[j][i] = cell;
        }
    }
    Ok(CorrelationMatrix { labels, r, n })
}

/// How the mean field citation score is averaged over a team's fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FcsmWeighting {
    /// Each publication contributes the baseline of its field.
    #[default]
    PublicationCount,
    /// Every field represented counts once.
    FieldMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrownResult {
    pub team_id: TeamId,
    pub cpp: f64,
    pub fcsm: f64,
    pub crown: f64,
    pub p: usize,
}

/// CPP/FCSm for one team.
pub fn crown(record: &BibliometricRecord, weighting: FcsmWeighting) -> Result<CrownResult, AnalyticsError> {
    let p = record.publications.len();
    if p == 0 {
        return Err(AnalyticsError::NoPublications(record.team_id.clone()));
    }
    let mut per_field: BTreeMap<&str, usize> = BTreeMap::new();
    let mut citations = 0u64;
    for pub_ in &record.publications {
        let base = *record
            .field_baselines
            .get(&pub_.field)
            .ok_or_else(|| AnalyticsError::MissingBaseline(pub_.field.clone()))?;
        if !(base.is_finite() && base > 0.0) {
            return Err(AnalyticsError::InvalidBaseline(pub_.field.clone()));
        }
        *per_field.entry(&pub_.field).or_default() += 1;
        citations += pub_.citation_count as u64;
    }
    let cpp = citations as f64 / p as f64;
    let fcsm = match weighting {
        FcsmWeighting::PublicationCount => {
            per_field.iter().map(|(f, n)| *n as f64 * record.field_baselines[*f]).sum::<f64>() / p as f64
        }
        FcsmWeighting::FieldMean => {
            per_field.keys().map(|f| record.field_baselines[*f]).sum::<f64>() / per_field.len() as f64
        }
    };
    Ok(CrownResult { team_id: record.team_id.clone(), cpp, fcsm, crown: cpp / fcsm, p })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub team_id: TeamId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discipline_id: Option<DisciplineId>,
    pub crown: f64,
    pub peer: f64,
}

/// Teams that disagree between the two measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantReport {
    /// crown > 1 but peer score below the discipline median.
    pub high_crown_low_peer: usize,
    /// crown < 1 but peer score above the discipline median.
    pub low_crown_high_peer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterStudy {
    pub indicator: Indicator,
    pub points: Vec<ScatterPoint>,
    pub r: f64,
    pub t: f64,
    pub slope: f64,
    pub intercept: f64,
    pub quadrants: QuadrantReport,
    /// Team ids present in only one of the inputs.
    pub dropped: Vec<TeamId>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Least-squares line y = slope·x + intercept.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalyticsError> {
    check_pairs(x, y)?;
    let (mx, my, sxx, _, sxy) = moments(x, y);
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Pairs each team's crown indicator with its peer score on `indicator`.
pub fn peer_vs_crown(
    summaries: &[ScoreSummary],
    crowns: &[CrownResult],
    indicator: Indicator,
) -> Result<ScatterStudy, AnalyticsError> {
    let by_team: BTreeMap<&TeamId, &CrownResult> = crowns.iter().map(|c| (&c.team_id, c)).collect();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    let mut matched = std::collections::BTreeSet::new();
    let mut sorted: Vec<&ScoreSummary> = summaries.iter().collect();
    sorted.sort_by(|a, b| a.team_id.cmp(&b.team_id));
    for s in sorted {
        match (by_team.get(&s.team_id), s.mean(indicator)) {
            (Some(c), Some(peer)) => {
                matched.insert(&s.team_id);
                points.push(ScatterPoint {
                    team_id: s.team_id.clone(),
                    discipline_id: s.discipline_id.clone(),
                    crown: c.crown,
                    peer,
                });
            }
            _ => dropped.push(s.team_id.clone()),
        }
    }
    for c in crowns {
        if !matched.contains(&c.team_id) && !dropped.contains(&c.team_id) {
            dropped.push(c.team_id.clone());
        }
    }
    dropped.sort();
    if points.len() < 3 {
        return Err(AnalyticsError::TooFewPairs(points.len()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.crown).collect();
    let y: Vec<f64> = points.iter().map(|p| p.peer).collect();
    let r = pearson(&x, &y)?;
    let (slope, intercept) = least_squares(&x, &y)?;

    let mut by_discipline: BTreeMap<Option<&DisciplineId>, Vec<f64>> = BTreeMap::new();
    for p in &points {
        by_discipline.entry(p.discipline_id.as_ref()).or_default().push(p.peer);
    }
    let medians: BTreeMap<Option<&DisciplineId>, f64> = by_discipline.iter().map(|(d, v)| (*d, median(v))).collect();
    let mut quadrants = QuadrantReport { high_crown_low_peer: 0, low_crown_high_peer: 0 };
    for p in &points {
        let med = medians[&p.discipline_id.as_ref()];
        if p.crown > 1.0 && p.peer < med {
            quadrants.high_crown_low_peer += 1;
        }
        if p.crown < 1.0 && p.peer > med {
            quadrants.low_crown_high_peer += 1;
        }
    }

    Ok(ScatterStudy { indicator, t: t_statistic(r, points.len()), points, r, slope, intercept, quadrants, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CitedPublication;

    /// r from the textbook definition, evaluated naively.
    fn pearson_definition(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[8, 8, 7, 9], "x").unwrap();
        assert_eq!(h.bins[&7], 0.25);
        assert_eq!(h.bins[&8], 0.5);
        assert_eq!(h.bins[&9], 0.25);
        assert_eq!(h.bins.len(), 10);
        assert_eq!(h.mode(), Some(8));
        assert_eq!(histogram(&[5], "x").unwrap().bins[&5], 1.0);
        let empty = histogram(&[], "x").unwrap();
        assert_eq!(empty.n, 0);
        assert!(empty.bins.values().all(|f| *f == 0.0));
        assert_eq!(empty.mode(), None);
        assert_eq!(histogram(&[11], "x"), Err(AnalyticsError::OutOfScale(11)));
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        let oracle = pearson_definition(&x, &y);
        assert!((oracle - 0.6).abs() < 1e-12);
        assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(AnalyticsError::DegenerateVariance));
        assert_eq!(pearson(&[0.1; 4], &[1.0, 2.0, 3.0, 4.0]), Err(AnalyticsError::DegenerateVariance));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalyticsError::TooFewPairs(2)));
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(AnalyticsError::LengthMismatch(3, 2)));
    }

    fn record(pubs: &[(&str, u32)], baselines: &[(&str, f64)]) -> BibliometricRecord {
        BibliometricRecord {
            team_id: "T".into(),
            publications: pubs
                .iter()
                .map(|(f, c)| CitedPublication { field: f.to_string(), citation_count: *c })
                .collect(),
            field_baselines: baselines.iter().map(|(f, b)| (f.to_string(), *b)).collect(),
        }
    }

    #[test]
    fn crown_at_field_average() {
        let c = crown(&record(&[("F", 4), ("F", 6)], &[("F", 5.0)]), FcsmWeighting::PublicationCount).unwrap();
        assert_eq!((c.cpp, c.fcsm, c.crown, c.p), (5.0, 5.0, 1.0, 2));
    }

    #[test]
    fn crown_mixed_fields() {
        // CPP = (3+5+8)/3 = 16/3; FCSm = (2·4 + 1·2)/3 = 10/3; crown = 1.6
        let c = crown(
            &record(&[("F1", 3), ("F1", 5), ("F2", 8)], &[("F1", 4.0), ("F2", 2.0)]),
            FcsmWeighting::PublicationCount,
        )
        .unwrap();
        assert!((c.cpp - 16.0 / 3.0).abs() < 1e-12);
        assert!((c.fcsm - 10.0 / 3.0).abs() < 1e-12);
        assert!((c.crown - 1.6).abs() < 1e-12);
        let fm =
            crown(&record(&[("F1", 3), ("F1", 5), ("F2", 8)], &[("F1", 4.0), ("F2", 2.0)]), FcsmWeighting::FieldMean)
                .unwrap();
        assert!((fm.fcsm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn crown_errors() {
        assert_eq!(
            crown(&record(&[], &[("F", 1.0)]), FcsmWeighting::PublicationCount),
            Err(AnalyticsError::NoPublications("T".into()))
        );
        assert_eq!(
            crown(&record(&[("G", 1)], &[("F", 1.0)]), FcsmWeighting::PublicationCount),
            Err(AnalyticsError::MissingBaseline("G".into()))
        );
    }

    fn summary(team: &str, disc: &str, value: f64) -> ScoreSummary {
        let mut per_indicator = BTreeMap::new();
        per_indicator.insert(
            Indicator::TeamQuality,
            crate::scoring::IndicatorAggregate { weighted_mean: value, n_ratings: 1, weight_sum: 1.0, min: 1, max: 10 },
        );
        ScoreSummary {
            team_id: team.into(),
            discipline_id: Some(disc.into()),
            n_forms: 1,
            per_indicator,
            dominant_tally: BTreeMap::new(),
            overall_weighted: None,
            rank_in_discipline: None,
        }
    }

    fn crown_of(team: &str, value: f64) -> CrownResult {
        CrownResult { team_id: team.into(), cpp: value, fcsm: 1.0, crown: value, p: 1 }
    }

    #[test]
    fn scatter_exact_line() {
        let xs = [0.5, 1.0, 1.5, 2.0];
        let summaries: Vec<_> =
            xs.iter().enumerate().map(|(i, x)| summary(&format!("t{i}"), "d", 2.0 * x + 1.0)).collect();
        let crowns: Vec<_> = xs.iter().enumerate().map(|(i, x)| crown_of(&format!("t{i}"), *x)).collect();
        let s = peer_vs_crown(&summaries, &crowns, Indicator::TeamQuality).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12);
        assert!((s.intercept - 1.0).abs() < 1e-12);
        assert_eq!(s.r, 1.0);
    }

    #[test]
    fn quadrants_match_enumeration() {
        // (crown, peer): high crowns all above the median; one low crown above it too.
        let data = [(1.8, 8.6), (1.4, 8.2), (1.2, 7.9), (0.7, 8.0), (0.8, 6.5), (0.5, 6.0), (0.9, 7.0)];
        let summaries: Vec<_> = data.iter().enumerate().map(|(i, (_, p))| summary(&format!("t{i}"), "d", *p)).collect();
        let crowns: Vec<_> = data.iter().enumerate().map(|(i, (c, _))| crown_of(&format!("t{i}"), *c)).collect();

        let mut peers: Vec<f64> = data.iter().map(|d| d.1).collect();
        peers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = peers[peers.len() / 2];
        let expected = (
            data.iter().filter(|(c, p)| *c > 1.0 && *p < med).count(),
            data.iter().filter(|(c, p)| *c < 1.0 && *p > med).count(),
        );
        assert_eq!(expected, (0, 1));

        let s = peer_vs_crown(&summaries, &crowns, Indicator::TeamQuality).unwrap();
        assert_eq!((s.quadrants.high_crown_low_peer, s.quadrants.low_crown_high_peer), expected);
    }

    #[test]
    fn disjoint_ids_are_dropped() {
        let summaries: Vec<_> = (0..4).map(|i| summary(&format!("a{i}"), "d", i as f64)).collect();
        let crowns: Vec<_> = (0..4).map(|i| crown_of(&format!("b{i}"), i as f64)).collect();
        assert_eq!(peer_vs_crown(&summaries, &crowns, Indicator::TeamQuality), Err(AnalyticsError::TooFewPairs(0)));
    }

    #[test]
    fn correlation_matrix_shape() {
        let summaries: Vec<_> = (0..2).map(|i| summary(&format!("t{i}"), "d", i as f64)).collect();
        assert_eq!(indicator_correlations(&summaries), Err(AnalyticsError::TooFewPairs(2)));
    }

    #[test]
    fn t_statistic_values() {
        assert!((t_statistic(0.6, 4) - 0.6 * (2.0f64 / 0.64).sqrt()).abs() < 1e-12);
        assert!(t_statistic(1.0, 10).is_infinite());
    }
}
