//! Ground-truth evaluation: confusion counts and the six rate indicators.
//!
//! The positive class is **outlier**. A prediction is positive when its
//! verdict is anything other than `Normal`. Ratios whose denominator is zero
//! are reported as [`Indicator::Undefined`], never as 0.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::types::{DetectionReport, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn n(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts under the opposite positive-class convention.
    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    pub fn tpr(&self) -> Indicator {
        Indicator::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Indicator {
        Indicator::ratio(self.fp, self.fp + self.tn)
    }

    pub fn tnr(&self) -> Indicator {
        Indicator::ratio(self.tn, self.fp + self.tn)
    }

    pub fn fnr(&self) -> Indicator {
        Indicator::ratio(self.fn_, self.tp + self.fn_)
    }

    pub fn precision(&self) -> Indicator {
        Indicator::ratio(self.tp, self.tp + self.fp)
    }

    pub fn accuracy(&self) -> Indicator {
        Indicator::ratio(self.tp + self.tn, self.n())
    }
}

/// A rate in `[0, 1]`, or undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Indicator {
    Defined(f64),
    Undefined,
}

impl Indicator {
    pub const UNDEFINED_REASON: &'static str = "undefined (zero denominator)";

    fn ratio(num: usize, den: usize) -> Indicator {
        if den == 0 {
            Indicator::Undefined
        } else {
            Indicator::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Indicator::Defined(v) => Some(v),
            Indicator::Undefined => None,
        }
    }

    /// Percentage to one decimal place, or `undefined`.
    pub fn percent(self) -> String {
        match self {
            Indicator::Defined(v) => format!("{:.1}", v * 100.0),
            Indicator::Undefined => "undefined".to_owned(),
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::Defined(v) => write!(f, "{v}"),
            Indicator::Undefined => f.write_str(Self::UNDEFINED_REASON),
        }
    }
}

impl Serialize for Indicator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Indicator::Defined(v) => s.serialize_f64(*v),
            Indicator::Undefined => s.serialize_str(Self::UNDEFINED_REASON),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub counts: ConfusionCounts,
    pub tpr: Indicator,
    pub fpr: Indicator,
    pub precision: Indicator,
    pub accuracy: Indicator,
    pub recall: Indicator,
    pub f_measure: Indicator,
    pub elapsed_ms: f64,
}

impl MetricsSummary {
    pub fn from_counts(counts: ConfusionCounts, elapsed_ms: f64) -> Self {
        let precision = counts.precision();
        let recall = counts.tpr();
        let f_measure = match (precision, recall) {
            (Indicator::Defined(p), Indicator::Defined(r)) if p + r > 0.0 => {
                Indicator::Defined(2.0 * p * r / (p + r))
            }
            _ => Indicator::Undefined,
        };
        MetricsSummary {
            counts,
            tpr: recall,
            fpr: counts.fpr(),
            precision,
            accuracy: counts.accuracy(),
            recall,
            f_measure,
            elapsed_ms,
        }
    }
}

/// Confusion counts of a report against labels aligned with its verdicts
/// (`truth[i]` labels `report.verdicts[i]`).
pub fn confusion(report: &DetectionReport, truth: &[Label]) -> Result<ConfusionCounts> {
    if truth.len() != report.verdicts.len() {
        return Err(Error::LengthMismatch {
            expected: report.verdicts.len(),
            got: truth.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (v, &label) in report.verdicts.iter().zip(truth) {
        match (v.class.is_outlier(), label.is_outlier()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn evaluate(report: &DetectionReport, truth: &[Label]) -> Result<MetricsSummary> {
    Ok(MetricsSummary::from_counts(
        confusion(report, truth)?,
        report.elapsed_ms,
    ))
}

/// Detectors ranked by F-measure, then precision (both descending,
/// undefined last). Stable for full ties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<(String, MetricsSummary)>,
}

fn desc(a: Indicator, b: Indicator) -> Ordering {
    match (a.value(), b.value()) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

pub fn compare(reports: &[(String, MetricsSummary)]) -> ComparisonTable {
    let mut rows = reports.to_vec();
    rows.sort_by(|(_, a), (_, b)| {
        desc(a.f_measure, b.f_measure).then_with(|| desc(a.precision, b.precision))
    });
    ComparisonTable { rows }
}

impl ComparisonTable {
    pub const HEADERS: [&'static str; 8] = [
        "Algorithm",
        "TPR (%)",
        "FPR (%)",
        "Precision (%)",
        "Accuracy (%)",
        "Recall (%)",
        "F-measure (%)",
        "Execution Time (ms)",
    ];

    /// Plain-text table with percentages to one decimal place.
    pub fn render(&self) -> String {
        let cells: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|(name, m)| {
                [
                    name.clone(),
                    m.tpr.percent(),
                    m.fpr.percent(),
                    m.precision.percent(),
                    m.accuracy.percent(),
                    m.recall.percent(),
                    m.f_measure.percent(),
                    format!("{:.1}", m.elapsed_ms),
                ]
            })
            .collect();
        let mut widths = Self::HEADERS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            for (i, (c, w)) in row.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "  {c:>w$}");
                }
            }
            out.push('\n');
        };
        line(&mut out, &Self::HEADERS);
        for row in &cells {
            line(&mut out, &row.each_ref().map(String::as_str));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::MsdParams;
    use crate::types::{Class, DetectorParams, Stage, Verdict};

    fn report_from(pred: &[bool]) -> DetectionReport {
        let verdicts = pred
            .iter()
            .enumerate()
            .map(|(i, &p)| Verdict {
                index: i,
                class: if p {
                    Class::LocalOutlier
                } else {
                    Class::Normal
                },
                stage: Stage::Single,
                score: 0.0,
            })
            .collect();
        DetectionReport::new(
            "t",
            verdicts,
            DetectorParams::Msd(MsdParams::default()),
            2.5,
        )
    }

    fn labels(v: &[bool]) -> Vec<Label> {
        v.iter()
            .map(|&o| if o { Label::Outlier } else { Label::Normal })
            .collect()
    }

    #[test]
    fn perfect_detector() {
        let t = [true, false, false, true, false];
        let m = evaluate(&report_from(&t), &labels(&t)).unwrap();
        assert_eq!(m.tpr, Indicator::Defined(1.0));
        assert_eq!(m.fpr, Indicator::Defined(0.0));
        assert_eq!(m.precision, Indicator::Defined(1.0));
        assert_eq!(m.accuracy, Indicator::Defined(1.0));
        assert_eq!(m.f_measure, Indicator::Defined(1.0));
        assert_eq!(m.elapsed_ms, 2.5);
    }

    #[test]
    fn flag_everything() {
        let t = [true, false, false, false];
        let m = evaluate(&report_from(&[true; 4]), &labels(&t)).unwrap();
        assert_eq!(m.tpr, Indicator::Defined(1.0));
        assert_eq!(m.precision, Indicator::Defined(0.25));
    }

    #[test]
    fn all_normal_truth_is_undefined() {
        let m = evaluate(&report_from(&[false; 3]), &labels(&[false; 3])).unwrap();
        assert_eq!(m.tpr, Indicator::Undefined);
        assert_eq!(m.precision, Indicator::Undefined);
        assert_eq!(m.f_measure, Indicator::Undefined);
        assert_eq!(m.fpr, Indicator::Defined(0.0));
        assert_eq!(m.tpr.percent(), "undefined");
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            evaluate(&report_from(&[true]), &labels(&[true, false])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    fn summary(f: f64, p: f64) -> MetricsSummary {
        let mut m = MetricsSummary::from_counts(ConfusionCounts::default(), 0.0);
        m.f_measure = Indicator::Defined(f);
        m.precision = Indicator::Defined(p);
        m
    }

    #[test]
    fn ranking() {
        let single = compare(&[("a".into(), summary(0.5, 0.5))]);
        assert_eq!(single.rows.len(), 1);

        let t = compare(&[
            ("LOF".into(), summary(0.413, 0.3)),
            ("MSD-Kmeans".into(), summary(0.986, 0.986)),
        ]);
        assert_eq!(t.rows[0].0, "MSD-Kmeans");

        let t = compare(&[
            ("low".into(), summary(0.8, 0.7)),
            ("high".into(), summary(0.8, 0.9)),
            ("undef".into(), {
                let mut m = summary(0.0, 0.0);
                m.f_measure = Indicator::Undefined;
                m
            }),
        ]);
        let names: Vec<&str> = t.rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(names, ["high", "low", "undef"]);
        let text = t.render();
        assert!(text.starts_with("Algorithm"));
        assert!(text.contains("80.0"));
    }

    #[test]
    fn undefined_serializes_with_reason() {
        let m = MetricsSummary::from_counts(ConfusionCounts::default(), 0.0);
        let json = serde_json::to_string(&m).unwrap();
        assert!(
            json.contains("\"tpr\":\"undefined (zero denominator)\""),
            "{json}"
        );
    }
}
