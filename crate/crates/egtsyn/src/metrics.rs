//! Binary classification metrics: confusion counts, threshold metrics,
//! ROC-AUC by rank-sum, PR-AUC by average precision, and fold aggregation.
//!
//! Metrics whose denominators vanish are reported as explicitly undefined
//! rather than silently zero, so fold aggregates never average in fake
//! values.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("labels ({labels}) and scores ({scores}) differ in length")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("label at index {index} is {value}, labels must be 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("no samples")]
    Empty,
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: &'static str,
    },
}

/// Counts from thresholding scores against 0/1 labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Tallies predictions against labels; a score at or above the threshold
/// predicts positive.
pub fn confusion_counts(
    labels: &[u8],
    scores: &[f64],
    threshold: f64,
) -> Result<Confusion, MetricsError> {
    validate(labels, scores)?;
    let mut c = Confusion {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&label, &score) in labels.iter().zip(scores) {
        let predicted_pos = score >= threshold;
        match (label, predicted_pos) {
            (1, true) => c.true_pos += 1,
            (1, false) => c.false_neg += 1,
            (0, true) => c.false_pos += 1,
            (0, false) => c.true_neg += 1,
            _ => unreachable!("labels validated"),
        }
    }
    Ok(c)
}

fn validate(labels: &[u8], scores: &[f64]) -> Result<(), MetricsError> {
    if labels.len() != scores.len() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            scores: scores.len(),
        });
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(index) = labels.iter().position(|&l| l > 1) {
        return Err(MetricsError::InvalidLabel {
            index,
            value: labels[index],
        });
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn accuracy(c: Confusion) -> Option<f64> {
    ratio(c.true_pos + c.true_neg, c.total())
}

/// True positive rate, tp / (tp + fn); undefined without positives.
pub fn tpr(c: Confusion) -> Option<f64> {
    ratio(c.true_pos, c.true_pos + c.false_neg)
}

/// True negative rate, tn / (tn + fp); undefined without negatives.
pub fn tnr(c: Confusion) -> Option<f64> {
    ratio(c.true_neg, c.true_neg + c.false_pos)
}

pub fn balanced_accuracy(c: Confusion) -> Option<f64> {
    Some((tpr(c)? + tnr(c)?) / 2.0)
}

/// Precision, tp / (tp + fp); undefined without positive predictions.
pub fn precision(c: Confusion) -> Option<f64> {
    ratio(c.true_pos, c.true_pos + c.false_pos)
}

/// Cohen's kappa: agreement beyond chance, (p_o - p_e) / (1 - p_e) with
/// p_e the expected agreement of independent marginals.
///
/// Evaluated as (n * agree - marginals) / (n^2 - marginals) so the only
/// rounding is the final division: every intermediate is an exact
/// integer-valued f64 for any confusion matrix with counts below 2^26.
pub fn kappa(c: Confusion) -> Option<f64> {
    let n = c.total();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let agree = (c.true_pos + c.true_neg) as f64;
    let marginals = (c.true_pos + c.false_pos) as f64 * (c.true_pos + c.false_neg) as f64
        + (c.false_neg + c.true_neg) as f64 * (c.false_pos + c.true_neg) as f64;
    let denom = nf * nf - marginals;
    if denom == 0.0 {
        return None;
    }
    Some((nf * agree - marginals) / denom)
}

/// ROC-AUC as the Mann-Whitney statistic P(s+ > s-) + P(s+ = s-)/2,
/// computed by rank-sum with midranks for ties.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64, MetricsError> {
    validate(labels, scores)?;
    let n = labels.len();
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::Undefined {
            metric: "roc_auc",
            reason: "both classes must be present",
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Tied entries share the average of their 1-based rank range.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            rank[k] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = labels
        .iter()
        .zip(&rank)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// PR-AUC as average precision over descending score thresholds, with
/// tied scores processed as one block.
pub fn pr_auc(labels: &[u8], scores: &[f64]) -> Result<f64, MetricsError> {
    validate(labels, scores)?;
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 {
        return Err(MetricsError::Undefined {
            metric: "pr_auc",
            reason: "at least one positive required",
        });
    }
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision_here = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision_here;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(area)
}

/// All metrics for one evaluation; `None` marks an undefined metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub threshold: f64,
    pub confusion: Confusion,
    pub acc: Option<f64>,
    pub bacc: Option<f64>,
    pub prec: Option<f64>,
    pub tpr: Option<f64>,
    pub kappa: Option<f64>,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
}

/// Undefined-metric errors become `None` fields; data errors propagate.
fn undefined_to_none(r: Result<f64, MetricsError>) -> Result<Option<f64>, MetricsError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::Undefined { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Computes the full report for one set of scores.
pub fn compute_report(
    labels: &[u8],
    scores: &[f64],
    threshold: f64,
) -> Result<MetricsReport, MetricsError> {
    let confusion = confusion_counts(labels, scores, threshold)?;
    Ok(MetricsReport {
        n: labels.len(),
        threshold,
        confusion,
        acc: accuracy(confusion),
        bacc: balanced_accuracy(confusion),
        prec: precision(confusion),
        tpr: tpr(confusion),
        kappa: kappa(confusion),
        roc_auc: undefined_to_none(roc_auc(labels, scores))?,
        pr_auc: undefined_to_none(pr_auc(labels, scores))?,
    })
}

fn metric_str(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "undefined".to_string(),
    }
}

impl MetricsReport {
    /// Ordered (name, value) pairs of the seven metrics.
    pub fn named_metrics(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("roc_auc", self.roc_auc),
            ("pr_auc", self.pr_auc),
            ("acc", self.acc),
            ("bacc", self.bacc),
            ("prec", self.prec),
            ("tpr", self.tpr),
            ("kappa", self.kappa),
        ]
    }

    /// Structured-text form, one `key value` pair per line.
    pub fn render_text(&self) -> String {
        let c = self.confusion;
        let mut out = String::new();
        out.push_str(&format!("samples {}\n", self.n));
        out.push_str(&format!("threshold {}\n", self.threshold));
        out.push_str(&format!(
            "confusion tp={} fp={} tn={} fn={}\n",
            c.true_pos, c.false_pos, c.true_neg, c.false_neg
        ));
        for (name, value) in self.named_metrics() {
            out.push_str(&format!("{name} {}\n", metric_str(value)));
        }
        out
    }

    /// Flat two-column `metric,value` form for scripting.
    pub fn render_csv(&self) -> String {
        let c = self.confusion;
        let mut out = String::from("metric,value\n");
        out.push_str(&format!("n,{}\n", self.n));
        out.push_str(&format!("threshold,{}\n", self.threshold));
        out.push_str(&format!("tp,{}\n", c.true_pos));
        out.push_str(&format!("fp,{}\n", c.false_pos));
        out.push_str(&format!("tn,{}\n", c.true_neg));
        out.push_str(&format!("fn,{}\n", c.false_neg));
        for (name, value) in self.named_metrics() {
            out.push_str(&format!("{name},{}\n", metric_str(value)));
        }
        out
    }

    /// Parses the structured-text form back into a report.
    pub fn parse_text(text: &str) -> Result<MetricsReport, String> {
        let mut n = None;
        let mut threshold = None;
        let mut confusion = None;
        let mut values: std::collections::HashMap<&str, Option<f64>> =
            std::collections::HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(' ')
                .ok_or_else(|| format!("malformed line: {line}"))?;
            match key {
                "samples" => {
                    n = Some(rest.parse::<usize>().map_err(|e| e.to_string())?);
                }
                "threshold" => {
                    threshold = Some(rest.parse::<f64>().map_err(|e| e.to_string())?);
                }
                "confusion" => {
                    let mut counts = [0usize; 4];
                    for (slot, part) in counts.iter_mut().zip(rest.split_whitespace()) {
                        let (_, v) = part
                            .split_once('=')
                            .ok_or_else(|| format!("malformed confusion: {rest}"))?;
                        *slot = v.parse::<usize>().map_err(|e| e.to_string())?;
                    }
                    confusion = Some(Confusion {
                        true_pos: counts[0],
                        false_pos: counts[1],
                        true_neg: counts[2],
                        false_neg: counts[3],
                    });
                }
                name => {
                    let value = if rest == "undefined" {
                        None
                    } else {
                        Some(rest.parse::<f64>().map_err(|e| e.to_string())?)
                    };
                    values.insert(
                        match name {
                            "roc_auc" => "roc_auc",
                            "pr_auc" => "pr_auc",
                            "acc" => "acc",
                            "bacc" => "bacc",
                            "prec" => "prec",
                            "tpr" => "tpr",
                            "kappa" => "kappa",
                            other => return Err(format!("unknown metric: {other}")),
                        },
                        value,
                    );
                }
            }
        }
        let flat = |k: &str| values.get(k).copied().flatten();
        Ok(MetricsReport {
            n: n.ok_or("missing samples line")?,
            threshold: threshold.ok_or("missing threshold line")?,
            confusion: confusion.ok_or("missing confusion line")?,
            acc: flat("acc"),
            bacc: flat("bacc"),
            prec: flat("prec"),
            tpr: flat("tpr"),
            kappa: flat("kappa"),
            roc_auc: flat("roc_auc"),
            pr_auc: flat("pr_auc"),
        })
    }
}

/// Mean and sample standard deviation of the defined values across folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldStat {
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); `None` below two folds.
    pub sd: Option<f64>,
    pub folds_used: usize,
}

/// Aggregates one metric across folds, skipping undefined folds entirely.
/// Returns `None` when no fold defined the metric.
pub fn fold_stat(values: &[Option<f64>]) -> Option<FoldStat> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return None;
    }
    let n = defined.len() as f64;
    let mean = defined.iter().sum::<f64>() / n;
    let sd = (defined.len() >= 2).then(|| {
        let var = defined.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    });
    Some(FoldStat {
        mean,
        sd,
        folds_used: defined.len(),
    })
}
