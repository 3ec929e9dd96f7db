use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_capability, mean, OptimizerError, Scorer};
use crate::adapter::{Adapter, ModelSpec};
use crate::metrics::{applicable_metrics, MetricConfig};
use crate::pipeline::case_metrics;
use crate::suite::{render_prompt, PromptTemplate, Suite};

/// Mean of one column for one model. `mean` is `None` when no case could be
/// scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: Option<f64>,
    pub n: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model_id: String,
    pub cells: BTreeMap<String, Cell>,
    /// Per-case score under the chosen scorer (higher is better).
    pub case_scores: BTreeMap<String, Option<f64>>,
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseWins {
    pub a: String,
    pub b: String,
    pub a_wins: Vec<String>,
    pub b_wins: Vec<String>,
    pub ties: usize,
    /// Cases missing a score for either model.
    pub unscored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    pub scorer: Scorer,
    pub columns: Vec<String>,
    pub rows: Vec<ModelRow>,
    pub pairwise: Vec<PairwiseWins>,
}

const NLL_COLUMN: &str = "nll";

/// Runs the same suite and template (zero-shot) against every model.
/// Failures are recorded in the failing model's row only.
pub fn compatibility_matrix(
    models: &[(ModelSpec, &dyn Adapter)],
    suite: &Suite,
    template: &PromptTemplate,
    scorer: Scorer,
    config: &MetricConfig,
) -> Result<CompatibilityMatrix, OptimizerError> {
    if models.len() < 2 {
        return Err(OptimizerError::TooFewModels);
    }
    if suite.is_empty() {
        return Err(OptimizerError::EmptySuite);
    }
    let cases = suite.sorted_cases();
    let mut columns: Vec<String> = Vec::new();
    for c in &cases {
        for m in applicable_metrics(c.task) {
            if !columns.iter().any(|x| x == m.as_str()) {
                columns.push(m.as_str().into());
            }
        }
    }
    columns.sort();
    if scorer == Scorer::Nll {
        columns.push(NLL_COLUMN.into());
    }

    let mut rows = Vec::new();
    for (spec, adapter) in models {
        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut failed: BTreeMap<String, usize> = BTreeMap::new();
        let mut case_scores = BTreeMap::new();
        let mut errors = BTreeMap::new();
        let capability = check_capability(*adapter, scorer);
        for case in &cases {
            let outcome = (|| -> Result<Option<f64>, OptimizerError> {
                capability.clone()?;
                let prompt = render_prompt(template, case, &[])?;
                let completion = adapter.complete(spec, &prompt)?;
                let (metrics, _) = case_metrics(case, &completion.text, config);
                for (id, v) in &metrics {
                    values.entry(id.as_str().into()).or_default().push(v.value);
                }
                match scorer {
                    Scorer::Metric(id) => Ok(metrics.get(&id).map(|v| v.value)),
                    Scorer::Nll => {
                        let nll = adapter.score_reference_nll(spec, &prompt, &super::nll_reference(case))?;
                        values.entry(NLL_COLUMN.into()).or_default().push(nll);
                        Ok(Some(-nll))
                    }
                }
            })();
            match outcome {
                Ok(score) => {
                    case_scores.insert(case.id.clone(), score);
                }
                Err(e) => {
                    for m in applicable_metrics(case.task) {
                        *failed.entry(m.as_str().into()).or_default() += 1;
                    }
                    if scorer == Scorer::Nll {
                        *failed.entry(NLL_COLUMN.into()).or_default() += 1;
                    }
                    case_scores.insert(case.id.clone(), None);
                    errors.insert(case.id.clone(), e.to_string());
                }
            }
        }
        let cells = columns
            .iter()
            .map(|col| {
                let v = values.get(col).map(Vec::as_slice).unwrap_or(&[]);
                let cell = Cell {
                    mean: (!v.is_empty()).then(|| mean(v)),
                    n: v.len(),
                    errors: failed.get(col).copied().unwrap_or(0),
                };
                (col.clone(), cell)
            })
            .collect();
        rows.push(ModelRow { model_id: spec.id.clone(), cells, case_scores, errors });
    }

    let mut pairwise = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            let mut w = PairwiseWins {
                a: a.model_id.clone(),
                b: b.model_id.clone(),
                a_wins: Vec::new(),
                b_wins: Vec::new(),
                ties: 0,
                unscored: 0,
            };
            for case in &cases {
                match (a.case_scores.get(&case.id).copied().flatten(), b.case_scores.get(&case.id).copied().flatten()) {
                    (Some(x), Some(y)) if x > y => w.a_wins.push(case.id.clone()),
                    (Some(x), Some(y)) if y > x => w.b_wins.push(case.id.clone()),
                    (Some(_), Some(_)) => w.ties += 1,
                    _ => w.unscored += 1,
                }
            }
            pairwise.push(w);
        }
    }
    Ok(CompatibilityMatrix { scorer, columns, rows, pairwise })
}
