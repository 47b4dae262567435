//! Per-string classifiers: training, prediction with back-off, model files.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lookup::{top1, CandidateList};
use crate::wordexpert::corpus::TrainingSpan;
use crate::wordexpert::features::FeatureVector;
use crate::wordexpert::maxent::{self, Dataset, LbfgsOptions};

const MODEL_FILE: &str = "model";

/// Always-on feature carrying the class prior.
pub const BIAS: &str = "bias";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2_strength: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_strength: 1.0,
            max_iterations: 200,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordExpertModel {
    pub target_string: String,
    pub classes: Vec<String>,
    pub l2_strength: f64,
    pub train_spans_per_class: Vec<usize>,
    features: Vec<String>,
    index: HashMap<String, u32>,
    weights: Vec<f64>,
}

impl WordExpertModel {
    fn from_parts(
        target_string: String,
        classes: Vec<String>,
        l2_strength: f64,
        train_spans_per_class: Vec<usize>,
        features: Vec<String>,
        weights: Vec<f64>,
    ) -> Self {
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        WordExpertModel {
            target_string,
            classes,
            l2_strength,
            train_spans_per_class,
            features,
            index,
            weights,
        }
    }

    /// Interned feature names, sorted.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn weight(&self, class: usize, feature: &str) -> Option<f64> {
        let f = *self.index.get(feature)? as usize;
        Some(self.weights[class * self.features.len() + f])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Active known feature indices, bias included; unseen names are dropped.
    pub fn encode(&self, fv: &FeatureVector) -> Vec<u32> {
        let mut row: Vec<u32> = fv
            .iter()
            .chain(std::iter::once(BIAS))
            .filter_map(|n| self.index.get(n).copied())
            .collect();
        row.sort_unstable();
        row.dedup();
        row
    }

    pub fn probabilities(&self, fv: &FeatureVector) -> Vec<f64> {
        maxent::probabilities(
            &self.weights,
            self.features.len(),
            self.classes.len(),
            &self.encode(fv),
        )
    }

    /// Most probable class and its probability; ties go to the earlier class.
    pub fn classify(&self, fv: &FeatureVector) -> (&str, f64) {
        let p = self.probabilities(fv);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        (&self.classes[best], p[best])
    }
}

/// Trains a classifier over `classes` from spans whose target is one of them.
/// Classes without spans are dropped; fewer than two remaining is an error.
pub fn train(
    target_string: &str,
    spans: &[TrainingSpan],
    classes: &[String],
    cfg: &TrainConfig,
) -> Result<WordExpertModel> {
    let mut counts: Vec<usize> = classes
        .iter()
        .map(|c| spans.iter().filter(|s| &s.target == c).count())
        .collect();
    let kept: Vec<usize> = (0..classes.len()).filter(|&i| counts[i] > 0).collect();
    if kept.len() < 2 {
        return Err(Error::DegenerateTraining {
            target: target_string.to_string(),
            populated: kept.len(),
        });
    }
    let kept_classes: Vec<String> = kept.iter().map(|&i| classes[i].clone()).collect();
    counts = kept.iter().map(|&i| counts[i]).collect();
    let label_of: HashMap<&str, usize> = kept_classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let examples: Vec<(FeatureVector, usize)> = spans
        .iter()
        .filter_map(|s| label_of.get(s.target.as_str()).map(|&y| (s.features(), y)))
        .collect();
    let names: BTreeSet<&str> = examples
        .iter()
        .flat_map(|(fv, _)| fv.iter())
        .chain(std::iter::once(BIAS))
        .collect();
    let features: Vec<String> = names.into_iter().map(str::to_string).collect();
    let mut model = WordExpertModel::from_parts(
        target_string.to_string(),
        kept_classes,
        cfg.l2_strength,
        counts,
        features,
        Vec::new(),
    );
    let data = Dataset {
        rows: examples.iter().map(|(fv, _)| model.encode(fv)).collect(),
        labels: examples.iter().map(|(_, y)| *y).collect(),
        n_features: model.features.len(),
        n_classes: model.classes.len(),
    };
    let opts = LbfgsOptions {
        max_iterations: cfg.max_iterations,
        tolerance: cfg.tolerance,
        ..LbfgsOptions::default()
    };
    model.weights = maxent::fit(&data, cfg.l2_strength, &opts).x;
    Ok(model)
}

/// Classifier answer when a model exists, otherwise the back-off top1.
pub fn predict(
    model: Option<&WordExpertModel>,
    fv: &FeatureVector,
    backoff: &CandidateList,
) -> Result<(String, f64)> {
    if let Some(m) = model {
        let (c, p) = m.classify(fv);
        return Ok((c.to_string(), p));
    }
    let best = top1(backoff).ok_or_else(|| Error::NoAnswer(backoff.query.clone()))?;
    let score = backoff.candidates[0].score().value();
    Ok((best.to_string(), score))
}

/// Nine significant digits, plain decimal notation, trailing zeros trimmed.
pub fn format_weight(w: f64) -> String {
    if w == 0.0 || !w.is_finite() {
        return if w.is_finite() {
            "0".into()
        } else {
            w.to_string()
        };
    }
    let sci = format!("{w:.8e}");
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    let mut s = format!("{w:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn write_models<'a>(models: impl IntoIterator<Item = &'a WordExpertModel>) -> String {
    let mut out = String::new();
    for m in models {
        let _ = writeln!(out, "# target={}", m.target_string);
        let _ = writeln!(out, "# classes={}", m.classes.join("\t"));
        let _ = writeln!(out, "# l2={}", format_weight(m.l2_strength));
        let _ = writeln!(out, "# features={}", m.features.len());
        let spans: Vec<String> = m
            .train_spans_per_class
            .iter()
            .map(usize::to_string)
            .collect();
        let _ = writeln!(out, "# spans={}", spans.join("\t"));
        let mut order: Vec<usize> = (0..m.classes.len()).collect();
        order.sort_by(|&a, &b| m.classes[a].cmp(&m.classes[b]));
        let nf = m.features.len();
        for c in order {
            for (f, name) in m.features.iter().enumerate() {
                let w = format_weight(m.weights[c * nf + f]);
                let _ = writeln!(out, "{}\t{}\t{}", m.classes[c], name, w);
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Default)]
struct Pending {
    target: Option<String>,
    classes: Vec<String>,
    l2: Option<f64>,
    n_features: Option<usize>,
    spans: Vec<usize>,
    rows: Vec<(usize, String, f64)>,
    line: usize,
}

impl Pending {
    fn finish(self) -> Result<Option<WordExpertModel>> {
        let Some(target) = self.target else {
            return Ok(None);
        };
        let bad = |why: &str| Error::malformed(MODEL_FILE, self.line, why);
        let l2 = self.l2.ok_or_else(|| bad("missing l2 header"))?;
        let n_features = self
            .n_features
            .ok_or_else(|| bad("missing features header"))?;
        if self.classes.len() < 2 {
            return Err(bad("a model needs at least two classes"));
        }
        let names: BTreeSet<&str> = self.rows.iter().map(|(_, f, _)| f.as_str()).collect();
        if names.len() != n_features {
            return Err(bad(&format!(
                "header declares {n_features} features, rows have {}",
                names.len()
            )));
        }
        let features: Vec<String> = names.into_iter().map(str::to_string).collect();
        let mut spans = self.spans;
        spans.resize(self.classes.len(), 0);
        let mut m =
            WordExpertModel::from_parts(target, self.classes, l2, spans, features, Vec::new());
        m.weights = vec![0.0; m.classes.len() * n_features];
        for (c, f, w) in &self.rows {
            let fi = m.index[f.as_str()] as usize;
            m.weights[c * n_features + fi] = *w;
        }
        Ok(Some(m))
    }
}

pub fn parse_models(text: &str) -> Result<Vec<WordExpertModel>> {
    let mut out = Vec::new();
    let mut cur = Pending::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let bad = |why: &str| Error::malformed(MODEL_FILE, n, why);
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("# ") {
            let (key, value) = header
                .split_once('=')
                .ok_or_else(|| bad("header must be key=value"))?;
            match key {
                "target" => {
                    out.extend(std::mem::take(&mut cur).finish()?);
                    cur.target = Some(value.to_string());
                    cur.line = n;
                }
                _ if cur.target.is_none() => return Err(bad("header before '# target='")),
                "classes" => cur.classes = value.split('\t').map(str::to_string).collect(),
                "l2" => cur.l2 = Some(value.parse().map_err(|_| bad("bad l2"))?),
                "features" => {
                    cur.n_features = Some(value.parse().map_err(|_| bad("bad feature count"))?)
                }
                "spans" => {
                    cur.spans = value
                        .split('\t')
                        .filter(|v| !v.is_empty())
                        .map(|v| v.parse().map_err(|_| bad("bad span count")))
                        .collect::<Result<_>>()?
                }
                _ => return Err(bad(&format!("unknown header {key:?}"))),
            }
            continue;
        }
        if cur.target.is_none() {
            return Err(bad("weight row before '# target='"));
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(bad("expected class, feature and weight"));
        }
        let c = cur
            .classes
            .iter()
            .position(|c| c == f[0])
            .ok_or_else(|| bad(&format!("unknown class {:?}", f[0])))?;
        let w: f64 = f[2].parse().map_err(|_| bad("bad weight"))?;
        cur.rows.push((c, f[1].to_string(), w));
    }
    out.extend(cur.finish()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictbuild::DictionaryBuilder;
    use crate::lookup::lookup_exct;
    use crate::wordexpert::annotate::{Annotator, RuleAnnotator};

    fn span(text: &str, anchor: &str, target: &str) -> TrainingSpan {
        let a = RuleAnnotator.annotate(text);
        let i = a.tokens.iter().position(|t| t.surface == anchor).unwrap();
        TrainingSpan {
            tokens: a.tokens,
            anchor: i..i + 1,
            anchor_text: anchor.to_string(),
            target: target.to_string(),
            source_doc: "d".into(),
        }
    }

    fn abbott_spans() -> Vec<TrainingSpan> {
        vec![
            span(
                "Comedian Abbott starred in films with Costello",
                "Abbott",
                "Bud_Abbott",
            ),
            span(
                "the comedian Abbott partnered with Lou Costello on radio",
                "Abbott",
                "Bud_Abbott",
            ),
            span(
                "shares of Abbott rose after the drug approval",
                "Abbott",
                "Abbott_Laboratories",
            ),
            span(
                "the pharmaceutical company Abbott sells drug products",
                "Abbott",
                "Abbott_Laboratories",
            ),
            span(
                "Abbott reported quarterly drug sales",
                "Abbott",
                "Abbott_Laboratories",
            ),
        ]
    }

    fn classes() -> Vec<String> {
        vec![
            "Abbott_Laboratories".into(),
            "Bud_Abbott".into(),
            "Abbott_Nutrition".into(),
        ]
    }

    #[test]
    fn trains_and_classifies() {
        let m = train(
            "Abbott",
            &abbott_spans(),
            &classes(),
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(m.classes, vec!["Abbott_Laboratories", "Bud_Abbott"]);
        assert_eq!(m.train_spans_per_class, vec![3, 2]);
        let q = span(
            "The voice was provided by a comedian , who became Abbott 's partner after Costello",
            "Abbott",
            "?",
        );
        let (c, p) = m.classify(&q.features());
        assert_eq!(c, "Bud_Abbott");
        assert!(p > 0.5);
        let total: f64 = m.probabilities(&q.features()).iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_training() {
        let spans: Vec<TrainingSpan> = abbott_spans()
            .into_iter()
            .filter(|s| s.target == "Bud_Abbott")
            .collect();
        let err = train("Abbott", &spans, &classes(), &TrainConfig::default());
        assert!(matches!(
            err,
            Err(Error::DegenerateTraining { populated: 1, .. })
        ));
    }

    #[test]
    fn predict_backs_off() {
        let mut b = DictionaryBuilder::default();
        b.add_wiki_anchor("Hank Williams", "Hank_Williams", 9);
        b.add_wiki_anchor("Hank Williams", "Hank_Williams_III", 1);
        let d = b.build();
        let fv = FeatureVector::default();
        let (e, s) = predict(None, &fv, &lookup_exct(&d, "Hank Williams")).unwrap();
        assert_eq!(e, "Hank_Williams");
        assert!((s - 0.9).abs() < 1e-12);
        let none = predict(None, &fv, &CandidateList::empty("x"));
        assert!(matches!(none, Err(Error::NoAnswer(_))));
    }

    #[test]
    fn training_is_reproducible() {
        let a = train(
            "Abbott",
            &abbott_spans(),
            &classes(),
            &TrainConfig::default(),
        )
        .unwrap();
        let b = train(
            "Abbott",
            &abbott_spans(),
            &classes(),
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weight_formatting() {
        assert_eq!(format_weight(0.0), "0");
        assert_eq!(format_weight(1.0), "1");
        assert_eq!(format_weight(-0.123456789123), "-0.123456789");
        assert_eq!(format_weight(12345.6789012345), "12345.6789");
        assert_eq!(format_weight(0.000012345678912), "0.0000123456789");
        assert_eq!(format_weight(9.9999999999), "10");
        assert_eq!(format_weight(-1e-7), "-0.0000001");
    }

    #[test]
    fn model_file_round_trip() {
        let m = train(
            "Abbott",
            &abbott_spans(),
            &classes(),
            &TrainConfig::default(),
        )
        .unwrap();
        let text = write_models([&m]);
        assert!(text
            .starts_with("# target=Abbott\n# classes=Abbott_Laboratories\tBud_Abbott\n# l2=1\n"));
        let back = parse_models(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].classes, m.classes);
        assert_eq!(back[0].features(), m.features());
        assert_eq!(write_models(&back), text);
        let q = abbott_spans()[0].features();
        let (p0, p1) = (m.probabilities(&q), back[0].probabilities(&q));
        assert!(p0.iter().zip(&p1).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn model_file_errors() {
        assert!(parse_models("X\tf\t1\n").is_err());
        assert!(
            parse_models("# target=a\n# classes=A\tB\n# l2=1\n# features=2\nA\tbias\t1\n").is_err()
        );
        assert!(
            parse_models("# target=a\n# classes=A\tB\n# l2=1\n# features=1\nC\tbias\t1\n").is_err()
        );
        assert!(parse_models("").unwrap().is_empty());
    }
}
