//! Supervised per-string disambiguation.
//!
//! For each dictionary string, contexts of links to its candidate entities
//! become training spans; a maximum-entropy classifier over context features
//! then picks the entity for new mentions, falling back to the dictionary's
//! top candidate when no classifier could be trained.

pub mod annotate;
pub mod corpus;
pub mod features;
pub mod maxent;
pub mod model;

use std::collections::HashMap;
use std::ops::Range;

pub use annotate::{AnnotatedText, AnnotatedToken, Annotator, CoarsePos, RuleAnnotator};
pub use corpus::{
    extract_spans, parse_spans, write_spans, Corpus, Document, MatchMode, SpanMode, TrainingSpan,
};
pub use features::{featurize, FeatureVector};
pub use model::{parse_models, predict, train, write_models, TrainConfig, WordExpertModel};

use crate::error::Result;
use crate::expand::{expand_mention, occurrences, occurrences_ignore_case, Evidence};
use crate::lookup::{top1, CandidateGenerator, CandidateList};
use crate::par::{self, Execution};

/// Features of the mention at byte range `bytes` of `doc`.
pub fn mention_features(
    doc: &Document,
    bytes: &Range<usize>,
    mode: SpanMode,
) -> Option<FeatureVector> {
    let anchor = doc.tokens_covering(bytes);
    if anchor.is_empty() {
        return None;
    }
    let w = doc.window(&anchor, mode);
    Some(featurize(
        &doc.tokens[w.clone()],
        anchor.start - w.start..anchor.end - w.start,
    ))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractConfig {
    pub span_mode: SpanMode,
    pub match_mode: MatchMode,
}

/// Extracts spans for `s` and trains its classifier.
pub fn train_string(
    corpus: &Corpus,
    s: &str,
    candidates: &CandidateList,
    extract: ExtractConfig,
    cfg: &TrainConfig,
) -> Result<WordExpertModel> {
    let spans = extract_spans(corpus, s, candidates, extract.span_mode, extract.match_mode)?;
    let classes: Vec<String> = candidates.entities().map(str::to_string).collect();
    train(s, &spans, &classes, cfg)
}

/// Trains every string independently; results come back in input order.
pub fn train_all<F>(
    corpus: &Corpus,
    strings: &[String],
    candidates: F,
    extract: ExtractConfig,
    cfg: &TrainConfig,
    exec: Execution,
) -> Vec<Result<WordExpertModel>>
where
    F: Fn(&str) -> CandidateList + Sync + Send,
{
    par::map(exec, strings, |s| {
        train_string(corpus, s, &candidates(s), extract, cfg)
    })
}

/// Trained classifiers keyed by target string.
#[derive(Debug, Clone, Default)]
pub struct ModelSet(HashMap<String, WordExpertModel>);

impl ModelSet {
    pub fn get(&self, s: &str) -> Option<&WordExpertModel> {
        self.0.get(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, m: WordExpertModel) {
        self.0.insert(m.target_string.clone(), m);
    }

    /// Models sorted by target string.
    pub fn sorted(&self) -> Vec<&WordExpertModel> {
        let mut v: Vec<&WordExpertModel> = self.0.values().collect();
        v.sort_by(|a, b| a.target_string.cmp(&b.target_string));
        v
    }
}

impl FromIterator<WordExpertModel> for ModelSet {
    fn from_iter<I: IntoIterator<Item = WordExpertModel>>(iter: I) -> Self {
        let mut set = ModelSet::default();
        for m in iter {
            set.insert(m);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolveConfig {
    pub span_mode: SpanMode,
    pub use_classifier: bool,
    pub expand: bool,
}

impl Default for ResolveConfig {
    fn default() -> Self {
        ResolveConfig {
            span_mode: SpanMode::T100,
            use_classifier: true,
            expand: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub entity: Option<String>,
    pub score: f64,
    /// Entities best first: classifier order when a model answered,
    /// dictionary order otherwise.
    pub ranked: Vec<String>,
    pub expanded: Option<String>,
    pub by_classifier: bool,
}

/// Optional document hooks for mention expansion.
#[derive(Clone, Copy, Default)]
pub struct ExpansionHooks<'a> {
    pub ner: Option<&'a dyn crate::expand::NerTagger>,
    pub coref: Option<&'a dyn crate::expand::CorefResolver>,
}

/// Resolves `mention` in `doc_text`: optional expansion, candidate
/// generation, then the string's classifier or the dictionary top choice.
/// A successful expansion decides by itself, taking the top of the narrowed
/// list.
pub fn resolve_mention(
    doc_text: &str,
    mention: &str,
    generator: &CandidateGenerator<'_>,
    models: &ModelSet,
    annotator: &dyn Annotator,
    cfg: &ResolveConfig,
    hooks: ExpansionHooks<'_>,
) -> Result<Resolution> {
    let from_list = |cl: &CandidateList, expanded: Option<String>| Resolution {
        entity: top1(cl).map(str::to_string),
        score: cl.candidates.first().map_or(0.0, |c| c.score().value()),
        ranked: cl.entities().map(str::to_string).collect(),
        expanded,
        by_classifier: false,
    };
    let candidates = if cfg.expand {
        let r = expand_mention(doc_text, mention, generator, hooks.ner, hooks.coref)?;
        if r.evidence != Evidence::None {
            return Ok(from_list(&r.final_candidates, Some(r.expanded)));
        }
        r.final_candidates
    } else {
        generator.generate(mention)
    };
    let model = cfg.use_classifier.then(|| models.get(mention)).flatten();
    let occurrence = occurrences(doc_text, mention)
        .into_iter()
        .next()
        .or_else(|| {
            occurrences_ignore_case(doc_text, mention)
                .into_iter()
                .next()
        });
    let (Some(model), Some(bytes)) = (model, occurrence) else {
        return Ok(from_list(&candidates, None));
    };
    let doc = Document::from_text("", doc_text, annotator);
    let Some(fv) = mention_features(&doc, &bytes, cfg.span_mode) else {
        return Ok(from_list(&candidates, None));
    };
    let p = model.probabilities(&fv);
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    Ok(Resolution {
        entity: Some(model.classes[order[0]].clone()),
        score: p[order[0]],
        ranked: order.iter().map(|&i| model.classes[i].clone()).collect(),
        expanded: None,
        by_classifier: true,
    })
}
