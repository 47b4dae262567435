//! Binary context features for a mention.
//!
//! The anchor occupies a single opaque slot in every n-gram: its surface
//! tokens joined with `_` for the word and lemma templates, and the fine POS
//! tag of its last token for the POS templates.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::wordexpert::annotate::AnnotatedToken;
use crate::wordexpert::corpus::TrainingSpan;

pub const WINDOW: usize = 4;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector(BTreeSet<String>);

impl FeatureVector {
    pub fn insert(&mut self, name: String) {
        self.0.insert(name);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Names starting with `prefix`, e.g. `"win4="`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> {
        self.iter().filter(move |n| n.starts_with(prefix))
    }
}

impl FromIterator<String> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        FeatureVector(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Word,
    Lemma,
    Pos,
}

impl Slot {
    const ALL: [(Slot, &'static str); 3] = [
        (Slot::Lemma, "lemma"),
        (Slot::Pos, "pos"),
        (Slot::Word, "word"),
    ];

    fn of(self, t: &AnnotatedToken) -> &str {
        match self {
            Slot::Word => &t.surface,
            Slot::Lemma => &t.lemma,
            Slot::Pos => &t.pos,
        }
    }
}

pub fn anchor_unit(tokens: &[AnnotatedToken]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join("_")
}

pub fn featurize(tokens: &[AnnotatedToken], anchor: Range<usize>) -> FeatureVector {
    let mut fv = FeatureVector::default();
    let n = tokens.len();
    let (a, b) = (anchor.start, anchor.end);
    if a >= b || b > n {
        return fv;
    }
    let unit = anchor_unit(&tokens[a..b]);
    let anchor_pos = tokens[b - 1].pos.as_str();
    fv.insert(format!("anchor={unit}"));

    let outside = || tokens[..a].iter().chain(&tokens[b..]);
    for t in outside().filter(|t| t.pos != "PUNCT") {
        fv.insert(format!("bow={}", t.lemma));
    }
    let window = tokens[a.saturating_sub(WINDOW)..a]
        .iter()
        .chain(&tokens[b..(b + WINDOW).min(n)]);
    for t in window.filter(|t| t.is_content()) {
        fv.insert(format!("win4={}", t.lemma));
    }

    for (dir, found) in [
        ("prev", nearest(tokens[..a].iter().rev())),
        ("next", nearest(tokens[b..].iter())),
    ] {
        for (letter, t) in found {
            fv.insert(format!("{dir}{letter}_lemma={}", t.lemma));
            fv.insert(format!("{dir}{letter}_word={}", t.surface));
        }
    }

    for (slot, name) in Slot::ALL {
        let anchor_slot = match slot {
            Slot::Pos => anchor_pos,
            _ => unit.as_str(),
        };
        let at = |i: usize| slot.of(&tokens[i]);
        if a >= 1 {
            fv.insert(format!("bi_{name}_before={} {anchor_slot}", at(a - 1)));
        }
        if b < n {
            fv.insert(format!("bi_{name}_after={anchor_slot} {}", at(b)));
        }
        if a >= 2 {
            fv.insert(format!(
                "tri_{name}_before={} {} {anchor_slot}",
                at(a - 2),
                at(a - 1)
            ));
        }
        if a >= 1 && b < n {
            fv.insert(format!(
                "tri_{name}_around={} {anchor_slot} {}",
                at(a - 1),
                at(b)
            ));
        }
        if b + 1 < n {
            fv.insert(format!(
                "tri_{name}_after={anchor_slot} {} {}",
                at(b),
                at(b + 1)
            ));
        }
    }
    fv
}

/// First noun, verb and adjective met walking `tokens`.
fn nearest<'t>(
    tokens: impl Iterator<Item = &'t AnnotatedToken>,
) -> Vec<(char, &'t AnnotatedToken)> {
    let mut found: Vec<(char, &AnnotatedToken)> = Vec::with_capacity(3);
    for t in tokens {
        if let Some(l) = t.coarse.letter() {
            if !found.iter().any(|(x, _)| *x == l) {
                found.push((l, t));
                if found.len() == 3 {
                    break;
                }
            }
        }
    }
    found.sort_by_key(|(l, _)| *l);
    found
}

/// True for templates that embed the anchor's text (POS n-grams only carry
/// its tag).
pub fn mentions_anchor(name: &str) -> bool {
    name.starts_with("anchor=")
        || ((name.starts_with("bi_") || name.starts_with("tri_")) && !name.contains("_pos_"))
}

impl TrainingSpan {
    pub fn features(&self) -> FeatureVector {
        featurize(&self.tokens, self.anchor.clone())
    }
}
