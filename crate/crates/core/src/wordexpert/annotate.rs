//! Tokenization, lemmas, POS tags and sentence boundaries.
//!
//! [`Annotator`] is the plug point for an external tagger; [`RuleAnnotator`]
//! is the bundled rule-based default (suffix-stripping lemmatizer, closed-class
//! lexicon plus suffix heuristics for POS, sentence split on terminal
//! punctuation followed by an uppercase token).

use std::fmt;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoarsePos {
    Noun,
    Verb,
    Adj,
    Other,
}

impl CoarsePos {
    pub fn as_str(self) -> &'static str {
        match self {
            CoarsePos::Noun => "NOUN",
            CoarsePos::Verb => "VERB",
            CoarsePos::Adj => "ADJ",
            CoarsePos::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NOUN" => Some(CoarsePos::Noun),
            "VERB" => Some(CoarsePos::Verb),
            "ADJ" => Some(CoarsePos::Adj),
            "OTHER" => Some(CoarsePos::Other),
            _ => None,
        }
    }

    /// Single-letter tag used in feature names.
    pub fn letter(self) -> Option<char> {
        match self {
            CoarsePos::Noun => Some('N'),
            CoarsePos::Verb => Some('V'),
            CoarsePos::Adj => Some('A'),
            CoarsePos::Other => None,
        }
    }
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    pub coarse: CoarsePos,
}

impl AnnotatedToken {
    pub fn new(surface: &str, lemma: &str, pos: &str, coarse: CoarsePos) -> Self {
        AnnotatedToken {
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            coarse,
        }
    }

    pub fn is_content(&self) -> bool {
        self.coarse != CoarsePos::Other
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotatedText {
    pub tokens: Vec<AnnotatedToken>,
    /// Byte range of each token in the input text.
    pub offsets: Vec<Range<usize>>,
    /// Token indices at which sentences begin; always starts with 0 when
    /// there are tokens.
    pub sentence_starts: Vec<usize>,
}

pub trait Annotator: Send + Sync {
    fn annotate(&self, text: &str) -> AnnotatedText;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleAnnotator;

impl Annotator for RuleAnnotator {
    fn annotate(&self, text: &str) -> AnnotatedText {
        let offsets = tokenize(text);
        let mut sentence_starts = Vec::new();
        let mut tokens = Vec::with_capacity(offsets.len());
        let mut sentence_initial = true;
        for (i, r) in offsets.iter().enumerate() {
            let surface = &text[r.clone()];
            if sentence_initial {
                sentence_starts.push(i);
            }
            tokens.push(tag(surface, sentence_initial));
            let terminal = matches!(surface, "." | "!" | "?");
            sentence_initial = terminal
                && offsets
                    .get(i + 1)
                    .and_then(|n| text[n.clone()].chars().next())
                    .is_some_and(|c| c.is_uppercase());
        }
        AnnotatedText {
            tokens,
            offsets,
            sentence_starts,
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Word tokens are alphanumeric runs, optionally joined by a single internal
/// apostrophe, hyphen, or (between digits) comma or period. Every other
/// non-space character is its own token.
pub fn tokenize(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !is_word_char(c) {
            out.push(start..start + c.len_utf8());
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if is_word_char(c) {
                j += 1;
                continue;
            }
            let joins = match c {
                '\'' | '’' | '-' => true,
                ',' | '.' => chars[j - 1].1.is_ascii_digit(),
                _ => false,
            };
            let next_ok = chars.get(j + 1).is_some_and(|n| {
                if matches!(c, ',' | '.') {
                    n.1.is_ascii_digit()
                } else {
                    is_word_char(n.1)
                }
            });
            if joins && next_ok {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |x| x.0);
        out.push(start..end);
        i = j;
    }
    out
}

struct Closed {
    word: &'static str,
    lemma: &'static str,
    pos: &'static str,
    coarse: CoarsePos,
}

const fn closed(
    word: &'static str,
    lemma: &'static str,
    pos: &'static str,
    coarse: CoarsePos,
) -> Closed {
    Closed {
        word,
        lemma,
        pos,
        coarse,
    }
}

use CoarsePos::{Adj, Noun, Other, Verb};

const LEXICON: &[Closed] = &[
    closed("is", "be", "VBZ", Verb),
    closed("are", "be", "VBP", Verb),
    closed("am", "be", "VBP", Verb),
    closed("was", "be", "VBD", Verb),
    closed("were", "be", "VBD", Verb),
    closed("be", "be", "VB", Verb),
    closed("been", "be", "VBN", Verb),
    closed("being", "be", "VBG", Verb),
    closed("has", "have", "VBZ", Verb),
    closed("have", "have", "VBP", Verb),
    closed("had", "have", "VBD", Verb),
    closed("does", "do", "VBZ", Verb),
    closed("do", "do", "VBP", Verb),
    closed("did", "do", "VBD", Verb),
    closed("said", "say", "VBD", Verb),
    closed("says", "say", "VBZ", Verb),
    closed("made", "make", "VBD", Verb),
    closed("went", "go", "VBD", Verb),
    closed("took", "take", "VBD", Verb),
    closed("told", "tell", "VBD", Verb),
    closed("won", "win", "VBD", Verb),
    closed("died", "die", "VBD", Verb),
    closed("best", "good", "JJS", Adj),
    closed("better", "good", "JJR", Adj),
    closed("worst", "bad", "JJS", Adj),
    closed("worse", "bad", "JJR", Adj),
    closed("good", "good", "JJ", Adj),
    closed("bad", "bad", "JJ", Adj),
    closed("new", "new", "JJ", Adj),
    closed("old", "old", "JJ", Adj),
    closed("large", "large", "JJ", Adj),
    closed("small", "small", "JJ", Adj),
    closed("people", "people", "NNS", Noun),
    closed("men", "man", "NNS", Noun),
    closed("women", "woman", "NNS", Noun),
    closed("children", "child", "NNS", Noun),
    closed("news", "news", "NN", Noun),
    closed("series", "series", "NN", Noun),
    closed("will", "will", "MD", Other),
    closed("would", "would", "MD", Other),
    closed("can", "can", "MD", Other),
    closed("could", "could", "MD", Other),
    closed("may", "may", "MD", Other),
    closed("might", "might", "MD", Other),
    closed("shall", "shall", "MD", Other),
    closed("should", "should", "MD", Other),
    closed("must", "must", "MD", Other),
    closed("not", "not", "RB", Other),
    closed("never", "never", "RB", Other),
    closed("also", "also", "RB", Other),
    closed("very", "very", "RB", Other),
    closed("there", "there", "EX", Other),
];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "its", "his", "her", "their", "our", "my",
    "your", "some", "any", "no", "every", "each", "all", "both",
];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "over", "under", "after",
    "before", "during", "about", "against", "between", "through", "without", "within", "near",
    "across", "since", "until", "among", "via", "as", "than", "upon", "off", "out", "up", "down",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "if", "while", "because", "although",
];
const PRONOUNS: &[&str] = &[
    "i",
    "you",
    "he",
    "she",
    "it",
    "we",
    "they",
    "me",
    "him",
    "us",
    "them",
    "who",
    "whom",
    "which",
    "what",
    "whose",
    "himself",
    "herself",
    "itself",
    "themselves",
];
const ADJ_SUFFIXES: &[&str] = &[
    "ous", "ful", "ive", "able", "ible", "ical", "less", "ish", "ary", "ic", "al",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Drops one letter of a doubled final consonant ("stopp" -> "stop").
fn undouble(stem: &str) -> String {
    let cs: Vec<char> = stem.chars().collect();
    let n = cs.len();
    if n >= 3
        && cs[n - 1] == cs[n - 2]
        && !is_vowel(cs[n - 1])
        && !matches!(cs[n - 1], 'l' | 's' | 'z')
    {
        cs[..n - 1].iter().collect()
    } else {
        stem.to_string()
    }
}

fn plural_stem(lower: &str) -> Option<String> {
    if lower.len() <= 3 || lower.ends_with("ss") || lower.ends_with("us") || lower.ends_with("is") {
        return None;
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        return Some(format!("{stem}y"));
    }
    for suf in ["ches", "shes", "xes", "sses", "zes"] {
        if lower.ends_with(suf) {
            return Some(lower[..lower.len() - 2].to_string());
        }
    }
    lower.strip_suffix('s').map(str::to_string)
}

fn tag(surface: &str, sentence_initial: bool) -> AnnotatedToken {
    let first = surface.chars().next().unwrap_or(' ');
    if !first.is_alphanumeric() {
        return AnnotatedToken::new(surface, surface, "PUNCT", Other);
    }
    if surface
        .chars()
        .all(|c| c.is_ascii_digit() || c == ',' || c == '.')
    {
        return AnnotatedToken::new(surface, surface, "CD", Other);
    }
    let lower = surface.to_lowercase();
    if let Some(c) = LEXICON.iter().find(|c| c.word == lower) {
        return AnnotatedToken::new(surface, c.lemma, c.pos, c.coarse);
    }
    for (list, pos) in [
        (DETERMINERS, "DT"),
        (PREPOSITIONS, "IN"),
        (CONJUNCTIONS, "CC"),
        (PRONOUNS, "PRP"),
    ] {
        if list.contains(&lower.as_str()) {
            return AnnotatedToken::new(surface, &lower, pos, Other);
        }
    }
    let capitalized = first.is_uppercase();
    let mixed_case = surface.chars().skip(1).any(char::is_uppercase);
    if (capitalized && !sentence_initial) || mixed_case {
        return AnnotatedToken::new(surface, surface, "NP", Noun);
    }
    let n = lower.chars().count();
    if n > 4 {
        if let Some(stem) = lower.strip_suffix("ing") {
            return AnnotatedToken::new(surface, &undouble(stem), "VBG", Verb);
        }
        if let Some(stem) = lower.strip_suffix("ed") {
            return AnnotatedToken::new(surface, &undouble(stem), "VBD", Verb);
        }
    }
    if n > 3 && lower.ends_with("ly") {
        return AnnotatedToken::new(surface, &lower, "RB", Other);
    }
    if n > 4 && ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return AnnotatedToken::new(surface, &lower, "JJ", Adj);
    }
    if let Some(stem) = plural_stem(&lower) {
        return AnnotatedToken::new(surface, &stem, "NNS", Noun);
    }
    if capitalized {
        // sentence-initial capitalized word not in the lexicon
        return AnnotatedToken::new(surface, surface, "NP", Noun);
    }
    AnnotatedToken::new(surface, &lower, "NN", Noun)
}
