//! Annotated documents, the linked training corpus, and training spans.
//!
//! Corpus text format:
//!
//! ```text
//! # doc=SuperFerry
//! On February 27, 2004, SuperFerry 14 was bombed by the [[Abu_Sayyaf|Abu Sayyaf]]
//! terrorists killing 116 people.
//!
//! * list items, table rows ({| | !) and other # lines are not paragraph text
//! ```
//!
//! Consecutive text lines form one paragraph; a blank or skipped line ends it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use crate::canonical::{canonicalize_title, CanonicalMap};
use crate::error::{Error, Result};
use crate::lookup::{lnrm, CandidateList};
use crate::par::{self, Execution};
use crate::wordexpert::annotate::{AnnotatedToken, Annotator, CoarsePos};

const CORPUS_FILE: &str = "corpus";
const SPANS_FILE: &str = "spans";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpanMode {
    /// Up to 100 tokens on each side of the anchor, within the document.
    #[default]
    T100,
    Sent,
    Para,
}

impl SpanMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T100" => Some(SpanMode::T100),
            "SENT" => Some(SpanMode::Sent),
            "PARA" => Some(SpanMode::Para),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Keep spans whose anchor text contains the target string after
    /// normalization.
    #[default]
    Lex,
    /// Keep every span linking to a candidate, whatever its anchor text.
    Sense,
}

impl MatchMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LEX" => Some(MatchMode::Lex),
            "SENSE" => Some(MatchMode::Sense),
            _ => None,
        }
    }
}

pub const T100_RADIUS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    /// Token interval covered by the anchor.
    pub tokens: Range<usize>,
    pub anchor_text: String,
    pub target: String,
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
    /// Byte range of each token in `text`.
    pub offsets: Vec<Range<usize>>,
    pub paragraph_starts: Vec<usize>,
    pub sentence_starts: Vec<usize>,
    pub links: Vec<Link>,
}

/// Byte ranges of the paragraphs of `text`: maximal runs of non-blank lines.
pub fn paragraph_ranges(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut current: Option<Range<usize>> = None;
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let start = pos;
        pos += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            out.extend(current.take());
        } else {
            let end = start + body.len();
            current = Some(current.map_or(start..end, |c| c.start..end));
        }
    }
    out.extend(current);
    out
}

impl Document {
    /// Annotates `text`, treating blank-line separated blocks as paragraphs.
    pub fn from_text(id: &str, text: &str, annotator: &dyn Annotator) -> Self {
        let ranges = paragraph_ranges(text);
        Self::annotate(id, text.to_string(), &ranges, annotator)
    }

    fn annotate(
        id: &str,
        text: String,
        paragraphs: &[Range<usize>],
        annotator: &dyn Annotator,
    ) -> Self {
        let mut doc = Document {
            id: id.to_string(),
            ..Default::default()
        };
        for r in paragraphs {
            let a = annotator.annotate(&text[r.clone()]);
            let base = doc.tokens.len();
            if a.tokens.is_empty() {
                continue;
            }
            doc.paragraph_starts.push(base);
            let mut starts = a.sentence_starts.iter().map(|s| s + base).peekable();
            if starts.peek() != Some(&base) {
                doc.sentence_starts.push(base);
            }
            doc.sentence_starts.extend(starts);
            doc.offsets
                .extend(a.offsets.iter().map(|o| o.start + r.start..o.end + r.start));
            doc.tokens.extend(a.tokens);
        }
        doc.text = text;
        doc
    }

    /// Tokens overlapping the byte range `bytes`.
    pub fn tokens_covering(&self, bytes: &Range<usize>) -> Range<usize> {
        let start = self.offsets.partition_point(|o| o.end <= bytes.start);
        let end = self.offsets.partition_point(|o| o.start < bytes.end);
        start..end.max(start)
    }

    fn enclosing(starts: &[usize], anchor: &Range<usize>, len: usize) -> Range<usize> {
        let i = starts.partition_point(|&s| s <= anchor.start);
        let lo = if i == 0 { 0 } else { starts[i - 1] };
        let j = starts.partition_point(|&s| s < anchor.end.max(anchor.start + 1));
        let hi = starts.get(j).copied().unwrap_or(len);
        lo..hi
    }

    /// Token interval of the context window around `anchor`.
    pub fn window(&self, anchor: &Range<usize>, mode: SpanMode) -> Range<usize> {
        let len = self.tokens.len();
        match mode {
            SpanMode::T100 => {
                anchor.start.saturating_sub(T100_RADIUS)..(anchor.end + T100_RADIUS).min(len)
            }
            SpanMode::Sent => Self::enclosing(&self.sentence_starts, anchor, len),
            SpanMode::Para => Self::enclosing(&self.paragraph_starts, anchor, len),
        }
    }

    /// Cuts the context window around `anchor` out as a standalone span.
    pub fn span(
        &self,
        anchor: &Range<usize>,
        mode: SpanMode,
        target: &str,
        anchor_text: &str,
    ) -> TrainingSpan {
        let w = self.window(anchor, mode);
        TrainingSpan {
            tokens: self.tokens[w.clone()].to_vec(),
            anchor: anchor.start - w.start..anchor.end - w.start,
            anchor_text: anchor_text.to_string(),
            target: target.to_string(),
            source_doc: self.id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSpan {
    pub tokens: Vec<AnnotatedToken>,
    pub anchor: Range<usize>,
    pub anchor_text: String,
    pub target: String,
    pub source_doc: String,
}

struct RawParagraph {
    text: String,
    links: Vec<(Range<usize>, String, String)>,
}

struct RawDoc {
    id: String,
    paragraphs: Vec<RawParagraph>,
}

/// Strips `[[Target|anchor]]` markup, returning plain text and the byte
/// range, raw target and anchor text of each link.
fn strip_links(line: &str) -> RawParagraph {
    let mut text = String::with_capacity(line.len());
    let mut links = Vec::new();
    let mut rest = line;
    while let Some(open) = rest.find("[[") {
        let Some(close) = rest[open + 2..].find("]]").map(|c| c + open + 2) else {
            break;
        };
        text.push_str(&rest[..open]);
        let inner = &rest[open + 2..close];
        let (target, anchor) = match inner.split_once('|') {
            Some((t, a)) => (t, a.to_string()),
            None => (inner, inner.replace('_', " ")),
        };
        let start = text.len();
        text.push_str(&anchor);
        links.push((start..text.len(), target.trim().to_string(), anchor));
        rest = &rest[close + 2..];
    }
    text.push_str(rest);
    RawParagraph { text, links }
}

fn is_skipped(line: &str) -> bool {
    ["*", "|", "{|", "!", "#"]
        .iter()
        .any(|p| line.starts_with(p))
}

fn parse_raw(text: &str) -> Result<Vec<RawDoc>> {
    let mut docs: Vec<RawDoc> = Vec::new();
    let mut para: Vec<&str> = Vec::new();
    let flush = |docs: &mut Vec<RawDoc>, para: &mut Vec<&str>| {
        if !para.is_empty() {
            let joined = para.join(" ");
            if let Some(d) = docs.last_mut() {
                d.paragraphs.push(strip_links(&joined));
            }
            para.clear();
        }
    };
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(id) = line.strip_prefix("# doc=") {
            flush(&mut docs, &mut para);
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::malformed(CORPUS_FILE, n + 1, "empty document id"));
            }
            docs.push(RawDoc {
                id: id.to_string(),
                paragraphs: Vec::new(),
            });
        } else if line.trim().is_empty() || is_skipped(line) {
            flush(&mut docs, &mut para);
        } else {
            if docs.is_empty() {
                return Err(Error::malformed(
                    CORPUS_FILE,
                    n + 1,
                    "text before the first '# doc=' header",
                ));
            }
            para.push(line.trim());
        }
    }
    flush(&mut docs, &mut para);
    Ok(docs)
}

fn resolve_target(raw: &str, map: Option<&CanonicalMap>) -> Option<String> {
    match map {
        Some(m) => m.resolve(raw).ok(),
        None => canonicalize_title(raw).ok(),
    }
}

/// Linked paragraph text, annotated, with an index from link target to
/// occurrences.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_target: HashMap<String, Vec<(usize, usize)>>,
}

impl Corpus {
    /// Parses and annotates a corpus. Link targets are resolved through `map`
    /// when given, otherwise just canonicalized; links that resolve to
    /// nothing are kept as plain text.
    pub fn parse(
        text: &str,
        map: Option<&CanonicalMap>,
        annotator: &dyn Annotator,
        exec: Execution,
    ) -> Result<Self> {
        let raw = parse_raw(text)?;
        let docs = par::map(exec, &raw, |d| {
            let mut text = String::new();
            let mut ranges = Vec::new();
            let mut links = Vec::new();
            for p in &d.paragraphs {
                if !text.is_empty() {
                    text.push_str("\n\n");
                }
                let base = text.len();
                text.push_str(&p.text);
                ranges.push(base..text.len());
                for (r, target, anchor) in &p.links {
                    links.push((r.start + base..r.end + base, target.clone(), anchor.clone()));
                }
            }
            let mut doc = Document::annotate(&d.id, text, &ranges, annotator);
            for (bytes, target, anchor_text) in links {
                let Some(target) = resolve_target(&target, map) else {
                    continue;
                };
                let tokens = doc.tokens_covering(&bytes);
                if tokens.is_empty() {
                    continue;
                }
                doc.links.push(Link {
                    tokens,
                    anchor_text,
                    target,
                });
            }
            doc
        });
        Ok(Self::from_documents(docs))
    }

    pub fn from_documents(docs: Vec<Document>) -> Self {
        let mut by_target: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (di, d) in docs.iter().enumerate() {
            for (li, l) in d.links.iter().enumerate() {
                by_target
                    .entry(l.target.clone())
                    .or_default()
                    .push((di, li));
            }
        }
        Corpus { docs, by_target }
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.id == id)
    }

    pub fn link_count(&self, target: &str) -> usize {
        self.by_target.get(target).map_or(0, Vec::len)
    }

    /// Link occurrences for `target`, in document order.
    pub fn links_to(&self, target: &str) -> impl Iterator<Item = (&Document, &Link)> {
        self.by_target
            .get(target)
            .into_iter()
            .flatten()
            .map(|&(d, l)| (&self.docs[d], &self.docs[d].links[l]))
    }
}

/// Training spans for string `s`: contexts of links to any of its candidate
/// entities, in corpus order.
pub fn extract_spans(
    corpus: &Corpus,
    s: &str,
    candidates: &CandidateList,
    span_mode: SpanMode,
    match_mode: MatchMode,
) -> Result<Vec<TrainingSpan>> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates(s.to_string()));
    }
    let key = lnrm(s);
    let mut hits: Vec<(usize, usize)> = candidates
        .entities()
        .filter_map(|e| corpus.by_target.get(e))
        .flatten()
        .copied()
        .collect();
    hits.sort_unstable();
    hits.dedup();
    Ok(hits
        .into_iter()
        .filter_map(|(di, li)| {
            let doc = &corpus.docs[di];
            let link = &doc.links[li];
            if match_mode == MatchMode::Lex
                && !lnrm(&link.anchor_text).as_str().contains(key.as_str())
            {
                return None;
            }
            Some(doc.span(&link.tokens, span_mode, &link.target, &link.anchor_text))
        })
        .collect())
}

pub fn write_spans(spans: &[TrainingSpan]) -> String {
    let mut out = String::new();
    for sp in spans {
        let _ = writeln!(
            out,
            "# target={} anchor={}:{} doc={}",
            sp.target, sp.anchor.start, sp.anchor.end, sp.source_doc
        );
        for t in &sp.tokens {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", t.surface, t.lemma, t.pos, t.coarse);
        }
        out.push('\n');
    }
    out
}

fn parse_header(line: &str, n: usize) -> Result<(String, Range<usize>, String)> {
    let bad = |why: &str| Error::malformed(SPANS_FILE, n, why);
    let mut target = None;
    let mut anchor = None;
    let mut doc = None;
    for part in line.trim_start_matches('#').split_whitespace() {
        match part.split_once('=') {
            Some(("target", v)) => target = Some(v.to_string()),
            Some(("doc", v)) => doc = Some(v.to_string()),
            Some(("anchor", v)) => {
                let (a, b) = v
                    .split_once(':')
                    .ok_or_else(|| bad("anchor must be <start>:<end>"))?;
                let a: usize = a.parse().map_err(|_| bad("bad anchor start"))?;
                let b: usize = b.parse().map_err(|_| bad("bad anchor end"))?;
                anchor = Some(a..b);
            }
            _ => return Err(bad(&format!("unexpected header field {part:?}"))),
        }
    }
    match (target, anchor, doc) {
        (Some(t), Some(a), Some(d)) if !t.is_empty() => Ok((t, a, d)),
        _ => Err(bad("header needs target=, anchor= and doc=")),
    }
}

pub fn parse_spans(text: &str) -> Result<Vec<TrainingSpan>> {
    let mut out = Vec::new();
    let mut current: Option<(TrainingSpan, usize)> = None;
    let finish = |cur: Option<(TrainingSpan, usize)>, out: &mut Vec<TrainingSpan>| -> Result<()> {
        if let Some((mut sp, n)) = cur {
            if sp.anchor.start >= sp.anchor.end || sp.anchor.end > sp.tokens.len() {
                return Err(Error::malformed(
                    SPANS_FILE,
                    n,
                    "anchor range outside the span",
                ));
            }
            sp.anchor_text = sp.tokens[sp.anchor.clone()]
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.push(sp);
        }
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.starts_with("# ") {
            finish(current.take(), &mut out)?;
            let (target, anchor, source_doc) = parse_header(line, n)?;
            current = Some((
                TrainingSpan {
                    tokens: Vec::new(),
                    anchor,
                    anchor_text: String::new(),
                    target,
                    source_doc,
                },
                n,
            ));
        } else if line.is_empty() {
            finish(current.take(), &mut out)?;
        } else {
            let Some((sp, _)) = current.as_mut() else {
                return Err(Error::malformed(SPANS_FILE, n, "token line outside a span"));
            };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 || f[..3].iter().any(|x| x.is_empty()) {
                return Err(Error::malformed(
                    SPANS_FILE,
                    n,
                    "expected surface, lemma, pos and coarse pos",
                ));
            }
            let coarse = CoarsePos::parse(f[3])
                .ok_or_else(|| Error::malformed(SPANS_FILE, n, "unknown coarse pos"))?;
            sp.tokens
                .push(AnnotatedToken::new(f[0], f[1], f[2], coarse));
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}
