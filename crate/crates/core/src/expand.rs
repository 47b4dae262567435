//! Mention expansion: swap an ambiguous mention for the longest name of the
//! same entity found in its document, re-query, and intersect with the
//! original candidates.
//!
//! NER chunks and coreference chains come from pluggable [`NerTagger`] and
//! [`CorefResolver`] implementations; [`Standoff`] reads them from an
//! annotations file (`start<TAB>end<TAB>ner|coref<TAB>label`, character
//! offsets, end exclusive).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use crate::dictbuild::{strip_trailing_parenthetical, title_surface};
use crate::error::{Error, Result};
use crate::lookup::{CandidateGenerator, CandidateList};

const ANNOTATIONS_FILE: &str = "annotations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Evidence {
    NerChunk,
    Coreference,
    TitleMatch,
    None,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::NerChunk => "ner",
            Evidence::Coreference => "coref",
            Evidence::TitleMatch => "title",
            Evidence::None => "none",
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub original: String,
    pub expanded: String,
    pub evidence: Evidence,
    pub final_candidates: CandidateList,
}

/// Named-entity chunks of a document, as byte ranges.
pub trait NerTagger: Sync {
    fn chunks(&self, doc: &str) -> Vec<Range<usize>>;
}

/// Coreference chains of a document; each chain is a list of byte ranges.
pub trait CorefResolver: Sync {
    fn chains(&self, doc: &str) -> Vec<Vec<Range<usize>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    Ner,
    Coref,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Character offsets into the document.
    pub chars: Range<usize>,
    pub kind: AnnotationKind,
    pub label: String,
}

pub fn parse_annotations(text: &str) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: &str| Error::malformed(ANNOTATIONS_FILE, i + 1, why);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad("expected start, end, kind and label"));
        }
        let start: usize = f[0].parse().map_err(|_| bad("bad start offset"))?;
        let end: usize = f[1].parse().map_err(|_| bad("bad end offset"))?;
        if end <= start {
            return Err(bad("end must exceed start"));
        }
        let kind = match f[2] {
            "ner" => AnnotationKind::Ner,
            "coref" => AnnotationKind::Coref,
            _ => return Err(bad("kind must be ner or coref")),
        };
        out.push(Annotation {
            chars: start..end,
            kind,
            label: f[3].to_string(),
        });
    }
    Ok(out)
}

/// Precomputed annotations for one document.
#[derive(Debug, Clone, Default)]
pub struct Standoff(pub Vec<Annotation>);

fn char_to_byte(doc: &str, chars: &Range<usize>) -> Option<Range<usize>> {
    let mut idx = doc
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(doc.len()));
    let start = idx.nth(chars.start)?;
    let end = if chars.end == chars.start {
        start
    } else {
        idx.nth(chars.end - chars.start - 1)?
    };
    Some(start..end)
}

impl NerTagger for Standoff {
    fn chunks(&self, doc: &str) -> Vec<Range<usize>> {
        self.0
            .iter()
            .filter(|a| a.kind == AnnotationKind::Ner)
            .filter_map(|a| char_to_byte(doc, &a.chars))
            .collect()
    }
}

impl CorefResolver for Standoff {
    fn chains(&self, doc: &str) -> Vec<Vec<Range<usize>>> {
        let mut chains: BTreeMap<&str, Vec<Range<usize>>> = BTreeMap::new();
        for a in self.0.iter().filter(|a| a.kind == AnnotationKind::Coref) {
            if let Some(r) = char_to_byte(doc, &a.chars) {
                chains.entry(&a.label).or_default().push(r);
            }
        }
        chains.into_values().collect()
    }
}

fn is_boundary(doc: &str, at: usize, before: bool) -> bool {
    let c = if before {
        doc[..at].chars().next_back()
    } else {
        doc[at..].chars().next()
    };
    !c.is_some_and(char::is_alphanumeric)
}

fn whole_word(doc: &str, r: &Range<usize>) -> bool {
    is_boundary(doc, r.start, true) && is_boundary(doc, r.end, false)
}

/// Case-sensitive whole-word occurrences of `needle`.
pub fn occurrences(doc: &str, needle: &str) -> Vec<Range<usize>> {
    if needle.is_empty() {
        return Vec::new();
    }
    doc.match_indices(needle)
        .map(|(i, m)| i..i + m.len())
        .filter(|r| whole_word(doc, r))
        .collect()
}

/// Lowercased copy of `s` with, for each byte of the copy, the byte offset
/// in `s` of the character it came from.
fn folded(s: &str) -> (String, Vec<usize>) {
    let mut out = String::with_capacity(s.len());
    let mut map = Vec::with_capacity(s.len() + 1);
    for (b, c) in s.char_indices() {
        for l in c.to_lowercase() {
            let before = out.len();
            out.push(l);
            map.extend(std::iter::repeat_n(b, out.len() - before));
        }
    }
    map.push(s.len());
    (out, map)
}

/// Case-insensitive whole-word occurrences of `needle`, as byte ranges of `doc`.
pub fn occurrences_ignore_case(doc: &str, needle: &str) -> Vec<Range<usize>> {
    let (hay, map) = folded(doc);
    let needle = needle.to_lowercase();
    if needle.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, m) in hay.match_indices(needle.as_str()) {
        let start = map[i];
        let end = map.get(i + m.len()).copied().unwrap_or(doc.len());
        let end = if end == start { doc.len() } else { end };
        let r = start..end;
        if whole_word(doc, &r) && out.last() != Some(&r) {
            out.push(r);
        }
    }
    out
}

/// Places in the document where a candidate's title (despaced, final
/// parenthetical removed) appears, ignoring case.
pub fn title_matches_in_doc(doc: &str, candidates: &CandidateList) -> Vec<(String, Range<usize>)> {
    let mut out = Vec::new();
    for e in candidates.entities() {
        let surface = title_surface(e);
        let name = strip_trailing_parenthetical(&surface);
        for r in occurrences_ignore_case(doc, name) {
            out.push((e.to_string(), r));
        }
    }
    out
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

/// Expands `mention` within `doc` and re-queries `generator`.
pub fn expand_mention(
    doc: &str,
    mention: &str,
    generator: &CandidateGenerator<'_>,
    ner: Option<&dyn NerTagger>,
    coref: Option<&dyn CorefResolver>,
) -> Result<ExpansionResult> {
    let occ = occurrences(doc, mention);
    if occ.is_empty() {
        return Err(Error::MentionNotFound(mention.to_string()));
    }
    let original = generator.generate(mention);

    let mut found: Vec<(Range<usize>, Evidence)> = Vec::new();
    if let Some(ner) = ner {
        for c in ner.chunks(doc) {
            if occ.iter().any(|o| c.start <= o.start && o.end <= c.end) {
                found.push((c, Evidence::NerChunk));
            }
        }
    }
    if let Some(coref) = coref {
        for chain in coref.chains(doc) {
            if chain.iter().any(|m| occ.iter().any(|o| overlaps(m, o))) {
                found.extend(chain.into_iter().map(|m| (m, Evidence::Coreference)));
            }
        }
    }
    found.extend(
        title_matches_in_doc(doc, &original)
            .into_iter()
            .map(|(_, r)| (r, Evidence::TitleMatch)),
    );

    let mention_len = mention.chars().count();
    let best = found
        .into_iter()
        .filter_map(|(r, ev)| {
            let text = doc.get(r.clone())?.trim();
            let len = text.chars().count();
            (len > mention_len).then(|| (len, r.start, ev, text.to_string()))
        })
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let unchanged = |original: CandidateList| ExpansionResult {
        original: mention.to_string(),
        expanded: mention.to_string(),
        evidence: Evidence::None,
        final_candidates: original,
    };
    let Some((_, _, evidence, expanded)) = best else {
        return Ok(unchanged(original));
    };
    let mut narrowed = generator.generate(&expanded);
    narrowed.retain(|c| original.contains(&c.entity));
    if narrowed.is_empty() {
        return Ok(unchanged(original));
    }
    Ok(ExpansionResult {
        original: mention.to_string(),
        expanded,
        evidence,
        final_candidates: narrowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictbuild::{Dictionary, DictionaryBuilder};
    use crate::lookup::{top1, CandidateMode};

    fn dict() -> Dictionary {
        let mut b = DictionaryBuilder::default();
        b.add_wiki_anchor("Abbott", "Abbott_Laboratories", 50);
        b.add_wiki_anchor("Abbott", "Bud_Abbott", 10);
        b.add_wiki_anchor("Bud Abbott", "Bud_Abbott", 30);
        b.add_wiki_anchor("ABC", "American_Broadcasting_Company", 60);
        b.add_wiki_anchor("ABC", "Australian_Broadcasting_Corporation", 20);
        b.add_wiki_anchor("ABC", "All_Basotho_Convention", 2);
        b.add_wiki_anchor("All Basotho Convention", "All_Basotho_Convention", 5);
        b.add_wiki_anchor(
            "Australian Broadcasting Corporation",
            "Australian_Broadcasting_Corporation",
            40,
        );
        b.add_wiki_anchor("Bud Abbott Jr", "Bud_Abbott_Jr.", 3);
        b.add_wiki_anchor("Hank Williams", "Hank_Williams_(Clickradio_CEO)", 1);
        b.build()
    }

    #[test]
    fn ner_chunk_expansion() {
        let d = dict();
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let doc = "Comedian Bud Abbott of Abbott and Costello died in Woodland Hills, California.";
        let ner = Standoff(parse_annotations("9\t19\tner\tPERSON\n").unwrap());
        let r = expand_mention(doc, "Abbott", &g, Some(&ner), None).unwrap();
        assert_eq!(r.expanded, "Bud Abbott");
        assert_eq!(r.evidence, Evidence::NerChunk);
        assert_eq!(top1(&r.final_candidates), Some("Bud_Abbott"));
    }

    #[test]
    fn coreference_expansion() {
        let d = dict();
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let doc = "The party scored a victory over the newly-formed All Basotho Convention. ABC leaders said.";
        let coref = Standoff(parse_annotations("49\t71\tcoref\t1\n73\t76\tcoref\t1\n").unwrap());
        let r = expand_mention(doc, "ABC", &g, None, Some(&coref)).unwrap();
        assert_eq!(r.expanded, "All Basotho Convention");
        assert_eq!(r.evidence, Evidence::Coreference);
        assert_eq!(top1(&r.final_candidates), Some("All_Basotho_Convention"));
    }

    #[test]
    fn title_match_expansion() {
        let d = dict();
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let doc = "ABC said that he told the Australian Broadcasting Corporation everything.";
        let r = expand_mention(doc, "ABC", &g, None, None).unwrap();
        assert_eq!(r.evidence, Evidence::TitleMatch);
        assert_eq!(r.expanded, "Australian Broadcasting Corporation");
        assert_eq!(
            r.final_candidates.entities().collect::<Vec<_>>(),
            vec!["Australian_Broadcasting_Corporation"]
        );
    }

    #[test]
    fn empty_intersection_keeps_original() {
        let d = dict();
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let doc = "Bud Abbott Jr met Abbott.";
        let ner = Standoff(parse_annotations("0\t13\tner\tPERSON\n").unwrap());
        let r = expand_mention(doc, "Abbott", &g, Some(&ner), None).unwrap();
        assert_eq!(r.evidence, Evidence::None);
        assert_eq!(r.expanded, "Abbott");
        assert_eq!(r.final_candidates.len(), 2);
    }

    #[test]
    fn nothing_to_expand() {
        let d = dict();
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let r = expand_mention("Abbott shares rose.", "Abbott", &g, None, None).unwrap();
        assert_eq!(r.evidence, Evidence::None);
        assert_eq!(top1(&r.final_candidates), Some("Abbott_Laboratories"));
        assert!(matches!(
            expand_mention("nothing here", "Abbott", &g, None, None),
            Err(Error::MentionNotFound(_))
        ));
    }

    #[test]
    fn title_matching_rules() {
        let d = dict();
        let cl = crate::lookup::lookup_exct(&d, "Hank Williams");
        let m = title_matches_in_doc("we heard hank williams sing", &cl);
        assert_eq!(
            m,
            vec![("Hank_Williams_(Clickradio_CEO)".to_string(), 9..22)]
        );
        assert!(title_matches_in_doc("hank williamson", &cl).is_empty());
        assert!(title_matches_in_doc("", &cl).is_empty());
    }

    #[test]
    fn case_folding_keeps_byte_offsets() {
        let doc = "Über İstanbul and istanbul";
        let r = occurrences_ignore_case(doc, "über");
        assert_eq!(r, vec![0..5]);
        assert_eq!(
            &doc[occurrences_ignore_case(doc, "istanbul")[0].clone()],
            "istanbul"
        );
        assert_eq!(char_to_byte("Über x", &(5..6)), Some(6..7));
    }

    #[test]
    fn annotation_errors() {
        assert!(parse_annotations("1\t2\tner\n").is_err());
        assert!(parse_annotations("3\t2\tner\tX\n").is_err());
        assert!(parse_annotations("1\t2\tpos\tX\n").is_err());
    }
}
