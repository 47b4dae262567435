//! Mention -> entity dictionary harvested from titles, redirects,
//! disambiguation pages and anchor-text link counts.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::canonical::{CanonicalMap, PageKind};
use crate::error::{Error, Result};
use crate::lookup::{lnrm, NormKey};
use crate::par::{self, Execution};
use crate::tsv;

/// Anchor counts for one (string, entity) pair.
///
/// `wiki_total` and `web_total` are per-string totals shared by every entry
/// of the same string.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LinkEvidence {
    pub wiki_hits: u64,
    pub wiki_total: u64,
    pub web_hits: u64,
    pub web_total: u64,
}

impl LinkEvidence {
    pub fn new(wiki_hits: u64, wiki_total: u64, web_hits: u64, web_total: u64) -> Self {
        LinkEvidence {
            wiki_hits,
            wiki_total,
            web_hits,
            web_total,
        }
    }

    pub fn hits(&self) -> u64 {
        self.wiki_hits + self.web_hits
    }

    pub fn total(&self) -> u64 {
        self.wiki_total + self.web_total
    }

    pub fn score(&self) -> Score {
        score(self)
    }

    pub fn wiki_only(&self) -> Self {
        LinkEvidence::new(self.wiki_hits, self.wiki_total, 0, 0)
    }

    pub fn web_only(&self) -> Self {
        LinkEvidence::new(0, 0, self.web_hits, self.web_total)
    }

    pub fn add(&mut self, other: &LinkEvidence) {
        self.wiki_hits += other.wiki_hits;
        self.wiki_total += other.wiki_total;
        self.web_hits += other.web_hits;
        self.web_total += other.web_total;
    }
}

/// `(x + u) / (y + v)`, or 0 without any evidence.
pub fn score(e: &LinkEvidence) -> Score {
    Score::new(e.hits(), e.total())
}

/// Exact non-negative ratio. Equality and ordering are by value.
#[derive(Debug, Clone, Copy)]
pub struct Score {
    num: u64,
    den: u64,
}

impl Score {
    pub const ZERO: Score = Score { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Score::ZERO
        } else {
            Score { num, den }
        }
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Four-decimal rendering used in every output file.
    pub fn render(&self) -> String {
        format!("{:.4}", self.value())
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Ranking shared by dictionary entries and candidate lists: score desc,
/// raw hit mass desc, entity title asc.
pub fn rank_order(a: (Score, u64, &str), b: (Score, u64, &str)) -> Ordering {
    b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Title,
    Redirect,
    Disambig,
    AnchorWiki,
    AnchorWeb,
}

impl Source {
    const ALL: [Source; 5] = [
        Source::Title,
        Source::Redirect,
        Source::Disambig,
        Source::AnchorWiki,
        Source::AnchorWeb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Title => "title",
            Source::Redirect => "redirect",
            Source::Disambig => "disambig",
            Source::AnchorWiki => "wiki",
            Source::AnchorWeb => "web",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Small set of [`Source`] flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Sources(u8);

impl Sources {
    pub fn of(source: Source) -> Self {
        Sources(source.bit())
    }

    pub fn insert(&mut self, source: Source) {
        self.0 |= source.bit();
    }

    pub fn contains(&self, source: Source) -> bool {
        self.0 & source.bit() != 0
    }

    pub fn union(self, other: Sources) -> Sources {
        Sources(self.0 | other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Source> {
        Source::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut out = Sources::default();
        for part in s.split(',') {
            let src = Source::ALL.into_iter().find(|x| x.as_str() == part)?;
            out.insert(src);
        }
        Some(out)
    }
}

impl fmt::Display for Sources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Source::as_str).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryEntry {
    pub string: String,
    pub entity: String,
    pub evidence: LinkEvidence,
    pub sources: Sources,
}

impl DictionaryEntry {
    pub fn score(&self) -> Score {
        self.evidence.score()
    }

    fn rank_key(&self) -> (Score, u64, &str) {
        (self.score(), self.evidence.hits(), &self.entity)
    }
}

/// Which half of the link counts feeds the scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountView {
    #[default]
    Merged,
    WikiOnly,
    WebOnly,
}

/// Immutable dictionary with the normalized-key indexes used by lookups.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    entries: BTreeMap<String, Vec<DictionaryEntry>>,
    by_norm: HashMap<NormKey, Vec<String>>,
    norm_by_len: BTreeMap<usize, Vec<NormKey>>,
    inbound: HashMap<String, u64>,
}

impl Dictionary {
    /// Assembles a dictionary from entries; each string's list is ranked and
    /// deduplicated by entity (later duplicates are merged into the first).
    pub fn from_entries(entries: impl IntoIterator<Item = DictionaryEntry>) -> Self {
        let mut grouped: BTreeMap<String, Vec<DictionaryEntry>> = BTreeMap::new();
        for e in entries {
            let list = grouped.entry(e.string.clone()).or_default();
            match list.iter_mut().find(|x| x.entity == e.entity) {
                Some(existing) => {
                    existing.sources = existing.sources.union(e.sources);
                    existing.evidence.wiki_hits += e.evidence.wiki_hits;
                    existing.evidence.web_hits += e.evidence.web_hits;
                }
                None => list.push(e),
            }
        }
        for list in grouped.values_mut() {
            list.sort_by(|a, b| rank_order(a.rank_key(), b.rank_key()));
        }

        let mut by_norm: HashMap<NormKey, Vec<String>> = HashMap::new();
        let mut inbound: HashMap<String, u64> = HashMap::new();
        for (string, list) in &grouped {
            let key = lnrm(string);
            if !key.is_empty() {
                by_norm.entry(key).or_default().push(string.clone());
            }
            for e in list {
                *inbound.entry(e.entity.clone()).or_default() += e.evidence.hits();
            }
        }
        let mut norm_by_len: BTreeMap<usize, Vec<NormKey>> = BTreeMap::new();
        for key in by_norm.keys() {
            norm_by_len.entry(key.len()).or_default().push(key.clone());
        }
        for keys in norm_by_len.values_mut() {
            keys.sort();
        }

        Dictionary {
            entries: grouped,
            by_norm,
            norm_by_len,
            inbound,
        }
    }

    /// Number of distinct strings.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, string: &str) -> Option<&[DictionaryEntry]> {
        self.entries.get(string).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[DictionaryEntry])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Raw keys whose normalized form is `key`, in sorted order.
    pub fn keys_with_norm(&self, key: &NormKey) -> &[String] {
        self.by_norm.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct non-empty normalized keys grouped by byte length.
    pub fn norm_keys_by_len(&self) -> &BTreeMap<usize, Vec<NormKey>> {
        &self.norm_by_len
    }

    /// Total anchor links (wiki + web, over every string) pointing at `entity`.
    pub fn inbound_links(&self, entity: &str) -> u64 {
        self.inbound.get(entity).copied().unwrap_or(0)
    }

    /// Rebuilds the dictionary scoring only one half of the counts.
    pub fn with_counts(&self, view: CountView) -> Dictionary {
        if view == CountView::Merged {
            return self.clone();
        }
        Dictionary::from_entries(self.entries.values().flatten().map(|e| DictionaryEntry {
            evidence: match view {
                CountView::WikiOnly => e.evidence.wiki_only(),
                CountView::WebOnly => e.evidence.web_only(),
                CountView::Merged => e.evidence,
            },
            ..e.clone()
        }))
    }

    /// `string \t entity \t score \t x \t y \t u \t v \t sources`, sorted by
    /// string then rank.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for list in self.entries.values() {
            for e in list {
                let ev = &e.evidence;
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    e.string,
                    e.entity,
                    e.score(),
                    ev.wiki_hits,
                    ev.wiki_total,
                    ev.web_hits,
                    ev.web_total,
                    e.sources
                ));
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        const FILE: &str = "dictionary.tsv";
        let mut entries = Vec::new();
        for (line, f) in tsv::rows(text) {
            tsv::expect_fields(FILE, line, &f, 8, 8)?;
            let count = |i: usize| tsv::parse_count(FILE, line, f[i]);
            let evidence = LinkEvidence::new(count(3)?, count(4)?, count(5)?, count(6)?);
            if evidence.wiki_hits > evidence.wiki_total || evidence.web_hits > evidence.web_total {
                return Err(Error::malformed(FILE, line, "hits exceed totals"));
            }
            let sources = Sources::parse(f[7])
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::malformed(FILE, line, format!("bad sources {:?}", f[7])))?;
            entries.push(DictionaryEntry {
                string: f[0].to_string(),
                entity: f[1].to_string(),
                evidence,
                sources,
            });
        }
        Ok(Dictionary::from_entries(entries))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Wiki,
    Web,
    Disambig,
    Title,
    Redirect,
}

impl Provenance {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wiki" => Some(Provenance::Wiki),
            "web" => Some(Provenance::Web),
            "disambig" => Some(Provenance::Disambig),
            "title" => Some(Provenance::Title),
            "redirect" => Some(Provenance::Redirect),
            _ => None,
        }
    }
}

/// One row of links.tsv.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRow {
    pub provenance: Provenance,
    pub string: String,
    pub target: String,
    pub count: u64,
}

impl LinkRow {
    pub fn new(provenance: Provenance, string: &str, target: &str, count: u64) -> Self {
        LinkRow {
            provenance,
            string: string.to_string(),
            target: target.to_string(),
            count,
        }
    }
}

/// Parses `provenance \t string \t target \t count` rows.
pub fn parse_links(text: &str) -> Result<Vec<LinkRow>> {
    const FILE: &str = "links.tsv";
    let mut rows = Vec::new();
    for (line, f) in tsv::rows(text) {
        tsv::expect_fields(FILE, line, &f, 4, 4)?;
        let provenance = Provenance::parse(f[0]).ok_or_else(|| {
            Error::malformed(FILE, line, format!("unknown provenance {:?}", f[0]))
        })?;
        if f[1].is_empty() {
            return Err(Error::malformed(FILE, line, "empty string"));
        }
        rows.push(LinkRow {
            provenance,
            string: f[1].to_string(),
            target: f[2].to_string(),
            count: tsv::parse_count(FILE, line, f[3])?,
        });
    }
    Ok(rows)
}

/// Underscores to spaces.
pub fn title_surface(url_title: &str) -> String {
    url_title.replace('_', " ")
}

/// Removes one final ` (...)` group without nested parentheses.
pub fn strip_trailing_parenthetical(s: &str) -> &str {
    let Some(body) = s.strip_suffix(')') else {
        return s;
    };
    let Some(open) = body.rfind('(') else {
        return s;
    };
    if body[open + 1..].contains(')') || open == 0 {
        return s;
    }
    let head = body[..open].trim_end();
    if head.is_empty() || head.len() == body[..open].len() {
        // require a separating space: "Foo(bar)" is left alone
        return s;
    }
    head
}

/// Surface strings a title contributes: the despaced title and, when it
/// differs, the form without its trailing parenthetical.
pub fn title_strings(url_title: &str) -> Vec<String> {
    let full = title_surface(url_title);
    let stripped = strip_trailing_parenthetical(&full).to_string();
    if stripped != full {
        vec![full, stripped]
    } else {
        vec![full]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PairCounts {
    wiki: u64,
    web: u64,
    sources: Sources,
}

/// Accumulates link evidence; shards built independently merge exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DictionaryBuilder {
    pairs: HashMap<(String, String), PairCounts>,
    totals: HashMap<String, (u64, u64)>,
}

impl DictionaryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a non-anchor source for the pair, with no counts.
    pub fn add_source(&mut self, string: &str, entity: &str, source: Source) {
        self.pairs
            .entry((string.to_string(), entity.to_string()))
            .or_default()
            .sources
            .insert(source);
    }

    pub fn add_wiki_anchor(&mut self, string: &str, entity: &str, count: u64) {
        let pair = self
            .pairs
            .entry((string.to_string(), entity.to_string()))
            .or_default();
        pair.wiki += count;
        pair.sources.insert(Source::AnchorWiki);
        self.totals.entry(string.to_string()).or_default().0 += count;
    }

    pub fn add_web_anchor(&mut self, string: &str, entity: &str, count: u64) {
        let pair = self
            .pairs
            .entry((string.to_string(), entity.to_string()))
            .or_default();
        pair.web += count;
        pair.sources.insert(Source::AnchorWeb);
        self.totals.entry(string.to_string()).or_default().1 += count;
    }

    pub fn merge(&mut self, other: DictionaryBuilder) {
        for (key, c) in other.pairs {
            let pair = self.pairs.entry(key).or_default();
            pair.wiki += c.wiki;
            pair.web += c.web;
            pair.sources = pair.sources.union(c.sources);
        }
        for (string, (w, v)) in other.totals {
            let t = self.totals.entry(string).or_default();
            t.0 += w;
            t.1 += v;
        }
    }

    /// Adds one links.tsv row, resolving its target through `map`.
    pub fn add_row(&mut self, map: &CanonicalMap, row: &LinkRow) -> Result<()> {
        let entity = map
            .resolve(&row.target)
            .map_err(|_| Error::UnresolvableTarget(row.target.clone()))?;
        match row.provenance {
            Provenance::Wiki => self.add_wiki_anchor(&row.string, &entity, row.count),
            Provenance::Web => self.add_web_anchor(&row.string, &entity, row.count),
            Provenance::Disambig => self.add_source(&row.string, &entity, Source::Disambig),
            Provenance::Title => self.add_source(&row.string, &entity, Source::Title),
            Provenance::Redirect => self.add_source(&row.string, &entity, Source::Redirect),
        }
        Ok(())
    }

    /// Adds the title, redirect and disambiguation-page strings of `map`.
    pub fn add_page_strings(&mut self, map: &CanonicalMap) {
        for (title, page) in map.iter() {
            let is_canonical = title == page.canonical;
            match page.kind {
                PageKind::Article if is_canonical => {
                    for s in title_strings(title) {
                        self.add_source(&s, title, Source::Title);
                    }
                }
                PageKind::Disambiguation if is_canonical => {
                    let surface = title_surface(title);
                    let s = surface
                        .strip_suffix(" (disambiguation)")
                        .unwrap_or(&surface)
                        .trim_end();
                    if !s.is_empty() {
                        self.add_source(s, title, Source::Disambig);
                    }
                }
                _ if !is_canonical => {
                    for s in title_strings(title) {
                        self.add_source(&s, &page.canonical, Source::Redirect);
                    }
                }
                _ => {}
            }
        }
    }

    pub fn build(self) -> Dictionary {
        let totals = self.totals;
        Dictionary::from_entries(self.pairs.into_iter().map(|((string, entity), c)| {
            let (wiki_total, web_total) = totals.get(&string).copied().unwrap_or((0, 0));
            DictionaryEntry {
                evidence: LinkEvidence::new(c.wiki, wiki_total, c.web, web_total),
                string,
                entity,
                sources: c.sources,
            }
        }))
    }
}

const HARVEST_SHARD: usize = 4096;

/// Harvests the dictionary from the canonical map's pages and the link rows.
pub fn harvest(map: &CanonicalMap, links: &[LinkRow], exec: Execution) -> Result<Dictionary> {
    let n_shards = links.len().div_ceil(HARVEST_SHARD);
    let shards = par::map_range(exec, n_shards, |i| {
        let rows = &links[i * HARVEST_SHARD..((i + 1) * HARVEST_SHARD).min(links.len())];
        let mut b = DictionaryBuilder::new();
        for row in rows {
            b.add_row(map, row)?;
        }
        Ok::<_, Error>(b)
    });
    let mut builder = DictionaryBuilder::new();
    builder.add_page_strings(map);
    for shard in shards {
        builder.merge(shard?);
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{PageRecord, RedirectEdge};
    use proptest::prelude::*;

    #[test]
    fn score_examples() {
        let s = score(&LinkEvidence::new(756, 758, 936, 938));
        assert_eq!((s.numer(), s.denom()), (1692, 1696));
        assert_eq!(s.render(), "0.9976");
        assert_eq!(score(&LinkEvidence::default()), Score::ZERO);
        assert_eq!(score(&LinkEvidence::default()).render(), "0.0000");
        assert_eq!(score(&LinkEvidence::new(12, 19, 0, 0)).render(), "0.6316");
        assert_eq!(Score::new(1, 2), Score::new(2, 4));
        assert!(Score::new(1, 3) < Score::new(1, 2));
    }

    #[test]
    fn parenthetical_stripping() {
        assert_eq!(
            strip_trailing_parenthetical("Hank Williams (basketball)"),
            "Hank Williams"
        );
        assert_eq!(strip_trailing_parenthetical("A (b (c))"), "A (b (c))");
        assert_eq!(strip_trailing_parenthetical("A (b) c"), "A (b) c");
        assert_eq!(strip_trailing_parenthetical("(b)"), "(b)");
        assert_eq!(strip_trailing_parenthetical("Foo(bar)"), "Foo(bar)");
        assert_eq!(strip_trailing_parenthetical("A (x) (y)"), "A (x)");
        assert_eq!(title_strings("Stanford"), vec!["Stanford"]);
        assert_eq!(
            title_strings("Mike_Quigley_(footballer)"),
            vec!["Mike Quigley (footballer)", "Mike Quigley"]
        );
    }

    #[test]
    fn single_anchor_scores_one() {
        let map = CanonicalMap::default();
        let links = vec![LinkRow::new(Provenance::Wiki, "Solo", "Solo_Page", 1)];
        let d = harvest(&map, &links, Execution::Sequential).unwrap();
        let e = &d.get("Solo").unwrap()[0];
        assert_eq!(e.entity, "Solo_Page");
        assert_eq!(e.score().render(), "1.0000");
    }

    #[test]
    fn anchors_to_redirects_accrue_to_canonical() {
        let pages = vec![
            PageRecord::new("Stanford_University", PageKind::Article),
            PageRecord::new("Stanford", PageKind::Redirect),
        ];
        let edges = vec![RedirectEdge::new("Stanford", "Stanford_University")];
        let map = CanonicalMap::build(&pages, &edges, None);
        let links = vec![
            LinkRow::new(Provenance::Wiki, "Stanford", "Stanford", 3),
            LinkRow::new(Provenance::Wiki, "Stanford", "Stanford_University", 2),
        ];
        let d = harvest(&map, &links, Execution::Sequential).unwrap();
        let list = d.get("Stanford").unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].entity, "Stanford_University");
        assert_eq!(list[0].evidence, LinkEvidence::new(5, 5, 0, 0));
        assert!(list[0].sources.contains(Source::Redirect));
        assert!(list[0].sources.contains(Source::AnchorWiki));
        let title = d.get("Stanford University").unwrap();
        assert_eq!(title[0].score(), Score::ZERO);
        assert_eq!(title[0].sources, Sources::of(Source::Title));
        assert_eq!(d.inbound_links("Stanford_University"), 5);
    }

    #[test]
    fn disambiguation_pages_fan_out_with_zero_score() {
        let pages = vec![
            PageRecord::new("Mercury_(disambiguation)", PageKind::Disambiguation),
            PageRecord::new("Mercury_(planet)", PageKind::Article),
        ];
        let map = CanonicalMap::build(&pages, &[], None);
        let links = vec![LinkRow::new(
            Provenance::Disambig,
            "Mercury",
            "Mercury_(element)",
            0,
        )];
        let d = harvest(&map, &links, Execution::Sequential).unwrap();
        let list = d.get("Mercury").unwrap();
        let names: Vec<&str> = list.iter().map(|e| e.entity.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "Mercury_(disambiguation)",
                "Mercury_(element)",
                "Mercury_(planet)"
            ]
        );
        assert!(list.iter().all(|e| e.score() == Score::ZERO));
    }

    #[test]
    fn malformed_links_report_line() {
        let err = parse_links("wiki\tA\tB\t1\nwiki\tA\tB\tx\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }));
        let err = parse_links("anchor\tA\tB\t1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn unresolvable_target_is_an_error() {
        let links = vec![LinkRow::new(Provenance::Wiki, "A", "  ", 1)];
        let err = harvest(&CanonicalMap::default(), &links, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::UnresolvableTarget(_)));
    }

    #[test]
    fn tsv_round_trip() {
        let links = vec![
            LinkRow::new(Provenance::Wiki, "A", "X", 3),
            LinkRow::new(Provenance::Web, "A", "Y", 1),
            LinkRow::new(Provenance::Title, "A", "Z", 0),
        ];
        let d = harvest(&CanonicalMap::default(), &links, Execution::Sequential).unwrap();
        let text = d.to_tsv();
        assert_eq!(
            text,
            "A\tX\t0.7500\t3\t3\t0\t1\twiki\n\
             A\tY\t0.2500\t0\t3\t1\t1\tweb\n\
             A\tZ\t0.0000\t0\t3\t0\t1\ttitle\n"
        );
        assert_eq!(Dictionary::from_tsv(&text).unwrap().to_tsv(), text);
    }

    fn link_rows() -> impl Strategy<Value = Vec<LinkRow>> {
        let prov = prop_oneof![
            Just(Provenance::Wiki),
            Just(Provenance::Web),
            Just(Provenance::Disambig),
            Just(Provenance::Title),
        ];
        prop::collection::vec((prov, "[abc]{1,2}", "[XYZ]", 0u64..50), 0..60).prop_map(|rows| {
            rows.into_iter()
                .map(|(p, s, t, c)| LinkRow::new(p, &s, &t, c))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn shards_merge_to_the_concatenation(rows in link_rows(), split in 0usize..60) {
            let map = CanonicalMap::default();
            let split = split.min(rows.len());
            let mut left = DictionaryBuilder::new();
            for r in &rows[..split] { left.add_row(&map, r).unwrap(); }
            let mut right = DictionaryBuilder::new();
            for r in &rows[split..] { right.add_row(&map, r).unwrap(); }
            left.merge(right);
            let mut whole = DictionaryBuilder::new();
            for r in &rows { whole.add_row(&map, r).unwrap(); }
            prop_assert_eq!(left.build().to_tsv(), whole.build().to_tsv());
        }

        #[test]
        fn per_string_totals_and_score_range(rows in link_rows()) {
            let d = harvest(&CanonicalMap::default(), &rows, Execution::Parallel).unwrap();
            for (_, list) in d.iter() {
                let wiki: u64 = list.iter().map(|e| e.evidence.wiki_hits).sum();
                let web: u64 = list.iter().map(|e| e.evidence.web_hits).sum();
                prop_assert_eq!(wiki, list[0].evidence.wiki_total);
                prop_assert_eq!(web, list[0].evidence.web_total);
                for e in list {
                    prop_assert!(!e.sources.is_empty());
                    let v = e.score().value();
                    prop_assert!((0.0..=1.0).contains(&v));
                    if !e.sources.contains(Source::AnchorWiki) && !e.sources.contains(Source::AnchorWeb) {
                        prop_assert_eq!(e.score(), Score::ZERO);
                    }
                }
                for w in list.windows(2) {
                    prop_assert_ne!(rank_order(w[0].rank_key(), w[1].rank_key()), Ordering::Greater);
                    prop_assert_ne!(&w[0].entity, &w[1].entity);
                }
            }
        }

        #[test]
        fn count_partitions_are_recoverable(rows in link_rows()) {
            let d = harvest(&CanonicalMap::default(), &rows, Execution::Sequential).unwrap();
            let wiki = d.with_counts(CountView::WikiOnly);
            let web = d.with_counts(CountView::WebOnly);
            for (s, list) in d.iter() {
                for e in list {
                    let w = wiki.get(s).unwrap().iter().find(|x| x.entity == e.entity).unwrap();
                    let b = web.get(s).unwrap().iter().find(|x| x.entity == e.entity).unwrap();
                    prop_assert_eq!(w.score(), Score::new(e.evidence.wiki_hits, e.evidence.wiki_total));
                    prop_assert_eq!(b.score(), Score::new(e.evidence.web_hits, e.evidence.web_total));
                }
            }
        }
    }
}
