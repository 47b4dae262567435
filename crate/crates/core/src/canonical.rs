//! Redirect-graph resolution: every page title is mapped to the single
//! canonical article of its (undirected) redirect component.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use percent_encoding::percent_decode_str;

use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageKind {
    Article,
    Redirect,
    Disambiguation,
    /// Seen only as a link or redirect endpoint, never listed in the dump.
    CrawlOnly,
}

impl PageKind {
    /// Lower is preferred when picking a component's canonical title.
    fn preference(self) -> u8 {
        match self {
            PageKind::Article => 0,
            PageKind::Redirect | PageKind::Disambiguation => 1,
            PageKind::CrawlOnly => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PageKind::Article => "article",
            PageKind::Redirect => "redirect",
            PageKind::Disambiguation => "disambig",
            PageKind::CrawlOnly => "crawl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "article" => Some(PageKind::Article),
            "redirect" => Some(PageKind::Redirect),
            "disambig" => Some(PageKind::Disambiguation),
            "crawl" => Some(PageKind::CrawlOnly),
            _ => None,
        }
    }
}

impl fmt::Display for PageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRecord {
    pub url_title: String,
    pub kind: PageKind,
}

impl PageRecord {
    pub fn new(url_title: impl Into<String>, kind: PageKind) -> Self {
        PageRecord {
            url_title: url_title.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectEdge {
    pub source: String,
    pub target: String,
}

impl RedirectEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        RedirectEdge {
            source: source.into(),
            target: target.into(),
        }
    }
}

/// Normalizes a raw title or URL suffix into url-title form.
///
/// Percent escapes are decoded once, spaces become underscores, underscore
/// runs collapse, outer underscores are stripped and a lowercase first
/// letter is uppercased.
pub fn canonicalize_title(raw: &str) -> Result<String> {
    let decoded = percent_decode_str(raw.trim()).decode_utf8_lossy();
    let mut out = String::with_capacity(decoded.len());
    for c in decoded.trim().chars() {
        let c = if c.is_whitespace() { '_' } else { c };
        if c == '_' && (out.is_empty() || out.ends_with('_')) {
            continue;
        }
        out.push(c);
    }
    while out.ends_with('_') {
        out.pop();
    }
    let mut chars = out.chars();
    let Some(first) = chars.next() else {
        return Err(Error::EmptyTitle(raw.to_string()));
    };
    if first.is_lowercase() {
        let mut upper: String = first.to_uppercase().collect();
        upper.push_str(chars.as_str());
        out = upper;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedPage {
    pub canonical: String,
    /// Kind of the page itself (not of its canonical).
    pub kind: PageKind,
}

/// Idempotent title -> canonical title mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CanonicalMap {
    entries: BTreeMap<String, MappedPage>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

impl CanonicalMap {
    /// Builds the map from page records and redirect edges.
    ///
    /// Titles are expected in url-title form. Edge endpoints missing from
    /// `pages` are added as [`PageKind::CrawlOnly`]. A title listed more than
    /// once keeps its most preferred kind. When `kb_titles` is given, KB
    /// titles outrank everything else inside a component.
    pub fn build(
        pages: &[PageRecord],
        edges: &[RedirectEdge],
        kb_titles: Option<&HashSet<String>>,
    ) -> CanonicalMap {
        let mut kinds: BTreeMap<&str, PageKind> = BTreeMap::new();
        for p in pages {
            kinds
                .entry(p.url_title.as_str())
                .and_modify(|k| {
                    if p.kind.preference() < k.preference() {
                        *k = p.kind;
                    }
                })
                .or_insert(p.kind);
        }
        for e in edges {
            kinds
                .entry(e.source.as_str())
                .or_insert(PageKind::CrawlOnly);
            kinds
                .entry(e.target.as_str())
                .or_insert(PageKind::CrawlOnly);
        }

        let titles: Vec<&str> = kinds.keys().copied().collect();
        let index = |t: &str| titles.binary_search(&t).expect("title registered above");
        let mut uf = UnionFind::new(titles.len());
        for e in edges {
            uf.union(index(&e.source), index(&e.target));
        }

        let rank_key = |i: usize| {
            let t = titles[i];
            let in_kb = kb_titles.is_some_and(|kb| kb.contains(t));
            (!in_kb, kinds[t].preference(), t)
        };
        let mut best: Vec<Option<usize>> = vec![None; titles.len()];
        for i in 0..titles.len() {
            let root = uf.find(i);
            match best[root] {
                Some(b) if rank_key(b) <= rank_key(i) => {}
                _ => best[root] = Some(i),
            }
        }

        let mut entries = BTreeMap::new();
        for (i, t) in titles.iter().enumerate() {
            let root = uf.find(i);
            let canonical = titles[best[root].expect("every root has a best member")];
            entries.insert(
                t.to_string(),
                MappedPage {
                    canonical: canonical.to_string(),
                    kind: kinds[t],
                },
            );
        }
        CanonicalMap { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, url_title: &str) -> Option<&MappedPage> {
        self.entries.get(url_title)
    }

    /// Canonical title for `t`. Unknown titles map to their own canonical form.
    pub fn resolve(&self, t: &str) -> Result<String> {
        if let Some(m) = self.entries.get(t) {
            return Ok(m.canonical.clone());
        }
        let norm = canonicalize_title(t)?;
        Ok(self
            .entries
            .get(&norm)
            .map(|m| m.canonical.clone())
            .unwrap_or(norm))
    }

    /// Like [`resolve`](Self::resolve) but records unknown titles as
    /// crawl-only self-canonical pages.
    pub fn resolve_or_register(&mut self, t: &str) -> Result<String> {
        let canonical = self.resolve(t)?;
        if !self.entries.contains_key(&canonical) {
            self.entries.insert(
                canonical.clone(),
                MappedPage {
                    canonical: canonical.clone(),
                    kind: PageKind::CrawlOnly,
                },
            );
        }
        Ok(canonical)
    }

    /// Kind of the canonical page representing `t`, if known.
    pub fn kind_of(&self, t: &str) -> Option<PageKind> {
        let canonical = &self.entries.get(t)?.canonical;
        self.entries.get(canonical).map(|m| m.kind)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MappedPage)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Titles that are their own canonical.
    pub fn canonical_pages(&self) -> impl Iterator<Item = (&str, PageKind)> {
        self.entries
            .iter()
            .filter(|(k, v)| **k == v.canonical)
            .map(|(k, v)| (k.as_str(), v.kind))
    }

    /// `url_title \t canonical_title \t kind`, sorted by url_title.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (t, m) in &self.entries {
            out.push_str(t);
            out.push('\t');
            out.push_str(&m.canonical);
            out.push('\t');
            out.push_str(m.kind.as_str());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        const FILE: &str = "canonical.tsv";
        let mut entries = BTreeMap::new();
        for (line, f) in tsv::rows(text) {
            tsv::expect_fields(FILE, line, &f, 3, 3)?;
            let kind = PageKind::parse(f[2])
                .ok_or_else(|| Error::malformed(FILE, line, format!("unknown kind {:?}", f[2])))?;
            entries.insert(
                f[0].to_string(),
                MappedPage {
                    canonical: f[1].to_string(),
                    kind,
                },
            );
        }
        for (t, m) in &entries {
            if entries.get(&m.canonical).map(|c| &c.canonical) != Some(&m.canonical) {
                return Err(Error::malformed(
                    FILE,
                    0,
                    format!(
                        "{t:?} maps to {:?}, which is not self-canonical",
                        m.canonical
                    ),
                ));
            }
        }
        Ok(CanonicalMap { entries })
    }
}

/// Parses `url_title \t kind` rows (kind: article, redirect, disambig).
pub fn parse_pages(text: &str) -> Result<Vec<PageRecord>> {
    const FILE: &str = "pages.tsv";
    let mut pages = Vec::new();
    for (line, f) in tsv::rows(text) {
        tsv::expect_fields(FILE, line, &f, 2, 2)?;
        let kind = match f[1] {
            "article" => PageKind::Article,
            "redirect" => PageKind::Redirect,
            "disambig" => PageKind::Disambiguation,
            other => {
                return Err(Error::malformed(
                    FILE,
                    line,
                    format!("unknown page kind {other:?}"),
                ))
            }
        };
        let url_title =
            canonicalize_title(f[0]).map_err(|_| Error::malformed(FILE, line, "empty title"))?;
        pages.push(PageRecord { url_title, kind });
    }
    Ok(pages)
}

/// Parses `source \t target` rows. Rows that collapse to a self-loop are dropped.
pub fn parse_redirects(text: &str) -> Result<Vec<RedirectEdge>> {
    const FILE: &str = "redirects.tsv";
    let mut edges = Vec::new();
    for (line, f) in tsv::rows(text) {
        tsv::expect_fields(FILE, line, &f, 2, 2)?;
        let title = |s: &str| {
            canonicalize_title(s).map_err(|_| Error::malformed(FILE, line, "empty title"))
        };
        let (source, target) = (title(f[0])?, title(f[1])?);
        if source != target {
            edges.push(RedirectEdge { source, target });
        }
    }
    Ok(edges)
}
