//! Scoring against a TAC-KBP style knowledge base and gold standard.
//!
//! File formats (all tab separated):
//!
//! * `kb.tsv`: `kb_id  wiki_title  PER|ORG|GPE|UKN`
//! * `gold.tsv`: `query_id  kb_id|NIL  wiki_title|-  news|web`
//! * answers: `query_id  kb_id|NIL  wiki_title|-  [error=<code>]`
//! * queries: `<query id=".."><name>..</name><docid>..</docid></query>`
//!   elements anywhere under the XML root.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::tsv;

pub const NIL: &str = "NIL";
const KB_FILE: &str = "kb";
const GOLD_FILE: &str = "gold";
const ANSWERS_FILE: &str = "answers";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Per,
    Org,
    Gpe,
    Ukn,
}

impl EntityType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PER" => Some(EntityType::Per),
            "ORG" => Some(EntityType::Org),
            "GPE" => Some(EntityType::Gpe),
            "UKN" => Some(EntityType::Ukn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbRecord {
    pub kb_id: String,
    pub wiki_title: String,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    records: Vec<KbRecord>,
    by_title: HashMap<String, usize>,
    by_id: HashMap<String, usize>,
}

impl KnowledgeBase {
    pub fn new(records: Vec<KbRecord>) -> Result<Self> {
        let mut kb = KnowledgeBase::default();
        for (i, r) in records.iter().enumerate() {
            if kb.by_id.insert(r.kb_id.clone(), i).is_some() {
                return Err(Error::malformed(
                    KB_FILE,
                    i + 1,
                    format!("duplicate kb_id {}", r.kb_id),
                ));
            }
            if kb.by_title.insert(r.wiki_title.clone(), i).is_some() {
                return Err(Error::malformed(
                    KB_FILE,
                    i + 1,
                    format!("duplicate wiki_title {}", r.wiki_title),
                ));
            }
        }
        kb.records = records;
        Ok(kb)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen_ids = HashSet::new();
        let mut seen_titles = HashSet::new();
        for (line, f) in tsv::rows(text) {
            tsv::expect_fields(KB_FILE, line, &f, 3, 3)?;
            let entity_type = EntityType::parse(f[2]).ok_or_else(|| {
                Error::malformed(KB_FILE, line, "type must be PER, ORG, GPE or UKN")
            })?;
            if f[0].is_empty() || f[1].is_empty() {
                return Err(Error::malformed(KB_FILE, line, "empty kb_id or wiki_title"));
            }
            if !seen_ids.insert(f[0]) || !seen_titles.insert(f[1]) {
                return Err(Error::malformed(
                    KB_FILE,
                    line,
                    "duplicate kb_id or wiki_title",
                ));
            }
            records.push(KbRecord {
                kb_id: f[0].to_string(),
                wiki_title: f[1].to_string(),
                entity_type,
            });
        }
        Self::new(records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[KbRecord] {
        &self.records
    }

    pub fn id_of(&self, wiki_title: &str) -> Option<&str> {
        self.by_title
            .get(wiki_title)
            .map(|&i| self.records[i].kb_id.as_str())
    }

    pub fn title_of(&self, kb_id: &str) -> Option<&str> {
        self.by_id
            .get(kb_id)
            .map(|&i| self.records[i].wiki_title.as_str())
    }

    pub fn titles(&self) -> HashSet<String> {
        self.by_title.keys().cloned().collect()
    }
}

/// KB id of `entity`, or [`NIL`] when it is absent or there is no entity.
pub fn map_to_kb<'k>(kb: &'k KnowledgeBase, entity: Option<&str>) -> &'k str {
    entity.and_then(|e| kb.id_of(e)).unwrap_or(NIL)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub name: String,
    pub docid: String,
}

pub fn parse_queries(xml: &str) -> Result<Vec<Query>> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| Error::Xml(e.to_string()))?;
    let mut out = Vec::new();
    for q in doc.descendants().filter(|n| n.has_tag_name("query")) {
        let id = q.attribute("id").unwrap_or("").trim();
        let child = |tag: &str| {
            q.children()
                .find(|c| c.has_tag_name(tag))
                .and_then(|c| c.text())
                .map(str::trim)
                .unwrap_or("")
                .to_string()
        };
        let (name, docid) = (child("name"), child("docid"));
        if id.is_empty() || name.is_empty() || docid.is_empty() {
            let pos = doc.text_pos_at(q.range().start);
            return Err(Error::Xml(format!(
                "query at line {} needs a non-empty id, <name> and <docid>",
                pos.row
            )));
        }
        out.push(Query {
            id: id.to_string(),
            name,
            docid,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Genre {
    News,
    Web,
}

impl Genre {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "news" => Some(Genre::News),
            "web" => Some(Genre::Web),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::News => "news",
            Genre::Web => "web",
        }
    }
}

fn optional(s: &str) -> Option<String> {
    (s != "-" && s != NIL && !s.is_empty()).then(|| s.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub query_id: String,
    /// `None` for NIL.
    pub kb_id: Option<String>,
    pub wiki_title: Option<String>,
    pub genre: Genre,
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, f) in tsv::rows(text) {
        tsv::expect_fields(GOLD_FILE, line, &f, 4, 4)?;
        let genre = Genre::parse(f[3])
            .ok_or_else(|| Error::malformed(GOLD_FILE, line, "genre must be news or web"))?;
        if f[0].is_empty() || !seen.insert(f[0]) {
            return Err(Error::malformed(
                GOLD_FILE,
                line,
                "empty or duplicate query_id",
            ));
        }
        out.push(GoldRecord {
            query_id: f[0].to_string(),
            kb_id: optional(f[1]),
            wiki_title: optional(f[2]),
            genre,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub query_id: String,
    pub kb_id: Option<String>,
    pub wiki_title: Option<String>,
    pub error: Option<String>,
}

impl Answer {
    pub fn to_row(&self) -> String {
        let mut row = format!(
            "{}\t{}\t{}",
            self.query_id,
            self.kb_id.as_deref().unwrap_or(NIL),
            self.wiki_title.as_deref().unwrap_or("-")
        );
        if let Some(e) = &self.error {
            let _ = write!(row, "\terror={e}");
        }
        row
    }
}

pub fn write_answers(answers: &[Answer]) -> String {
    answers.iter().map(|a| a.to_row() + "\n").collect()
}

pub fn parse_answers(text: &str) -> Result<Vec<Answer>> {
    let mut out = Vec::new();
    for (line, f) in tsv::rows(text) {
        tsv::expect_fields(ANSWERS_FILE, line, &f, 3, 4)?;
        let error = match f.get(3) {
            Some(e) => Some(
                e.strip_prefix("error=")
                    .ok_or_else(|| {
                        Error::malformed(ANSWERS_FILE, line, "fourth column must be error=<code>")
                    })?
                    .to_string(),
            ),
            None => None,
        };
        out.push(Answer {
            query_id: f[0].to_string(),
            kb_id: optional(f[1]),
            wiki_title: optional(f[2]),
            error,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subset {
    #[default]
    All,
    KbOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub n: usize,
    pub correct: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.n += 1;
        self.correct += usize::from(ok);
    }

    /// `correct / n`, or 0 for an empty tally.
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NilStats {
    /// Gold-NIL queries and how many were answered NIL.
    pub gold_nil: Tally,
    /// Gold-KB queries and how many got the right KB id.
    pub gold_kb: Tally,
    pub predicted_nil: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub subset: Subset,
    pub n_queries: usize,
    pub n_correct: usize,
    pub micro_accuracy: f64,
    pub per_genre: BTreeMap<Genre, Tally>,
    pub nil: NilStats,
    /// Gold queries with no answer row, or an error row; scored incorrect.
    pub unanswered: usize,
}

pub fn micro_accuracy(gold: &[GoldRecord], answers: &[Answer], subset: Subset) -> EvalReport {
    let by_id: HashMap<&str, &Answer> = answers.iter().map(|a| (a.query_id.as_str(), a)).collect();
    let mut total = Tally::default();
    let mut per_genre: BTreeMap<Genre, Tally> = BTreeMap::new();
    let mut nil = NilStats::default();
    let mut unanswered = 0;
    for g in gold {
        if subset == Subset::KbOnly && g.kb_id.is_none() {
            continue;
        }
        let answer = by_id.get(g.query_id.as_str()).filter(|a| a.error.is_none());
        let ok = match answer {
            Some(a) => a.kb_id == g.kb_id,
            None => {
                unanswered += 1;
                false
            }
        };
        if answer.is_some_and(|a| a.kb_id.is_none()) {
            nil.predicted_nil += 1;
        }
        total.add(ok);
        per_genre.entry(g.genre).or_default().add(ok);
        if g.kb_id.is_none() {
            nil.gold_nil.add(ok);
        } else {
            nil.gold_kb.add(ok);
        }
    }
    EvalReport {
        subset,
        n_queries: total.n,
        n_correct: total.correct,
        micro_accuracy: total.accuracy(),
        per_genre,
        nil,
        unanswered,
    }
}

impl EvalReport {
    /// Human-readable aligned table.
    pub fn render(&self) -> String {
        let mut rows: Vec<(String, Tally)> = vec![(
            "all".into(),
            Tally {
                n: self.n_queries,
                correct: self.n_correct,
            },
        )];
        for (g, t) in &self.per_genre {
            rows.push((g.as_str().into(), *t));
        }
        if self.subset == Subset::All {
            rows.push(("gold-kb".into(), self.nil.gold_kb));
            rows.push(("gold-nil".into(), self.nil.gold_nil));
        }
        let mut out = format!(
            "subset: {}\n{:<10} {:>8} {:>8} {:>9}\n",
            match self.subset {
                Subset::All => "ALL",
                Subset::KbOnly => "KB_ONLY",
            },
            "slice",
            "queries",
            "correct",
            "accuracy"
        );
        for (name, t) in rows {
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>8} {:>9.4}",
                name,
                t.n,
                t.correct,
                t.accuracy()
            );
        }
        let _ = writeln!(
            out,
            "predicted NIL: {}  unanswered: {}",
            self.nil.predicted_nil, self.unanswered
        );
        out
    }

    /// `slice  queries  correct  accuracy` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("slice\tqueries\tcorrect\taccuracy\n");
        let mut row = |name: &str, t: Tally| {
            let _ = writeln!(out, "{name}\t{}\t{}\t{:.4}", t.n, t.correct, t.accuracy());
        };
        row(
            "all",
            Tally {
                n: self.n_queries,
                correct: self.n_correct,
            },
        );
        for (g, t) in &self.per_genre {
            row(g.as_str(), *t);
        }
        row("gold-kb", self.nil.gold_kb);
        row("gold-nil", self.nil.gold_nil);
        out
    }
}

/// Gold wiki title for every non-NIL gold query: the gold row's own title,
/// else the KB record's.
pub fn gold_titles(gold: &[GoldRecord], kb: Option<&KnowledgeBase>) -> BTreeMap<String, String> {
    gold.iter()
        .filter_map(|g| {
            let id = g.kb_id.as_deref()?;
            let title = g
                .wiki_title
                .clone()
                .or_else(|| kb?.title_of(id).map(str::to_string))?;
            Some((g.query_id.clone(), title))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    /// `usize::MAX` stands for no cutoff.
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall of the top-k candidates over the gold queries.
/// Precision divides by candidates actually returned; no candidates at all
/// gives precision 0.
pub fn pr_curve(
    gold: &BTreeMap<String, String>,
    ranked: &HashMap<String, Vec<String>>,
    ks: &[usize],
) -> Vec<PrPoint> {
    ks.iter()
        .map(|&k| {
            let mut returned = 0usize;
            let mut hits = 0usize;
            for (q, title) in gold {
                let list = ranked.get(q).map_or(&[][..], Vec::as_slice);
                let top = &list[..k.min(list.len())];
                returned += top.len();
                hits += usize::from(top.iter().any(|c| c == title));
            }
            PrPoint {
                k,
                precision: if returned == 0 {
                    0.0
                } else {
                    hits as f64 / returned as f64
                },
                recall: if gold.is_empty() {
                    0.0
                } else {
                    hits as f64 / gold.len() as f64
                },
            }
        })
        .collect()
}

pub fn render_pr_curve(points: &[PrPoint]) -> String {
    let mut out = String::from("k\tprecision\trecall\n");
    for p in points {
        let k = if p.k == usize::MAX {
            "inf".to_string()
        } else {
            p.k.to_string()
        };
        let _ = writeln!(out, "{k}\t{:.4}\t{:.4}", p.precision, p.recall);
    }
    out
}

/// Fraction of gold queries whose gold title appears anywhere in the list.
pub fn oracle_accuracy(
    gold: &BTreeMap<String, String>,
    ranked: &HashMap<String, Vec<String>>,
) -> f64 {
    fraction(gold, |q, t| ranked.get(q).is_some_and(|l| l.contains(t)))
}

/// Fraction of gold queries whose list starts with the gold title.
pub fn top1_accuracy(
    gold: &BTreeMap<String, String>,
    ranked: &HashMap<String, Vec<String>>,
) -> f64 {
    fraction(gold, |q, t| {
        ranked.get(q).and_then(|l| l.first()) == Some(t)
    })
}

fn fraction(gold: &BTreeMap<String, String>, ok: impl Fn(&String, &String) -> bool) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    gold.iter().filter(|(q, t)| ok(q, t)).count() as f64 / gold.len() as f64
}

/// Zero / one / many breakdown of per-item counts, with the mean over the
/// "many" bucket.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpreadTable {
    pub items: usize,
    pub none: usize,
    pub single: usize,
    pub multiple: usize,
    /// Mean count over items with two or more; 0 when there are none.
    pub mean_multiple: f64,
}

impl SpreadTable {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Self {
        let mut t = SpreadTable::default();
        let mut sum = 0usize;
        for c in counts {
            t.items += 1;
            match c {
                0 => t.none += 1,
                1 => t.single += 1,
                _ => {
                    t.multiple += 1;
                    sum += c;
                }
            }
        }
        if t.multiple > 0 {
            t.mean_multiple = sum as f64 / t.multiple as f64;
        }
        t
    }

    pub fn render(&self, item: &str) -> String {
        format!(
            "{item}\tnone\tsingle\tmultiple\tmean\n{}\t{}\t{}\t{}\t{:.2}\n",
            self.items, self.none, self.single, self.multiple, self.mean_multiple
        )
    }
}

/// Per query string, the number of distinct KB ids annotators assigned.
/// Strings whose every label is NIL fall in the `none` bucket.
pub fn gold_ambiguity(queries: &[Query], gold: &[GoldRecord]) -> SpreadTable {
    let label: HashMap<&str, Option<&str>> = gold
        .iter()
        .map(|g| (g.query_id.as_str(), g.kb_id.as_deref()))
        .collect();
    let mut by_string: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for q in queries {
        let Some(l) = label.get(q.id.as_str()) else {
            continue;
        };
        let ids = by_string.entry(q.name.as_str()).or_default();
        ids.extend(*l);
    }
    SpreadTable::from_counts(by_string.values().map(BTreeSet::len))
}

/// Per distinct query string, the number of candidates a dictionary offers.
pub fn dictionary_ambiguity<'q>(
    strings: impl IntoIterator<Item = &'q str>,
    count: impl Fn(&str) -> usize,
) -> SpreadTable {
    let unique: BTreeSet<&str> = strings.into_iter().collect();
    SpreadTable::from_counts(unique.into_iter().map(count))
}

/// Per gold KB entity, the number of distinct query strings naming it.
pub fn gold_synonymy(queries: &[Query], gold: &[GoldRecord]) -> SpreadTable {
    let name: HashMap<&str, &str> = queries
        .iter()
        .map(|q| (q.id.as_str(), q.name.as_str()))
        .collect();
    let mut by_entity: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for g in gold {
        if let (Some(id), Some(n)) = (g.kb_id.as_deref(), name.get(g.query_id.as_str())) {
            by_entity.entry(id).or_default().insert(n);
        }
    }
    SpreadTable::from_counts(by_entity.values().map(BTreeSet::len))
}

/// Per distinct gold entity (by wiki title), the number of dictionary
/// strings naming it.
pub fn dictionary_synonymy<'g>(
    entities: impl IntoIterator<Item = &'g str>,
    strings_for: impl Fn(&str) -> usize,
) -> SpreadTable {
    let unique: BTreeSet<&str> = entities.into_iter().collect();
    SpreadTable::from_counts(unique.into_iter().map(strings_for))
}

impl fmt::Display for SpreadTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} items: {} none, {} single, {} multiple (mean {:.2})",
            self.items, self.none, self.single, self.multiple, self.mean_multiple
        )
    }
}
