//! Candidate generation: exact, normalized and fuzzy dictionary views,
//! cascades over them, and the heuristic filter.

mod heur;
mod normalize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use heur::{
    heur_filter, is_acronym_pair, is_date_page, is_disambiguation_page, is_list_page, HeurConfig,
};
pub use normalize::{levenshtein, levenshtein_within, lnrm, NormKey};

use crate::canonical::CanonicalMap;
use crate::dictbuild::{rank_order, Dictionary, LinkEvidence, Score, Sources};
use crate::par::{self, Execution};

/// Dictionary view a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Exct,
    Lnrm,
    Fuzz,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Exct => "EXCT",
            Stage::Lnrm => "LNRM",
            Stage::Fuzz => "FUZZ",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub entity: String,
    pub evidence: LinkEvidence,
    pub sources: Sources,
    pub origin: Stage,
}

impl Candidate {
    pub fn score(&self) -> Score {
        self.evidence.score()
    }

    fn rank_key(&self) -> (Score, u64, &str) {
        (self.score(), self.evidence.hits(), &self.entity)
    }
}

/// Ranked candidates for one query string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    pub query: String,
    pub candidates: Vec<Candidate>,
    /// Stage that produced the list; `None` when nothing matched.
    pub stage: Option<Stage>,
}

impl CandidateList {
    pub fn empty(query: &str) -> Self {
        CandidateList {
            query: query.to_string(),
            candidates: Vec::new(),
            stage: None,
        }
    }

    fn ranked(query: &str, mut candidates: Vec<Candidate>, stage: Stage) -> Self {
        candidates.sort_by(|a, b| rank_order(a.rank_key(), b.rank_key()));
        let stage = (!candidates.is_empty()).then_some(stage);
        CandidateList {
            query: query.to_string(),
            candidates,
            stage,
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.entity.as_str())
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.candidates.iter().any(|c| c.entity == entity)
    }

    /// Keeps candidates satisfying `keep`, preserving rank.
    pub fn retain(&mut self, keep: impl FnMut(&Candidate) -> bool) {
        self.candidates.retain(keep);
        if self.candidates.is_empty() {
            self.stage = None;
        }
    }

    /// `rank \t entity \t score \t origin` lines, ranks from 1.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.candidates.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                i + 1,
                c.entity,
                c.score(),
                c.origin
            ));
        }
        out
    }
}

/// Highest-ranked entity.
pub fn top1(cl: &CandidateList) -> Option<&str> {
    cl.candidates.first().map(|c| c.entity.as_str())
}

/// Merges the entries of several raw keys. Each entity's hits are summed;
/// its denominators are the summed per-string totals of *all* keys.
fn aggregate(d: &Dictionary, query: &str, keys: &[&str], stage: Stage) -> CandidateList {
    let mut totals = LinkEvidence::default();
    let mut per_entity: BTreeMap<&str, (LinkEvidence, Sources)> = BTreeMap::new();
    for key in keys {
        let Some(list) = d.get(key) else { continue };
        if let Some(first) = list.first() {
            totals.wiki_total += first.evidence.wiki_total;
            totals.web_total += first.evidence.web_total;
        }
        for e in list {
            let slot = per_entity.entry(&e.entity).or_default();
            slot.0.wiki_hits += e.evidence.wiki_hits;
            slot.0.web_hits += e.evidence.web_hits;
            slot.1 = slot.1.union(e.sources);
        }
    }
    let candidates = per_entity
        .into_iter()
        .map(|(entity, (hits, sources))| Candidate {
            entity: entity.to_string(),
            evidence: LinkEvidence::new(
                hits.wiki_hits,
                totals.wiki_total,
                hits.web_hits,
                totals.web_total,
            ),
            sources,
            origin: stage,
        })
        .collect();
    CandidateList::ranked(query, candidates, stage)
}

/// Entries stored under exactly `s`.
pub fn lookup_exct(d: &Dictionary, s: &str) -> CandidateList {
    let Some(list) = d.get(s) else {
        return CandidateList::empty(s);
    };
    let candidates = list
        .iter()
        .map(|e| Candidate {
            entity: e.entity.clone(),
            evidence: e.evidence,
            sources: e.sources,
            origin: Stage::Exct,
        })
        .collect();
    CandidateList::ranked(s, candidates, Stage::Exct)
}

/// Keys `k != s` with `lnrm(k) == lnrm(s)`, merged.
pub fn lookup_lnrm(d: &Dictionary, s: &str) -> CandidateList {
    let key = lnrm(s);
    if key.is_empty() {
        return CandidateList::empty(s);
    }
    let keys: Vec<&str> = d
        .keys_with_norm(&key)
        .iter()
        .map(String::as_str)
        .filter(|k| *k != s)
        .collect();
    aggregate(d, s, &keys, Stage::Lnrm)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FuzzOptions {
    /// Largest edit distance searched; unbounded when `None`.
    pub max_distance: Option<usize>,
    pub exec: Execution,
}

/// Normalized keys at the minimal positive byte distance from `key`.
///
/// Keys are bucketed by byte length; buckets are visited in order of
/// length difference, which lower-bounds the distance, so the scan stops
/// as soon as no closer key can exist.
pub fn nearest_norm_keys<'d>(
    d: &'d Dictionary,
    key: &NormKey,
    opts: &FuzzOptions,
) -> (Option<usize>, Vec<&'d NormKey>) {
    let by_len = d.norm_keys_by_len();
    let Some(&longest) = by_len.keys().next_back() else {
        return (None, Vec::new());
    };
    let qlen = key.len();
    let mut best = opts.max_distance;
    let mut matches: Vec<(usize, &NormKey)> = Vec::new();
    let max_delta = qlen.max(longest);
    for delta in 0..=max_delta {
        if best.is_some_and(|b| delta > b) {
            break;
        }
        let mut lens = vec![qlen + delta];
        if delta > 0 && qlen >= delta {
            lens.push(qlen - delta);
        }
        for len in lens {
            let Some(bucket) = by_len.get(&len) else {
                continue;
            };
            let bound = best.unwrap_or(usize::MAX);
            let found = par::map_range(opts.exec, bucket.len(), |i| {
                let k = &bucket[i];
                if k == key {
                    None
                } else {
                    levenshtein_within(key.as_bytes(), k.as_bytes(), bound).map(|dist| (dist, i))
                }
            });
            for (dist, i) in found.into_iter().flatten() {
                let k = &bucket[i];
                match best {
                    Some(b) if dist > b => continue,
                    Some(b) if dist < b => {
                        best = Some(dist);
                        matches.clear();
                    }
                    None => best = Some(dist),
                    _ => {}
                }
                matches.push((dist, k));
            }
        }
    }
    let Some(&(best_dist, _)) = matches.first() else {
        return (None, Vec::new());
    };
    let mut keys: Vec<&NormKey> = matches.into_iter().map(|(_, k)| k).collect();
    keys.sort();
    (Some(best_dist), keys)
}

/// Keys whose normalized form is at the minimal positive edit distance
/// from `lnrm(s)`, merged.
pub fn lookup_fuzz(d: &Dictionary, s: &str) -> CandidateList {
    lookup_fuzz_with(d, s, &FuzzOptions::default())
}

pub fn lookup_fuzz_with(d: &Dictionary, s: &str, opts: &FuzzOptions) -> CandidateList {
    let key = lnrm(s);
    if key.is_empty() {
        return CandidateList::empty(s);
    }
    let (_, norm_keys) = nearest_norm_keys(d, &key, opts);
    let keys: Vec<&str> = norm_keys
        .iter()
        .flat_map(|k| d.keys_with_norm(k))
        .map(String::as_str)
        .collect();
    aggregate(d, s, &keys, Stage::Fuzz)
}

/// A pluggable cascade stage. Dynamic sources (e.g. a search service) can
/// implement this and be chained after the built-in dictionary views.
pub trait CandidateSource: Sync {
    fn candidates(&self, query: &str) -> CandidateList;
}

pub struct ExctSource<'d>(pub &'d Dictionary);
pub struct LnrmSource<'d>(pub &'d Dictionary);
pub struct FuzzSource<'d>(pub &'d Dictionary, pub FuzzOptions);

impl CandidateSource for ExctSource<'_> {
    fn candidates(&self, query: &str) -> CandidateList {
        lookup_exct(self.0, query)
    }
}

impl CandidateSource for LnrmSource<'_> {
    fn candidates(&self, query: &str) -> CandidateList {
        lookup_lnrm(self.0, query)
    }
}

impl CandidateSource for FuzzSource<'_> {
    fn candidates(&self, query: &str) -> CandidateList {
        lookup_fuzz_with(self.0, query, &self.1)
    }
}

/// Consults stages in order and returns the first non-empty result.
#[derive(Default)]
pub struct Cascade<'a> {
    stages: Vec<Box<dyn CandidateSource + 'a>>,
}

impl<'a> Cascade<'a> {
    pub fn new() -> Self {
        Cascade { stages: Vec::new() }
    }

    pub fn then(mut self, stage: impl CandidateSource + 'a) -> Self {
        self.stages.push(Box::new(stage));
        self
    }

    pub fn lookup(&self, query: &str) -> CandidateList {
        for stage in &self.stages {
            let cl = stage.candidates(query);
            if !cl.is_empty() {
                return cl;
            }
        }
        CandidateList::empty(query)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeMode {
    Lnrm,
    Fuzz,
}

/// EXCT, then LNRM, then (in FUZZ mode) FUZZ.
pub fn cascade(d: &Dictionary, s: &str, mode: CascadeMode) -> CandidateList {
    cascade_with(d, s, mode, &FuzzOptions::default())
}

pub fn cascade_with(
    d: &Dictionary,
    s: &str,
    mode: CascadeMode,
    fuzz: &FuzzOptions,
) -> CandidateList {
    let chain = Cascade::new().then(ExctSource(d)).then(LnrmSource(d));
    let chain = match mode {
        CascadeMode::Lnrm => chain,
        CascadeMode::Fuzz => chain.then(FuzzSource(d, *fuzz)),
    };
    chain.lookup(s)
}

/// Candidate-generation strategy selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateMode {
    Exct,
    #[default]
    Lnrm,
    Fuzz,
    Heur,
}

impl CandidateMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EXCT" => Some(CandidateMode::Exct),
            "LNRM" => Some(CandidateMode::Lnrm),
            "FUZZ" => Some(CandidateMode::Fuzz),
            "HEUR" => Some(CandidateMode::Heur),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CandidateMode::Exct => "EXCT",
            CandidateMode::Lnrm => "LNRM",
            CandidateMode::Fuzz => "FUZZ",
            CandidateMode::Heur => "HEUR",
        }
    }
}

/// Dictionary plus everything needed to run one [`CandidateMode`].
#[derive(Clone, Copy)]
pub struct CandidateGenerator<'a> {
    pub dict: &'a Dictionary,
    pub kinds: Option<&'a CanonicalMap>,
    pub mode: CandidateMode,
    pub heur: HeurConfig,
    pub fuzz: FuzzOptions,
}

impl<'a> CandidateGenerator<'a> {
    pub fn new(dict: &'a Dictionary, mode: CandidateMode) -> Self {
        CandidateGenerator {
            dict,
            kinds: None,
            mode,
            heur: HeurConfig::default(),
            fuzz: FuzzOptions::default(),
        }
    }

    pub fn generate(&self, s: &str) -> CandidateList {
        match self.mode {
            CandidateMode::Exct => lookup_exct(self.dict, s),
            CandidateMode::Lnrm => cascade_with(self.dict, s, CascadeMode::Lnrm, &self.fuzz),
            CandidateMode::Fuzz => cascade_with(self.dict, s, CascadeMode::Fuzz, &self.fuzz),
            CandidateMode::Heur => {
                let cl = cascade_with(self.dict, s, CascadeMode::Fuzz, &self.fuzz);
                heur_filter(&cl, s, self.dict, self.kinds, &self.heur)
            }
        }
    }
}

/// Reverse index: entity -> distinct dictionary strings naming it.
pub fn strings_by_entity(d: &Dictionary) -> HashMap<&str, Vec<&str>> {
    let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
    for (s, list) in d.iter() {
        for e in list {
            out.entry(e.entity.as_str()).or_default().push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictbuild::{DictionaryEntry, Source};
    use proptest::prelude::*;

    fn entry(s: &str, e: &str, ev: (u64, u64, u64, u64)) -> DictionaryEntry {
        let mut sources = Sources::default();
        if ev.0 > 0 {
            sources.insert(Source::AnchorWiki);
        }
        if ev.2 > 0 {
            sources.insert(Source::AnchorWeb);
        }
        if sources.is_empty() {
            sources.insert(Source::Title);
        }
        DictionaryEntry {
            string: s.into(),
            entity: e.into(),
            evidence: LinkEvidence::new(ev.0, ev.1, ev.2, ev.3),
            sources,
        }
    }

    #[test]
    fn exct_is_pure_and_misses_cleanly() {
        let d = Dictionary::from_entries([entry("A", "X", (1, 1, 0, 0))]);
        assert_eq!(lookup_exct(&d, "A"), lookup_exct(&d, "A"));
        assert!(lookup_exct(&d, "B").is_empty());
        assert_eq!(lookup_exct(&d, "B").stage, None);
    }

    #[test]
    fn lnrm_sums_ratios_not_means() {
        let d = Dictionary::from_entries([
            entry("Foo Bar", "E", (3, 4, 0, 0)),
            entry("Foo Bar", "F", (1, 4, 0, 0)),
            entry("FOO BAR", "E", (1, 4, 0, 0)),
            entry("FOO BAR", "G", (3, 4, 0, 0)),
        ]);
        let cl = lookup_lnrm(&d, "foo-bar");
        let e = cl.candidates.iter().find(|c| c.entity == "E").unwrap();
        assert_eq!(e.score(), Score::new(4, 8));
        assert_eq!(e.score().render(), "0.5000");
        // exact key excluded
        let cl = lookup_lnrm(&d, "Foo Bar");
        assert_eq!(cl.entities().collect::<Vec<_>>(), vec!["G", "E"]);
        assert!(lookup_lnrm(&d, "!!!").is_empty());
    }

    #[test]
    fn fuzz_matches_brute_force_on_tiny_dictionary() {
        let d = Dictionary::from_entries([
            entry("Tank Williams", "Tank_Williams", (12, 12, 0, 0)),
            entry("Hank Willams", "Hank_Williams", (0, 0, 2, 2)),
            entry("Frank Williams", "Frank_Williams", (4, 4, 0, 0)),
        ]);
        let cl = lookup_fuzz(&d, "Hank Williams");
        // brute force: distances over all keys
        let q = lnrm("Hank Williams");
        let dists: Vec<(usize, &str)> = d
            .iter()
            .map(|(k, _)| (levenshtein(q.as_bytes(), lnrm(k).as_bytes()), k))
            .filter(|(dd, _)| *dd > 0)
            .collect();
        let min = dists.iter().map(|x| x.0).min().unwrap();
        let mut expected: Vec<&str> = dists
            .iter()
            .filter(|x| x.0 == min)
            .flat_map(|(_, k)| d.get(k).unwrap().iter().map(|e| e.entity.as_str()))
            .collect();
        expected.sort();
        let mut got: Vec<&str> = cl.entities().collect();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(got, vec!["Hank_Williams", "Tank_Williams"]);
    }

    #[test]
    fn fuzz_respects_distance_cap() {
        let d = Dictionary::from_entries([entry("abcdef", "X", (1, 1, 0, 0))]);
        let capped = FuzzOptions {
            max_distance: Some(2),
            exec: Execution::Sequential,
        };
        assert!(lookup_fuzz_with(&d, "abcxyz", &capped).is_empty());
        assert_eq!(lookup_fuzz(&d, "abcxyz").len(), 1);
        assert!(lookup_fuzz(&d, "").is_empty());
    }

    #[test]
    fn cascade_stage_order() {
        let d = Dictionary::from_entries([
            entry("Alpha", "A1", (2, 2, 0, 0)),
            entry("ALPHA", "A2", (5, 5, 0, 0)),
            entry("Betaa", "B1", (1, 1, 0, 0)),
        ]);
        let cl = cascade(&d, "Alpha", CascadeMode::Fuzz);
        assert_eq!(cl.stage, Some(Stage::Exct));
        assert_eq!(top1(&cl), Some("A1"));
        let cl = cascade(&d, "alpha", CascadeMode::Lnrm);
        assert_eq!(cl.stage, Some(Stage::Lnrm));
        assert_eq!(cl.len(), 2);
        assert!(cascade(&d, "Beta", CascadeMode::Lnrm).is_empty());
        let cl = cascade(&d, "Beta", CascadeMode::Fuzz);
        assert_eq!(cl.stage, Some(Stage::Fuzz));
        assert!(cascade(&d, "zzzzzzzzzzzz", CascadeMode::Lnrm).is_empty());
    }

    #[test]
    fn top1_ties_break_on_title() {
        let d = Dictionary::from_entries([
            entry("S", "Zeta", (1, 2, 0, 0)),
            entry("S", "Alpha", (1, 2, 0, 0)),
        ]);
        assert_eq!(top1(&lookup_exct(&d, "S")), Some("Alpha"));
        assert_eq!(top1(&CandidateList::empty("S")), None);
    }

    #[test]
    fn candidate_tsv_rendering() {
        let d = Dictionary::from_entries([
            entry("S", "X", (1, 4, 0, 0)),
            entry("S", "Y", (3, 4, 0, 0)),
        ]);
        assert_eq!(
            lookup_exct(&d, "S").to_tsv(),
            "1\tY\t0.7500\tEXCT\n2\tX\t0.2500\tEXCT\n"
        );
    }

    fn dict_strategy() -> impl Strategy<Value = Vec<DictionaryEntry>> {
        prop::collection::vec(("[aAbB ]{1,4}", "[XYZW]", 0u64..9, 0u64..9), 1..25).prop_map(
            |rows| {
                let mut totals: HashMap<String, u64> = HashMap::new();
                for (s, _, x, _) in &rows {
                    *totals.entry(s.clone()).or_default() += x;
                }
                rows.into_iter()
                    .map(|(s, e, x, _)| {
                        let t = totals[&s];
                        entry(&s, &e, (x, t, 0, 0))
                    })
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn exct_hit_short_circuits(entries in dict_strategy(), q in "[aAbB ]{1,4}") {
            let d = Dictionary::from_entries(entries);
            let ex = lookup_exct(&d, &q);
            if !ex.is_empty() {
                prop_assert_eq!(cascade(&d, &q, CascadeMode::Lnrm), ex.clone());
                prop_assert_eq!(cascade(&d, &q, CascadeMode::Fuzz), ex);
            }
        }

        #[test]
        fn fuzz_equals_linear_scan(entries in dict_strategy(), q in "[aAbBc ]{1,5}") {
            let d = Dictionary::from_entries(entries);
            let key = lnrm(&q);
            let (best, keys) = nearest_norm_keys(&d, &key, &FuzzOptions::default());
            let scan: Vec<(usize, NormKey)> = d
                .iter()
                .map(|(k, _)| lnrm(k))
                .filter(|k| !k.is_empty() && *k != key)
                .map(|k| (levenshtein(key.as_bytes(), k.as_bytes()), k))
                .collect();
            let min = scan.iter().map(|x| x.0).min();
            prop_assert_eq!(best, min);
            let mut expected: Vec<NormKey> = scan.into_iter().filter(|x| Some(x.0) == min).map(|x| x.1).collect();
            expected.sort();
            expected.dedup();
            let got: Vec<NormKey> = keys.into_iter().cloned().collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn aggregate_is_partition_invariant(entries in dict_strategy(), split in 0usize..8) {
            let d = Dictionary::from_entries(entries);
            let keys: Vec<&str> = d.iter().map(|(k, _)| k).collect();
            let split = split.min(keys.len());
            let whole = aggregate(&d, "q", &keys, Stage::Lnrm);
            let left = aggregate(&d, "q", &keys[..split], Stage::Lnrm);
            let right = aggregate(&d, "q", &keys[split..], Stage::Lnrm);
            for c in &whole.candidates {
                let mut merged = LinkEvidence::default();
                for part in [&left, &right] {
                    let tot = part.candidates.first().map(|x| x.evidence).unwrap_or_default();
                    merged.wiki_total += tot.wiki_total;
                    merged.web_total += tot.web_total;
                    if let Some(p) = part.candidates.iter().find(|x| x.entity == c.entity) {
                        merged.wiki_hits += p.evidence.wiki_hits;
                        merged.web_hits += p.evidence.web_hits;
                    }
                }
                prop_assert_eq!(merged, c.evidence);
            }
        }

        #[test]
        fn top1_survives_uniform_rescaling(entries in dict_strategy(), k in 2u64..50, q in "[aAbB ]{1,4}") {
            let d = Dictionary::from_entries(entries.clone());
            let scaled = Dictionary::from_entries(entries.into_iter().map(|mut e| {
                e.evidence = LinkEvidence::new(
                    e.evidence.wiki_hits * k, e.evidence.wiki_total * k,
                    e.evidence.web_hits * k, e.evidence.web_total * k);
                e
            }));
            for mode in [CascadeMode::Lnrm, CascadeMode::Fuzz] {
                let (a, b) = (cascade(&d, &q, mode), cascade(&scaled, &q, mode));
                prop_assert_eq!(top1(&a), top1(&b));
            }
        }
    }
}
