//! Heuristic filtering of candidate lists.
//!
//! 1. drop disambiguation pages; 2. drop date pages; 3. drop list-of pages;
//! 4. drop FUZZ-only suggestions unless string and title form an acronym
//!    pair, the string is a substring of the title, or the two are very
//!    similar; 5. drop weakly supported entries unless the title may
//!    disambiguate the string or the string is the page title.

use std::sync::LazyLock;

use regex::Regex;

use super::{levenshtein, lnrm, CandidateList, Stage};
use crate::canonical::{CanonicalMap, PageKind};
use crate::dictbuild::{strip_trailing_parenthetical, title_surface, Dictionary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeurConfig {
    /// Rule 5: at most this many links to the page overall is weak support.
    pub max_total_links: u64,
    /// Rule 5: at most this many string -> page links is weak support.
    pub max_string_links: u64,
    /// Rule 5: a score at most this is weak support.
    pub min_score: f64,
    /// Rule 4: edit distance / string length at most this is "very similar".
    pub max_edit_ratio: f64,
    /// Rule 4: strings at least this long that are one edit apart are "very similar".
    pub short_len: usize,
}

impl Default for HeurConfig {
    fn default() -> Self {
        HeurConfig {
            max_total_links: 10,
            max_string_links: 1,
            min_score: 0.001,
            max_edit_ratio: 0.1,
            short_len: 6,
        }
    }
}

const STOPWORDS: [&str; 8] = ["of", "the", "and", "for", "in", "at", "on", "de"];

static DATE_PAGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:\d{1,4}|\d{1,3}0s|(?:January|February|March|April|May|June|July|August|September|October|November|December)_\d{1,2}|\d+_(?:BC|AD))$",
    )
    .expect("valid date regex")
});

pub fn is_date_page(title: &str) -> bool {
    DATE_PAGE.is_match(title)
}

pub fn is_list_page(title: &str) -> bool {
    title.starts_with("List_of_") || title.starts_with("Lists_of_")
}

pub fn is_disambiguation_page(title: &str, kinds: Option<&CanonicalMap>) -> bool {
    title.ends_with("_(disambiguation)")
        || kinds.and_then(|m| m.kind_of(title)) == Some(PageKind::Disambiguation)
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(['_', ' ', '-']).filter(|w| !w.is_empty())
}

fn initials(s: &str) -> String {
    words(s)
        .filter(|w| !STOPWORDS.contains(&w.to_lowercase().as_str()))
        .filter_map(|w| w.chars().next())
        .flat_map(char::to_uppercase)
        .collect()
}

/// `short` (a single token with 2+ capitals) abbreviates the multi-word `long`.
fn abbreviates(short: &str, long: &str, any_order: bool) -> bool {
    if words(short).count() != 1 || words(long).count() < 2 {
        return false;
    }
    let caps: String = short.chars().filter(|c| c.is_uppercase()).collect();
    if caps.chars().count() < 2 {
        return false;
    }
    let inits = initials(long);
    if any_order {
        let mut a: Vec<char> = caps.chars().collect();
        let mut b: Vec<char> = inits.chars().collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    } else {
        caps == inits
    }
}

/// Either side is an acronym for the other (title read with trailing
/// parenthetical removed).
pub fn is_acronym_pair(string: &str, title: &str) -> bool {
    acronym_pair(string, title, false)
}

fn acronym_pair(string: &str, title: &str, any_order: bool) -> bool {
    let surface = title_surface(title);
    let t = strip_trailing_parenthetical(&surface);
    abbreviates(string, t, any_order) || abbreviates(t, string, any_order)
}

fn is_substring_of_title(string: &str, title: &str) -> bool {
    let s = lnrm(string);
    !s.is_empty() && lnrm(&title_surface(title)).as_str().contains(s.as_str())
}

fn is_very_similar(string: &str, title: &str, cfg: &HeurConfig) -> bool {
    let s = lnrm(string);
    let t = lnrm(strip_trailing_parenthetical(&title_surface(title)));
    if s == t {
        return true;
    }
    if s.is_empty() || t.is_empty() {
        return false;
    }
    let dist = levenshtein(s.as_bytes(), t.as_bytes());
    if dist == 1 && s.len() >= cfg.short_len && t.len() >= cfg.short_len {
        return true;
    }
    dist as f64 / s.len() as f64 <= cfg.max_edit_ratio
}

fn is_page_title(string: &str, title: &str) -> bool {
    let surface = title_surface(title);
    string == surface || string == strip_trailing_parenthetical(&surface)
}

/// Applies rules 1-5. The output is an order-preserving subset of `cl`.
pub fn heur_filter(
    cl: &CandidateList,
    s: &str,
    dict: &Dictionary,
    kinds: Option<&CanonicalMap>,
    cfg: &HeurConfig,
) -> CandidateList {
    let mut out = cl.clone();
    out.retain(|c| {
        let title = c.entity.as_str();
        if is_disambiguation_page(title, kinds) || is_date_page(title) || is_list_page(title) {
            return false;
        }
        if c.origin == Stage::Fuzz
            && !(is_acronym_pair(s, title)
                || is_substring_of_title(s, title)
                || is_very_similar(s, title, cfg))
        {
            return false;
        }
        let weak = dict.inbound_links(title) <= cfg.max_total_links
            || c.evidence.hits() <= cfg.max_string_links
            || c.score().value() <= cfg.min_score;
        if weak && !(acronym_pair(s, title, true) || is_page_title(s, title)) {
            return false;
        }
        true
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn page_type_detectors() {
        for t in [
            "2000",
            "1",
            "1990s",
            "January_1",
            "December_31",
            "44_BC",
            "1066_AD",
        ] {
            assert!(is_date_page(t), "{t}");
        }
        for t in ["2000_Olympics", "Mayday", "12345", "January", "Route_66"] {
            assert!(!is_date_page(t), "{t}");
        }
        assert!(is_list_page("List_of_cheeses"));
        assert!(is_list_page("Lists_of_cheeses"));
        assert!(!is_list_page("Listing"));
        assert!(is_disambiguation_page(
            "Hank_Williams_(disambiguation)",
            None
        ));
        assert!(!is_disambiguation_page("Hank_Williams", None));
    }

    #[test]
    fn acronym_detection() {
        assert!(is_acronym_pair("NDMC", "National_Defense_Medical_Center"));
        assert!(is_acronym_pair("National Defense Medical Center", "NDMC"));
        assert!(is_acronym_pair("BoA", "Bank_of_America"));
        assert!(!is_acronym_pair("MND", "MNW"));
        assert!(!is_acronym_pair("CNS", "Szekler_National_Council"));
        assert!(acronym_pair("CNS", "Szekler_National_Council", true));
        assert!(!acronym_pair("Washington", "Tacoma,_Washington", true));
    }

    #[test]
    fn similarity_rules() {
        let cfg = HeurConfig::default();
        assert!(is_very_similar(
            "Chunghua Telecom",
            "Chunghwa_Telecom",
            &cfg
        ));
        assert!(is_very_similar(
            "hank williams",
            "Hank_Williams_(basketball)",
            &cfg
        ));
        assert!(is_very_similar("Madona", "Madonna", &cfg));
        assert!(!is_very_similar("MND", "MNW", &cfg));
        assert!(!is_very_similar("Tank Williams", "Frank_Sinatra", &cfg));
        assert!(is_substring_of_title(
            "DeLorean Motor",
            "DeLorean_Motor_Company"
        ));
        assert!(!is_substring_of_title("!!", "Anything"));
    }
}
