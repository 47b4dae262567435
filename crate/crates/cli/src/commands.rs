use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ned_core::canonical::{parse_pages, parse_redirects, CanonicalMap};
use ned_core::dictbuild::{harvest, parse_links, Dictionary};
use ned_core::evalkit::{
    self, gold_titles, map_to_kb, micro_accuracy, parse_answers, parse_gold, parse_queries,
    pr_curve, render_pr_curve, Answer, KnowledgeBase, Subset,
};
use ned_core::expand::{parse_annotations, Standoff};
use ned_core::lookup::{strings_by_entity, CandidateGenerator};
use ned_core::par;
use ned_core::wordexpert::{
    extract_spans, parse_models, resolve_mention, train_all, write_models, write_spans, Corpus,
    ExpansionHooks, ExtractConfig, ModelSet, RuleAnnotator,
};
use ned_core::Error;

use crate::config::RunConfig;
use crate::{CliError, Command};

pub fn dispatch(cfg: &RunConfig, command: Command) -> Result<(), CliError> {
    match command {
        Command::BuildCanonical => build_canonical(cfg),
        Command::BuildDict => build_dict(cfg),
        Command::Lookup { strings } => lookup(cfg, &strings),
        Command::ExtractSpans { string, out } => extract(cfg, &string, out.as_deref()),
        Command::Train { strings } => train(cfg, strings),
        Command::Disambiguate => disambiguate(cfg),
        Command::Evaluate { tsv, pr, ks } => evaluate(cfg, tsv, pr, &ks),
        Command::Stats => stats(cfg),
        Command::PrCurve { ks } => curve(cfg, &ks),
    }
}

/// Writes `text` to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
            }
            fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e))
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn load_kb(cfg: &RunConfig) -> Result<Option<KnowledgeBase>, CliError> {
    Ok(cfg
        .read_optional("kb")?
        .map(|t| KnowledgeBase::parse(&t))
        .transpose()?)
}

fn build_map(cfg: &RunConfig) -> Result<CanonicalMap, CliError> {
    let pages = parse_pages(&cfg.read("pages")?)?;
    let edges = parse_redirects(&cfg.read("redirects")?)?;
    let kb_titles = load_kb(cfg)?.map(|kb| kb.titles());
    Ok(CanonicalMap::build(&pages, &edges, kb_titles.as_ref()))
}

/// The canonical map from `canonical` if it exists, else built from pages
/// and redirects when those are configured.
fn canonical_map(cfg: &RunConfig) -> Result<Option<CanonicalMap>, CliError> {
    if let Some(p) = cfg.path("canonical").filter(|p| p.exists()) {
        let text = fs::read_to_string(p).map_err(|e| CliError::Io(p.to_path_buf(), e))?;
        return Ok(Some(CanonicalMap::from_tsv(&text)?));
    }
    if cfg.path("pages").is_some() && cfg.path("redirects").is_some() {
        return build_map(cfg).map(Some);
    }
    Ok(None)
}

fn load_dict(cfg: &RunConfig) -> Result<Dictionary, CliError> {
    Ok(Dictionary::from_tsv(&cfg.read("dictionary")?)?)
}

fn generator<'a>(
    cfg: &RunConfig,
    dict: &'a Dictionary,
    map: Option<&'a CanonicalMap>,
) -> CandidateGenerator<'a> {
    let mut g = CandidateGenerator::new(dict, cfg.cascade);
    g.kinds = map;
    g.heur = cfg.heur;
    g.fuzz = cfg.fuzz();
    g
}

fn build_canonical(cfg: &RunConfig) -> Result<(), CliError> {
    let map = build_map(cfg)?;
    emit(cfg.path("canonical"), &map.to_tsv())
}

fn build_dict(cfg: &RunConfig) -> Result<(), CliError> {
    let map = canonical_map(cfg)?.ok_or_else(|| {
        CliError::Usage(
            "build-dict needs an existing canonical file, or pages and redirects".into(),
        )
    })?;
    let links = parse_links(&cfg.read("links")?)?;
    let dict = harvest(&map, &links, cfg.execution())?;
    emit(cfg.path("dictionary"), &dict.to_tsv())
}

fn lookup(cfg: &RunConfig, strings: &[String]) -> Result<(), CliError> {
    let dict = load_dict(cfg)?;
    let map = canonical_map(cfg)?;
    let g = generator(cfg, &dict, map.as_ref());
    let mut out = String::new();
    for s in strings {
        let cl = g.generate(s);
        if strings.len() > 1 {
            let stage = cl.stage.map_or("none", |st| st.as_str());
            let _ = writeln!(out, "# query={s} stage={stage}");
        }
        out.push_str(&cl.to_tsv());
    }
    emit(None, &out)
}

fn load_corpus(cfg: &RunConfig, map: Option<&CanonicalMap>) -> Result<Corpus, CliError> {
    Ok(Corpus::parse(
        &cfg.read("corpus")?,
        map,
        &RuleAnnotator,
        cfg.execution(),
    )?)
}

fn extract_config(cfg: &RunConfig) -> ExtractConfig {
    ExtractConfig {
        span_mode: cfg.span_mode,
        match_mode: cfg.match_mode,
    }
}

fn extract(cfg: &RunConfig, s: &str, out: Option<&Path>) -> Result<(), CliError> {
    let dict = load_dict(cfg)?;
    let map = canonical_map(cfg)?;
    let corpus = load_corpus(cfg, map.as_ref())?;
    let g = generator(cfg, &dict, map.as_ref());
    let spans = extract_spans(&corpus, s, &g.generate(s), cfg.span_mode, cfg.match_mode)?;
    emit(out, &write_spans(&spans))
}

fn train(cfg: &RunConfig, mut strings: Vec<String>) -> Result<(), CliError> {
    let dict = load_dict(cfg)?;
    let map = canonical_map(cfg)?;
    let corpus = load_corpus(cfg, map.as_ref())?;
    let g = generator(cfg, &dict, map.as_ref());
    if strings.is_empty() {
        strings = match cfg.read_optional("queries")? {
            Some(xml) => parse_queries(&xml)?.into_iter().map(|q| q.name).collect(),
            None => dict.iter().map(|(s, _)| s.to_string()).collect(),
        };
    }
    strings.sort();
    strings.dedup();
    let results = train_all(
        &corpus,
        &strings,
        |s| g.generate(s),
        extract_config(cfg),
        &cfg.train,
        cfg.execution(),
    );
    let mut models = ModelSet::default();
    let mut backed_off = 0;
    for r in results {
        match r {
            Ok(m) => models.insert(m),
            Err(Error::DegenerateTraining { .. } | Error::NoCandidates(_)) => backed_off += 1,
            Err(e) => return Err(e.into()),
        }
    }
    eprintln!(
        "trained {} models; {} strings fall back to the dictionary",
        models.len(),
        backed_off
    );
    emit(cfg.path("models"), &write_models(models.sorted()))
}

fn find_doc(dir: &Path, docid: &str) -> Option<PathBuf> {
    [dir.join(docid), dir.join(format!("{docid}.txt"))]
        .into_iter()
        .find(|p| p.is_file())
}

struct QueryOutcome {
    answer: Answer,
    ranked: Vec<String>,
}

fn disambiguate(cfg: &RunConfig) -> Result<(), CliError> {
    let queries = parse_queries(&cfg.read("queries")?)?;
    let docs = cfg.input("docs")?.to_path_buf();
    let dict = load_dict(cfg)?;
    let map = canonical_map(cfg)?;
    let kb = load_kb(cfg)?.unwrap_or_default();
    let models: ModelSet = match (cfg.classifier, cfg.read_optional("models")?) {
        (true, Some(text)) => parse_models(&text)?.into_iter().collect(),
        _ => ModelSet::default(),
    };
    let g = generator(cfg, &dict, map.as_ref());
    let rc = cfg.resolve_config();
    let ann_dir = cfg.path("annotations").map(Path::to_path_buf);

    let outcomes = par::map(
        cfg.execution(),
        &queries,
        |q| -> Result<QueryOutcome, CliError> {
            let failed = |code: &str| QueryOutcome {
                answer: Answer {
                    query_id: q.id.clone(),
                    kb_id: None,
                    wiki_title: None,
                    error: Some(code.to_string()),
                },
                ranked: Vec::new(),
            };
            let Some(path) = find_doc(&docs, &q.docid) else {
                return Ok(failed("missing_doc"));
            };
            let text = fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
            let standoff = match ann_dir
                .as_ref()
                .map(|d| d.join(format!("{}.ann", q.docid)))
                .filter(|p| p.is_file())
            {
                Some(p) => {
                    let t = fs::read_to_string(&p).map_err(|e| CliError::Io(p.clone(), e))?;
                    Some(Standoff(parse_annotations(&t)?))
                }
                None => None,
            };
            let hooks = ExpansionHooks {
                ner: standoff.as_ref().map(|s| s as _),
                coref: standoff.as_ref().map(|s| s as _),
            };
            match resolve_mention(&text, &q.name, &g, &models, &RuleAnnotator, &rc, hooks) {
                Ok(r) => {
                    let kb_id = map_to_kb(&kb, r.entity.as_deref());
                    Ok(QueryOutcome {
                        answer: Answer {
                            query_id: q.id.clone(),
                            kb_id: (kb_id != evalkit::NIL).then(|| kb_id.to_string()),
                            wiki_title: r.entity,
                            error: None,
                        },
                        ranked: r.ranked,
                    })
                }
                Err(Error::MentionNotFound(_)) => Ok(failed("mention_not_found")),
                Err(e) => Err(e.into()),
            }
        },
    );
    let mut answers = String::new();
    let mut ranked = String::new();
    for (q, o) in queries.iter().zip(outcomes) {
        let o = o?;
        answers.push_str(&o.answer.to_row());
        answers.push('\n');
        for (i, e) in o.ranked.iter().enumerate() {
            let _ = writeln!(ranked, "{}\t{}\t{}", q.id, i + 1, e);
        }
    }
    if let Some(p) = cfg.path("ranked") {
        emit(Some(p), &ranked)?;
    }
    emit(cfg.path("answers"), &answers)
}

fn parse_ks(ks: &str) -> Result<Vec<usize>, CliError> {
    ks.split(',')
        .map(|k| match k.trim() {
            "inf" => Ok(usize::MAX),
            k => k
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| CliError::Usage(format!("bad cutoff {k:?} in --ks"))),
        })
        .collect()
}

fn parse_ranked(text: &str) -> Result<HashMap<String, Vec<String>>, CliError> {
    let mut by_query: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let f: Vec<&str> = line.split('\t').collect();
        let rank = f.get(1).and_then(|r| r.parse::<usize>().ok());
        let (3, Some(rank)) = (f.len(), rank) else {
            return Err(Error::MalformedRow {
                file: "ranked".into(),
                line: i + 1,
                reason: "expected query_id, rank and entity".into(),
            }
            .into());
        };
        by_query
            .entry(f[0].to_string())
            .or_default()
            .push((rank, f[2].to_string()));
    }
    Ok(by_query
        .into_iter()
        .map(|(q, mut v)| {
            v.sort();
            (q, v.into_iter().map(|(_, e)| e).collect())
        })
        .collect())
}

fn pr_text(cfg: &RunConfig, ks: &str) -> Result<String, CliError> {
    let ks = parse_ks(ks)?;
    let gold = parse_gold(&cfg.read("gold")?)?;
    let kb = load_kb(cfg)?;
    let ranked = parse_ranked(&cfg.read("ranked")?)?;
    let titles = gold_titles(&gold, kb.as_ref());
    Ok(render_pr_curve(&pr_curve(&titles, &ranked, &ks)))
}

fn evaluate(cfg: &RunConfig, tsv: bool, pr: bool, ks: &str) -> Result<(), CliError> {
    let gold = parse_gold(&cfg.read("gold")?)?;
    let answers = parse_answers(&cfg.read("answers")?)?;
    let mut out = String::new();
    for subset in [Subset::All, Subset::KbOnly] {
        let r = micro_accuracy(&gold, &answers, subset);
        if tsv {
            let name = if subset == Subset::All {
                "ALL"
            } else {
                "KB_ONLY"
            };
            let _ = writeln!(out, "# subset={name}");
            out.push_str(&r.to_tsv());
        } else {
            out.push_str(&r.render());
            out.push('\n');
        }
    }
    if pr {
        out.push_str(&pr_text(cfg, ks)?);
    }
    emit(None, &out)
}

fn curve(cfg: &RunConfig, ks: &str) -> Result<(), CliError> {
    emit(None, &pr_text(cfg, ks)?)
}

fn stats(cfg: &RunConfig) -> Result<(), CliError> {
    let queries = parse_queries(&cfg.read("queries")?)?;
    let gold = parse_gold(&cfg.read("gold")?)?;
    let mut out = String::new();
    let _ = write!(
        out,
        "# gold ambiguity\n{}",
        evalkit::gold_ambiguity(&queries, &gold).render("strings")
    );
    let _ = write!(
        out,
        "# gold synonymy\n{}",
        evalkit::gold_synonymy(&queries, &gold).render("entities")
    );
    if cfg.path("dictionary").is_some() {
        let dict = load_dict(cfg)?;
        let map = canonical_map(cfg)?;
        let g = generator(cfg, &dict, map.as_ref());
        let amb = evalkit::dictionary_ambiguity(queries.iter().map(|q| q.name.as_str()), |s| {
            g.generate(s).len()
        });
        let _ = write!(
            out,
            "# dictionary ambiguity ({})\n{}",
            cfg.cascade.as_str(),
            amb.render("strings")
        );
        let kb = load_kb(cfg)?;
        let titles = gold_titles(&gold, kb.as_ref());
        let reverse = strings_by_entity(&dict);
        let syn = evalkit::dictionary_synonymy(titles.values().map(String::as_str), |e| {
            reverse.get(e).map_or(0, Vec::len)
        });
        let _ = write!(out, "# dictionary synonymy\n{}", syn.render("entities"));
    }
    emit(None, &out)
}
