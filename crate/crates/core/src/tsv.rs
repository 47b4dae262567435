//! Line-oriented TSV helpers shared by the file formats.

use crate::error::{Error, Result};

/// Non-empty rows of a TSV body as `(1-based line number, fields)`.
pub(crate) fn rows<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

pub(crate) fn expect_fields<'a>(
    file: &str,
    line: usize,
    fields: &[&'a str],
    min: usize,
    max: usize,
) -> Result<()> {
    if fields.len() < min || fields.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min}..={max}")
        };
        return Err(Error::malformed(
            file,
            line,
            format!(
                "expected {want} tab-separated fields, found {}",
                fields.len()
            ),
        ));
    }
    Ok(())
}

pub(crate) fn parse_count(file: &str, line: usize, field: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::malformed(file, line, format!("not a count: {field:?}")))
}
