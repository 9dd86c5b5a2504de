//! Minimal CSV field handling shared by the lexicon and feature parsers.
//!
//! Fields containing commas or quotes are wrapped in double quotes, with
//! embedded quotes doubled.

use std::borrow::Cow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct UnterminatedQuote;

/// Splits one CSV record into unquoted fields.
pub(crate) fn split_fields(line: &str) -> Result<Vec<Cow<'_, str>>, UnterminatedQuote> {
    let mut out = Vec::new();
    let mut rest = line;
    loop {
        let (field, tail) = take_field(rest)?;
        out.push(field);
        match tail {
            Some(t) => rest = t,
            None => return Ok(out),
        }
    }
}

/// Reads the first `n` fields and returns them together with the raw,
/// untouched remainder after the `n`-th separator (`None` if the record has
/// exactly `n` fields, and fewer than `n` fields are returned if the record
/// is short).
pub(crate) fn split_leading(
    line: &str,
    n: usize,
) -> Result<(Vec<Cow<'_, str>>, Option<&str>), UnterminatedQuote> {
    let mut out = Vec::with_capacity(n);
    let mut rest = line;
    while out.len() < n {
        let (field, tail) = take_field(rest)?;
        out.push(field);
        match tail {
            Some(t) => rest = t,
            None => return Ok((out, None)),
        }
    }
    Ok((out, Some(rest)))
}

/// Takes one field off the front of `s`. The returned tail is `Some` when a
/// separator followed the field.
fn take_field(s: &str) -> Result<(Cow<'_, str>, Option<&str>), UnterminatedQuote> {
    if let Some(body) = s.strip_prefix('"') {
        let mut value = String::new();
        let mut chars = body.char_indices();
        while let Some((i, c)) = chars.next() {
            if c != '"' {
                value.push(c);
                continue;
            }
            // closing quote or an escaped one
            if body[i + 1..].starts_with('"') {
                value.push('"');
                chars.next();
                continue;
            }
            let after = &body[i + 1..];
            return match after.find(',') {
                // text between the closing quote and the separator is kept
                Some(j) => {
                    value.push_str(&after[..j]);
                    Ok((Cow::Owned(value), Some(&after[j + 1..])))
                }
                None => {
                    value.push_str(after);
                    Ok((Cow::Owned(value), None))
                }
            };
        }
        Err(UnterminatedQuote)
    } else {
        match s.find(',') {
            Some(j) => Ok((Cow::Borrowed(&s[..j]), Some(&s[j + 1..]))),
            None => Ok((Cow::Borrowed(s), None)),
        }
    }
}

/// Appends `field` to `out`, quoting it if it contains a comma or a quote.
pub(crate) fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"']) {
        out.push('"');
        for c in field.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Splits text into lines, accepting LF or CRLF endings. A trailing newline
/// does not produce an extra empty line.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}
