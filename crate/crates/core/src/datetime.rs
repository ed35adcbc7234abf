//! strftime-style date parsing and rendering.

use std::sync::OnceLock;

use chrono::format::{Item, StrftimeItems};
use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use regex::Regex;

/// Rejects format strings chrono would fail to render.
pub fn validate_format(fmt: &str) -> Result<(), String> {
    if StrftimeItems::new(fmt).any(|i| matches!(i, Item::Error)) {
        Err(format!("invalid date format {fmt:?}"))
    } else {
        Ok(())
    }
}

/// Parses `text` with an explicit format. Date-only formats yield midnight;
/// the flag reports whether the format carried a time of day.
pub fn parse_with(text: &str, fmt: &str) -> Option<(NaiveDateTime, bool)> {
    if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
        return Some((dt, true));
    }
    NaiveDate::parse_from_str(text, fmt).ok().map(|d| (d.and_time(NaiveTime::MIN), false))
}

pub fn render(dt: &NaiveDateTime, fmt: &str) -> Result<String, String> {
    validate_format(fmt)?;
    Ok(dt.format(fmt).to_string())
}

/// Canonical ISO text: `%Y-%m-%d`, or `%Y-%m-%d %H:%M:%S` when a time is present.
pub fn to_iso(dt: &NaiveDateTime, has_time: bool) -> String {
    if has_time {
        dt.format("%Y-%m-%d %H:%M:%S").to_string()
    } else {
        dt.format("%Y-%m-%d").to_string()
    }
}

pub fn from_iso(text: &str) -> Option<NaiveDateTime> {
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
        .or_else(|| NaiveDate::parse_from_str(text, "%Y-%m-%d").ok().map(|d| d.and_time(NaiveTime::MIN)))
}

struct Pattern {
    shape: Regex,
    format: &'static str,
}

/// Input patterns tried in order by datetime standardization. The shape
/// regex pins field widths so that, e.g., `01/05/23` never parses as year 23.
const PATTERNS: [(&str, &str); 13] = [
    (r"^\d{4}-\d{1,2}-\d{1,2} \d{1,2}:\d{2}:\d{2}$", "%Y-%m-%d %H:%M:%S"),
    (r"^\d{4}-\d{1,2}-\d{1,2}T\d{1,2}:\d{2}:\d{2}$", "%Y-%m-%dT%H:%M:%S"),
    (r"^\d{4}-\d{1,2}-\d{1,2}$", "%Y-%m-%d"),
    (r"^\d{4}/\d{1,2}/\d{1,2}$", "%Y/%m/%d"),
    (r"^\d{1,2}/\d{1,2}/\d{4}$", "%m/%d/%Y"),
    (r"^\d{1,2}-\d{1,2}-\d{4}$", "%d-%m-%Y"),
    (r"^\d{1,2}/\d{1,2}/\d{2}$", "%m/%d/%y"),
    (r"^\d{1,2}\.\d{1,2}\.\d{4}$", "%d.%m.%Y"),
    (r"^\d{8}$", "%Y%m%d"),
    (r"^[A-Za-z]{4,} \d{1,2}, \d{4}$", "%B %d, %Y"),
    (r"^[A-Za-z]{3} \d{1,2}, \d{4}$", "%b %d, %Y"),
    (r"^\d{1,2} [A-Za-z]{4,} \d{4}$", "%d %B %Y"),
    (r"^\d{1,2} [A-Za-z]{3} \d{4}$", "%d %b %Y"),
];

fn patterns() -> &'static [Pattern] {
    static CELL: OnceLock<Vec<Pattern>> = OnceLock::new();
    CELL.get_or_init(|| {
        PATTERNS
            .iter()
            .map(|(re, format)| Pattern { shape: Regex::new(re).expect("static regex"), format })
            .collect()
    })
}

/// The ordered list of recognized input formats.
pub fn known_formats() -> impl Iterator<Item = &'static str> {
    PATTERNS.iter().map(|(_, f)| *f)
}

/// Parses free-form date text with the first matching known pattern.
pub fn parse_any(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    patterns()
        .iter()
        .filter(|p| p.shape.is_match(text))
        .find_map(|p| parse_with(text, p.format).map(|(dt, _)| dt))
}
