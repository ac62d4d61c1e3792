//! Turning raw sampler replies into [`NormalizedTable`]s.
//!
//! The pipeline is `extract_tsv_block` → `parse_raw` → `normalize`; [`ingest`] runs all
//! three. Ragged rows are repaired to the modal row length, value cells are cleaned of
//! thousands separators, a leading currency symbol and a trailing percent sign, and the
//! table is transposed when it has more value columns than rows.

use crate::table::{NormalizedTable, RawTable, Value};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("sampler output contains no table")]
    EmptyOutput,
    #[error("could not parse table: {0}")]
    ParseFailure(String),
}

const FENCE: &str = "```";
const CURRENCY: [char; 4] = ['$', '€', '£', '¥'];

/// Returns the body of the first fenced ```` ```tsv ```` block, or the whole trimmed text
/// when the reply has no such fence.
pub fn extract_tsv_block(text: &str) -> Result<String, IngestError> {
    let lower = text.to_ascii_lowercase();
    let body = match lower.find("```tsv") {
        Some(start) => {
            let mut rest = &text[start + "```tsv".len()..];
            // Skip the remainder of the opening fence line.
            if let Some(nl) = rest.find('\n') {
                if rest[..nl].trim().is_empty() {
                    rest = &rest[nl + 1..];
                }
            }
            match rest.find(FENCE) {
                Some(end) => &rest[..end],
                None => rest,
            }
        }
        None => text,
    };
    let body = body.trim_matches(|c: char| c.is_whitespace() && c != '\t');
    if !body.contains('\t') && !body.contains('\n') {
        return Err(IngestError::EmptyOutput);
    }
    Ok(body.to_string())
}

/// Splits TSV text into a rectangular grid, padding short rows with empty cells and
/// truncating long ones to the most common row length (ties go to the longer length).
pub fn parse_raw(tsv: &str, source_id: usize) -> Result<RawTable, IngestError> {
    let rows: Vec<Vec<String>> = tsv
        .split('\n')
        .map(|line| line.strip_suffix('\r').unwrap_or(line))
        .filter(|line| !line.chars().all(|c| c == ' '))
        .map(|line| line.split('\t').map(|c| c.trim().to_string()).collect())
        .collect();
    if rows.len() < 2 {
        return Err(IngestError::ParseFailure(format!(
            "need at least 2 rows, found {}",
            rows.len()
        )));
    }
    let width = modal_length(rows.iter().map(Vec::len));
    if width < 2 {
        return Err(IngestError::ParseFailure(
            "rows have fewer than 2 cells".to_string(),
        ));
    }
    let rows = rows
        .into_iter()
        .map(|mut row| {
            row.resize(width, String::new());
            row
        })
        .collect();
    Ok(RawTable { rows, source_id })
}

fn modal_length(lengths: impl Iterator<Item = usize>) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for len in lengths {
        *counts.entry(len).or_insert(0usize) += 1;
    }
    // BTreeMap iterates ascending, so `max_by_key` keeps the last (largest) on ties.
    counts
        .into_iter()
        .max_by_key(|&(_, count)| count)
        .map_or(0, |(len, _)| len)
}

/// Splits headers from values, converts value cells to numbers and enforces
/// `rows >= cols` by transposing.
pub fn normalize(raw: &RawTable) -> Result<NormalizedTable, IngestError> {
    let width = raw.width();
    if raw.rows.len() < 2 || width < 2 {
        return Err(IngestError::ParseFailure("empty value region".to_string()));
    }
    let col_labels: Vec<String> = raw.rows[0][1..].to_vec();
    let mut row_labels = Vec::with_capacity(raw.rows.len() - 1);
    let mut values = Vec::with_capacity(raw.rows.len() - 1);
    for row in &raw.rows[1..] {
        row_labels.push(row[0].clone());
        values.push(row[1..].iter().map(|c| parse_number(c)).collect::<Vec<Value>>());
    }
    let table = NormalizedTable::new(row_labels, col_labels, values, raw.source_id)
        .map_err(|e| IngestError::ParseFailure(e.to_string()))?;
    if table.n_cols() > table.n_rows() {
        Ok(table.transpose())
    } else {
        Ok(table)
    }
}

/// Full ingestion of one sampler reply.
pub fn ingest(text: &str, source_id: usize) -> Result<NormalizedTable, IngestError> {
    let block = extract_tsv_block(text)?;
    let raw = parse_raw(&block, source_id)?;
    normalize(&raw)
}

/// Strict reader for canonical TSV files such as ground truth: every line must have the
/// header's width, non-empty value cells must be numbers, and orientation is kept.
pub fn parse_canonical(tsv: &str, source_id: usize) -> Result<NormalizedTable, IngestError> {
    let lines: Vec<&str> = tsv
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let Some((header, body)) = lines.split_first() else {
        return Err(IngestError::EmptyOutput);
    };
    let header: Vec<&str> = header.split('\t').collect();
    let mut row_labels = Vec::with_capacity(body.len());
    let mut values = Vec::with_capacity(body.len());
    for (i, line) in body.iter().enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != header.len() {
            return Err(IngestError::ParseFailure(format!(
                "line {} has {} cells, header has {}",
                i + 2,
                cells.len(),
                header.len()
            )));
        }
        row_labels.push(cells[0].trim().to_string());
        let mut row = Vec::with_capacity(cells.len() - 1);
        for cell in &cells[1..] {
            let v = parse_number(cell);
            if v.is_none() && !cell.trim().is_empty() {
                return Err(IngestError::ParseFailure(format!("line {}: bad value {cell:?}", i + 2)));
            }
            row.push(v);
        }
        values.push(row);
    }
    let col_labels = header[1..].iter().map(|c| c.trim().to_string()).collect();
    NormalizedTable::new(row_labels, col_labels, values, source_id)
        .map_err(|e| IngestError::ParseFailure(e.to_string()))
}

/// Parses a value cell. Returns `None` for anything that is not a finite number after
/// cleaning. Percentages keep their printed units ("45%" is 45.0).
pub fn parse_number(cell: &str) -> Value {
    let mut s = cell.trim();
    let mut negative = false;
    if let Some(inner) = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        negative = true;
        s = inner.trim();
    }
    if let Some(rest) = s.strip_suffix('%') {
        s = rest.trim_end();
    }
    let mut sign = "";
    if let Some(rest) = s.strip_prefix('-') {
        sign = "-";
        s = rest;
    } else if let Some(rest) = s.strip_prefix('+') {
        s = rest;
    }
    if let Some(rest) = s.strip_prefix(CURRENCY) {
        s = rest.trim_start();
        if sign.is_empty() {
            if let Some(rest) = s.strip_prefix('-') {
                sign = "-";
                s = rest;
            }
        }
    }
    let digits: String = s.chars().filter(|&c| c != ',').collect();
    // Reject forms Rust accepts but tables never mean ("inf", "nan", "+-1").
    if digits.is_empty() || !digits.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        return None;
    }
    let v: f64 = format!("{sign}{digits}").parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    Some(if negative { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_keeps_orientation_and_rejects_damage() {
        let wide = "\ta\tb\tc\n2020\t1\t\t3\n";
        let t = parse_canonical(wide, 0).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (1, 3));
        assert_eq!(t.get(0, 1), None);
        assert_eq!(t.to_tsv(), wide);
        assert!(parse_canonical("\ta\tb\n2020\t1\n", 0).is_err());
        assert!(parse_canonical("\ta\n2020\tn/a\n", 0).is_err());
        assert_eq!(parse_canonical("", 0), Err(IngestError::EmptyOutput));
    }

    #[test]
    fn extracts_fenced_block() {
        assert_eq!(
            extract_tsv_block("```tsv\nA\tB\n1\t2\n```").unwrap(),
            "A\tB\n1\t2"
        );
        assert_eq!(
            extract_tsv_block("Here you go:\n```tsv\nX\t1\n```\nDone.").unwrap(),
            "X\t1"
        );
        assert_eq!(
            extract_tsv_block("no table here"),
            Err(IngestError::EmptyOutput)
        );
    }

    #[test]
    fn unfenced_reply_falls_back_to_whole_text() {
        assert_eq!(
            extract_tsv_block("\n\ta\tb\nr\t1\t2\n\n").unwrap(),
            "\ta\tb\nr\t1\t2"
        );
    }

    #[test]
    fn leading_tab_of_header_survives() {
        let block = extract_tsv_block("```tsv\n\tFrance\n2020\t1\n```").unwrap();
        assert!(block.starts_with('\t'));
    }

    #[test]
    fn parses_well_formed() {
        let raw = parse_raw("h\ta\tb\nr1\t1\t2\nr2\t3\t4", 0).unwrap();
        assert_eq!(raw.rows.len(), 3);
        assert!(raw.rows.iter().all(|r| r.len() == 3));
    }

    #[test]
    fn repairs_ragged_rows_to_mode() {
        let raw = parse_raw("a\tb\tc\nd\te\tf\ng\th\ni\tj\tk\tl", 0).unwrap();
        assert!(raw.rows.iter().all(|r| r.len() == 3));
        assert_eq!(raw.rows[2], vec!["g", "h", ""]);
        assert_eq!(raw.rows[3], vec!["i", "j", "k"]);
    }

    #[test]
    fn mode_ties_prefer_longer() {
        let raw = parse_raw("a\tb\nc\td\ne\tf\tg\nh\ti\tj", 0).unwrap();
        assert_eq!(raw.width(), 3);
    }

    #[test]
    fn single_line_is_parse_failure() {
        assert!(matches!(
            parse_raw("onlyoneline", 0),
            Err(IngestError::ParseFailure(_))
        ));
        assert!(matches!(
            parse_raw("a\nb\nc", 0),
            Err(IngestError::ParseFailure(_))
        ));
    }

    #[test]
    fn number_cleaning() {
        assert_eq!(parse_number("1,234"), Some(1234.0));
        assert_eq!(parse_number("$1,234.5"), Some(1234.5));
        assert_eq!(parse_number("€3"), Some(3.0));
        assert_eq!(parse_number("£-2"), Some(-2.0));
        assert_eq!(parse_number("-¥7"), Some(-7.0));
        assert_eq!(parse_number("45%"), Some(45.0));
        assert_eq!(parse_number("45"), Some(45.0));
        assert_eq!(parse_number("(5)"), Some(-5.0));
        assert_eq!(parse_number("1.5e3"), Some(1500.0));
        assert_eq!(parse_number("-0.25"), Some(-0.25));
        assert_eq!(parse_number(".5"), Some(0.5));
        assert_eq!(parse_number("n/a"), None);
        assert_eq!(parse_number(""), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("NaN"), None);
        assert_eq!(parse_number("1e999"), None);
        assert_eq!(parse_number("12abc"), None);
    }

    #[test]
    fn normalize_headers_and_missing() {
        let raw = parse_raw("\tx\ty\n2020\t1,234\tn/a\n2021\t\t5%", 3).unwrap();
        let t = normalize(&raw).unwrap();
        assert_eq!(t.col_labels, vec!["x", "y"]);
        assert_eq!(t.row_labels, vec!["2020", "2021"]);
        assert_eq!(t.values[0], vec![Some(1234.0), None]);
        assert_eq!(t.values[1], vec![None, Some(5.0)]);
        assert_eq!(t.source_id, 3);
    }

    #[test]
    fn transposes_only_when_strictly_wider() {
        let wide: String = std::iter::once("\ta\tb\tc\td\te\tf".to_string())
            .chain((0..3).map(|r| format!("r{r}\t1\t2\t3\t4\t5\t6")))
            .collect::<Vec<_>>()
            .join("\n");
        let t = normalize(&parse_raw(&wide, 0).unwrap()).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (6, 3));
        assert_eq!(t.row_labels[0], "a");

        let square: String = std::iter::once("\ta\tb\tc\td".to_string())
            .chain((0..4).map(|r| format!("r{r}\t1\t2\t3\t4")))
            .collect::<Vec<_>>()
            .join("\n");
        let t = normalize(&parse_raw(&square, 0).unwrap()).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (4, 4));
        assert_eq!(t.row_labels[0], "r0");
    }

    #[test]
    fn header_only_value_region_fails() {
        let raw = RawTable {
            rows: vec![vec!["".into(), "x".into()]],
            source_id: 0,
        };
        assert!(normalize(&raw).is_err());
    }

    fn arb_table() -> impl Strategy<Value = NormalizedTable> {
        (1usize..5, 0usize..5).prop_flat_map(|(cols, extra)| {
            let rows = cols + extra;
            (
                proptest::collection::vec("[A-Za-z][a-z0-9 ]{0,6}[a-z]", rows),
                proptest::collection::vec("[A-Za-z][a-z0-9]{0,6}", cols),
                proptest::collection::vec(
                    proptest::collection::vec(
                        proptest::option::weighted(0.8, -1e9f64..1e9),
                        cols,
                    ),
                    rows,
                ),
            )
                .prop_map(|(r, c, v)| NormalizedTable::new(r, c, v, 0).unwrap())
        })
    }

    proptest! {
        #[test]
        fn canonical_tsv_round_trips(t in arb_table()) {
            let back = ingest(&format!("```tsv\n{}```", t.to_tsv()), 0).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn repair_keeps_modal_length(lens in proptest::collection::vec(2usize..6, 2..12)) {
            let text: Vec<String> = lens
                .iter()
                .map(|&n| vec!["x"; n].join("\t"))
                .collect();
            let raw = parse_raw(&text.join("\n"), 0).unwrap();
            prop_assert_eq!(raw.width(), modal_length(lens.iter().copied()));
        }
    }
}
