//! Click-log persistence.
//!
//! One impression per line, space separated: query id, impression index,
//! then `(item id, rank, click flag)` triples in rank order. The format
//! round-trips losslessly: `parse(serialize(log)) == log`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{ClickLog, DomainError, Impression, ItemId, QueryId, Ranking};

#[derive(Debug, Error)]
pub enum LogIoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: {source}")]
    Domain { line: usize, source: DomainError },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, reason: impl Into<String>) -> LogIoError {
    LogIoError::Parse {
        line,
        reason: reason.into(),
    }
}

/// Serialize one impression as a single line (no trailing newline).
fn write_impression(out: &mut String, imp: &Impression) {
    let _ = write!(out, "{} {}", imp.query(), imp.index());
    for (item, rank, clicked) in imp.entries() {
        let _ = write!(out, " {} {} {}", item, rank, u8::from(clicked));
    }
}

/// Serialize a set of logs, grouped by query id, impressions in index order.
#[must_use]
pub fn serialize_logs(logs: &BTreeMap<QueryId, ClickLog>) -> String {
    let mut out = String::new();
    for log in logs.values() {
        for imp in log.impressions() {
            write_impression(&mut out, imp);
            out.push('\n');
        }
    }
    out
}

/// Serialize a single query's log.
#[must_use]
pub fn serialize_log(log: &ClickLog) -> String {
    let mut map = BTreeMap::new();
    map.insert(log.query().clone(), log.clone());
    serialize_logs(&map)
}

/// Parse logs from the line format. Impressions may arrive in any order;
/// per query they must form a contiguous 0..N-1 index sequence.
pub fn parse_logs(text: &str) -> Result<BTreeMap<QueryId, ClickLog>, LogIoError> {
    let mut per_query: BTreeMap<QueryId, Vec<Impression>> = BTreeMap::new();
    // Cache rankings so repeated impressions share one allocation.
    let mut rankings: BTreeMap<Vec<ItemId>, Arc<Ranking>> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split_ascii_whitespace();
        let query = fields
            .next()
            .ok_or_else(|| parse_err(line, "missing query id field"))
            .and_then(|s| {
                QueryId::new(s).map_err(|e| parse_err(line, format!("query id: {e}")))
            })?;
        let index: u64 = fields
            .next()
            .ok_or_else(|| parse_err(line, "missing impression index field"))?
            .parse()
            .map_err(|e| parse_err(line, format!("impression index: {e}")))?;

        let rest: Vec<&str> = fields.collect();
        if rest.len() % 3 != 0 {
            return Err(parse_err(
                line,
                format!(
                    "expected (item, rank, click) triples, found {} trailing fields",
                    rest.len() % 3
                ),
            ));
        }
        let mut items = Vec::with_capacity(rest.len() / 3);
        let mut clicks = Vec::with_capacity(rest.len() / 3);
        for (t, triple) in rest.chunks_exact(3).enumerate() {
            let item = ItemId::new(triple[0])
                .map_err(|e| parse_err(line, format!("item id in triple {}: {e}", t + 1)))?;
            let rank: usize = triple[1]
                .parse()
                .map_err(|e| parse_err(line, format!("rank in triple {}: {e}", t + 1)))?;
            if rank != t + 1 {
                return Err(parse_err(
                    line,
                    format!("triple {} declares rank {rank}, expected {}", t + 1, t + 1),
                ));
            }
            let click = match triple[2] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(
                        line,
                        format!("click flag in triple {} must be 0 or 1, found {other:?}", t + 1),
                    ))
                }
            };
            items.push(item);
            clicks.push(click);
        }

        let ranking = match rankings.get(&items) {
            Some(r) => Arc::clone(r),
            None => {
                let r = Arc::new(
                    Ranking::new(items.clone())
                        .map_err(|source| LogIoError::Domain { line, source })?,
                );
                rankings.insert(items, Arc::clone(&r));
                r
            }
        };
        let imp = Impression::new(query.clone(), index, ranking, clicks)
            .map_err(|source| LogIoError::Domain { line, source })?;
        per_query.entry(query).or_default().push(imp);
    }

    let mut logs = BTreeMap::new();
    for (query, mut imps) in per_query {
        imps.sort_by_key(Impression::index);
        let log = ClickLog::new(query.clone(), imps).map_err(|source| LogIoError::Domain {
            line: 0,
            source,
        })?;
        logs.insert(query, log);
    }
    Ok(logs)
}

pub fn write_logs_file(path: &Path, logs: &BTreeMap<QueryId, ClickLog>) -> Result<(), LogIoError> {
    fs::write(path, serialize_logs(logs))?;
    Ok(())
}

pub fn read_logs_file(path: &Path) -> Result<BTreeMap<QueryId, ClickLog>, LogIoError> {
    parse_logs(&fs::read_to_string(path)?)
}
