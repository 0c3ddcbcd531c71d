use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{InteractionRecord, InteractionSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TimeUnit {
    Seconds,
    #[default]
    Milliseconds,
}

/// Column mapping for delimited interaction logs.
///
/// `user` and `item` must appear in the header. The optional columns are used
/// when present and defaulted otherwise: weight 1.0, timestamp = data row index.
#[derive(Clone, Debug)]
pub struct Schema {
    pub user: String,
    pub item: String,
    pub weight: Option<String>,
    pub timestamp: Option<String>,
    pub event: Option<String>,
    /// Forced delimiter; sniffed from the header when `None`.
    pub delimiter: Option<u8>,
    pub time_unit: TimeUnit,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            user: "user_id".into(),
            item: "item_id".into(),
            weight: Some("weight".into()),
            timestamp: Some("timestamp".into()),
            event: Some("event".into()),
            delimiter: None,
            time_unit: TimeUnit::Milliseconds,
        }
    }
}

impl Schema {
    pub fn new(user: &str, item: &str) -> Self {
        Schema {
            user: user.into(),
            item: item.into(),
            weight: None,
            timestamp: None,
            event: None,
            delimiter: None,
            time_unit: TimeUnit::Milliseconds,
        }
    }

    pub fn weight(mut self, col: &str) -> Self {
        self.weight = Some(col.into());
        self
    }

    pub fn timestamp(mut self, col: &str) -> Self {
        self.timestamp = Some(col.into());
        self
    }

    pub fn event(mut self, col: &str) -> Self {
        self.event = Some(col.into());
        self
    }

    pub fn delimiter(mut self, delim: u8) -> Self {
        self.delimiter = Some(delim);
        self
    }

    pub fn time_unit(mut self, unit: TimeUnit) -> Self {
        self.time_unit = unit;
        self
    }
}

fn column(header: &csv::StringRecord, name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim() == name)
}

fn parse_timestamp(raw: &str, unit: TimeUnit) -> Option<i64> {
    let raw = raw.trim();
    let value = match raw.parse::<i64>() {
        Ok(v) => v,
        Err(_) => {
            let f = raw.parse::<f64>().ok()?;
            if !f.is_finite() {
                return None;
            }
            match unit {
                TimeUnit::Seconds => return Some((f * 1000.0).round() as i64),
                TimeUnit::Milliseconds => f.round() as i64,
            }
        }
    };
    match unit {
        TimeUnit::Seconds => value.checked_mul(1000),
        TimeUnit::Milliseconds => Some(value),
    }
}

/// Parses a delimited interaction log. Records keep file order.
pub fn parse_interactions<R: Read>(source: R, schema: &Schema) -> Result<InteractionSet> {
    let mut reader = BufReader::new(source);
    let mut header_line = String::new();
    reader
        .read_line(&mut header_line)
        .map_err(|e| Error::io("<interactions>", e))?;
    if header_line.trim().is_empty() {
        return Err(Error::Empty("interaction file has no header".into()));
    }
    let delimiter = schema
        .delimiter
        .unwrap_or_else(|| crate::io::sniff_delimiter(&header_line));

    let chained = header_line.as_bytes().chain(reader);
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(chained);

    let mut rows = csv.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(Error::Empty("interaction file has no header".into())),
    };
    let missing = |name: &str| Error::Parse {
        line: 1,
        message: format!("header lacks required column {name:?}"),
    };
    let user_col = column(&header, &schema.user).ok_or_else(|| missing(&schema.user))?;
    let item_col = column(&header, &schema.item).ok_or_else(|| missing(&schema.item))?;
    let weight_col = schema.weight.as_deref().and_then(|c| column(&header, c));
    let ts_col = schema.timestamp.as_deref().and_then(|c| column(&header, c));
    let event_col = schema.event.as_deref().and_then(|c| column(&header, c));
    let arity = header.len();

    let mut records = Vec::new();
    for (row_idx, row) in rows.enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(row_idx + 2);
        let err = |message: String| Error::Parse { line, message };
        if row.len() != arity {
            return Err(err(format!("expected {arity} fields, found {}", row.len())));
        }
        let user = row[user_col].trim();
        let item = row[item_col].trim();
        if user.is_empty() || item.is_empty() {
            return Err(err("empty user or item id".into()));
        }
        let weight = match weight_col {
            Some(c) => {
                let raw = row[c].trim();
                let w: f64 = raw
                    .parse()
                    .map_err(|_| err(format!("unparsable weight {raw:?}")))?;
                if !w.is_finite() {
                    return Err(err(format!("non-finite weight {raw:?}")));
                }
                w
            }
            None => 1.0,
        };
        let timestamp = match ts_col {
            Some(c) => {
                let raw = row[c].trim();
                let ts = parse_timestamp(raw, schema.time_unit)
                    .ok_or_else(|| err(format!("unparsable timestamp {raw:?}")))?;
                if ts < 0 {
                    return Err(err(format!("negative timestamp {ts}")));
                }
                ts
            }
            None => row_idx as i64,
        };
        let event = match event_col {
            Some(c) => {
                let raw = row[c].trim();
                Some(
                    raw.parse::<u32>()
                        .map_err(|_| err(format!("unparsable event code {raw:?}")))?,
                )
            }
            None => None,
        };
        records.push(InteractionRecord {
            user: user.to_owned(),
            item: item.to_owned(),
            weight,
            timestamp,
            event,
        });
    }
    if records.is_empty() {
        return Err(Error::Empty("interaction file has no data rows".into()));
    }
    Ok(InteractionSet::new(records))
}

pub fn read_interactions(path: &Path, schema: &Schema) -> Result<InteractionSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_interactions(file, schema)
}
