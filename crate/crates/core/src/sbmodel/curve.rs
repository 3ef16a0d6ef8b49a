use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BiasPoint;
use crate::io::{fmt_f64, CsvError};

pub const IV_CSV_HEADER: &str = "v_tg,v_bg,v_ds,i_d";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvRecord {
    pub bias: BiasPoint,
    pub i_d: f64,
}

/// Ordered (bias, drain current) records of one sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IvCurve {
    records: Vec<IvRecord>,
    pub meta: BTreeMap<String, String>,
}

impl IvCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<IvRecord>) -> Self {
        Self {
            records,
            meta: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, bias: BiasPoint, i_d: f64) {
        self.records.push(IvRecord { bias, i_d });
    }

    pub fn set_meta(&mut self, key: &str, value: &str) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn records(&self) -> &[IvRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn currents(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.i_d)
    }

    pub fn v_tg(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.bias.v_tg)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(IV_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(r.bias.v_tg),
                fmt_f64(r.bias.v_bg),
                fmt_f64(r.bias.v_ds),
                fmt_f64(r.i_d)
            ));
        }
        out
    }

    /// Parses the `v_tg,v_bg,v_ds,i_d` CSV schema. Errors carry the
    /// 1-based line number of the offending row.
    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let rows = crate::io::parse_numeric_csv(text, &["v_tg", "v_bg", "v_ds", "i_d"])?;
        let records = rows
            .into_iter()
            .map(|(line, row)| {
                let rec = IvRecord {
                    bias: BiasPoint::new(row[0], row[1], row[2]),
                    i_d: row[3],
                };
                if rec.bias.is_finite() && rec.i_d.is_finite() {
                    Ok(rec)
                } else {
                    Err(CsvError::Row {
                        line,
                        msg: "non-finite value".into(),
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_records(records))
    }
}
