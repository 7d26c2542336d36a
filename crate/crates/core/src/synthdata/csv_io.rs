//! CSV import/export. Missing cells are empty fields; target columns are
//! `mpl_avg_safe` and `risk_grq`; an optional leading `id` column carries row ids.

use std::io::{Read, Write};

use super::schema::{FeatureKind, FeatureSchema};
use super::table::{Column, ColumnValues, DataTable, TargetKind};
use crate::error::{Error, Result};

pub const ID_COLUMN: &str = "id";

fn format_number(v: f64) -> String {
    // `Display` for f64 is the shortest string that parses back to the same value.
    format!("{v}")
}

pub fn write_csv<W: Write>(table: &DataTable, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let targets: Vec<TargetKind> = TargetKind::ALL
        .into_iter()
        .filter(|&k| table.target(k).is_some())
        .collect();

    let mut header: Vec<&str> = Vec::new();
    if table.ids().is_some() {
        header.push(ID_COLUMN);
    }
    header.extend(table.columns().iter().map(|c| c.name.as_str()));
    header.extend(targets.iter().map(|k| k.column_name()));
    w.write_record(&header)?;

    for row in 0..table.n_rows() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ids) = table.ids() {
            record.push(ids[row].clone());
        }
        for c in table.columns() {
            record.push(match &c.values {
                _ if c.missing[row] => String::new(),
                ColumnValues::Numerical(v) => format_number(v[row]),
                ColumnValues::Categorical(v) => v[row].clone(),
            });
        }
        for &k in &targets {
            record.push(format_number(table.target(k).expect("present")[row]));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(table: &DataTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}

/// Reads a table. Column kinds come from `schema` when it names the column;
/// otherwise a column is numerical iff every non-empty cell parses as a number.
pub fn read_csv<R: Read>(reader: R, schema: Option<&FeatureSchema>) -> Result<DataTable> {
    let mut r = csv::ReaderBuilder::new().from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>()?;
    let n = records.len();
    let cell = |row: usize, col: usize| records[row].get(col).unwrap_or("");

    let mut ids = None;
    let mut mpl = None;
    let mut grq = None;
    let mut columns = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if name == ID_COLUMN {
            ids = Some((0..n).map(|i| cell(i, j).to_string()).collect::<Vec<_>>());
            continue;
        }
        if let Some(kind) = TargetKind::from_column_name(name) {
            let values = (0..n)
                .map(|i| {
                    cell(i, j).parse::<f64>().map_err(|_| {
                        Error::validation(
                            format!("{name}[{i}]"),
                            format!("`{}` is not a number (targets are never missing)", cell(i, j)),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match kind {
                TargetKind::MplAvgSafe => mpl = Some(values),
                TargetKind::RiskGrq => grq = Some(values),
            }
            continue;
        }
        let declared = schema.and_then(|s| s.get(name)).map(|d| d.kind);
        let inferred = || {
            let numeric = (0..n)
                .map(|i| cell(i, j))
                .filter(|s| !s.is_empty())
                .all(|s| s.parse::<f64>().is_ok_and(f64::is_finite));
            if numeric {
                FeatureKind::Numerical
            } else {
                FeatureKind::Categorical
            }
        };
        let column = match declared.unwrap_or_else(inferred) {
            FeatureKind::Numerical => {
                let values = (0..n)
                    .map(|i| match cell(i, j) {
                        "" => Ok(f64::NAN),
                        s => s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                            Error::validation(format!("{name}[{i}]"), format!("`{s}` is not a number"))
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Column::numerical(name, values)
            }
            FeatureKind::Categorical => {
                Column::categorical(name, (0..n).map(|i| cell(i, j).to_string()).collect())
            }
        };
        columns.push(column);
    }
    let table = DataTable::new(n, columns, mpl, grq)?;
    match ids {
        Some(ids) => table.with_ids(ids),
        None => Ok(table),
    }
}

pub fn from_csv_str(s: &str, schema: Option<&FeatureSchema>) -> Result<DataTable> {
    read_csv(s.as_bytes(), schema)
}
