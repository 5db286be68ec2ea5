//! CSV ingestion and emission.
//!
//! One format: UTF-8, comma-separated, `.` decimal, header row required.
//! Grouped data is long-format (one row per observation); crossed data
//! is a triple file (one row per rating), MovieLens-compatible through
//! the column-name flags.

use std::collections::HashMap;
use std::path::Path;

use varcomp::{Group, GroupedSample, RatingEntry, SparseRatings};

use crate::error::{CliError, Result};

/// Column mapping for long-format grouped files.
#[derive(Debug, Clone)]
pub struct GroupedSchema {
    pub group_col: String,
    pub value_col: String,
    /// Explicit regressor columns; `None` autodetects every header
    /// column named `x1`, `x2`, ... (in header order).
    pub regressor_cols: Option<Vec<String>>,
}

impl Default for GroupedSchema {
    fn default() -> Self {
        GroupedSchema {
            group_col: "group".into(),
            value_col: "y".into(),
            regressor_cols: None,
        }
    }
}

/// Column mapping for ratings-triple files.
#[derive(Debug, Clone)]
pub struct RatingsSchema {
    pub row_col: String,
    pub col_col: String,
    pub value_col: String,
    /// When set, entry arrival order is the ascending order of this
    /// column (ties break by file order); otherwise file order is
    /// arrival order.
    pub timestamp_col: Option<String>,
}

impl Default for RatingsSchema {
    fn default() -> Self {
        RatingsSchema {
            row_col: "row".into(),
            col_col: "col".into(),
            value_col: "value".into(),
            timestamp_col: None,
        }
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    CliError::Io {
                        path: path.to_path_buf(),
                        source: io,
                    }
                } else {
                    unreachable!()
                }
            }
            _ => CliError::Csv {
                path: path.to_path_buf(),
                source: e,
            },
        })
}

fn headers(path: &Path, rdr: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>> {
    let hdr = rdr.headers().map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(hdr.iter().map(|h| h.trim().to_string()).collect())
}

fn find_col(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

/// 1-based line number of a record (header is line 1).
fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_cell(path: &Path, record: &csv::StringRecord, idx: usize, column: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse::<f64>().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line: line_of(record),
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Read a long-format grouped file. Groups keep first-appearance order;
/// observations keep file order within each group; regressor columns
/// must repeat the same value on every row of a group.
pub fn read_grouped_csv(path: &Path, schema: &GroupedSchema) -> Result<GroupedSample> {
    let mut rdr = open_reader(path)?;
    let header = headers(path, &mut rdr)?;

    let gi = find_col(path, &header, &schema.group_col)?;
    let vi = find_col(path, &header, &schema.value_col)?;
    let reg_names: Vec<String> = match &schema.regressor_cols {
        Some(cols) => cols.clone(),
        None => header
            .iter()
            .filter(|h| {
                h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit())
            })
            .cloned()
            .collect(),
    };
    let reg_idx: Vec<usize> = reg_names
        .iter()
        .map(|name| find_col(path, &header, name))
        .collect::<Result<_>>()?;

    struct Partial {
        id: String,
        responses: Vec<f64>,
        regressors: Vec<f64>,
        first_line: u64,
    }
    let mut order: Vec<Partial> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let id = record.get(gi).unwrap_or("").trim().to_string();
        let y = parse_cell(path, &record, vi, &schema.value_col)?;
        let xs: Vec<f64> = reg_idx
            .iter()
            .zip(&reg_names)
            .map(|(&idx, name)| parse_cell(path, &record, idx, name))
            .collect::<Result<_>>()?;

        match index.get(&id) {
            Some(&k) => {
                let part = &mut order[k];
                for (j, (&got, name)) in xs.iter().zip(&reg_names).enumerate() {
                    let expected = part.regressors[j];
                    if got != expected {
                        return Err(CliError::InconsistentRegressor {
                            path: path.to_path_buf(),
                            line: line_of(&record),
                            column: name.clone(),
                            group: id,
                            expected,
                            got,
                        });
                    }
                }
                part.responses.push(y);
            }
            None => {
                index.insert(id.clone(), order.len());
                order.push(Partial {
                    id,
                    responses: vec![y],
                    regressors: xs,
                    first_line: line_of(&record),
                });
            }
        }
    }

    if order.is_empty() {
        return Err(CliError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let _ = order[0].first_line;

    let groups: Vec<Group> = order
        .into_iter()
        .map(|p| {
            if reg_idx.is_empty() {
                Group::new(p.id, p.responses)
            } else {
                Group::with_regressors(p.id, p.responses, p.regressors)
            }
        })
        .collect();
    Ok(GroupedSample::new(groups)?)
}

/// Read a ratings-triple file. Row and column labels become dense
/// 0-based indices by first appearance; a duplicate (row, col) pair is
/// an error. With a timestamp column, arrival order is ascending
/// timestamp (stable in file order); otherwise file order.
pub fn read_ratings_csv(path: &Path, schema: &RatingsSchema) -> Result<SparseRatings> {
    let mut rdr = open_reader(path)?;
    let header = headers(path, &mut rdr)?;

    let ri = find_col(path, &header, &schema.row_col)?;
    let ci = find_col(path, &header, &schema.col_col)?;
    let vi = find_col(path, &header, &schema.value_col)?;
    let ti = schema
        .timestamp_col
        .as_ref()
        .map(|name| find_col(path, &header, name))
        .transpose()?;

    let mut row_ids: HashMap<String, usize> = HashMap::new();
    let mut col_ids: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<RatingEntry> = Vec::new();
    let mut stamps: Vec<f64> = Vec::new();

    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let row_label = record.get(ri).unwrap_or("").trim().to_string();
        let col_label = record.get(ci).unwrap_or("").trim().to_string();
        let value = parse_cell(path, &record, vi, &schema.value_col)?;

        let next_row = row_ids.len();
        let row = *row_ids.entry(row_label).or_insert(next_row);
        let next_col = col_ids.len();
        let col = *col_ids.entry(col_label).or_insert(next_col);
        entries.push(RatingEntry::new(row, col, value));

        if let Some(t_idx) = ti {
            let name = schema.timestamp_col.as_deref().unwrap();
            stamps.push(parse_cell(path, &record, t_idx, name)?);
        }
    }

    if entries.is_empty() {
        return Err(CliError::EmptyFile {
            path: path.to_path_buf(),
        });
    }

    let data = SparseRatings::new(row_ids.len(), col_ids.len(), entries)?;
    if ti.is_some() {
        let mut arrival: Vec<usize> = (0..stamps.len()).collect();
        arrival.sort_by(|&a, &b| stamps[a].total_cmp(&stamps[b]));
        Ok(data.with_arrival_order(arrival)?)
    } else {
        Ok(data)
    }
}

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io {
                path: path.to_path_buf(),
                source: io,
            },
            other => CliError::Csv {
                path: path.to_path_buf(),
                source: csv::Error::from(std::io::Error::other(format!("{other:?}"))),
            },
        })
}

fn wrap_write<T>(path: &Path, r: std::result::Result<T, csv::Error>) -> Result<T> {
    r.map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Write a grouped sample as long-format CSV (`group,y[,x1..xp]`), one
/// row per observation. Floats use shortest round-trip formatting, so
/// reading the file back reproduces every value bit-exactly.
pub fn write_grouped_csv(path: &Path, sample: &GroupedSample) -> Result<()> {
    let mut w = create(path)?;
    let p = sample.regressor_dim().unwrap_or(0);

    let mut header = vec!["group".to_string(), "y".to_string()];
    for j in 1..=p {
        header.push(format!("x{j}"));
    }
    wrap_write(path, w.write_record(&header))?;

    for group in sample.groups() {
        for &y in group.responses() {
            let mut record = vec![group.id().to_string(), y.to_string()];
            if let Some(xs) = group.regressors() {
                record.extend(xs.iter().map(|x| x.to_string()));
            }
            wrap_write(path, w.write_record(&record))?;
        }
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Write ratings as a triple file (`row,col,value,t`), one row per
/// entry in storage order, `t` holding each entry's arrival position.
/// Reading back with `t` as the timestamp column reproduces both the
/// grid and the arrival order.
pub fn write_ratings_csv(path: &Path, data: &SparseRatings) -> Result<()> {
    let mut w = create(path)?;
    wrap_write(path, w.write_record(["row", "col", "value", "t"]))?;

    // Invert arrival order: position[e] = when entry e arrived.
    let mut position: Vec<usize> = vec![0; data.n_entries()];
    for (when, &entry) in data.arrival_sequence().iter().enumerate() {
        position[entry] = when;
    }

    for (e, entry) in data.entries().iter().enumerate() {
        wrap_write(
            path,
            w.write_record([
                (entry.row + 1).to_string(),
                (entry.col + 1).to_string(),
                entry.value.to_string(),
                position[e].to_string(),
            ]),
        )?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;
    use std::path::PathBuf;

    fn write_tmp(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn grouped_groups_by_first_appearance() {
        let (_dir, path) = write_tmp("g,y\na,1\na,2\nb,3\n");
        let schema = GroupedSchema {
            group_col: "g".into(),
            ..GroupedSchema::default()
        };
        let sample = read_grouped_csv(&path, &schema).unwrap();
        assert_eq!(sample.n_groups(), 2);
        assert_eq!(sample.groups()[0].responses(), &[1.0, 2.0]);
        assert_eq!(sample.groups()[1].responses(), &[3.0]);
        assert_eq!(sample.groups()[0].id(), "a");
    }

    #[test]
    fn grouped_interleaved_groups_keep_order() {
        let (_dir, path) = write_tmp("group,y\nb,1\na,2\nb,3\n");
        let sample = read_grouped_csv(&path, &GroupedSchema::default()).unwrap();
        assert_eq!(sample.groups()[0].id(), "b");
        assert_eq!(sample.groups()[0].responses(), &[1.0, 3.0]);
        assert_eq!(sample.groups()[1].responses(), &[2.0]);
    }

    #[test]
    fn grouped_autodetects_x_columns() {
        let (_dir, path) = write_tmp("group,y,x1,x2,note\na,1,1,5,q\na,2,1,5,w\n");
        let sample = read_grouped_csv(&path, &GroupedSchema::default()).unwrap();
        assert_eq!(sample.regressor_dim(), Some(2));
        assert_eq!(sample.groups()[0].regressors(), Some(&[1.0, 5.0][..]));
    }

    #[test]
    fn grouped_inconsistent_regressor_names_line() {
        let (_dir, path) = write_tmp("group,y,x1\na,1,2\na,2,3\n");
        let err = read_grouped_csv(&path, &GroupedSchema::default()).unwrap_err();
        match err {
            CliError::InconsistentRegressor { line, column, group, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "x1");
                assert_eq!(group, "a");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn grouped_parse_error_names_line_and_column() {
        let (_dir, path) = write_tmp("group,y\na,1\na,oops\n");
        let err = read_grouped_csv(&path, &GroupedSchema::default()).unwrap_err();
        match err {
            CliError::Parse { line, column, value, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "y");
                assert_eq!(value, "oops");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn grouped_missing_column() {
        let (_dir, path) = write_tmp("id,y\na,1\n");
        let err = read_grouped_csv(&path, &GroupedSchema::default()).unwrap_err();
        assert!(matches!(err, CliError::MissingColumn { column, .. } if column == "group"));
    }

    #[test]
    fn grouped_empty_file() {
        let (_dir, path) = write_tmp("group,y\n");
        let err = read_grouped_csv(&path, &GroupedSchema::default()).unwrap_err();
        assert!(matches!(err, CliError::EmptyFile { .. }));
    }

    #[test]
    fn ratings_dense_mapping_by_first_appearance() {
        let (_dir, path) = write_tmp(
            "row,col,value\nu1,m1,4\nu1,m2,3\nu2,m1,5\n",
        );
        let data = read_ratings_csv(&path, &RatingsSchema::default()).unwrap();
        assert_eq!(data.n_rows(), 2);
        assert_eq!(data.n_cols(), 2);
        assert_eq!(data.n_entries(), 3);
        assert_eq!(data.row_counts(), vec![2, 1]);
        assert_eq!(data.col_counts(), vec![2, 1]);
    }

    #[test]
    fn ratings_duplicate_cell_rejected() {
        let (_dir, path) = write_tmp("row,col,value\nu1,m1,4\nu1,m1,5\n");
        let err = read_ratings_csv(&path, &RatingsSchema::default()).unwrap_err();
        assert!(matches!(
            err,
            CliError::Core(varcomp::Error::DuplicateCell { .. })
        ));
    }

    #[test]
    fn ratings_timestamps_set_arrival_order() {
        // File order u1m1, u1m2, u2m1; timestamps 30, 10, 20. Arrival
        // order must be entry 1 (t=10), entry 2 (t=20), entry 0 (t=30).
        let (_dir, path) = write_tmp(
            "row,col,value,ts\nu1,m1,4,30\nu1,m2,3,10\nu2,m1,5,20\n",
        );
        let schema = RatingsSchema {
            timestamp_col: Some("ts".into()),
            ..RatingsSchema::default()
        };
        let data = read_ratings_csv(&path, &schema).unwrap();
        assert_eq!(data.arrival_order(), Some(&[1usize, 2, 0][..]));
        let seq = data.arrival_sequence();
        let vals: Vec<f64> = seq.iter().map(|&e| data.entries()[e].value).collect();
        assert_eq!(vals, vec![3.0, 5.0, 4.0]);
    }

    #[test]
    fn ratings_timestamp_ties_break_by_file_order() {
        let (_dir, path) = write_tmp(
            "row,col,value,ts\nu1,m1,4,10\nu1,m2,3,10\nu2,m1,5,5\n",
        );
        let schema = RatingsSchema {
            timestamp_col: Some("ts".into()),
            ..RatingsSchema::default()
        };
        let data = read_ratings_csv(&path, &schema).unwrap();
        assert_eq!(data.arrival_order(), Some(&[2usize, 0, 1][..]));
    }

    #[test]
    fn grouped_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let sample = GroupedSample::new(vec![
            Group::with_regressors("a", vec![0.1 + 0.2, 1.0 / 3.0], vec![1.0, -2.5e-7]),
            Group::with_regressors("b", vec![f64::MIN_POSITIVE, 1e300], vec![0.0, 7.125]),
        ])
        .unwrap();
        write_grouped_csv(&path, &sample).unwrap();
        let back = read_grouped_csv(&path, &GroupedSchema::default()).unwrap();
        assert_eq!(sample, back);
    }

    #[test]
    fn ratings_roundtrip_preserves_grid_and_arrival() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let data = SparseRatings::new(
            2,
            3,
            vec![
                RatingEntry::new(0, 2, 1.5),
                RatingEntry::new(0, 0, -0.25),
                RatingEntry::new(1, 1, 1.0 / 7.0),
            ],
        )
        .unwrap()
        .with_arrival_order(vec![2, 0, 1])
        .unwrap();
        write_ratings_csv(&path, &data).unwrap();
        let schema = RatingsSchema {
            timestamp_col: Some("t".into()),
            ..RatingsSchema::default()
        };
        let back = read_ratings_csv(&path, &schema).unwrap();
        // Labels densify by first appearance (so column ids permute),
        // but the entry values and the arrival order survive exactly.
        assert_eq!(back.n_rows(), 2);
        assert_eq!(back.n_entries(), 3);
        assert_eq!(back.arrival_order(), Some(&[2usize, 0, 1][..]));
        let vals: Vec<f64> = back.entries().iter().map(|e| e.value).collect();
        assert_eq!(vals, vec![1.5, -0.25, 1.0 / 7.0]);
    }
}
