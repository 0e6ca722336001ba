//! CSV loading and writing.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A matrix read from CSV together with its optional header row.
#[derive(Debug, Clone)]
pub struct CsvMatrix {
    pub matrix: DenseMatrix,
    pub column_names: Option<Vec<String>>,
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<CsvMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, has_header)
}

/// Parses comma-separated decimal reals. Line numbers in errors are 1-based
/// file lines; row/column numbers in parse errors are 0-based data indices.
pub fn read_csv<R: std::io::Read>(reader: R, has_header: bool) -> Result<CsvMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let column_names = if has_header {
        let h = rdr.headers().map_err(csv_error)?;
        if h.is_empty() {
            return Err(Error::Structural {
                line: 1,
                message: "missing header row".into(),
            });
        }
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };

    let mut width: Option<usize> = column_names.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            // blank line
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Structural {
                    line,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: rows,
                col,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Structural {
            line: if has_header { 2 } else { 1 },
            message: "no data rows".into(),
        });
    }
    let matrix = DenseMatrix::new(rows, width.unwrap_or(0), values)?;
    Ok(CsvMatrix {
        matrix,
        column_names,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Structural {
        line,
        message: e.to_string(),
    }
}

/// Writes a matrix as CSV using the shortest round-trip representation of
/// each value.
pub fn write_csv<W: Write>(w: &mut W, m: &DenseMatrix, header: Option<&[String]>) -> Result<()> {
    let io = |e| Error::io("<csv>", e);
    if let Some(h) = header {
        writeln!(w, "{}", h.join(",")).map_err(io)?;
    }
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, m: &DenseMatrix, header: Option<&[String]>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_csv(&mut file, m, header)?;
    file.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, header: bool) -> Result<CsvMatrix> {
        read_csv(s.as_bytes(), header)
    }

    #[test]
    fn reads_rows_in_order() {
        let m = parse("1,2\n3,4\n5,6", false).unwrap().matrix;
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn empty_file_is_structural() {
        assert!(matches!(parse("", false), Err(Error::Structural { .. })));
    }

    #[test]
    fn header_is_kept_as_names() {
        let t = parse("a,b\n1,2\n", true).unwrap();
        assert_eq!(t.matrix.shape(), (1, 2));
        assert_eq!(t.matrix.as_slice(), &[1.0, 2.0]);
        assert_eq!(t.column_names.unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn ragged_row_names_line() {
        match parse("1,2\n3,4\n5\n", false) {
            Err(Error::Structural { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cell_names_position() {
        match parse("1,2\n3,x\n", false) {
            Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("1,inf\n", false),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(parse("NaN\n", false), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn csv_text_round_trips_exactly() {
        let m = DenseMatrix::from_rows(&[[0.1, -1e-300], [123456.789, 2.0f64.sqrt()]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &m, None).unwrap();
        let back = read_csv(buf.as_slice(), false).unwrap().matrix;
        assert_eq!(back, m);
    }
}
