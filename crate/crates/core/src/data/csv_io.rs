//! CSV interchange: comma separated, `.` decimals, LF line endings, no
//! quoting, mandatory header with columns `S`, `Z`, `Y`; every other column
//! is a covariate. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::{DataError, Dataset, RESERVED_COLUMNS};

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    read_csv_from(BufReader::new(file))
}

fn map_csv_error(err: csv::Error) -> DataError {
    if let csv::ErrorKind::UnequalLengths { pos, expected_len, len } = err.kind() {
        return DataError::Ragged {
            line: pos.as_ref().map_or(0, csv::Position::line),
            expected: *expected_len,
            found: *len,
        };
    }
    DataError::Csv(err)
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(map_csv_error)?.iter().map(str::to_string).collect();
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(DataError::DuplicateColumn(name.clone()));
        }
    }
    let position = |name: &'static str| header.iter().position(|h| h == name).ok_or(DataError::MissingColumn(name));
    let (si, zi, yi) = (position("S")?, position("Z")?, position("Y")?);

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record.map_err(map_csv_error)?;
        let line = record.position().map_or(0, csv::Position::line);
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                line,
                column: header[j].clone(),
                value: cell.to_string(),
            })?;
            columns[j].push(value);
        }
    }

    let binary = |j: usize| -> Result<Vec<u8>, DataError> {
        columns[j]
            .iter()
            .enumerate()
            .map(|(row, &v)| match v {
                v if v == 0.0 => Ok(0),
                v if v == 1.0 => Ok(1),
                value => Err(DataError::NotBinary { column: header[j].clone(), row, value }),
            })
            .collect()
    };
    let s = binary(si)?;
    let z = binary(zi)?;
    let y = std::mem::take(&mut columns[yi]);
    let covariates: IndexMap<String, Vec<f64>> = header
        .iter()
        .enumerate()
        .filter(|(_, name)| !RESERVED_COLUMNS.contains(&name.as_str()))
        .map(|(j, name)| (name.clone(), std::mem::take(&mut columns[j])))
        .collect();
    Dataset::new(s, z, y, covariates)
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut out = BufWriter::new(file);
    write_csv_to(dataset, &mut out)?;
    out.flush().map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(writer);
    let mut header = vec!["S", "Z", "Y"];
    header.extend(dataset.covariate_names());
    wtr.write_record(&header)?;
    let covs: Vec<&Vec<f64>> = dataset.covariates().values().collect();
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..dataset.len() {
        row.clear();
        row.push(dataset.s()[i].to_string());
        row.push(dataset.z()[i].to_string());
        row.push(dataset.y()[i].to_string());
        row.extend(covs.iter().map(|c| c[i].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| DataError::Csv(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset, DataError> {
        read_csv_from(text.as_bytes())
    }

    #[test]
    fn minimal_file() {
        let d = parse("S,Z,Y,W\n1,0,2.5,0.1\n1,1,3.5,-0.2\n0,1,1e3,7\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.covariate_names().collect::<Vec<_>>(), vec!["W"]);
        assert_eq!(d.y(), &[2.5, 3.5, 1000.0]);
        assert_eq!(d.s(), &[1, 1, 0]);
    }

    #[test]
    fn column_order_is_free() {
        let d = parse("W,Y,Z,S\n0.5,2,1,0\n").unwrap();
        assert_eq!(d.z(), &[1]);
        assert_eq!(d.covariate("W").unwrap(), &[0.5]);
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse("S,Z,W\n1,0,1\n").unwrap_err();
        assert!(matches!(err, DataError::MissingColumn("Y")));
        assert!(err.to_string().contains("`Y`"));
    }

    #[test]
    fn non_numeric_cell() {
        let err = parse("S,Z,Y\n1,0,abc\n").unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { line: 2, ref column, .. } if column == "Y"), "{err}");
    }

    #[test]
    fn ragged_row() {
        let err = parse("S,Z,Y\n1,0,1\n1,0\n").unwrap_err();
        assert!(matches!(err, DataError::Ragged { line: 3, expected: 3, found: 2 }), "{err}");
    }

    #[test]
    fn treatment_outside_binary() {
        let err = parse("S,Z,Y\n1,2,1\n").unwrap_err();
        assert!(matches!(err, DataError::NotBinary { ref column, .. } if column == "Z"));
        let err = parse("S,Z,Y\n0.5,1,1\n").unwrap_err();
        assert!(matches!(err, DataError::NotBinary { ref column, .. } if column == "S"));
    }

    #[test]
    fn writer_emits_lf_and_plain_numbers() {
        let d = parse("S,Z,Y,W\n1,0,2.5,0.1\n0,1,-3,1e-7\n").unwrap();
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "S,Z,Y,W\n1,0,2.5,0.1\n0,1,-3,0.0000001\n");
    }
}
