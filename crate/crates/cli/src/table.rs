//! Tabular output. CSV files carry `# key: value` metadata lines, a header
//! row and data rows, with floats written to 17 significant digits so they
//! read back exactly. A trailing block of `#` lines summarizes the run and
//! marks the file as complete. JSON output mirrors the same schema.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(_) | Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

pub type Row = Vec<Cell>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TableHead {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
}

impl TableHead {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Metadata lines and header row exactly as written to CSV.
    pub fn csv_prefix(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        out
    }
}

pub fn csv_row(row: &[Cell]) -> String {
    let mut line = row.iter().map(Cell::to_csv).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

pub fn csv_footer(footer: &[(String, String)]) -> String {
    footer.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

/// Destination for a table, written in grid order.
pub trait TableSink {
    fn begin(&mut self, head: &TableHead) -> CliResult<()>;
    fn row(&mut self, row: &[Cell]) -> CliResult<()>;
    fn finish(&mut self, footer: &[(String, String)]) -> CliResult<()>;
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streams CSV, flushing after every row so an interrupted run leaves a
/// resumable prefix.
pub struct CsvSink {
    out: Box<dyn Write>,
    path: PathBuf,
    skip_begin: bool,
}

impl CsvSink {
    pub fn new(out: Box<dyn Write>, path: PathBuf) -> Self {
        Self {
            out,
            path,
            skip_begin: false,
        }
    }

    /// Appending to a file whose prefix already holds the header.
    pub fn resuming(out: Box<dyn Write>, path: PathBuf) -> Self {
        Self {
            out,
            path,
            skip_begin: true,
        }
    }

    fn write(&mut self, s: &str) -> CliResult<()> {
        self.out.write_all(s.as_bytes()).map_err(io_err(&self.path))?;
        self.out.flush().map_err(io_err(&self.path))
    }
}

impl TableSink for CsvSink {
    fn begin(&mut self, head: &TableHead) -> CliResult<()> {
        if self.skip_begin {
            return Ok(());
        }
        self.write(&head.csv_prefix())
    }

    fn row(&mut self, row: &[Cell]) -> CliResult<()> {
        self.write(&csv_row(row))
    }

    fn finish(&mut self, footer: &[(String, String)]) -> CliResult<()> {
        self.write(&csv_footer(footer))
    }
}

/// Buffers the table and writes one JSON document at the end.
pub struct JsonSink {
    out: Box<dyn Write>,
    path: PathBuf,
    head: TableHead,
    rows: Vec<Value>,
}

impl JsonSink {
    pub fn new(out: Box<dyn Write>, path: PathBuf) -> Self {
        Self {
            out,
            path,
            head: TableHead::default(),
            rows: Vec::new(),
        }
    }
}

fn pairs(p: &[(String, String)]) -> Value {
    Value::Array(p.iter().map(|(k, v)| json!([k, v])).collect())
}

#[derive(Serialize)]
struct JsonTable<'a> {
    metadata: Value,
    columns: &'a [String],
    rows: Vec<Value>,
    footer: Value,
}

impl TableSink for JsonSink {
    fn begin(&mut self, head: &TableHead) -> CliResult<()> {
        self.head = head.clone();
        Ok(())
    }

    fn row(&mut self, row: &[Cell]) -> CliResult<()> {
        self.rows.push(Value::Array(row.iter().map(Cell::to_json).collect()));
        Ok(())
    }

    fn finish(&mut self, footer: &[(String, String)]) -> CliResult<()> {
        let doc = JsonTable {
            metadata: pairs(&self.head.metadata),
            columns: &self.head.columns,
            rows: std::mem::take(&mut self.rows),
            footer: pairs(footer),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("table serializes");
        text.push('\n');
        self.out.write_all(text.as_bytes()).map_err(io_err(&self.path))?;
        self.out.flush().map_err(io_err(&self.path))
    }
}

/// A CSV table read back from disk.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub head: TableHead,
    /// Complete data lines (without the trailing newline).
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
    /// Byte length of metadata, header and complete data rows.
    pub data_end: usize,
}

impl CsvTable {
    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        let c = self.head.column(column)?;
        self.rows.get(row)?.get(c)?.parse().ok()
    }

    pub fn text(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.head.column(column)?;
        self.rows.get(row)?.get(c).map(String::as_str)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.head.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn meta_line(line: &str) -> Option<(String, String)> {
    let body = line.strip_prefix("# ")?;
    let (k, v) = body.split_once(": ")?;
    Some((k.to_string(), v.to_string()))
}

/// Parses CSV text. A final line without a newline is treated as a torn
/// write and ignored.
pub fn parse_csv(text: &str, path: &Path) -> CliResult<CsvTable> {
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut table = CsvTable::default();
    let mut offset = 0;
    let mut header_seen = false;
    for raw in text.split_inclusive('\n') {
        let Some(line) = raw.strip_suffix('\n') else {
            break;
        };
        if line.starts_with('#') {
            let pair = meta_line(line).ok_or_else(|| bad(format!("malformed comment line `{line}`")))?;
            if header_seen {
                table.footer.push(pair);
            } else {
                table.head.metadata.push(pair);
            }
        } else if !header_seen {
            table.head.columns = line.split(',').map(str::to_string).collect();
            header_seen = true;
        } else {
            if !table.footer.is_empty() {
                return Err(bad("data row after the footer".into()));
            }
            let cells: Vec<String> = line.split(',').map(str::to_string).collect();
            if cells.len() != table.head.columns.len() {
                return Err(bad(format!("row has {} cells, header has {}", cells.len(), table.head.columns.len())));
            }
            table.rows.push(cells);
        }
        offset += raw.len();
        if table.footer.is_empty() {
            table.data_end = offset;
        }
    }
    if !header_seen {
        return Err(bad("no header row".into()));
    }
    Ok(table)
}

pub fn read_csv(path: &Path) -> CliResult<CsvTable> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::rc::Rc;

    #[derive(Clone, Default)]
    struct Shared(Rc<RefCell<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.borrow_mut().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    fn head() -> TableHead {
        TableHead {
            metadata: vec![("tool".into(), "test".into())],
            columns: vec!["index".into(), "U".into(), "g2_site0".into(), "status".into()],
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        let buf = Shared::default();
        let mut sink = CsvSink::new(Box::new(buf.clone()), "mem".into());
        let values = [0.1, 1.0 / 3.0, 4.020_000_929_966_235e-4, 1e300, -2.5e-310];
        sink.begin(&head()).unwrap();
        for (i, &v) in values.iter().enumerate() {
            sink.row(&[Cell::Int(i as i64), Cell::Float(v), Cell::Float(v * 7.0), Cell::text("ok")]).unwrap();
        }
        sink.finish(&[("status".into(), "ok=5".into())]).unwrap();
        let text = String::from_utf8(buf.0.borrow().clone()).unwrap();
        let t = parse_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(t.head, head());
        for (i, &v) in values.iter().enumerate() {
            assert_eq!(t.value(i, "U"), Some(v));
            assert_eq!(t.value(i, "g2_site0"), Some(v * 7.0));
        }
        assert_eq!(t.footer, vec![("status".to_string(), "ok=5".to_string())]);
        assert_eq!(t.data_end, text.len() - "# status: ok=5\n".len());
    }

    #[test]
    fn empty_table_is_metadata_and_header() {
        let buf = Shared::default();
        let mut sink = CsvSink::new(Box::new(buf.clone()), "mem".into());
        sink.begin(&head()).unwrap();
        sink.finish(&[]).unwrap();
        let text = String::from_utf8(buf.0.borrow().clone()).unwrap();
        assert_eq!(text, "# tool: test\nindex,U,g2_site0,status\n");
    }

    #[test]
    fn torn_last_line_is_ignored() {
        let text = "# tool: test\nindex,U,g2_site0,status\n0,1,2,ok\n1,1,2";
        let t = parse_csv(text, Path::new("mem")).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.data_end, text.len() - 5);
        assert!(parse_csv("0,1\n# x: y\n1,2\n", Path::new("mem")).is_err());
    }

    #[test]
    fn json_mirrors_csv_schema() {
        let buf = Shared::default();
        let mut sink = JsonSink::new(Box::new(buf.clone()), "mem".into());
        sink.begin(&head()).unwrap();
        sink.row(&[Cell::Int(0), Cell::Float(0.1), Cell::Empty, Cell::text("error:residual")]).unwrap();
        sink.finish(&[]).unwrap();
        let v: Value = serde_json::from_slice(&buf.0.borrow()).unwrap();
        assert_eq!(v["columns"][2], "g2_site0");
        assert_eq!(v["rows"][0][1].as_f64(), Some(0.1));
        assert!(v["rows"][0][2].is_null());
        assert_eq!(v["metadata"][0], json!(["tool", "test"]));
    }
}
