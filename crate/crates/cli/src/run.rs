//! Evaluates a spec on a worker pool and streams rows in grid order.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::commands::{commands, coordinate_columns, coordinates, status_summary, TableCommand};
use crate::error::{exit, usage, CliError, CliResult};
use crate::options::{resolve, Command, Format};
use crate::spec::{Point, SweepSpec};
use crate::table::{read_csv, Cell, CsvSink, JsonSink, Row, TableHead, TableSink};

/// Points evaluated per batch; bounds memory and the work lost to an
/// interruption.
const BATCH: usize = 64;

/// Resolves options for `command`, runs it and returns the exit code.
pub fn execute(command: &Command) -> CliResult<u8> {
    let options = resolve(command)?;
    let spec = SweepSpec::from_options(command.name(), &options)?;
    run_spec(&spec)
}

pub fn table_head(spec: &SweepSpec, cmd: &dyn TableCommand) -> CliResult<TableHead> {
    let mut metadata = spec.metadata();
    metadata.extend(cmd.metadata(spec)?);
    let mut columns = coordinate_columns(spec);
    columns.extend(cmd.columns(spec));
    Ok(TableHead { metadata, columns })
}

/// Full rows (coordinates and observables) of one point.
pub fn evaluate_point(spec: &SweepSpec, cmd: &dyn TableCommand, point: &Point) -> Vec<Row> {
    let coords = coordinates(spec, point);
    cmd.evaluate(spec, point)
        .into_iter()
        .map(|r| coords.iter().cloned().chain(r).collect())
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Rows already on disk and the point to continue from.
struct Resume {
    rows: Vec<Vec<String>>,
    next_point: usize,
    complete: bool,
}

/// Reads an interrupted CSV, drops the rows of its last (possibly partial)
/// point and truncates the file to what is kept.
fn prepare_resume(path: &Path, head: &TableHead) -> CliResult<Option<Resume>> {
    if !path.exists() {
        return Ok(None);
    }
    let existing = read_csv(path)?;
    if existing.head != *head {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "existing file was written for different settings; refusing to resume".into(),
        });
    }
    if !existing.footer.is_empty() {
        return Ok(Some(Resume {
            rows: existing.rows,
            next_point: usize::MAX,
            complete: true,
        }));
    }
    let mut rows = existing.rows;
    let mut keep_end = existing.data_end;
    let next_point = match rows.last() {
        Some(last) => {
            let index = last[0].clone();
            while rows.last().is_some_and(|r| r[0] == index) {
                let r = rows.pop().unwrap();
                keep_end -= r.join(",").len() + 1;
            }
            index.parse().map_err(|_| CliError::Format {
                path: path.to_path_buf(),
                message: format!("bad index `{index}`"),
            })?
        }
        None => 0,
    };
    let file = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
    file.set_len(keep_end as u64).map_err(io_err(path))?;
    Ok(Some(Resume {
        rows,
        next_point,
        complete: false,
    }))
}

fn exit_code(columns: &[String], rows: &[Vec<String>]) -> u8 {
    let Some(c) = columns.iter().position(|n| n == "status") else {
        return exit::OK;
    };
    let errors = rows.iter().filter(|r| r[c].starts_with("error:")).count();
    match errors {
        0 => exit::OK,
        n if n == rows.len() => exit::FAILURE,
        _ => exit::PARTIAL,
    }
}

pub fn run_spec(spec: &SweepSpec) -> CliResult<u8> {
    let registry = commands();
    let cmd = registry.get(spec.command)?.as_ref();
    let head = table_head(spec, cmd)?;
    let points = spec.points();

    let mut written: Vec<Vec<String>> = Vec::new();
    let mut start = 0;
    let mut sink: Box<dyn TableSink> = match (&spec.output, spec.format) {
        (Some(path), Format::Csv) if spec.resume => match prepare_resume(path, &head)? {
            Some(r) if r.complete => {
                eprintln!("cra: {} is already complete", path.display());
                return Ok(exit_code(&head.columns, &r.rows));
            }
            Some(r) => {
                written = r.rows;
                start = r.next_point;
                let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
                Box::new(CsvSink::resuming(Box::new(BufWriter::new(file)), path.clone()))
            }
            None => Box::new(CsvSink::new(create(path)?, path.clone())),
        },
        (Some(path), Format::Csv) => Box::new(CsvSink::new(create(path)?, path.clone())),
        (Some(path), Format::Json) => Box::new(JsonSink::new(create(path)?, path.clone())),
        (None, format) => {
            let out: Box<dyn Write> = Box::new(BufWriter::new(std::io::stdout()));
            match format {
                Format::Csv => Box::new(CsvSink::new(out, PathBuf::from("<stdout>"))),
                Format::Json => Box::new(JsonSink::new(out, PathBuf::from("<stdout>"))),
            }
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads.unwrap_or(0))
        .build()
        .map_err(|e| usage(format!("--threads: {e}")))?;

    sink.begin(&head)?;
    for batch in points[start.min(points.len())..].chunks(BATCH) {
        let rows: Vec<Vec<Row>> = pool.install(|| batch.par_iter().map(|p| evaluate_point(spec, cmd, p)).collect());
        for row in rows.iter().flatten() {
            sink.row(row)?;
            written.push(row.iter().map(Cell::to_csv).collect());
        }
    }
    let mut footer = vec![("status".to_string(), status_summary(&head.columns, &written))];
    footer.extend(cmd.footer(spec, &head.columns, &written));
    sink.finish(&footer)?;
    Ok(exit_code(&head.columns, &written))
}

fn create(path: &Path) -> CliResult<Box<dyn Write>> {
    Ok(Box::new(BufWriter::new(File::create(path).map_err(io_err(path))?)))
}
