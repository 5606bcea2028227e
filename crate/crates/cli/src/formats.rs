//! On-disk formats: datasets and metrics as JSON, probability tables as
//! comma-separated text with a `# rows=N cols=K` header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use weakauto::{Table, WeakDataset};

pub fn read_dataset(path: &Path) -> Result<WeakDataset> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let dataset: WeakDataset = serde_json::from_str(&text)
        .with_context(|| format!("parsing dataset {}", path.display()))?;
    dataset
        .validate()
        .with_context(|| format!("validating dataset {}", path.display()))?;
    Ok(dataset)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_dataset(path: &Path, dataset: &WeakDataset) -> Result<()> {
    write_json(path, dataset)
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let fields = line
        .strip_prefix('#')
        .context("probability file must start with a `# rows=N cols=K` header")?;
    let (mut rows, mut cols) = (None, None);
    for field in fields.split_whitespace() {
        match field.split_once('=') {
            Some(("rows", v)) => rows = Some(v.parse().context("rows in header")?),
            Some(("cols", v)) => cols = Some(v.parse().context("cols in header")?),
            _ => bail!("unexpected header field {field:?}"),
        }
    }
    match (rows, cols) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => bail!("header must give rows and cols"),
    }
}

pub fn parse_probs(text: &str) -> Result<Table> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let (rows, cols) = parse_header(header.trim())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (j, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("row {j}"))?;
        if record.len() != cols {
            bail!("row {j} has {} columns, header says {cols}", record.len());
        }
        for field in &record {
            data.push(
                field
                    .parse::<f64>()
                    .with_context(|| format!("row {j}: {field:?} is not a number"))?,
            );
        }
        seen += 1;
    }
    if seen != rows {
        bail!("header says {rows} rows, file has {seen}");
    }
    Ok(Table::from_vec(rows, cols, data)?)
}

pub fn read_probs(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading probabilities {}", path.display()))?;
    parse_probs(&text).with_context(|| format!("parsing probabilities {}", path.display()))
}

pub fn format_probs(table: &Table) -> Result<String> {
    let mut out = format!("# rows={} cols={}\n", table.rows(), table.cols()).into_bytes();
    {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut out);
        for row in table.iter_rows() {
            writer.write_record(row.iter().map(|v| v.to_string()))?;
        }
        writer.flush()?;
    }
    Ok(String::from_utf8(out)?)
}

pub fn write_probs(path: &Path, table: &Table) -> Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(format_probs(table)?.as_bytes())?;
    Ok(())
}

/// `<path>.manifest.json` next to an output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
