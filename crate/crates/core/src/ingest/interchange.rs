//! The interchange CSV read and written by every CLI command.
//!
//! ```text
//! index,feature_0[,feature_1,...][,label]
//! ```
//!
//! `index` is the point's stable index. Features are written with Rust's
//! shortest round-trip float formatting, so reloading is exact. `label`,
//! when present, is `normal` or `outlier` (`0`/`1` are accepted on read).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Dataset, Label};

pub fn write_interchange<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_owned()];
    header.extend((0..data.dimension()).map(|j| format!("feature_{j}")));
    if data.labels().is_some() {
        header.push("label".to_owned());
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for (i, x) in data.points().enumerate() {
        row.clear();
        row.push(data.index_of(i).to_string());
        row.extend(x.iter().map(f64::to_string));
        if let Some(labels) = data.labels() {
            row.push(label_str(labels[i]).to_owned());
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| Error::io("<interchange output>", e))?;
    Ok(())
}

pub fn label_str(l: Label) -> &'static str {
    match l {
        Label::Normal => "normal",
        Label::Outlier => "outlier",
    }
}

fn parse_label(s: &str) -> Option<Label> {
    match s.trim() {
        "normal" | "0" => Some(Label::Normal),
        "outlier" | "1" => Some(Label::Outlier),
        _ => None,
    }
}

pub fn read_interchange<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.first() != Some(&"index") {
        return Err(Error::Schema("first column must be `index`".into()));
    }
    let has_label = names.last() == Some(&"label");
    let dim = names.len() - 1 - usize::from(has_label);
    if dim == 0 {
        return Err(Error::Schema("no feature columns".into()));
    }
    for (j, name) in names[1..=dim].iter().enumerate() {
        if *name != format!("feature_{j}") {
            return Err(Error::Schema(format!(
                "expected column `feature_{j}`, found `{name}`"
            )));
        }
    }

    let mut index = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("data row {}: bad {what}", line + 1));
        if rec.len() != names.len() {
            return Err(bad("field count"));
        }
        index.push(rec[0].trim().parse::<usize>().map_err(|_| bad("index"))?);
        for j in 1..=dim {
            let v: f64 = rec[j].trim().parse().map_err(|_| bad("feature"))?;
            if !v.is_finite() {
                return Err(bad("feature (non-finite)"));
            }
            values.push(v);
        }
        if has_label {
            labels.push(parse_label(&rec[dim + 1]).ok_or_else(|| bad("label"))?);
        }
    }
    let data = Dataset::new(dim, values)?.with_index(index)?;
    if has_label {
        data.with_labels(labels)
    } else {
        Ok(data)
    }
}

pub fn save_interchange(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_interchange(BufWriter::new(file), data)
}

pub fn load_interchange(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_interchange(std::io::BufReader::new(file))
}
