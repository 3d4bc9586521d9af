use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use msd_kmeans::ingest::{
    filter_pair, generate, load_csv, load_interchange, save_interchange, ColumnMapping, PairBoxes,
    SynthSpec,
};
use msd_kmeans::metrics::{compare, evaluate, MetricsSummary};
use msd_kmeans::{summarize, Class, Dataset, DetectionReport, RngSeed, Stage, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BenchCmd, DetectCmd, DetectorName, EvalCmd, ExtractCmd, Format, ReportCmd, SynthCmd,
};
use crate::detectors::Params;
use crate::Usage;

pub const VERDICT_HEADER: &str = "index,class,stage,score";

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Prints `text` or the JSON document to stdout, and saves the document
/// to `save` when given.
fn emit(format: Format, text: &str, doc: &Value, save: Option<&Path>) -> Result<()> {
    if let Some(path) = save {
        write_json(path, doc)?;
    }
    let mut out = io::stdout().lock();
    match format {
        Format::Text => out.write_all(text.as_bytes())?,
        Format::Structured => writeln!(out, "{}", serde_json::to_string_pretty(doc)?)?,
    }
    out.flush()?;
    Ok(())
}

fn write_verdicts<W: Write>(mut w: W, verdicts: &[Verdict]) -> io::Result<()> {
    writeln!(w, "{VERDICT_HEADER}")?;
    for v in verdicts {
        writeln!(w, "{},{},{},{}", v.index, v.class, v.stage, v.score)?;
    }
    w.flush()
}

fn parse_verdict(line: &str) -> Option<Verdict> {
    let mut f = line.split(',').map(str::trim);
    let index = f.next()?.parse().ok()?;
    let class = match f.next()? {
        "normal" => Class::Normal,
        "global_outlier" => Class::GlobalOutlier,
        "local_outlier" => Class::LocalOutlier,
        _ => return None,
    };
    let stage = match f.next()? {
        "msd" => Stage::Msd,
        "kmeans" => Stage::Kmeans,
        "single" => Stage::Single,
        _ => return None,
    };
    let score = f.next()?.parse().ok()?;
    f.next().is_none().then_some(Verdict {
        index,
        class,
        stage,
        score,
    })
}

fn read_verdicts(path: &Path) -> Result<Vec<Verdict>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(VERDICT_HEADER) {
        return Err(Usage(format!(
            "{}: expected header `{VERDICT_HEADER}`",
            path.display()
        ))
        .into());
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_verdict(l).ok_or_else(|| {
                Usage(format!("{}: bad verdict on line {}", path.display(), i + 2)).into()
            })
        })
        .collect()
}

fn report_doc(report: &DetectionReport, input: &Path, seed: RngSeed) -> Value {
    json!({
        "command": "detect",
        "detector": report.detector,
        "input": input,
        "seed": seed.0,
        "n": report.n(),
        "outliers": report.outlier_count(),
        "percentage": report.outlier_fraction * 100.0,
        "counts": {
            "normal": report.count(Class::Normal),
            "global_outlier": report.count(Class::GlobalOutlier),
            "local_outlier": report.count(Class::LocalOutlier),
        },
        "elapsed_ms": report.elapsed_ms,
        "params": report.params,
        "clusters": report.clusters,
    })
}

pub fn detect(c: &DetectCmd) -> Result<()> {
    let params = Params::from_args(&c.params)?;
    params.log_seed(&[c.detector]);
    let data = load_interchange(&c.input)?;
    let report = params.run(c.detector, &data)?;
    let doc = report_doc(&report, &c.input, params.seed);
    if let Some(path) = &c.summary {
        write_json(path, &doc)?;
    }
    match &c.output {
        Some(path) => {
            write_verdicts(create(path)?, &report.verdicts)
                .with_context(|| format!("cannot write {}", path.display()))?;
            emit(c.format, &format!("{}\n", summarize(&report)), &doc, None)
        }
        None => {
            write_verdicts(io::stdout().lock(), &report.verdicts)
                .context("cannot write verdicts")?;
            match c.format {
                Format::Text => eprintln!("{}", summarize(&report)),
                Format::Structured => eprintln!("{}", serde_json::to_string_pretty(&doc)?),
            }
            Ok(())
        }
    }
}

fn detectors_or_all(requested: &[DetectorName]) -> Vec<DetectorName> {
    if requested.is_empty() {
        DetectorName::ALL.to_vec()
    } else {
        let mut d = requested.to_vec();
        d.sort();
        d.dedup();
        d
    }
}

pub fn eval(c: &EvalCmd) -> Result<()> {
    let params = Params::from_args(&c.params)?;
    let detectors = detectors_or_all(&c.detector);
    let data = load_interchange(&c.input)?;
    let Some(truth) = data.labels() else {
        return Err(Usage(format!(
            "labels required: {} has no label column",
            c.input.display()
        ))
        .into());
    };
    params.log_seed(&detectors);
    let mut rows: Vec<(String, MetricsSummary)> = Vec::new();
    let mut runs = Vec::new();
    for &d in &detectors {
        let report = params.run(d, &data)?;
        let m = evaluate(&report, truth)?;
        runs.push(json!({ "detector": d.as_str(), "params": report.params, "metrics": m }));
        rows.push((d.as_str().to_owned(), m));
    }
    let table = compare(&rows);
    let doc = json!({
        "command": "eval",
        "input": c.input,
        "seed": params.seed.0,
        "n": data.len(),
        "labelled_outliers": truth.iter().filter(|l| l.is_outlier()).count(),
        "runs": runs,
        "ranking": table.rows.iter().map(|(name, _)| name).collect::<Vec<_>>(),
    });
    emit(c.format, &table.render(), &doc, c.output.as_deref())
}

pub fn synth(c: &SynthCmd) -> Result<()> {
    let mut spec = match &c.spec {
        Some(path) => SynthSpec::load(path)?,
        None => SynthSpec::shipped_default(),
    };
    if let Some(seed) = c.seed {
        spec.seed = RngSeed(seed);
    }
    let data = generate(&spec)?;
    save_interchange(&c.output, &data)?;
    let outliers = data
        .labels()
        .map_or(0, |l| l.iter().filter(|l| l.is_outlier()).count());
    let doc = json!({
        "command": "synth",
        "output": c.output,
        "rows": data.len(),
        "outliers": outliers,
        "spec": spec,
    });
    let text = format!(
        "wrote {} rows ({} outliers) to {}\n",
        data.len(),
        outliers,
        c.output.display()
    );
    emit(c.format, &text, &doc, None)
}

#[derive(Serialize)]
struct BenchRow {
    detector: &'static str,
    mode: &'static str,
    workers: usize,
    median_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    speedup: Option<f64>,
}

fn median_ms(params: &Params, d: DetectorName, data: &Dataset, repeats: usize) -> Result<f64> {
    let mut t = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        t.push(params.run(d, data)?.elapsed_ms);
    }
    t.sort_by(f64::total_cmp);
    Ok(if repeats % 2 == 1 {
        t[repeats / 2]
    } else {
        (t[repeats / 2 - 1] + t[repeats / 2]) / 2.0
    })
}

pub fn bench(c: &BenchCmd) -> Result<()> {
    if c.repeats == 0 {
        return Err(Usage("invalid repeats: must be at least 1".into()).into());
    }
    let params = Params::from_args(&c.params)?;
    let detectors = detectors_or_all(&c.detector);
    let data = load_interchange(&c.input)?;
    params.log_seed(&detectors);
    let workers = match c.params.workers {
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let mut rows = Vec::new();
    for &d in &detectors {
        let serial = median_ms(&params.with_mode(false, 1), d, &data, c.repeats)?;
        rows.push(BenchRow {
            detector: d.as_str(),
            mode: "serial",
            workers: 1,
            median_ms: serial,
            speedup: None,
        });
        if d.clustered() {
            let par = median_ms(&params.with_mode(true, workers), d, &data, c.repeats)?;
            rows.push(BenchRow {
                detector: d.as_str(),
                mode: "parallel",
                workers,
                median_ms: par,
                speedup: Some(serial / par),
            });
        }
    }
    let mut text = format!(
        "{:<12}  {:<8}  {:>7}  {:>12}  {:>7}\n",
        "detector", "mode", "workers", "median (ms)", "speedup"
    );
    for r in &rows {
        let speedup = r.speedup.map_or(String::from("-"), |s| format!("{s:.2}x"));
        let _ = writeln!(
            text,
            "{:<12}  {:<8}  {:>7}  {:>12.3}  {:>7}",
            r.detector, r.mode, r.workers, r.median_ms, speedup
        );
    }
    let doc = json!({
        "command": "bench",
        "input": c.input,
        "n": data.len(),
        "seed": params.seed.0,
        "repeats": c.repeats,
        "rows": rows,
    });
    emit(c.format, &text, &doc, c.output.as_deref())
}

pub const SERIES: [(Class, &str); 3] = [
    (Class::Normal, "normal.csv"),
    (Class::GlobalOutlier, "global_outliers.csv"),
    (Class::LocalOutlier, "local_outliers.csv"),
];

pub fn report(c: &ReportCmd) -> Result<()> {
    let verdicts = read_verdicts(&c.verdicts)?;
    let data = load_interchange(&c.input)?;
    let by_index: HashMap<usize, &Verdict> = verdicts.iter().map(|v| (v.index, v)).collect();
    if by_index.len() != verdicts.len()
        || verdicts.len() != data.len()
        || !data.indices().iter().all(|i| by_index.contains_key(i))
    {
        return Err(Usage(format!(
            "index mismatch: {} has {} verdicts, {} has {} points with different indices",
            c.verdicts.display(),
            verdicts.len(),
            c.input.display(),
            data.len()
        ))
        .into());
    }
    fs::create_dir_all(&c.output)
        .with_context(|| format!("cannot create {}", c.output.display()))?;
    let mut header = String::from("index");
    for j in 0..data.dimension() {
        let _ = write!(header, ",feature_{j}");
    }
    header.push_str(",score");
    let mut counts = Vec::new();
    let mut files: Vec<PathBuf> = Vec::new();
    for (class, name) in SERIES {
        let path = c.output.join(name);
        let mut w = create(&path)?;
        let mut rows = 0;
        let io = (|| -> io::Result<()> {
            writeln!(w, "{header}")?;
            for (i, x) in data.points().enumerate() {
                let v = by_index[&data.index_of(i)];
                if v.class != class {
                    continue;
                }
                write!(w, "{}", v.index)?;
                for f in x {
                    write!(w, ",{f}")?;
                }
                writeln!(w, ",{}", v.score)?;
                rows += 1;
            }
            w.flush()
        })();
        io.with_context(|| format!("cannot write {}", path.display()))?;
        counts.push((class, rows));
        files.push(path);
    }
    let doc = json!({
        "command": "report",
        "files": files,
        "counts": counts.iter().map(|(c, n)| (c.as_str(), *n)).collect::<HashMap<_, _>>(),
    });
    let mut text = String::new();
    for (path, (class, n)) in files.iter().zip(&counts) {
        let _ = writeln!(text, "{class}: {n} rows -> {}", path.display());
    }
    emit(c.format, &text, &doc, None)
}

pub fn extract(c: &ExtractCmd) -> Result<()> {
    let boxes = match &c.boxes {
        Some(path) => PairBoxes::load(path)?,
        None => PairBoxes::shipped(),
    };
    let loaded = load_csv(&c.input, &ColumnMapping::default())?;
    let ex = filter_pair(&loaded.records, &boxes.source, &boxes.dest)?;
    save_interchange(&c.output, &ex.dataset)?;
    if let Some(path) = &c.distances {
        let mut w = create(path)?;
        let io = (|| -> io::Result<()> {
            writeln!(w, "index,trip_distance,source_row")?;
            for (i, (d, row)) in ex.distances.iter().zip(&ex.source_rows).enumerate() {
                writeln!(w, "{},{d},{row}", ex.dataset.index_of(i))?;
            }
            w.flush()
        })();
        io.with_context(|| format!("cannot write {}", path.display()))?;
    }
    let doc = json!({
        "command": "extract",
        "input": c.input,
        "records": loaded.records.len(),
        "dropped": loaded.dropped,
        "extracted": ex.dataset.len(),
        "boxes": boxes,
        "output": c.output,
        "distances": c.distances,
    });
    let text = format!(
        "{} of {} trips matched ({} malformed rows dropped); wrote {}\n",
        ex.dataset.len(),
        loaded.records.len(),
        loaded.dropped,
        c.output.display()
    );
    emit(c.format, &text, &doc, None)
}
