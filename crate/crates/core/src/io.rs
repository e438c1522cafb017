//! Plain-text file formats.
//!
//! Record files (detections, shots, tracklets, trajectories, assignments,
//! ground truth, embeddings, constraint dumps) are whitespace-separated,
//! one record per line, `#` starting a comment line. Commas are rejected so
//! a file cannot silently mix delimiter conventions. Trace and curve files
//! are ordinary CSV. Floats are written in shortest round-trip form except
//! model checkpoints, which use fixed-precision scientific notation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::constraints::ConstraintSet;
use crate::embed::EmbeddingModel;
use crate::error::{Error, Result};
use crate::linker::EmbeddingTable;
use crate::types::{BBox, Detection, DetectionId, Shot, Tracklet, Trajectory};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Tokenize one record line, rejecting the comma delimiter.
fn tokens<'a>(path: &Path, line_no: usize, line: &'a str) -> Result<Vec<&'a str>> {
    if line.contains(',') {
        return Err(Error::MixedDelimiter {
            path: path.display().to_string(),
            line: line_no,
        });
    }
    Ok(line.split_whitespace().collect())
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

struct FieldParser<'a> {
    path: &'a Path,
    line_no: usize,
    fields: Vec<&'a str>,
    cursor: usize,
}

impl<'a> FieldParser<'a> {
    fn new(path: &'a Path, line_no: usize, fields: Vec<&'a str>) -> Self {
        Self {
            path,
            line_no,
            fields,
            cursor: 0,
        }
    }

    fn next<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let raw = self
            .fields
            .get(self.cursor)
            .ok_or_else(|| parse_err(self.path, self.line_no, format!("missing field {what}")))?;
        self.cursor += 1;
        raw.parse().map_err(|_| {
            parse_err(
                self.path,
                self.line_no,
                format!("bad {what}: {raw:?}"),
            )
        })
    }

    fn finish(self) -> Result<()> {
        if self.cursor != self.fields.len() {
            return Err(parse_err(
                self.path,
                self.line_no,
                format!(
                    "{} trailing field(s)",
                    self.fields.len() - self.cursor
                ),
            ));
        }
        Ok(())
    }
}

/// One detection per line:
/// `id frame x y w h score F f_1..f_F C c_1..c_C` (C may be 0).
pub fn write_detections(path: impl AsRef<Path>, detections: &[Detection]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in detections {
        write!(
            w,
            "{} {} {:?} {:?} {:?} {:?} {:?} {}",
            d.id, d.frame, d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.score,
            d.feature.len()
        )?;
        for v in &d.feature {
            write!(w, " {v:?}")?;
        }
        match &d.context_feature {
            Some(c) => {
                write!(w, " {}", c.len())?;
                for v in c {
                    write!(w, " {v:?}")?;
                }
            }
            None => write!(w, " 0")?,
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut p = FieldParser::new(path, line_no, tokens(path, line_no, &line)?);
        let id: DetectionId = p.next("id")?;
        let frame: i64 = p.next("frame")?;
        let x: f64 = p.next("x")?;
        let y: f64 = p.next("y")?;
        let w: f64 = p.next("w")?;
        let h: f64 = p.next("h")?;
        let score: f64 = p.next("score")?;
        let f: usize = p.next("feature dimension")?;
        let mut feature = Vec::with_capacity(f);
        for _ in 0..f {
            feature.push(p.next("feature value")?);
        }
        let c: usize = p.next("context dimension")?;
        let context_feature = if c == 0 {
            None
        } else {
            let mut ctx = Vec::with_capacity(c);
            for _ in 0..c {
                ctx.push(p.next("context value")?);
            }
            Some(ctx)
        };
        p.finish()?;
        out.push(Detection {
            id,
            frame,
            bbox: BBox::new(x, y, w, h),
            score,
            feature,
            context_feature,
        });
    }
    Ok(out)
}

/// One shot per line: `shot_id start_frame end_frame`.
pub fn write_shots(path: impl AsRef<Path>, shots: &[Shot]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in shots {
        writeln!(w, "{} {} {}", s.shot_id, s.start_frame, s.end_frame)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shots(path: impl AsRef<Path>) -> Result<Vec<Shot>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut p = FieldParser::new(path, line_no, tokens(path, line_no, &line)?);
        let shot = Shot {
            shot_id: p.next("shot_id")?,
            start_frame: p.next("start_frame")?,
            end_frame: p.next("end_frame")?,
        };
        p.finish()?;
        out.push(shot);
    }
    Ok(out)
}

/// One tracklet per line: `tracklet_id shot_id n det_ids...`.
pub fn write_tracklets(path: impl AsRef<Path>, tracklets: &[Tracklet]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in tracklets {
        write!(w, "{} {} {}", t.tracklet_id, t.shot_id, t.len())?;
        for d in &t.detections {
            write!(w, " {d}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tracklets(path: impl AsRef<Path>) -> Result<Vec<Tracklet>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut p = FieldParser::new(path, line_no, tokens(path, line_no, &line)?);
        let tracklet_id = p.next("tracklet_id")?;
        let shot_id = p.next("shot_id")?;
        let n: usize = p.next("n")?;
        let mut detections = Vec::with_capacity(n);
        for _ in 0..n {
            detections.push(p.next("detection id")?);
        }
        p.finish()?;
        out.push(Tracklet {
            tracklet_id,
            shot_id,
            detections,
        });
    }
    Ok(out)
}

/// One trajectory per line: `identity tracklet_ids...`.
pub fn write_trajectories(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in trajectories {
        write!(w, "{}", t.identity)?;
        for id in &t.tracklet_ids {
            write!(w, " {id}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let fields = tokens(path, line_no, &line)?;
        let mut p = FieldParser::new(path, line_no, fields);
        let identity = p.next("identity")?;
        let mut tracklet_ids = Vec::new();
        while p.cursor < p.fields.len() {
            tracklet_ids.push(p.next("tracklet id")?);
        }
        out.push(Trajectory {
            identity,
            tracklet_ids,
        });
    }
    Ok(out)
}

/// Per-detection labels: `detection_id identity`, one per line. Used both
/// for assignments and for ground truth (-1 marks background).
pub fn write_labels(
    path: impl AsRef<Path>,
    labels: impl IntoIterator<Item = (DetectionId, i64)>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (id, label) in labels {
        writeln!(w, "{id} {label}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<(DetectionId, i64)>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut p = FieldParser::new(path, line_no, tokens(path, line_no, &line)?);
        let id = p.next("detection_id")?;
        let label = p.next("identity")?;
        p.finish()?;
        out.push((id, label));
    }
    Ok(out)
}

/// One embedding per line: `detection_id e_1..e_D`.
pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (id, e) in table {
        write!(w, "{id}")?;
        for v in e {
            write!(w, " {v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let mut out = EmbeddingTable::new();
    for (line_no, line) in data_lines(path)? {
        let fields = tokens(path, line_no, &line)?;
        let mut p = FieldParser::new(path, line_no, fields);
        let id: DetectionId = p.next("detection_id")?;
        let mut e = Vec::new();
        while p.cursor < p.fields.len() {
            e.push(p.next("embedding value")?);
        }
        out.insert(id, e);
    }
    Ok(out)
}

/// Constraint dump with POS / NEG / TRIPLET sections, line-delimited id
/// tuples. For inspection and tests.
pub fn write_constraints(path: impl AsRef<Path>, cs: &ConstraintSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "POS")?;
    for (a, b) in &cs.positives {
        writeln!(w, "{a} {b}")?;
    }
    writeln!(w, "NEG")?;
    for (a, b) in &cs.negatives {
        writeln!(w, "{a} {b}")?;
    }
    writeln!(w, "TRIPLET")?;
    for (a, p, n) in &cs.triplets {
        writeln!(w, "{a} {p} {n}")?;
    }
    w.flush()?;
    Ok(())
}

/// CSV loss trace: `epoch,mean_loss` with a header line.
pub fn write_loss_trace(path: impl AsRef<Path>, trace: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,mean_loss")?;
    for (epoch, loss) in trace.iter().enumerate() {
        writeln!(w, "{epoch},{loss:?}")?;
    }
    w.flush()?;
    Ok(())
}

/// CSV purity curve: `num_clusters,weighted_purity` with a header line.
pub fn write_purity_curve(path: impl AsRef<Path>, curve: &[(usize, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "num_clusters,weighted_purity")?;
    for (k, purity) in curve {
        writeln!(w, "{k},{purity:?}")?;
    }
    w.flush()?;
    Ok(())
}

/// Model checkpoint: versioned header (dims, activation, seed) followed by
/// per-layer parameters, weight rows then bias, in fixed-precision
/// scientific notation.
pub fn write_model(path: impl AsRef<Path>, model: &EmbeddingModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "shotlink-model v1")?;
    write!(w, "dims")?;
    for d in model.dims() {
        write!(w, " {d}")?;
    }
    writeln!(w)?;
    writeln!(w, "activation relu")?;
    writeln!(w, "seed {}", model.seed())?;
    for (li, layer) in model.layers.iter().enumerate() {
        writeln!(w, "layer {li}")?;
        for o in 0..layer.out_dim {
            let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
            let line: Vec<String> = row.iter().map(|v| format!("{v:+.17e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        let bias: Vec<String> = layer.b.iter().map(|v| format!("{v:+.17e}")).collect();
        writeln!(w, "{}", bias.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().enumerate();

    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        it.next()
            .map(|(i, l)| (i + 1, l.as_str()))
            .ok_or_else(|| parse_err(path, lines.len(), format!("missing {what}")))
    };

    let (n, header) = next_line("header")?;
    if header.trim() != "shotlink-model v1" {
        return Err(parse_err(path, n, "expected header 'shotlink-model v1'"));
    }
    let (n, dims_line) = next_line("dims")?;
    let dims: Vec<usize> = dims_line
        .trim()
        .strip_prefix("dims")
        .ok_or_else(|| parse_err(path, n, "expected 'dims ...'"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(path, n, "bad dimension")))
        .collect::<Result<_>>()?;
    let (n, act) = next_line("activation")?;
    if act.trim() != "activation relu" {
        return Err(parse_err(path, n, "unsupported activation"));
    }
    let (n, seed_line) = next_line("seed")?;
    let seed: u64 = seed_line
        .trim()
        .strip_prefix("seed")
        .ok_or_else(|| parse_err(path, n, "expected 'seed ...'"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(path, n, "bad seed"))?;

    let mut model = EmbeddingModel::zeros(&dims)?;
    model.set_seed(seed);
    for (li, pair) in dims.windows(2).enumerate() {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let (n, layer_line) = next_line("layer header")?;
        if layer_line.trim() != format!("layer {li}") {
            return Err(parse_err(path, n, format!("expected 'layer {li}'")));
        }
        let parse_row = |n: usize, line: &str, expect: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(path, n, "bad parameter")))
                .collect::<Result<_>>()?;
            if vals.len() != expect {
                return Err(parse_err(
                    path,
                    n,
                    format!("expected {expect} values, got {}", vals.len()),
                ));
            }
            Ok(vals)
        };
        for o in 0..out_dim {
            let (n, line) = next_line("weight row")?;
            let row = parse_row(n, line, in_dim)?;
            model.layers[li].w[o * in_dim..(o + 1) * in_dim].copy_from_slice(&row);
        }
        let (n, line) = next_line("bias row")?;
        let bias = parse_row(n, line, out_dim)?;
        model.layers[li].b.copy_from_slice(&bias);
    }
    Ok(model)
}
