use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::SkeletonSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkeletonFormat {
    Json,
    Csv,
}

impl SkeletonFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(SkeletonFormat::Json),
            "csv" => Ok(SkeletonFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown skeleton format {other:?}"))),
        }
    }

    /// Guess from the file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SkeletonFormat::Csv,
            _ => SkeletonFormat::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    label: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joints: Option<Vec<String>>,
    frames: Vec<Vec<Vec<f64>>>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn from_frames(index: usize, frames: &[Vec<Vec<f64>>]) -> Result<Array3<f64>> {
    let first = frames.first().ok_or_else(|| parse_err(format!("sequence {index}: no frames")))?;
    let j = first.len();
    let d = first.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(frames.len() * j * d);
    for (t, frame) in frames.iter().enumerate() {
        if frame.len() != j {
            return Err(parse_err(format!(
                "sequence {index}, frame {t}: {} joints, expected {j}",
                frame.len()
            )));
        }
        for (jj, p) in frame.iter().enumerate() {
            if p.len() != d {
                return Err(parse_err(format!(
                    "sequence {index}, frame {t}, joint {jj}: {} coordinates, expected {d}",
                    p.len()
                )));
            }
            flat.extend_from_slice(p);
        }
    }
    Array3::from_shape_vec((frames.len(), j, d), flat).map_err(|e| parse_err(e.to_string()))
}

fn validated(index: usize, data: Array3<f64>) -> Result<SkeletonSequence> {
    SkeletonSequence::new(data).map_err(|e| match e {
        Error::NonFinite(m) => Error::NonFinite(format!("sequence {index}: {m}")),
        Error::InvalidArgument(m) => parse_err(format!("sequence {index}: {m}")),
        other => other,
    })
}

fn parse_json(text: &str) -> Result<Vec<SkeletonSequence>> {
    // serde_json rejects NaN literals, so non-finite input surfaces as a parse error.
    let records: Vec<JsonRecord> = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut seq = validated(i, from_frames(i, &r.frames)?)?;
            seq.label = r.label;
            seq.fps = r.fps;
            if let Some(names) = &r.joints {
                seq = seq
                    .with_joint_names(names.clone())
                    .map_err(|e| parse_err(format!("sequence {i}: {e}")))?;
            }
            Ok(seq)
        })
        .collect()
}

fn to_json(seqs: &[SkeletonSequence]) -> Result<String> {
    let records: Vec<JsonRecord> = seqs
        .iter()
        .map(|s| JsonRecord {
            label: s.label,
            fps: s.fps,
            joints: s.joint_names.clone(),
            frames: s
                .data()
                .outer_iter()
                .map(|f| f.outer_iter().map(|p| p.to_vec()).collect())
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&records).map_err(|e| Error::Io(e.to_string()))
}

struct CsvSeq {
    id: String,
    label: Option<u32>,
    joints: Vec<String>,
    frames: Vec<Vec<Vec<f64>>>,
}

fn parse_csv(text: &str) -> Result<Vec<SkeletonSequence>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let dims = match names.as_slice() {
        ["sequence", "label", "frame", "joint", "x", "y"] => 2,
        ["sequence", "label", "frame", "joint", "x", "y", "z"] => 3,
        _ => return Err(parse_err(format!("unexpected CSV header {names:?}"))),
    };
    let mut seqs: Vec<CsvSeq> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let label = match field(1) {
            "" => None,
            l => Some(l.parse::<u32>().map_err(|e| parse_err(format!("line {line}: label: {e}")))?),
        };
        let frame: usize =
            field(2).parse().map_err(|e| parse_err(format!("line {line}: frame: {e}")))?;
        let mut point = Vec::with_capacity(dims);
        for k in 0..dims {
            let v: f64 = field(4 + k)
                .parse()
                .map_err(|e| parse_err(format!("line {line}: coordinate: {e}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("line {line}")));
            }
            point.push(v);
        }
        let id = field(0);
        if seqs.last().is_none_or(|s| s.id != id) {
            if seqs.iter().any(|s| s.id == id) {
                return Err(parse_err(format!("line {line}: rows of sequence {id:?} are not contiguous")));
            }
            seqs.push(CsvSeq { id: id.to_string(), label, joints: vec![], frames: vec![] });
        }
        let seq = seqs.last_mut().expect("pushed above");
        if seq.label != label {
            return Err(parse_err(format!("line {line}: label changes within sequence {id:?}")));
        }
        if frame == seq.frames.len() {
            seq.frames.push(vec![]);
        } else if frame + 1 != seq.frames.len() {
            return Err(parse_err(format!("line {line}: frame {frame} out of order")));
        }
        let joint = field(3).to_string();
        let first_frame = seq.frames.len() == 1;
        let cur = seq.frames.last_mut().expect("pushed above");
        if first_frame {
            seq.joints.push(joint);
        } else if seq.joints.get(cur.len()) != Some(&joint) {
            return Err(parse_err(format!("line {line}: joint {joint:?} out of order")));
        }
        cur.push(point);
    }
    seqs.iter()
        .enumerate()
        .map(|(i, s)| {
            let mut seq = validated(i, from_frames(i, &s.frames)?)?;
            seq.label = s.label;
            let default: Vec<String> = (0..s.joints.len()).map(|j| j.to_string()).collect();
            if s.joints != default {
                seq = seq.with_joint_names(s.joints.clone())?;
            }
            Ok(seq)
        })
        .collect()
}

fn to_csv(seqs: &[SkeletonSequence]) -> Result<String> {
    let dims = seqs.first().map_or(3, SkeletonSequence::dims);
    if seqs.iter().any(|s| s.dims() != dims) {
        return Err(Error::DimensionMismatch("CSV needs one coordinate dimension for all sequences".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sequence", "label", "frame", "joint", "x", "y"];
    if dims == 3 {
        header.push("z");
    }
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for (i, s) in seqs.iter().enumerate() {
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        for (t, frame) in s.data().outer_iter().enumerate() {
            for (j, p) in frame.outer_iter().enumerate() {
                let joint = match &s.joint_names {
                    Some(n) => n[j].clone(),
                    None => j.to_string(),
                };
                let mut rec = vec![i.to_string(), label.clone(), t.to_string(), joint];
                rec.extend(p.iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn parse_skeletons(text: &str, format: SkeletonFormat) -> Result<Vec<SkeletonSequence>> {
    if text.trim().is_empty() {
        return Err(parse_err("empty skeleton file"));
    }
    let seqs = match format {
        SkeletonFormat::Json => parse_json(text)?,
        SkeletonFormat::Csv => parse_csv(text)?,
    };
    if seqs.is_empty() {
        return Err(parse_err("skeleton file contains no sequences"));
    }
    Ok(seqs)
}

pub fn skeletons_to_string(seqs: &[SkeletonSequence], format: SkeletonFormat) -> Result<String> {
    match format {
        SkeletonFormat::Json => to_json(seqs),
        SkeletonFormat::Csv => to_csv(seqs),
    }
}

pub fn load_skeletons(path: &Path, format: SkeletonFormat) -> Result<Vec<SkeletonSequence>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_skeletons(&text, format)
}

pub fn save_skeletons(path: &Path, seqs: &[SkeletonSequence], format: SkeletonFormat) -> Result<()> {
    crate::pipeline::write_atomic(path, skeletons_to_string(seqs, format)?.as_bytes())
}
