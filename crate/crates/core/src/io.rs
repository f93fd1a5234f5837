//! File formats: weights (JSON), datasets (CSV), partitions (JSON), barcodes
//! (CSV) and result bundles (JSON).
//!
//! Every file written by the CLI embeds a [`Provenance`] record holding the
//! command and its fully resolved configuration, so it can be regenerated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::datasets::{DatasetMeta, LabeledDataset, Targets};
use crate::error::{Error, Result};
use crate::homology::{Bar, Barcode};
use crate::linalg::{AffineMap, Matrix};
use crate::network::Mlp;
use crate::overlap::{OverlapClass, OverlapDecomposition};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config: Value,
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Float serialised with 17 significant digits.
struct Full(f64);

impl Serialize for Full {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct WeightsOut<'a> {
    format: &'static str,
    version: u32,
    shape: Vec<usize>,
    layers: Vec<LayerOut>,
    metadata: &'a Value,
}

#[derive(Serialize)]
struct LayerOut {
    weights: Vec<Vec<Full>>,
    bias: Vec<Full>,
}

#[derive(Deserialize)]
struct WeightsIn {
    format: String,
    version: u32,
    shape: Vec<usize>,
    layers: Vec<LayerIn>,
    #[serde(default)]
    metadata: Value,
}

#[derive(Deserialize)]
struct LayerIn {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

const WEIGHTS_FORMAT: &str = "relu-overlap-weights";

pub fn weights_to_string(net: &Mlp, metadata: &Value) -> Result<String> {
    let layers = net
        .layers()
        .iter()
        .map(|l| LayerOut {
            weights: (0..l.output_dim())
                .map(|r| l.linear().row(r).iter().map(|&v| Full(v)).collect())
                .collect(),
            bias: l.offset().iter().map(|&v| Full(v)).collect(),
        })
        .collect();
    let out = WeightsOut {
        format: WEIGHTS_FORMAT,
        version: SCHEMA_VERSION,
        shape: net.shape(),
        layers,
        metadata,
    };
    let mut s = serde_json::to_string_pretty(&out)?;
    s.push('\n');
    Ok(s)
}

pub fn weights_from_str(s: &str) -> Result<(Mlp, Value)> {
    let w: WeightsIn = serde_json::from_str(s)?;
    if w.format != WEIGHTS_FORMAT {
        return Err(Error::Parse(format!("not a weight file (format {:?})", w.format)));
    }
    if w.version != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported weight file version {}", w.version)));
    }
    let layers = w
        .layers
        .into_iter()
        .map(|l| AffineMap::new(Matrix::from_rows(&l.weights)?, l.bias))
        .collect::<Result<Vec<_>>>()?;
    let net = Mlp::new(layers)?;
    if net.shape() != w.shape {
        return Err(Error::Parse(format!(
            "declared shape {:?} does not match layers {:?}",
            w.shape,
            net.shape()
        )));
    }
    Ok((net, w.metadata))
}

pub fn save_weights(path: &Path, net: &Mlp, metadata: &Value) -> Result<()> {
    write_file(path, &weights_to_string(net, metadata)?)
}

/// Reads a file, naming it in the error.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load_weights(path: &Path) -> Result<(Mlp, Value)> {
    weights_from_str(&read_file(path)?)
}

/// CSV with `# key: <json>` metadata lines, a header `x0..x{d-1}` followed by
/// `y0..` (regression targets) or `label`.
pub fn dataset_to_string(ds: &LabeledDataset, provenance: Option<&Provenance>) -> Result<String> {
    let mut s = String::new();
    s.push_str("# relu-overlap dataset v1\n");
    let meta = &ds.metadata;
    writeln!(s, "# generator: {}", serde_json::to_string(&meta.generator)?).ok();
    writeln!(s, "# params: {}", serde_json::to_string(&meta.params)?).ok();
    if let Some(seed) = meta.seed {
        writeln!(s, "# seed: {seed}").ok();
    }
    if let Some(b) = &meta.betti {
        writeln!(s, "# betti: {}", serde_json::to_string(b)?).ok();
    }
    if let Some(p) = provenance {
        writeln!(s, "# provenance: {}", serde_json::to_string(p)?).ok();
    }
    let d = ds.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    match &ds.targets {
        Targets::Values(v) => {
            let m = v.first().map_or(0, Vec::len);
            header.extend((0..m).map(|i| format!("y{i}")));
        }
        Targets::Labels(_) => header.push("label".into()),
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for (i, x) in ds.inputs.iter().enumerate() {
        let mut fields: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        match &ds.targets {
            Targets::Values(v) => fields.extend(v[i].iter().map(|t| t.to_string())),
            Targets::Labels(l) => fields.push(l[i].to_string()),
        }
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    Ok(s)
}

/// Metadata lines of a commented file, as `(key, raw value)`.
fn comment_fields(s: &str) -> Vec<(&str, &str)> {
    s.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(": "))
        .collect()
}

pub fn dataset_from_str(s: &str) -> Result<(LabeledDataset, Option<Provenance>)> {
    let mut meta = DatasetMeta {
        generator: "external".into(),
        params: Value::Object(Default::default()),
        seed: None,
        betti: None,
    };
    let mut provenance = None;
    for (k, v) in comment_fields(s) {
        match k {
            "generator" => meta.generator = serde_json::from_str(v)?,
            "params" => meta.params = serde_json::from_str(v)?,
            "seed" => meta.seed = Some(serde_json::from_str(v)?),
            "betti" => meta.betti = Some(serde_json::from_str(v)?),
            "provenance" => provenance = Some(serde_json::from_str(v)?),
            _ => {}
        }
    }
    let mut lines = s.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("dataset has no header".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let d = header.iter().take_while(|h| h.starts_with('x')).count();
    let rest = &header[d..];
    let labels = match rest {
        ["label"] => true,
        r if !r.is_empty() && r.iter().all(|h| h.starts_with('y')) => false,
        _ => return Err(Error::Parse(format!("unrecognised dataset header {header:?}"))),
    };
    let mut inputs = Vec::new();
    let mut values = Vec::new();
    let mut label_col = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(Error::Parse(format!(
                "dataset row {} has {} fields, expected {}",
                lineno + 1,
                fields.len(),
                header.len()
            )));
        }
        let parse = |f: &str| {
            f.parse::<f64>()
                .map_err(|e| Error::Parse(format!("dataset row {}: {e}", lineno + 1)))
        };
        inputs.push(fields[..d].iter().map(|f| parse(f)).collect::<Result<Vec<_>>>()?);
        if labels {
            label_col.push(
                fields[d]
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("dataset row {}: {e}", lineno + 1)))?,
            );
        } else {
            values.push(fields[d..].iter().map(|f| parse(f)).collect::<Result<Vec<_>>>()?);
        }
    }
    let targets = if labels {
        Targets::Labels(label_col)
    } else {
        Targets::Values(values)
    };
    Ok((LabeledDataset::new(inputs, targets, meta)?, provenance))
}

pub fn save_dataset(path: &Path, ds: &LabeledDataset, provenance: Option<&Provenance>) -> Result<()> {
    write_file(path, &dataset_to_string(ds, provenance)?)
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    Ok(dataset_from_str(&read_file(path)?)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub format: String,
    pub version: u32,
    pub num_points: usize,
    pub layer: usize,
    pub classes: Vec<OverlapClass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<Provenance>,
}

const PARTITION_FORMAT: &str = "relu-overlap-partition";

impl PartitionFile {
    pub fn new(od: &OverlapDecomposition, num_points: usize, layer: usize, provenance: Option<Provenance>) -> Self {
        Self {
            format: PARTITION_FORMAT.into(),
            version: SCHEMA_VERSION,
            num_points,
            layer,
            classes: od.classes().to_vec(),
            provenance,
        }
    }

    pub fn decomposition(&self) -> Result<OverlapDecomposition> {
        let od = OverlapDecomposition::new(self.classes.clone())?;
        if od.max_index().is_some_and(|m| m >= self.num_points) {
            return Err(Error::Parse("partition refers to a point beyond num_points".into()));
        }
        Ok(od)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        if p.format != PARTITION_FORMAT || p.version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("not a partition file v{SCHEMA_VERSION}")));
        }
        Ok(p)
    }
}

/// CSV with one `dim,birth,death` record per bar (`inf` for infinite deaths).
pub fn barcode_to_string(b: &Barcode, extra: &[(&str, Value)], provenance: Option<&Provenance>) -> Result<String> {
    let mut s = String::from("# relu-overlap barcode v1\n");
    for (k, v) in extra {
        writeln!(s, "# {k}: {}", serde_json::to_string(v)?).ok();
    }
    writeln!(s, "# zero_length: {}", serde_json::to_string(&b.zero_length)?).ok();
    if let Some(p) = provenance {
        writeln!(s, "# provenance: {}", serde_json::to_string(p)?).ok();
    }
    s.push_str("dim,birth,death\n");
    for (k, bars) in b.bars.iter().enumerate() {
        for bar in bars {
            let death = if bar.is_infinite() {
                "inf".to_string()
            } else {
                bar.death.to_string()
            };
            writeln!(s, "{k},{},{death}", bar.birth).ok();
        }
    }
    Ok(s)
}

pub fn barcode_from_str(s: &str) -> Result<Barcode> {
    let mut zero_length: Vec<usize> = Vec::new();
    for (k, v) in comment_fields(s) {
        if k == "zero_length" {
            zero_length = serde_json::from_str(v)?;
        }
    }
    let mut bars: Vec<Vec<Bar>> = vec![Vec::new(); zero_length.len()];
    for line in s.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("bad barcode record {line:?}"));
        if f.len() != 3 {
            return Err(bad());
        }
        let k: usize = f[0].parse().map_err(|_| bad())?;
        let birth: f64 = f[1].parse().map_err(|_| bad())?;
        let death: f64 = if f[2] == "inf" {
            f64::INFINITY
        } else {
            f[2].parse().map_err(|_| bad())?
        };
        if bars.len() <= k {
            bars.resize(k + 1, Vec::new());
        }
        bars[k].push(Bar { birth, death });
    }
    if zero_length.len() < bars.len() {
        zero_length.resize(bars.len(), 0);
    }
    Ok(Barcode { bars, zero_length })
}

/// Barcode bars as plain records for embedding in JSON.
pub fn barcode_records(b: &Barcode) -> Value {
    let bars: Vec<Value> = b
        .flat()
        .into_iter()
        .map(|(k, birth, death)| {
            serde_json::json!({
                "dim": k,
                "birth": birth,
                "death": if death.is_infinite() { Value::String("inf".into()) } else { death.into() },
            })
        })
        .collect();
    Value::Array(bars)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub format: String,
    pub version: u32,
    pub provenance: Provenance,
    pub results: Value,
}

const RESULT_FORMAT: &str = "relu-overlap-result";

impl ResultBundle {
    pub fn new(provenance: Provenance, results: Value) -> Self {
        Self {
            format: RESULT_FORMAT.into(),
            version: SCHEMA_VERSION,
            provenance,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(s)?;
        if b.format != RESULT_FORMAT {
            return Err(Error::Parse("not a result bundle".into()));
        }
        Ok(b)
    }
}

/// Provenance embedded in any file written by the CLI, if present.
pub fn read_provenance(contents: &str) -> Result<Option<Provenance>> {
    let trimmed = contents.trim_start();
    if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(contents)?;
        let p = v
            .get("provenance")
            .or_else(|| v.get("metadata").and_then(|m| m.get("provenance")));
        return match p {
            Some(p) if !p.is_null() => Ok(Some(serde_json::from_value(p.clone())?)),
            _ => Ok(None),
        };
    }
    for (k, v) in comment_fields(contents) {
        if k == "provenance" {
            return Ok(Some(serde_json::from_str(v)?));
        }
    }
    Ok(None)
}

fn csv_field(f: &str) -> std::borrow::Cow<'_, str> {
    if f.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", f.replace('"', "\"\"")).into()
    } else {
        f.into()
    }
}

/// CSV table; fields with separators or quotes are quoted.
pub fn table_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let fields: Vec<_> = r.iter().map(|f| csv_field(f)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}
