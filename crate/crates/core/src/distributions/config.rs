use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{DistributionModel, Kind, TailTable};
use crate::error::{Error, Result};

/// On-disk model description: `{"kind": "...", "params": {...}, "scale": s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

fn param(params: &Map<String, Value>, names: &[&str]) -> Result<f64> {
    for name in names {
        if let Some(v) = params.get(*name) {
            return v.as_f64().ok_or_else(|| Error::Config(format!("parameter `{name}` must be a number")));
        }
    }
    Err(Error::Config(format!("missing parameter `{}`", names[0])))
}

/// Reads a two-column `(t, N)` CSV; a non-numeric first row is treated as a header.
pub fn load_tail_csv(path: &Path) -> Result<TailTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Config(format!("{}: row {} needs two columns", path.display(), i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(t), Ok(n)) => points.push((t, n)),
            _ if i == 0 => continue,
            _ => return Err(Error::Config(format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    TailTable::new(points)
}

impl ModelSpec {
    /// Builds the model; relative CSV paths resolve against `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<DistributionModel> {
        let kind = match self.kind.as_str() {
            "SquareTail" => Kind::SquareTail,
            "Gaussian" => Kind::Gaussian,
            "Rademacher" => Kind::Rademacher,
            "WeibullSym" => Kind::WeibullSym { r: param(&self.params, &["r", "shape"])? },
            "TruncWeibullSym" => Kind::TruncWeibullSym {
                r: param(&self.params, &["r", "shape"])?,
                cutoff: param(&self.params, &["R", "cutoff"])?,
            },
            "CustomTail" => {
                if let Some(table) = self.params.get("table") {
                    let rows: Vec<(f64, f64)> = serde_json::from_value(table.clone())?;
                    Kind::CustomTail(TailTable::new(rows)?)
                } else if let Some(csv) = self.params.get("csv").and_then(Value::as_str) {
                    let mut path = PathBuf::from(csv);
                    if path.is_relative() {
                        if let Some(dir) = base_dir {
                            path = dir.join(path);
                        }
                    }
                    Kind::CustomTail(load_tail_csv(&path)?)
                } else {
                    return Err(Error::Config("CustomTail needs `table` or `csv`".into()));
                }
            }
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        };
        DistributionModel::new(kind, self.scale)
    }

    pub fn from_model(model: &DistributionModel) -> Self {
        let mut params = Map::new();
        match model.kind() {
            Kind::WeibullSym { r } => {
                params.insert("r".into(), (*r).into());
            }
            Kind::TruncWeibullSym { r, cutoff } => {
                params.insert("r".into(), (*r).into());
                params.insert("R".into(), (*cutoff).into());
            }
            Kind::CustomTail(table) => {
                let rows: Vec<Value> = table.points().map(|(t, n)| serde_json::json!([t, n])).collect();
                params.insert("table".into(), Value::Array(rows));
            }
            _ => {}
        }
        Self { kind: model.kind().name().to_string(), params, scale: model.scale() }
    }
}

impl DistributionModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        spec.build(None)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let spec: ModelSpec = serde_json::from_str(&text)?;
        spec.build(path.parent())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelSpec::from_model(self)).expect("model spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parse_catalog_kinds() {
        let m = DistributionModel::from_json_str(r#"{"kind":"WeibullSym","params":{"r":0.5},"scale":2}"#).unwrap();
        assert_eq!(m.kind(), &Kind::WeibullSym { r: 0.5 });
        assert_eq!(m.scale(), 2.0);
        let t = DistributionModel::from_json_str(r#"{"kind":"TruncWeibullSym","params":{"r":1,"R":3}}"#).unwrap();
        assert_eq!(t.kind(), &Kind::TruncWeibullSym { r: 1.0, cutoff: 3.0 });
        assert!(DistributionModel::from_json_str(r#"{"kind":"Cauchy"}"#).is_err());
        assert!(DistributionModel::from_json_str(r#"{"kind":"Gaussian","scale":0}"#).is_err());
    }

    #[test]
    fn custom_tail_from_csv_relative_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("tail.csv")).unwrap();
        writeln!(f, "t,N\n0,0\n1,1\n2,4\n4,16").unwrap();
        let json = dir.path().join("m.json");
        std::fs::write(&json, r#"{"kind":"CustomTail","params":{"csv":"tail.csv"}}"#).unwrap();
        let m = DistributionModel::from_json_file(&json).unwrap();
        assert!((m.tail_exponent(1.5).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let m = DistributionModel::trunc_weibull(0.7, 5.0).unwrap().with_scale(0.3).unwrap();
        assert_eq!(DistributionModel::from_json_str(&m.to_json()).unwrap(), m);
    }
}
