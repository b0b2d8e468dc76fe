//! Run configuration: a JSON document whose fields mirror the subcommand
//! flags. Flags given on the command line override the document.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use ergotau::generators::{BoxRegion, PhaseRegion};
use ergotau::{AxisBox, MapSpec, MeasurableSet, Partition, QuarterDisk};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Non-negative count that also accepts `1e7`-style input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Count(pub u64);

impl FromStr for Count {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Count(v));
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
        if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
            Ok(Count(v as u64))
        } else {
            Err(format!("`{s}` is not a non-negative integer"))
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let text = match &v {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            other => return Err(serde::de::Error::custom(format!("expected a count, got {other}"))),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Count {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// Reads a config document. A run manifest is accepted too: its `config`
/// member is what gets replayed.
pub fn load(path: &Path, subcommand: &str) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(inner) = doc.get("config").cloned() {
        if let Some(sub) = doc.get("subcommand").and_then(Value::as_str) {
            check_subcommand(sub, subcommand)?;
        }
        doc = inner;
    }
    let Value::Object(mut map) = doc else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    if let Some(sub) = map.remove("subcommand") {
        check_subcommand(sub.as_str().unwrap_or_default(), subcommand)?;
    }
    Ok(Value::Object(map))
}

fn check_subcommand(found: &str, expected: &str) -> CliResult<()> {
    if found != expected {
        return Err(CliError::Config(format!(
            "config is for `{found}`, not `{expected}`"
        )));
    }
    Ok(())
}

/// Overlays the flags that were given onto the config document.
pub fn merge<T: Serialize + DeserializeOwned>(file: Option<Value>, flags: &T) -> CliResult<T> {
    let mut base = match file {
        Some(Value::Object(m)) => m,
        _ => serde_json::Map::new(),
    };
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? else {
        unreachable!("flag structs serialize to objects");
    };
    for (k, v) in given {
        let empty = v.is_null() || v.as_array().is_some_and(Vec::is_empty);
        if !empty {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(format!("config: {e}")))
}

fn parse_params(params: &[String]) -> CliResult<Vec<(String, f64)>> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("parameter `{p}` is not key=value")))?;
            let v = v
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("parameter `{p}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct MapArgs {
    /// baker, cat, doubling, rotation, standard, identity or swap.
    #[arg(long)]
    pub map: Option<String>,
    /// Map parameter as key=value, e.g. k=10 or alpha=0.375.
    #[arg(long = "param")]
    #[serde(default)]
    pub params: Vec<String>,
}

impl MapArgs {
    pub fn spec(&self) -> CliResult<MapSpec> {
        let name = self
            .map
            .as_deref()
            .ok_or_else(|| CliError::Config("no map given".into()))?;
        Ok(MapSpec::from_name(name, &parse_params(&self.params)?)?)
    }
}

/// `trivial`, `binary-x`, `grid:32x32`, `intervals:0.25,0.5`, or the
/// explicit `boxes` list of the config document.
pub fn partition(spec: &str, dim: usize, boxes: Option<&Vec<Vec<AxisBox>>>) -> CliResult<Partition> {
    if let Some(cells) = boxes {
        return Ok(Partition::from_boxes(cells.clone())?);
    }
    let bad = || CliError::Config(format!("unknown partition `{spec}`"));
    let (head, tail) = spec.split_once(':').unwrap_or((spec, ""));
    let p = match head {
        "trivial" => Partition::trivial(dim),
        "binary-x" => Partition::binary_x(dim),
        "grid" => {
            let counts = tail
                .split('x')
                .map(|c| c.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<CliResult<Vec<_>>>()?;
            let counts = if counts.len() == 1 { vec![counts[0]; dim] } else { counts };
            Partition::grid(&counts)?
        }
        "intervals" => {
            let breaks = tail
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<CliResult<Vec<_>>>()?;
            Partition::intervals(&breaks)?
        }
        _ => return Err(bad()),
    };
    Ok(p)
}

/// `full`, `empty`, `left-half`, `bottom-half`, or `box:lo..,hi..`.
pub fn measurable_set(spec: &str, dim: usize) -> CliResult<MeasurableSet> {
    let set = match spec {
        "full" => MeasurableSet::full(dim),
        "empty" => MeasurableSet::empty(dim),
        "left-half" => MeasurableSet::left_half(dim),
        "bottom-half" if dim == 2 => MeasurableSet::bottom_half(),
        other => match other.strip_prefix("box:") {
            Some(b) => MeasurableSet::new(dim, vec![AxisBox::parse_flat(b)?])?,
            None => return Err(CliError::Config(format!("unknown set `{other}`"))),
        },
    };
    Ok(set)
}

/// `unit-square`, `quarter-disk[:r]` or `box:lo..,hi..`.
pub fn region(spec: &str) -> CliResult<Box<dyn PhaseRegion>> {
    if spec == "unit-square" {
        return Ok(Box::new(BoxRegion::unit_square()));
    }
    if let Some(rest) = spec.strip_prefix("quarter-disk") {
        let radius = match rest.strip_prefix(':') {
            Some(r) => r.parse().map_err(|_| CliError::Config(format!("bad radius in `{spec}`")))?,
            None if rest.is_empty() => 1.0,
            None => return Err(CliError::Config(format!("unknown region `{spec}`"))),
        };
        return Ok(Box::new(QuarterDisk { radius }));
    }
    if let Some(b) = spec.strip_prefix("box:") {
        return Ok(Box::new(BoxRegion::new(vec![AxisBox::parse_flat(b)?])?));
    }
    Err(CliError::Config(format!("unknown region `{spec}`")))
}
