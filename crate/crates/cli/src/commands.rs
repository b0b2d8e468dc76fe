use std::path::{Path, PathBuf};

use clap::Args;
use ergotau::export::fmt_f64;
use ergotau::generators::GeneratorReport;
use ergotau::partition::DEFAULT_CELL_CAP;
use ergotau::semiclassical::BreakTimeSweep;
use ergotau::timescale::{hbar_sweep, sweep_to_csv};
use ergotau::{
    block_entropies, ergodic_average, generator_cardinality_bounds, grain_region, ks_entropy_estimate,
    log_timescale, universal_constants, verify_generator, wavepacket_spread, AxisBox, BiasCorrection, Coding,
    EntropyOptions, EstimatorMethod, Grain, MapSpec, PhasePoint, Sampling,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{self, Count, MapArgs};
use crate::error::{CliError, CliResult};

/// Output directory plus the files written to it, in write order.
pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Outputs {
    /// Creates `dir` and checks it is writable before any work starts.
    pub fn prepare(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".ergotau-write-check");
        std::fs::write(&probe, b"").map_err(|e| CliError::io(&probe, e))?;
        std::fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn parse_enum<T>(s: &str, what: &str) -> CliResult<T>
where
    T: serde::de::DeserializeOwned,
{
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| CliError::Config(format!("unknown {what} `{s}`")))
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    slot.get_or_insert(value);
}

fn fill_map(m: &mut MapArgs, default: &str) {
    fill(&mut m.map, default.to_string());
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapArgs,
    /// trivial, binary-x, grid:AxB or intervals:b1,b2,...
    #[arg(long)]
    pub partition: Option<String>,
    /// Explicit partition cells, config document only.
    #[arg(skip)]
    pub boxes: Option<Vec<Vec<AxisBox>>>,
    /// Orbit length in symbols.
    #[arg(long)]
    pub orbit: Option<Count>,
    /// Sample a midpoint grid of this resolution per axis instead of an orbit.
    #[arg(long)]
    pub grid_resolution: Option<Count>,
    /// Deepest block level n_max.
    #[arg(long)]
    pub depth: Option<Count>,
    #[arg(long)]
    pub stride: Option<Count>,
    #[arg(long)]
    pub coding_depth: Option<Count>,
    /// none or miller-madow.
    #[arg(long)]
    pub bias: Option<String>,
    /// increment-plateau or slope.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub cap: Option<Count>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl EntropyArgs {
    pub fn resolve(&mut self, seed: u64) {
        fill_map(&mut self.map, "baker");
        fill(&mut self.partition, "binary-x".into());
        if self.grid_resolution.is_none() {
            fill(&mut self.orbit, Count(1_000_000));
            fill(&mut self.seed, seed);
        }
        fill(&mut self.depth, Count(12));
        fill(&mut self.stride, Count(1));
        fill(&mut self.coding_depth, Count(1));
        fill(&mut self.bias, "miller-madow".into());
        fill(&mut self.method, "increment-plateau".into());
        fill(&mut self.cap, Count(DEFAULT_CELL_CAP as u64));
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let map = self.map.spec()?;
        let q = config::partition(self.partition.as_deref().unwrap(), map.coord_len(), self.boxes.as_ref())?;
        let sampling = match self.grid_resolution {
            Some(r) => Sampling::Grid { resolution: r.get() },
            None => Sampling::Orbit {
                length: self.orbit.unwrap().get(),
                seed: self.seed.unwrap(),
            },
        };
        let opts = EntropyOptions {
            stride: self.stride.unwrap().get(),
            coding_depth: self.coding_depth.unwrap().get(),
            bias: parse_enum::<BiasCorrection>(self.bias.as_deref().unwrap(), "bias correction")?,
            cap: self.cap.unwrap().0 as u128,
        };
        let method: EstimatorMethod = self.method.as_deref().unwrap().parse()?;
        let curve = block_entropies(&map, &q, self.depth.unwrap().get(), sampling, opts)?;
        out.write("entropy_curve.csv", &curve.to_csv())?;
        let est = ks_entropy_estimate(&curve, method)?;
        let summary = json!({
            "map": map.name(),
            "h": est.h,
            "raw": est.raw,
            "clamped": est.clamped,
            "stderr": est.stderr,
            "method": est.method,
            "n_max": curve.n_max,
            "insufficient_samples": curve.insufficient_samples,
        });
        out.write_json("entropy.json", &json!({ "estimate": summary, "curve": curve }))?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct ErgodicityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapArgs,
    /// full, empty, left-half, bottom-half or box:lo..,hi..
    #[arg(long)]
    pub set_a: Option<String>,
    #[arg(long)]
    pub set_b: Option<String>,
    /// Number of lags, t = 0..t_max-1.
    #[arg(long)]
    pub t_max: Option<Count>,
    #[arg(long)]
    pub samples: Option<Count>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance for the ergodic flag.
    #[arg(long)]
    pub eps: Option<f64>,
}

impl ErgodicityArgs {
    pub fn resolve(&mut self, seed: u64) {
        fill_map(&mut self.map, "cat");
        fill(&mut self.set_a, "left-half".into());
        fill(&mut self.set_b, "bottom-half".into());
        fill(&mut self.t_max, Count(200));
        fill(&mut self.samples, Count(1_000_000));
        fill(&mut self.seed, seed);
        fill(&mut self.eps, ergotau::ergodicity::DEFAULT_ERGODIC_EPS);
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let map = self.map.spec()?;
        let dim = map.coord_len();
        let a = config::measurable_set(self.set_a.as_deref().unwrap(), dim)?;
        let b = config::measurable_set(self.set_b.as_deref().unwrap(), dim)?;
        let curve = ergodic_average(&map, &a, &b, self.t_max.unwrap().get(), self.samples.unwrap().get(), self.seed.unwrap())?;
        out.write("correlation.csv", &curve.to_csv())?;
        let eps = self.eps.unwrap();
        let summary = json!({
            "map": map.name(),
            "final_average": curve.final_average(),
            "eps": eps,
            "ergodic": curve.is_ergodic(eps),
            "t_max": curve.c.len(),
            "samples": curve.sampler_size,
        });
        out.write_json("ergodicity.json", &summary)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct GeneratorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(skip)]
    pub boxes: Option<Vec<Vec<AxisBox>>>,
    #[arg(long)]
    pub depth: Option<Count>,
    #[arg(long)]
    pub probes: Option<Count>,
    /// Separation resolution to certify.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// two-sided or forward; forward is the default for non-invertible maps.
    #[arg(long)]
    pub coding: Option<String>,
    /// Entropy for the cardinality window; defaults to the positive
    /// Lyapunov sum.
    #[arg(long)]
    pub h: Option<f64>,
}

/// Orbit length for the Lyapunov sum used when no entropy is supplied.
const WINDOW_LYAPUNOV_STEPS: usize = 100_000;

impl GeneratorArgs {
    pub fn resolve(&mut self, seed: u64) {
        fill_map(&mut self.map, "baker");
        fill(&mut self.partition, "binary-x".into());
        fill(&mut self.depth, Count(12));
        fill(&mut self.probes, Count(10_000));
        fill(&mut self.eps, 1.0 / 256.0);
        fill(&mut self.seed, seed);
        if self.coding.is_none() {
            let invertible = self.map.spec().map(|m| m.is_invertible()).unwrap_or(true);
            self.coding = Some(if invertible { "two-sided" } else { "forward" }.into());
        }
    }

    fn entropy(&self, map: &MapSpec) -> CliResult<f64> {
        if let Some(h) = self.h {
            return Ok(h);
        }
        if !map.has_jacobian() {
            return Err(CliError::Config(format!("map `{map}` has no Jacobian; pass --h")));
        }
        let x0 = PhasePoint(vec![0.1234, 0.5678][..map.coord_len()].to_vec());
        let spectrum = map.lyapunov_spectrum(&x0, WINDOW_LYAPUNOV_STEPS)?;
        Ok(spectrum.into_iter().filter(|l| *l > 0.0).sum())
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let map = self.map.spec()?;
        let q = config::partition(self.partition.as_deref().unwrap(), map.coord_len(), self.boxes.as_ref())?;
        let coding: Coding = parse_enum(self.coding.as_deref().unwrap(), "coding")?;
        let report: GeneratorReport = verify_generator(
            &map,
            &q,
            self.depth.unwrap().get(),
            self.probes.unwrap().get(),
            self.eps.unwrap(),
            self.seed.unwrap(),
            coding,
        )?;
        let h = self.entropy(&map)?;
        let window = generator_cardinality_bounds(h)?;
        let summary = json!({
            "map": map.name(),
            "report": report,
            "h": h,
            "window": window,
            "cardinality_in_window": window.contains(report.cardinality as u64),
        });
        out.write_json("generator.json", &summary)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct GrainArgs {
    /// unit-square, quarter-disk[:r] or box:lo..,hi..
    #[arg(long)]
    pub region: Option<String>,
    /// Lattice side per conjugate pair; repeat or comma-separate for a sweep.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub hbar: Vec<f64>,
}

impl GrainArgs {
    pub fn resolve(&mut self) {
        fill(&mut self.region, "quarter-disk".into());
        if self.hbar.is_empty() {
            self.hbar = (3..=9).map(|k| 2f64.powi(-k)).collect();
        }
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let region = config::region(self.region.as_deref().unwrap())?;
        let d = region.dim() / 2;
        let mut csv = String::from("hbar,q,interior_boxes,boundary_boxes,interior_volume\n");
        let mut rows = Vec::new();
        for &hbar in &self.hbar {
            let g = grain_region(region.as_ref(), Grain::square(hbar), d)?;
            let vol = g.interior_boxes as f64 * g.cell_volume();
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(hbar),
                fmt_f64(g.q),
                g.interior_boxes,
                g.boundary_boxes,
                fmt_f64(vol)
            ));
            rows.push(json!({ "hbar": hbar, "interior_volume": vol, "grained": g }));
        }
        out.write("grain.csv", &csv)?;
        let summary = json!({ "region": region.describe(), "volume": region.volume(), "D": d, "sweep": rows });
        out.write_json("grain.json", &summary)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct TimescaleArgs {
    /// Quasiclassical parameter; alternatively give --vol and --hbar.
    #[arg(long)]
    pub q: Option<f64>,
    /// KS entropy per step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Region volume for the sweep form.
    #[arg(long)]
    pub vol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub hbar: Vec<f64>,
    /// Degrees of freedom.
    #[arg(long)]
    pub d: Option<usize>,
    /// Lyapunov exponent for the wavepacket spread at τ.
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl TimescaleArgs {
    pub fn resolve(&mut self) {
        if self.q.is_none() {
            fill(&mut self.d, 1);
        }
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let h = self.h.ok_or_else(|| CliError::Config("timescale needs --h".into()))?;
        let summary = match (self.q, self.vol) {
            (Some(q), _) => {
                let r = log_timescale(q, h)?;
                let mut v = to_json(&r);
                if let Some(lambda) = self.lambda {
                    v["spread"] = to_json(&wavepacket_spread(lambda, r.tau, 1.0 / q)?);
                }
                v
            }
            (None, Some(vol)) => {
                if self.hbar.is_empty() {
                    return Err(CliError::Config("a volume sweep needs --hbar".into()));
                }
                let d = self.d.unwrap();
                let rows = hbar_sweep(vol, d, h, &self.hbar)?;
                out.write("timescale_sweep.csv", &sweep_to_csv(&rows))?;
                let (c1, c2) = universal_constants(h, vol, d)?;
                let points: Vec<Value> = rows
                    .iter()
                    .map(|(hb, r)| {
                        let mut v = json!({ "hbar": hb, "result": r });
                        if let Some(lambda) = self.lambda {
                            v["spread"] = wavepacket_spread(lambda, r.tau, hb.powi(d as i32))
                                .map(|w| to_json(&w))
                                .unwrap_or(Value::Null);
                        }
                        v
                    })
                    .collect();
                json!({ "C1": c1, "C2": c2, "D": d, "sweep": points })
            }
            (None, None) => return Err(CliError::Config("timescale needs --q or --vol".into())),
        };
        out.write_json("timescale.json", &summary)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct BreaktimeArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Momentum period 2πr.
    #[arg(long)]
    pub r: Option<u32>,
    /// Hilbert-space dimensions; comma-separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub packets: Option<Count>,
    #[arg(long)]
    pub particles: Option<Count>,
    #[arg(long)]
    pub steps: Option<Count>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub persistence: Option<Count>,
    #[arg(long)]
    pub sigma_stable: Option<f64>,
    #[arg(long)]
    pub alignment_steps: Option<Count>,
    #[arg(long)]
    pub lyapunov_steps: Option<Count>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl BreaktimeArgs {
    pub fn resolve(&mut self, seed: u64) {
        let d = BreakTimeSweep::default();
        fill(&mut self.k, d.k);
        fill(&mut self.r, d.r);
        if self.dims.is_empty() {
            self.dims = d.dims;
        }
        fill(&mut self.packets, Count(d.packets as u64));
        fill(&mut self.particles, Count(d.particles as u64));
        fill(&mut self.steps, Count(d.steps as u64));
        fill(&mut self.delta, d.delta);
        fill(&mut self.persistence, Count(d.persistence as u64));
        fill(&mut self.sigma_stable, d.sigma_stable);
        fill(&mut self.alignment_steps, Count(d.alignment_steps as u64));
        fill(&mut self.lyapunov_steps, Count(d.lyapunov_steps as u64));
        fill(&mut self.seed, seed);
    }

    fn sweep(&self) -> BreakTimeSweep {
        BreakTimeSweep {
            k: self.k.unwrap(),
            r: self.r.unwrap(),
            dims: self.dims.clone(),
            packets: self.packets.unwrap().get(),
            particles: self.particles.unwrap().get(),
            steps: self.steps.unwrap().get(),
            delta: self.delta.unwrap(),
            persistence: self.persistence.unwrap().get(),
            sigma_stable: self.sigma_stable.unwrap(),
            alignment_steps: self.alignment_steps.unwrap().get(),
            lyapunov_steps: self.lyapunov_steps.unwrap().get(),
            seed: self.seed.unwrap(),
        }
    }

    pub fn run(&self, out: &mut Outputs) -> CliResult<Value> {
        let outcome = self.sweep().run()?;
        let mut csv = String::from("q,hbar,t_b\n");
        let mut points = Vec::new();
        for r in &outcome.results {
            let n = r.q as u64;
            let t_b = r.t_b.map_or_else(|| "none".to_string(), |t| t.to_string());
            csv.push_str(&format!("{},{},{t_b}\n", fmt_f64(r.q), fmt_f64(r.hbar_eff)));
            let mut curves = r.quantum.to_csv();
            curves.push_str(r.classical.to_csv().split_once('\n').map_or("", |(_, rows)| rows));
            out.write(&format!("curves/curve_{n}.csv"), &curves)?;
            points.push(json!({
                "q": r.q,
                "hbar": r.hbar_eff,
                "t_b": r.t_b,
                "deviation": r.deviation(),
            }));
        }
        out.write("breaktime.csv", &csv)?;
        let summary = json!({
            "lambda": outcome.lambda,
            "inverse_lambda": 1.0 / outcome.lambda,
            "fit": outcome.fit,
            "inversions": outcome.inversions(),
            "observable": "momentum-ipr",
            "points": points,
        });
        out.write_json("breaktime.json", &summary)?;
        Ok(summary)
    }
}

