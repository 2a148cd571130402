use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cdf::CdfSeries;
use super::monte_carlo::MonteCarloResult;
use super::sweep::{RoutingRow, TrafficRow};
use crate::error::Result;
use crate::routing::Scheme;
use crate::traffic::ControlPolicy;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Identifies the configuration and seed an artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub cfg_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Provenance {
            cfg_hash: cfg_hash(config)?,
            seed,
        })
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn cfg_hash(config: &impl Serialize) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(hex::encode(&digest[..8]))
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so a failed run never leaves a partial file behind.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| e.error)?;
    Ok(path)
}

#[derive(Serialize)]
struct JsonTable<'a, T> {
    cfg_hash: &'a str,
    seed: u64,
    rows: &'a [T],
}

/// Serialises `rows` as CSV (with a `# cfg_hash=...,seed=...` first line)
/// or as a JSON object carrying the same provenance.
pub fn render_table<T: Serialize>(rows: &[T], format: Format, prov: &Provenance) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut out = format!("# cfg_hash={},seed={}\n", prov.cfg_hash, prov.seed).into_bytes();
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            out.extend(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?);
            Ok(out)
        }
        Format::Json => {
            let t = JsonTable {
                cfg_hash: &prov.cfg_hash,
                seed: prov.seed,
                rows,
            };
            let mut v = serde_json::to_vec_pretty(&t)?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

pub fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: Format, prov: &Provenance) -> Result<PathBuf> {
    let bytes = render_table(rows, format, prov)?;
    write_atomic(dir, &format!("{stem}.{}", format.extension()), &bytes)
}

#[derive(Serialize)]
struct DurationRow {
    scheme: Scheme,
    duration_s: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct PcRow {
    scheme: Scheme,
    p_c: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct TripRow {
    trial: usize,
    source: u32,
    destination: u32,
    scheme: Scheme,
    routed: bool,
    trip_duration_s: f64,
    covered_duration_s: f64,
    p_c: f64,
    success: bool,
    gamma_used: Option<f64>,
    segments: usize,
}

fn cdf_rows<R>(cdfs: &[CdfSeries], f: impl Fn(Scheme, f64, f64) -> R) -> Vec<R> {
    cdfs.iter()
        .flat_map(|c| c.values.iter().zip(&c.fractions).map(|(&v, &p)| f(c.scheme, v, p)))
        .collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    cfg_hash: &'a str,
    seed: u64,
    schemes: &'a [super::monte_carlo::SchemeSummary],
}

/// Writes the Monte-Carlo artifacts: duration and P_c CDFs, per-trip
/// metrics and `summary.json`. Returns the paths written.
pub fn write_monte_carlo(dir: &Path, result: &MonteCarloResult, format: Format, prov: &Provenance) -> Result<Vec<PathBuf>> {
    let durations = cdf_rows(&result.duration_cdfs, |scheme, duration_s, fraction| DurationRow {
        scheme,
        duration_s,
        fraction,
    });
    let pcs = cdf_rows(&result.pc_cdfs, |scheme, p_c, fraction| PcRow { scheme, p_c, fraction });
    let trips: Vec<TripRow> = result
        .trials
        .iter()
        .flat_map(|t| {
            t.metrics.iter().map(move |m| TripRow {
                trial: t.trial,
                source: t.source.0,
                destination: t.destination.0,
                scheme: m.scheme,
                routed: m.routed,
                trip_duration_s: m.trip_duration,
                covered_duration_s: m.covered_duration,
                p_c: m.p_c,
                success: m.success,
                gamma_used: m.gamma_used,
                segments: m.segments,
            })
        })
        .collect();
    let summary = Summary {
        cfg_hash: &prov.cfg_hash,
        seed: prov.seed,
        schemes: &result.summary,
    };
    let mut summary_bytes = serde_json::to_vec_pretty(&summary)?;
    summary_bytes.push(b'\n');
    Ok(vec![
        write_table(dir, "fig4_duration_cdf", &durations, format, prov)?,
        write_table(dir, "fig5_pc_cdf", &pcs, format, prov)?,
        write_table(dir, "trips", &trips, format, prov)?,
        write_atomic(dir, "summary.json", &summary_bytes)?,
    ])
}

#[derive(Serialize)]
struct GammaRow {
    gamma_mbps: f64,
    scheme: Scheme,
    trials: usize,
    success_pct: f64,
    mean_pc: f64,
    mean_duration_s: f64,
}

#[derive(Serialize)]
struct BsPcRow {
    bs_count: u32,
    scheme: Scheme,
    trials: usize,
    mean_pc: f64,
}

#[derive(Serialize)]
struct BsSuccessRow {
    bs_count: u32,
    scheme: Scheme,
    trials: usize,
    success_pct: f64,
}

pub fn write_gamma_sweep(dir: &Path, rows: &[RoutingRow], format: Format, prov: &Provenance) -> Result<Vec<PathBuf>> {
    let out: Vec<GammaRow> = rows
        .iter()
        .map(|r| GammaRow {
            gamma_mbps: r.value,
            scheme: r.scheme,
            trials: r.trials,
            success_pct: r.success_pct,
            mean_pc: r.mean_pc,
            mean_duration_s: r.mean_duration,
        })
        .collect();
    Ok(vec![write_table(dir, "fig6_success_vs_gamma", &out, format, prov)?])
}

pub fn write_bs_sweep(dir: &Path, rows: &[RoutingRow], format: Format, prov: &Provenance) -> Result<Vec<PathBuf>> {
    let pc: Vec<BsPcRow> = rows
        .iter()
        .map(|r| BsPcRow {
            bs_count: r.value as u32,
            scheme: r.scheme,
            trials: r.trials,
            mean_pc: r.mean_pc,
        })
        .collect();
    let success: Vec<BsSuccessRow> = rows
        .iter()
        .map(|r| BsSuccessRow {
            bs_count: r.value as u32,
            scheme: r.scheme,
            trials: r.trials,
            success_pct: r.success_pct,
        })
        .collect();
    Ok(vec![
        write_table(dir, "fig7_pc_vs_bs", &pc, format, prov)?,
        write_table(dir, "fig8_success_vs_bs", &success, format, prov)?,
    ])
}

#[derive(Serialize)]
struct FcRow {
    f_c_ghz: f64,
    alpha: f64,
    lambda_m_t_m: f64,
    policy: ControlPolicy,
    throughput_av_per_min: f64,
}

#[derive(Serialize)]
struct AlphaRow {
    alpha: f64,
    f_c_ghz: f64,
    lambda_m_t_m: f64,
    policy: ControlPolicy,
    throughput_av_per_min: f64,
}

#[derive(Serialize)]
struct LoadRow {
    lambda_m_t_m: f64,
    alpha: f64,
    f_c_ghz: f64,
    policy: ControlPolicy,
    throughput_av_per_min: f64,
}

/// Writes one traffic sweep; throughput is converted to AVs per minute.
pub fn write_traffic_sweep(
    dir: &Path,
    axis: super::sweep::SweepAxis,
    rows: &[TrafficRow],
    format: Format,
    prov: &Provenance,
) -> Result<Vec<PathBuf>> {
    use super::sweep::SweepAxis;
    let path = match axis {
        SweepAxis::CarrierFrequency => {
            let out: Vec<FcRow> = rows
                .iter()
                .map(|r| FcRow {
                    f_c_ghz: r.carrier_frequency / 1e9,
                    alpha: r.alpha,
                    lambda_m_t_m: r.message_load,
                    policy: r.policy,
                    throughput_av_per_min: r.throughput * 60.0,
                })
                .collect();
            write_table(dir, "fig9_throughput_vs_fc", &out, format, prov)?
        }
        SweepAxis::Alpha => {
            let out: Vec<AlphaRow> = rows
                .iter()
                .map(|r| AlphaRow {
                    alpha: r.alpha,
                    f_c_ghz: r.carrier_frequency / 1e9,
                    lambda_m_t_m: r.message_load,
                    policy: r.policy,
                    throughput_av_per_min: r.throughput * 60.0,
                })
                .collect();
            write_table(dir, "fig9_throughput_vs_alpha", &out, format, prov)?
        }
        _ => {
            let out: Vec<LoadRow> = rows
                .iter()
                .map(|r| LoadRow {
                    lambda_m_t_m: r.message_load,
                    alpha: r.alpha,
                    f_c_ghz: r.carrier_frequency / 1e9,
                    policy: r.policy,
                    throughput_av_per_min: r.throughput * 60.0,
                })
                .collect();
            write_table(dir, "fig10_throughput_vs_lmtm", &out, format, prov)?
        }
    };
    Ok(vec![path])
}
