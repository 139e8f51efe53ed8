//! Synthetic RU/DU scenario layer: site maps, fronthaul latency checks, and
//! request sampling that turns hourly network load into packing instances.

use pack_core::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("need at least {need} sites, have {have}")]
    NotEnoughSites { have: usize, need: usize },
    #[error("hour {0} outside 0..24")]
    BadHour(usize),
    #[error("DU references unknown site {0}")]
    UnknownSite(usize),
    #[error("invalid site {id}: {reason}")]
    InvalidSite { id: usize, reason: String },
    #[error("malformed sites CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Pack(#[from] pack_core::PackError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Hourly load shape shared by all synthetic sites: evening peak at 17:00,
/// overnight trough from 21:00 to 04:00. Values are fractions of the site's
/// peak mean CPU requirement.
pub const BASE_LOAD: [f64; 24] = [
    0.25, 0.22, 0.20, 0.20, 0.22, 0.30, 0.40, 0.50, 0.60, 0.65, 0.70, 0.72, 0.75, 0.75, 0.78,
    0.85, 0.93, 1.00, 0.90, 0.75, 0.55, 0.35, 0.30, 0.27,
];

pub const PEAK_HOUR: usize = 17;

/// A radio unit: position on the map plus its CPU demand model. Hour `t`
/// demand is integer uniform on `[m - delta, m + delta]` where
/// `m = mu_cpu * load_curve[t]` (floored at `delta + 1` so requests stay
/// positive).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub x_km: f64,
    pub y_km: f64,
    pub mu_cpu: f64,
    pub delta_cpu: f64,
    pub load_curve: [f64; 24],
}

impl Site {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |reason: &str| {
            Err(ScenarioError::InvalidSite {
                id: self.id,
                reason: reason.into(),
            })
        };
        if !(self.mu_cpu > 0.0) {
            return fail("mu_cpu must be positive");
        }
        if !(self.delta_cpu >= 0.0) {
            return fail("delta_cpu must be nonnegative");
        }
        if self.mu_cpu - self.delta_cpu < 1.0 {
            return fail("mu_cpu - delta_cpu must be >= 1");
        }
        Ok(())
    }

    /// Mean CPU requirement at the given hour.
    pub fn mu_at(&self, hour: usize) -> f64 {
        (self.mu_cpu * self.load_curve[hour]).max(self.delta_cpu + 1.0)
    }
}

/// A distributed unit: edge compute site serving its 10 nearest RUs. The
/// capacity maps to the packing grid height H', `t_max` bounds item widths,
/// and `w_star` is the time budget W*.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DUSite {
    pub id: usize,
    pub x_km: f64,
    pub y_km: f64,
    pub capacity: usize,
    pub connected_rus: Vec<usize>,
    pub t_max: usize,
    pub w_star: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatencyModel {
    /// Fibre reduction factor (slowdown plus non-straight routing).
    pub f: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Fronthaul latency bound, seconds.
    pub bound: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            f: 2.5,
            c: 299_792_458.0,
            bound: 100e-6,
        }
    }
}

/// Fronthaul latency in seconds over a straight-line distance in km:
/// `t = F * d / c`.
pub fn fronthaul_latency(d_km: f64, model: &LatencyModel) -> f64 {
    model.f * (d_km * 1000.0) / model.c
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencyViolation {
    pub site: usize,
    pub distance_km: f64,
    pub latency_s: f64,
}

fn distance(du: &DUSite, site: &Site) -> f64 {
    ((du.x_km - site.x_km).powi(2) + (du.y_km - site.y_km).powi(2)).sqrt()
}

/// Connects the DU to its `k` nearest sites (Euclidean, ties to the lowest
/// id) and reports any connection exceeding the latency bound. The selection
/// ignores the bound; violations are surfaced, not dropped.
pub fn connect_rus(
    mut du: DUSite,
    sites: &[Site],
    k: usize,
    model: &LatencyModel,
) -> Result<(DUSite, Vec<LatencyViolation>), ScenarioError> {
    if sites.len() < k {
        return Err(ScenarioError::NotEnoughSites {
            have: sites.len(),
            need: k,
        });
    }
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| {
        distance(&du, &sites[a])
            .total_cmp(&distance(&du, &sites[b]))
            .then(sites[a].id.cmp(&sites[b].id))
    });
    du.connected_rus = order[..k].iter().map(|&i| sites[i].id).collect();
    du.connected_rus.sort_unstable();
    let violations = order[..k]
        .iter()
        .filter_map(|&i| {
            let d = distance(&du, &sites[i]);
            let t = fronthaul_latency(d, model);
            (t > model.bound).then_some(LatencyViolation {
                site: sites[i].id,
                distance_km: d,
                latency_s: t,
            })
        })
        .collect();
    Ok((du, violations))
}

/// One integer CPU draw: uniform over the integers in `[mu - delta, mu + delta]`.
pub fn sample_cpu_units<R: Rng>(mu: f64, delta: f64, rng: &mut R) -> usize {
    let lo = (mu - delta).ceil().max(1.0) as usize;
    let hi = ((mu + delta).floor() as usize).max(lo);
    rng.gen_range(lo..=hi)
}

/// Samples one packing instance for a DU at the given hour: one item per
/// connected RU with height from that site's hour-scaled CPU distribution
/// (capped at the DU capacity) and width uniform on `[1, t_max]`.
pub fn sample_requests(
    du: &DUSite,
    sites: &[Site],
    hour: usize,
    seed: u64,
) -> Result<Instance, ScenarioError> {
    if hour >= 24 {
        return Err(ScenarioError::BadHour(hour));
    }
    let by_id: HashMap<usize, &Site> = sites.iter().map(|s| (s.id, s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shapes = Vec::with_capacity(du.connected_rus.len());
    for &ru in &du.connected_rus {
        let site = by_id.get(&ru).ok_or(ScenarioError::UnknownSite(ru))?;
        site.validate()?;
        let h = sample_cpu_units(site.mu_at(hour), site.delta_cpu, &mut rng).min(du.capacity);
        let w = rng.gen_range(1..=du.t_max.min(du.w_star));
        shapes.push((w, h));
    }
    Ok(Instance::new(&shapes, du.w_star, seed)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub sites: Vec<Site>,
    pub dus: Vec<DUSite>,
    pub latency: LatencyModel,
}

pub const DEFAULT_EXTENT_KM: (f64, f64) = (14.0, 13.0);
pub const DEFAULT_W_STAR: usize = 15;
pub const DEFAULT_T_MAX: usize = 8;
pub const DEFAULT_CAPACITY: usize = 15;

/// Generates a synthetic map: sites uniform over the extent with jittered
/// copies of the base load curve, then DUs wired to their 10 nearest sites.
pub fn generate_synthetic_region(
    n_sites: usize,
    n_dus: usize,
    extent_km: (f64, f64),
    seed: u64,
) -> Result<Region, ScenarioError> {
    if n_sites < 10 {
        return Err(ScenarioError::NotEnoughSites {
            have: n_sites,
            need: 10,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<Site> = (0..n_sites)
        .map(|id| {
            let x_km = rng.gen_range(0.0..extent_km.0);
            let y_km = rng.gen_range(0.0..extent_km.1);
            // Sized so 10 peak-hour requests fill roughly 60% of a default
            // 15x15 DU bin; heavier loads leave episodes unpackable.
            let mu_cpu = rng.gen_range(2.5..4.0);
            let delta_cpu = rng.gen_range(0.0..1.5);
            let mut load_curve = BASE_LOAD;
            for (hour, value) in load_curve.iter_mut().enumerate() {
                // Jitter everything but the peak so 17:00 stays the maximum.
                if hour != PEAK_HOUR {
                    *value *= rng.gen_range(0.9..1.1);
                }
            }
            Site {
                id,
                x_km,
                y_km,
                mu_cpu,
                delta_cpu,
                load_curve,
            }
        })
        .collect();
    let latency = LatencyModel::default();
    let dus = (0..n_dus)
        .map(|id| {
            let du = DUSite {
                id,
                x_km: rng.gen_range(0.0..extent_km.0),
                y_km: rng.gen_range(0.0..extent_km.1),
                capacity: DEFAULT_CAPACITY,
                connected_rus: Vec::new(),
                t_max: DEFAULT_T_MAX,
                w_star: DEFAULT_W_STAR,
            };
            connect_rus(du, &sites, 10, &latency).map(|(du, _)| du)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Region {
        sites,
        dus,
        latency,
    })
}

/// `id,x_km,y_km,mu_cpu,delta_cpu` plus, when requested, the 24 hourly load
/// columns `load_00..load_23`.
pub fn sites_to_csv(sites: &[Site], with_load: bool) -> String {
    let mut out = String::from("id,x_km,y_km,mu_cpu,delta_cpu");
    if with_load {
        for hour in 0..24 {
            write!(out, ",load_{hour:02}").expect("string write");
        }
    }
    out.push('\n');
    for site in sites {
        write!(
            out,
            "{},{},{},{},{}",
            site.id, site.x_km, site.y_km, site.mu_cpu, site.delta_cpu
        )
        .expect("string write");
        if with_load {
            for value in site.load_curve {
                write!(out, ",{value}").expect("string write");
            }
        }
        out.push('\n');
    }
    out
}

/// Parses the sites CSV. Files without load columns get the base curve.
pub fn sites_from_csv(text: &str) -> Result<Vec<Site>, ScenarioError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ScenarioError::Csv("empty file".into()))?;
    let columns = header.split(',').count();
    if columns != 5 && columns != 29 {
        return Err(ScenarioError::Csv(format!(
            "expected 5 or 29 columns, found {columns}"
        )));
    }
    let mut sites = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(ScenarioError::Csv(format!(
                "line {}: expected {columns} fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |i: usize| -> Result<f64, ScenarioError> {
            fields[i]
                .trim()
                .parse()
                .map_err(|_| ScenarioError::Csv(format!("line {}: bad number", lineno + 2)))
        };
        let mut load_curve = BASE_LOAD;
        if columns == 29 {
            for (hour, value) in load_curve.iter_mut().enumerate() {
                *value = parse(5 + hour)?;
            }
        }
        let site = Site {
            id: fields[0]
                .trim()
                .parse()
                .map_err(|_| ScenarioError::Csv(format!("line {}: bad id", lineno + 2)))?,
            x_km: parse(1)?,
            y_km: parse(2)?,
            mu_cpu: parse(3)?,
            delta_cpu: parse(4)?,
            load_curve,
        };
        site.validate()?;
        sites.push(site);
    }
    Ok(sites)
}
