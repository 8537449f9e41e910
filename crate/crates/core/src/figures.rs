//! Reproduction runs for the throughput figures.
//!
//! | id | content |
//! |----|---------|
//! | 3  | NOMA without floors vs OPA/RPA, exponential fading, running average |
//! | 4  | as 3 with uniform fading |
//! | 5  | NOMA without floors vs OPA/RPA, final throughput against λ |
//! | 6  | OMA without floors vs OPA/RPA, exponential fading |
//! | 7  | as 6 with uniform fading |
//! | 8  | NOMA vs OMA with 1 bit/s/Hz floors, both fading laws |
//!
//! Curve figures run every scheme from an empty and a half-full battery.
//! Figure data is written as long-form CSV with columns
//! `series,x,mean,std_err`, where `std_err` is the standard error over runs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Access, Scheme, SystemConfig};
use crate::sim::{mean_se, run_curve, sweep, AxisValue, SweepAxis};
use crate::stochastic::FadingDistribution;

pub const FIGURE_IDS: [u8; 6] = [3, 4, 5, 6, 7, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub slots: u64,
    pub runs: u64,
    pub seed: u64,
    /// Sampling interval of running-average curves.
    pub stride: u64,
    /// λ grid of figure 5.
    pub lambdas: Vec<f64>,
    /// Arrival rate of the curve figures.
    pub lambda: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            slots: crate::config::DEFAULT_SLOTS,
            runs: crate::config::DEFAULT_RUNS,
            seed: 1,
            stride: 100,
            lambdas: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            lambda: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub id: u8,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl FigureData {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,mean,std_err\n");
        for s in &self.series {
            for p in &s.points {
                out.push_str(&format!("{},{},{},{}\n", s.name, p.x, p.mean, p.std_err));
            }
        }
        out
    }

    /// Inverse of [`FigureData::to_csv`]; labels come from the figure id.
    pub fn from_csv(id: u8, text: &str) -> Result<Self> {
        let meta = meta(id)?;
        let mut series: Vec<Series> = Vec::new();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for row in rdr.records() {
            let row = row?;
            let num = |i: usize| -> Result<f64> {
                row.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad figure row {row:?}")))
            };
            let name = row.get(0).unwrap_or_default().to_string();
            let point = Point {
                x: num(1)?,
                mean: num(2)?,
                std_err: num(3)?,
            };
            match series.iter_mut().find(|s| s.name == name) {
                Some(s) => s.points.push(point),
                None => series.push(Series {
                    name,
                    points: vec![point],
                }),
            }
        }
        Ok(FigureData {
            id,
            title: meta.title.into(),
            x_label: meta.x_label.into(),
            y_label: "time-averaged throughput (bits/s/Hz)".into(),
            series,
        })
    }
}

struct Meta {
    title: &'static str,
    x_label: &'static str,
}

fn meta(id: u8) -> Result<Meta> {
    let (title, x_label) = match id {
        3 => ("NOMA without rate floors, exponential fading", "slot"),
        4 => ("NOMA without rate floors, uniform fading", "slot"),
        5 => ("NOMA without rate floors: throughput against arrival rate", "lambda (arrivals/slot)"),
        6 => ("OMA without rate floors, exponential fading", "slot"),
        7 => ("OMA without rate floors, uniform fading", "slot"),
        8 => ("NOMA vs OMA with rate floors", "slot"),
        _ => return Err(Error::InvalidArgument(format!("unknown figure id {id}; expected 3-8"))),
    };
    Ok(Meta { title, x_label })
}

fn base(scheme: Scheme, access: Access, dist: FadingDistribution, lambda: f64) -> SystemConfig {
    let mut cfg = SystemConfig::default_for(scheme);
    cfg.access = access;
    cfg.channel.dist = dist;
    cfg.arrival.lambda = lambda;
    cfg
}

/// The configurations compared in a curve figure, with series names.
pub fn curve_configs(id: u8, lambda: f64) -> Result<Vec<(String, SystemConfig)>> {
    use FadingDistribution::{Exponential, Uniform};
    let trio = |proposed: Scheme, access: Access, dist| {
        let mut out = Vec::new();
        for scheme in [proposed, Scheme::Opa, Scheme::Rpa] {
            let cfg = base(scheme, access, dist, lambda);
            for e_b0 in [0.0, cfg.e_max / 2.0] {
                let mut c = cfg.clone();
                c.e_b0 = e_b0;
                out.push((format!("{scheme} E_b(0)={e_b0}"), c));
            }
        }
        out
    };
    Ok(match id {
        3 => trio(Scheme::NomaWor, Access::Noma, Exponential),
        4 => trio(Scheme::NomaWor, Access::Noma, Uniform),
        6 => trio(Scheme::OmaWor, Access::Oma, Exponential),
        7 => trio(Scheme::OmaWor, Access::Oma, Uniform),
        8 => {
            let mut out = Vec::new();
            for dist in [Exponential, Uniform] {
                for scheme in [Scheme::NomaWr, Scheme::OmaWr] {
                    let name = format!("{scheme} {}", if dist == Exponential { "exponential" } else { "uniform" });
                    out.push((name, base(scheme, Access::Noma, dist, lambda)));
                }
            }
            out
        }
        _ => return Err(Error::InvalidArgument(format!("figure {id} is not a time curve"))),
    })
}

fn curve_figure(id: u8, opts: &FigureOptions) -> Result<Vec<Series>> {
    let configs = curve_configs(id, opts.lambda)?;
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| (0..opts.runs).map(move |r| (i, r)))
        .collect();
    let curves: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, r)| run_curve(&configs[i].1, opts.seed, r, opts.slots, opts.stride).map(|c| c.0))
        .collect::<Result<_>>()?;
    let stride = opts.stride.max(1);
    Ok(configs
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let mine: Vec<&Vec<f64>> = jobs
                .iter()
                .zip(&curves)
                .filter(|((j, _), _)| *j == i)
                .map(|(_, c)| c)
                .collect();
            let len = mine.first().map_or(0, |c| c.len());
            let points = (0..len)
                .map(|k| {
                    let column: Vec<f64> = mine.iter().map(|c| c[k]).collect();
                    let (mean, std_err) = mean_se(&column);
                    Point {
                        x: ((k as u64 + 1) * stride) as f64,
                        mean,
                        std_err,
                    }
                })
                .collect();
            Series {
                name: name.clone(),
                points,
            }
        })
        .collect())
}

fn lambda_figure(opts: &FigureOptions) -> Result<Vec<Series>> {
    let values: Vec<AxisValue> = opts.lambdas.iter().map(|&l| AxisValue::Number(l)).collect();
    let run_ids: Vec<u64> = (0..opts.runs).collect();
    let mut out = Vec::new();
    for scheme in [Scheme::NomaWor, Scheme::Opa, Scheme::Rpa] {
        let template = base(scheme, Access::Noma, FadingDistribution::Exponential, opts.lambda);
        let cells = sweep(&template, SweepAxis::Lambda, &values, opts.seed, &run_ids, opts.slots);
        let mut points = Vec::new();
        for (cell, &x) in cells.iter().zip(&opts.lambdas) {
            if let Some(f) = cell.failures.first() {
                return Err(Error::InvalidArgument(format!("{scheme} at lambda {x}: {f}")));
            }
            points.push(Point {
                x,
                mean: cell.mean,
                std_err: cell.std_err,
            });
        }
        out.push(Series {
            name: scheme.to_string(),
            points,
        });
    }
    Ok(out)
}

/// Runs the simulations behind figure `id`.
pub fn figure_data(id: u8, opts: &FigureOptions) -> Result<FigureData> {
    let m = meta(id)?;
    let series = if id == 5 {
        lambda_figure(opts)?
    } else {
        curve_figure(id, opts)?
    };
    Ok(FigureData {
        id,
        title: m.title.into(),
        x_label: m.x_label.into(),
        y_label: "time-averaged throughput (bits/s/Hz)".into(),
        series,
    })
}
