//! Populated-region and overlap-class counts of freshly initialised networks
//! over a grid of widths and depths.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::gen_concentric_spheres;
use crate::error::Result;
use crate::network::Mlp;
use crate::overlap::{overlap_decomposition_with, OverlapOptions};
use crate::polyhedra::{populate_decomposition, BoundingBox};

use super::{csv_row, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Points per circle of the two-dimensional concentric-spheres data.
    pub n_per_sphere: usize,
    pub data_seed: u64,
    pub delta: f64,
    pub bbox: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            widths: vec![10, 25, 50],
            depths: vec![2, 3, 4],
            seeds: (0..10).collect(),
            n_per_sphere: 500,
            data_seed: 0,
            delta: 1.0,
            bbox: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    pub n_regions: usize,
    pub n_classes: usize,
}

pub fn run_cell(cfg: &SweepConfig, inputs: &[Vec<f64>], width: usize, depth: usize, seed: u64) -> Result<SweepCell> {
    let mut shape = vec![2];
    shape.extend(std::iter::repeat_n(width, depth));
    shape.push(2);
    let net = Mlp::init_kaiming(&shape, seed)?;
    let bbox = BoundingBox::symmetric(2, cfg.bbox)?;
    let decomp = populate_decomposition(&net, inputs, net.depth(), &bbox)?;
    let od = overlap_decomposition_with(&net, inputs, &decomp, &OverlapOptions::with_delta(cfg.delta))?;
    Ok(SweepCell {
        width,
        depth,
        seed,
        n_regions: decomp.len(),
        n_classes: od.len(),
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn run(cfg: &SweepConfig) -> Result<ExperimentOutput> {
    let ds = gen_concentric_spheres(1, cfg.n_per_sphere, cfg.data_seed)?;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    let mut grid = Vec::new();
    for &width in &cfg.widths {
        for &depth in &cfg.depths {
            let mut regions = Vec::new();
            let mut classes = Vec::new();
            for &seed in &cfg.seeds {
                match run_cell(cfg, &ds.inputs, width, depth, seed) {
                    Ok(c) => {
                        rows.push(csv_row([
                            width.to_string(),
                            depth.to_string(),
                            seed.to_string(),
                            c.n_regions.to_string(),
                            c.n_classes.to_string(),
                            String::new(),
                        ]));
                        regions.push(c.n_regions as f64);
                        classes.push(c.n_classes as f64);
                        cells.push(serde_json::to_value(&c)?);
                    }
                    Err(e) => {
                        rows.push(csv_row([
                            width.to_string(),
                            depth.to_string(),
                            seed.to_string(),
                            String::new(),
                            String::new(),
                            e.to_string(),
                        ]));
                        cells.push(json!({ "width": width, "depth": depth, "seed": seed, "error": e.to_string() }));
                    }
                }
            }
            if !regions.is_empty() {
                let (rm, rs) = mean_std(&regions);
                let (cm, cs) = mean_std(&classes);
                grid.push(csv_row([
                    width.to_string(),
                    depth.to_string(),
                    rm.to_string(),
                    rs.to_string(),
                    cm.to_string(),
                    cs.to_string(),
                ]));
            }
        }
    }
    Ok(ExperimentOutput {
        results: json!({ "cells": Value::Array(cells) }),
        tables: vec![
            Table::new(
                "sweep.csv",
                &["width", "depth", "seed", "regions", "overlap_classes", "error"],
                rows,
            ),
            Table::new(
                "sweep_grid.csv",
                &["width", "depth", "regions_mean", "regions_std", "classes_mean", "classes_std"],
                grid,
            ),
        ],
    })
}
