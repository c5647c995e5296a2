use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cycle::{quasistatic_from_spectra, QuasistaticCycleSpec, QuasistaticOptions, QuasistaticReport};
use crate::error::invalid;
use crate::spectrum::{diagonalize_with, SpectrumRequest};
use crate::{BasisConfig, ModelParams, Result, Spectrum};

/// Parameter that a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "lambda")]
    Lambda,
    /// Both Stark strengths together.
    #[serde(rename = "u")]
    U,
    #[serde(rename = "u2")]
    UExpansion,
    #[serde(rename = "u4")]
    UCompression,
    #[serde(rename = "t_hot")]
    THot,
    #[serde(rename = "t_cold")]
    TCold,
    #[serde(rename = "n_atoms")]
    NAtoms,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::Lambda,
        SweepAxis::U,
        SweepAxis::UExpansion,
        SweepAxis::UCompression,
        SweepAxis::THot,
        SweepAxis::TCold,
        SweepAxis::NAtoms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::U => "u",
            SweepAxis::UExpansion => "u2",
            SweepAxis::UCompression => "u4",
            SweepAxis::THot => "t_hot",
            SweepAxis::TCold => "t_cold",
            SweepAxis::NAtoms => "n_atoms",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn apply(&self, spec: &mut QuasistaticCycleSpec, value: f64) -> Result<()> {
        match self {
            SweepAxis::Lambda => spec.lambda = value,
            SweepAxis::U => {
                spec.u_expansion = value;
                spec.u_compression = value;
            }
            SweepAxis::UExpansion => spec.u_expansion = value,
            SweepAxis::UCompression => spec.u_compression = value,
            SweepAxis::THot => spec.t_hot = value,
            SweepAxis::TCold => spec.t_cold = value,
            SweepAxis::NAtoms => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(invalid(
                        "n_atoms",
                        format!("must be a positive integer, got {value}"),
                    ));
                }
                spec.n_atoms = value as usize;
            }
        }
        Ok(())
    }
}

/// Cartesian grid; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    axes: Vec<(SweepAxis, Vec<f64>)>,
}

impl SweepGrid {
    pub fn new(axes: Vec<(SweepAxis, Vec<f64>)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(invalid("grid", "needs at least one axis".to_string()));
        }
        for (i, (axis, values)) in axes.iter().enumerate() {
            if values.is_empty() {
                return Err(invalid("grid", format!("axis `{}` has no values", axis.name())));
            }
            if axes[..i].iter().any(|(a, _)| a == axis) {
                return Err(invalid("grid", format!("axis `{}` repeated", axis.name())));
            }
        }
        Ok(SweepGrid { axes })
    }

    pub fn axes(&self) -> &[(SweepAxis, Vec<f64>)] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of grid point `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut coords = vec![0.0; self.axes.len()];
        for (slot, (_, values)) in coords.iter_mut().zip(&self.axes).rev() {
            *slot = values[rem % values.len()];
            rem /= values.len();
        }
        coords
    }

    pub fn spec_at(&self, template: &QuasistaticCycleSpec, index: usize) -> Result<QuasistaticCycleSpec> {
        let mut spec = *template;
        for ((axis, _), v) in self.axes.iter().zip(self.point(index)) {
            axis.apply(&mut spec, v)?;
        }
        Ok(spec)
    }
}

/// One sweep point; failures are kept as messages so the sweep continues.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub report: std::result::Result<QuasistaticReport, String>,
}

type CacheKey = [u64; 7];

/// Insert-once store of energy spectra shared by sweep workers.
#[derive(Debug)]
pub struct SpectrumCache {
    request: SpectrumRequest,
    map: RwLock<HashMap<CacheKey, Arc<Spectrum>>>,
}

impl SpectrumCache {
    pub fn new(request: SpectrumRequest) -> Self {
        SpectrumCache {
            request,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("spectrum cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached spectrum, computing it on a miss. Two workers may race on the
    /// same key; both compute and the first insert wins.
    pub fn get(&self, params: &ModelParams, basis: &BasisConfig) -> Result<Arc<Spectrum>> {
        let key = [
            params.omega.to_bits(),
            params.delta.to_bits(),
            params.lambda.to_bits(),
            params.u.to_bits(),
            params.n_atoms as u64,
            basis.n_tr as u64,
            basis.convergence_rel_tol.to_bits() ^ basis.n_levels_checked as u64,
        ];
        if let Some(s) = self.map.read().expect("spectrum cache poisoned").get(&key) {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(diagonalize_with(params, basis, self.request)?);
        let mut map = self.map.write().expect("spectrum cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(s)))
    }

    /// All cached spectra, ordered by key for reproducible reporting.
    pub fn spectra(&self) -> Vec<Arc<Spectrum>> {
        let map = self.map.read().expect("spectrum cache poisoned");
        let mut entries: Vec<_> = map.iter().collect();
        entries.sort_by_key(|(k, _)| **k);
        entries.into_iter().map(|(_, s)| Arc::clone(s)).collect()
    }
}

/// Quasistatic reports over a grid, in grid order, computed in parallel.
pub fn sweep(
    grid: &SweepGrid,
    template: &QuasistaticCycleSpec,
    options: &QuasistaticOptions,
    cache: &SpectrumCache,
) -> Vec<SweepRow> {
    (0..grid.len())
        .into_par_iter()
        .map(|index| {
            let report = evaluate(grid, template, options, cache, index).map_err(|e| e.to_string());
            if let Err(msg) = &report {
                log::warn!("sweep point {index} failed: {msg}");
            }
            SweepRow {
                index,
                coords: grid.point(index),
                report,
            }
        })
        .collect()
}

fn evaluate(
    grid: &SweepGrid,
    template: &QuasistaticCycleSpec,
    options: &QuasistaticOptions,
    cache: &SpectrumCache,
    index: usize,
) -> Result<QuasistaticReport> {
    let spec = grid.spec_at(template, index)?;
    spec.validate()?;
    let hot = cache.get(&spec.hot_params()?, &spec.basis)?;
    let cold = cache.get(&spec.cold_params()?, &spec.basis)?;
    quasistatic_from_spectra(&spec, &hot, &cold, options.convention)
}
