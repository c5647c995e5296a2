//! Executes a resolved configuration and writes its artifacts.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use dicke_otto::engine::{CycleParams, CycleReport, Engine, EngineOptions, StrokeSchedule};
use dicke_otto::spectrum::{diagonalize_with, SpectrumRequest};
use dicke_otto::thermostatics::{
    sweep, QuasistaticCycleSpec, QuasistaticOptions, SpectrumCache, SweepAxis, SweepGrid,
};
use dicke_otto::{ModelParams, Spectrum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Axis, Command, Format, RunConfig};
use crate::output::{self, Cell, Table};
use crate::CliError;

/// Convergence record of one diagonalized Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub omega: f64,
    pub delta: f64,
    pub lambda: f64,
    pub u: f64,
    pub n_atoms: usize,
    pub converged: bool,
    pub max_level_shift: f64,
}

impl Certificate {
    fn of(s: &Spectrum) -> Self {
        Certificate {
            omega: s.params.omega,
            delta: s.params.delta,
            lambda: s.params.lambda,
            u: s.params.u,
            n_atoms: s.params.n_atoms,
            converged: s.converged,
            max_level_shift: s.max_level_shift,
        }
    }

    fn key(&self) -> (usize, [u64; 4]) {
        (
            self.n_atoms,
            [self.lambda, self.u, self.omega, self.delta].map(f64::to_bits),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub output: PathBuf,
    pub sidecar: PathBuf,
    pub rows: usize,
    pub failed_points: usize,
    pub table: Table,
}

/// Column names of each command; the first columns are the grid axes.
pub fn columns(command: Command, grid: &[Axis]) -> Vec<String> {
    let mut cols: Vec<String> = grid.iter().map(|a| a.axis.clone()).collect();
    let tail: &[&str] = match command {
        Command::Spectrum => &["level", "energy", "converged", "max_level_shift", "error"],
        Command::Quasistatic | Command::PhaseDiagram | Command::AsymmetricU | Command::AtomsScan => &[
            "q_hot",
            "q_cold",
            "work",
            "efficiency",
            "mode",
            "lambda_c_cold",
            "converged",
            "error",
        ],
        Command::FiniteTime | Command::PowerScan | Command::AsymmetricTime => &[
            "cycle",
            "q_hot",
            "q_cold",
            "work",
            "efficiency",
            "eta_via_entropy",
            "eta_carnot",
            "power",
            "entropy_total",
            "friction_expand",
            "friction_compress",
            "fidelity",
            "start_distance",
            "mode",
            "steady",
            "max_leakage",
            "max_purity_drift",
            "max_integral_mismatch",
            "error",
        ],
    };
    cols.extend(tail.iter().map(|s| s.to_string()));
    cols
}

/// Cartesian product, first axis slowest.
fn grid_points(grid: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn coords(point: &[f64]) -> Vec<Cell> {
    point.iter().map(|&v| Cell::Float(v)).collect()
}

fn empties(n: usize) -> Vec<Cell> {
    vec![Cell::Empty; n]
}

/// Runs the configured study, writes the table and its sidecar.
pub fn execute(config: &RunConfig) -> Result<Summary, CliError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    let (table, mut certificates, failed_points) = pool.install(|| match config.command {
        Command::Spectrum => run_spectrum(config),
        Command::Quasistatic | Command::PhaseDiagram | Command::AsymmetricU | Command::AtomsScan => {
            run_quasistatic(config)
        }
        Command::FiniteTime | Command::PowerScan | Command::AsymmetricTime => run_finite_time(config),
    })?;
    certificates.sort_by_key(Certificate::key);
    certificates.dedup_by_key(|c| c.key());

    let physics = config.physics_json();
    let hash = format!("{:x}", Sha256::digest(physics.as_bytes()));
    let generator = format!("dicke-otto {}", env!("CARGO_PKG_VERSION"));
    let path = &config.output.path;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    match config.output.format {
        Format::Csv => {
            let metadata = vec![
                ("generator".to_string(), generator.clone()),
                ("command".to_string(), config.command.name().to_string()),
                ("config_sha256".to_string(), hash.clone()),
                ("config".to_string(), physics.clone()),
            ];
            output::write_csv(path, &metadata, &table, config.output.precision)?;
        }
        Format::Json => {
            let mut metadata = Map::new();
            metadata.insert("generator".into(), Value::from(generator.as_str()));
            metadata.insert("command".into(), Value::from(config.command.name()));
            metadata.insert("config_sha256".into(), Value::from(hash.as_str()));
            metadata.insert(
                "config".into(),
                serde_json::from_str(&physics).expect("config is JSON"),
            );
            output::write_json(path, &output::table_json(&metadata, &table, config.output.precision))?;
        }
    }

    let sidecar = output::sidecar_path(path);
    let meta = serde_json::json!({
        "generator": generator,
        "command": config.command.name(),
        "config_sha256": hash,
        "output": path,
        "format": config.output.format,
        "workers": config.workers,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "rows": table.rows.len(),
        "failed_points": failed_points,
        "all_converged": certificates.iter().all(|c| c.converged),
        "certificates": certificates,
    });
    output::write_json(&sidecar, &meta)?;
    Ok(Summary {
        output: path.clone(),
        sidecar,
        rows: table.rows.len(),
        failed_points,
        table,
    })
}

type Outcome = Result<(Table, Vec<Certificate>, usize), CliError>;

fn run_spectrum(c: &RunConfig) -> Outcome {
    let m = &c.model;
    let delta = m.delta.protocol();
    let basis = c.basis.config();
    let points = grid_points(&c.grid);
    let results: Vec<Result<Spectrum, String>> = points
        .par_iter()
        .map(|point| {
            let (mut omega, mut lambda, mut u, mut n_atoms) = (m.omega, m.lambda, m.u, m.n_atoms);
            for (axis, &v) in c.grid.iter().zip(point) {
                match axis.axis.as_str() {
                    "lambda" => lambda = v,
                    "u" => u = v,
                    "omega" => omega = v,
                    "n_atoms" => n_atoms = v as usize,
                    other => unreachable!("axis {other} passed validation"),
                }
            }
            let params = ModelParams::new(omega, delta.at(omega), lambda, u, n_atoms)
                .map_err(|e| e.to_string())?;
            diagonalize_with(
                &params,
                &basis,
                SpectrumRequest {
                    eigenvectors: false,
                    certify: true,
                },
            )
            .map_err(|e| e.to_string())
        })
        .collect();

    let mut table = Table::new(columns(c.command, &c.grid));
    let mut certificates = Vec::new();
    let mut failed = 0;
    for (point, result) in points.iter().zip(results) {
        match result {
            Ok(s) => {
                for (level, &e) in s.energies.iter().take(c.levels).enumerate() {
                    let mut row = coords(point);
                    row.extend([
                        Cell::from(level),
                        Cell::from(e),
                        Cell::from(s.converged),
                        Cell::from(s.max_level_shift),
                        Cell::Empty,
                    ]);
                    table.push(row);
                }
                certificates.push(Certificate::of(&s));
            }
            Err(msg) => {
                failed += 1;
                let mut row = coords(point);
                row.extend(empties(4));
                row.push(Cell::Text(msg));
                table.push(row);
            }
        }
    }
    Ok((table, certificates, failed))
}

fn run_quasistatic(c: &RunConfig) -> Outcome {
    let m = &c.model;
    let template = QuasistaticCycleSpec {
        lambda: m.lambda,
        delta: m.delta.protocol(),
        n_atoms: m.n_atoms,
        omega_h: m.omega_h,
        omega_c: m.omega_c,
        u_expansion: m.u2,
        u_compression: m.u4,
        t_hot: c.bath.t_hot,
        t_cold: c.bath.t_cold,
        basis: c.basis.config(),
    };
    let axes = c
        .grid
        .iter()
        .map(|a| {
            let axis = SweepAxis::parse(&a.axis).expect("axis passed validation");
            (axis, a.values.clone())
        })
        .collect();
    let grid = SweepGrid::new(axes).map_err(|e| CliError::Config(e.to_string()))?;
    let cache = SpectrumCache::new(SpectrumRequest {
        eigenvectors: false,
        certify: true,
    });
    let options = QuasistaticOptions {
        convention: c.mode_convention,
        certify: true,
    };
    let rows = sweep(&grid, &template, &options, &cache);

    let mut table = Table::new(columns(c.command, &c.grid));
    let mut failed = 0;
    for row in rows {
        let mut cells = coords(&row.coords);
        match row.report {
            Ok(r) => cells.extend([
                Cell::from(r.q_hot),
                Cell::from(r.q_cold),
                Cell::from(r.work),
                Cell::from(r.efficiency),
                Cell::from(r.mode.as_str()),
                Cell::from(r.lambda_c_cold),
                Cell::from(r.converged),
                Cell::Empty,
            ]),
            Err(msg) => {
                failed += 1;
                cells.extend(empties(7));
                cells.push(Cell::Text(msg));
            }
        }
        table.push(cells);
    }
    let certificates = cache.spectra().iter().map(|s| Certificate::of(s)).collect();
    Ok((table, certificates, failed))
}

type EngineKey = [u64; 4];
type EngineSlot = Arc<OnceLock<Result<Arc<Engine>, String>>>;

fn run_finite_time(c: &RunConfig) -> Outcome {
    let m = &c.model;
    let options = EngineOptions {
        basis: c.basis.config(),
        n_kept: c.basis.n_kept,
        convention: c.mode_convention,
        friction_ref: c.friction_ref,
        atom_scale: 1.0,
    };
    let engines: Mutex<HashMap<EngineKey, EngineSlot>> = Mutex::new(HashMap::new());
    let points = grid_points(&c.grid);

    let results: Vec<Result<Vec<CycleReport>, String>> = points
        .par_iter()
        .map(|point| {
            let (mut lambda, mut u) = (m.lambda, m.u);
            let mut baths = c.bath;
            let mut schedule: StrokeSchedule = c.schedule;
            for (axis, &v) in c.grid.iter().zip(point) {
                match axis.axis.as_str() {
                    "lambda" => lambda = v,
                    "u" => u = v,
                    "t_hot" => baths.t_hot = v,
                    "t_cold" => baths.t_cold = v,
                    "tau_iso" => {
                        schedule.tau1 = v;
                        schedule.tau3 = v;
                    }
                    "tau_ad" => {
                        schedule.tau2 = v;
                        schedule.tau4 = v;
                    }
                    "tau1" => schedule.tau1 = v,
                    "tau2" => schedule.tau2 = v,
                    "tau3" => schedule.tau3 = v,
                    "tau4" => schedule.tau4 = v,
                    other => unreachable!("axis {other} passed validation"),
                }
            }
            let key = [lambda, u, baths.t_hot, baths.t_cold].map(f64::to_bits);
            let slot = Arc::clone(
                engines
                    .lock()
                    .expect("engine cache poisoned")
                    .entry(key)
                    .or_default(),
            );
            let engine = slot
                .get_or_init(|| {
                    let params = CycleParams {
                        lambda,
                        u,
                        delta: m.delta.protocol(),
                        n_atoms: m.n_atoms,
                        omega_h: m.omega_h,
                        omega_c: m.omega_c,
                    };
                    Engine::new(params, baths, options)
                        .map(Arc::new)
                        .map_err(|e| e.to_string())
                })
                .clone()?;
            engine.run(&schedule).map_err(|e| e.to_string())
        })
        .collect();

    let all_cycles = c.command == Command::FiniteTime;
    let mut table = Table::new(columns(c.command, &c.grid));
    let mut failed = 0;
    for (point, result) in points.iter().zip(results) {
        match result {
            Ok(reports) => {
                let selected: &[CycleReport] = if all_cycles {
                    &reports
                } else {
                    &reports[reports.len() - 1..]
                };
                for r in selected {
                    let mut row = coords(point);
                    row.extend(cycle_cells(r));
                    table.push(row);
                }
            }
            Err(msg) => {
                failed += 1;
                let mut row = coords(point);
                row.extend(empties(18));
                row.push(Cell::Text(msg));
                table.push(row);
            }
        }
    }

    let mut certificates = Vec::new();
    for slot in engines.into_inner().expect("engine cache poisoned").into_values() {
        if let Some(Ok(engine)) = slot.get() {
            certificates.push(Certificate::of(engine.hot_spectrum()));
            certificates.push(Certificate::of(engine.cold_spectrum()));
        }
    }
    Ok((table, certificates, failed))
}

fn cycle_cells(r: &CycleReport) -> Vec<Cell> {
    let transcripts: Vec<_> = r.strokes.iter().filter_map(|s| s.transcript).collect();
    let max = |f: &dyn Fn(&dicke_otto::engine::AdiabaticTranscript) -> f64| {
        transcripts.iter().map(f).fold(0.0, f64::max)
    };
    let leakage = r.strokes.iter().map(|s| s.leakage).fold(0.0, f64::max);
    vec![
        Cell::from(r.cycle),
        Cell::from(r.q_hot),
        Cell::from(r.q_cold),
        Cell::from(r.work),
        Cell::from(r.efficiency),
        Cell::from(r.eta_via_entropy),
        Cell::from(r.eta_carnot),
        Cell::from(r.power),
        Cell::from(r.entropy_total),
        Cell::from(r.friction_expand),
        Cell::from(r.friction_compress),
        Cell::from(r.fidelity),
        Cell::from(r.start_distance),
        Cell::from(r.mode.as_str()),
        Cell::from(r.steady),
        Cell::from(leakage),
        Cell::from(max(&|t| t.purity_drift)),
        Cell::from(max(&|t| t.integral_mismatch)),
        Cell::Empty,
    ]
}
