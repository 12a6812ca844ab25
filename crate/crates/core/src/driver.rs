//! Run driver: case setup, time loop, diagnostics, checkpoints and crash
//! reports; offline analysis of stored fields.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{
    conserved_totals, field_spectrum, kinetic_energy, pressure_dilatation, spectral_dissipation_and_ke,
    volume_dissipation_rate, write_channel_csv, write_spectrum_csv, write_timeseries_csv, ChannelAccumulator,
    TimeSample,
};
use crate::config::{CaseConfig, RunConfig};
use crate::error::{Error, Result};
use crate::field::ConservedField;
use crate::init::{dhit_import, init_channel, init_dhit_synthetic, init_taylor_green};
use crate::mesh::{build_channel_box, build_periodic_box, Mesh};
use crate::physics::GasModel;
use crate::spatial::Discretization;
use crate::timeint::{compute_dt, TimeIntegrator};

/// A configured solver state.
pub struct Simulation {
    pub disc: Discretization,
    pub field: ConservedField,
    pub integrator: TimeIntegrator,
    /// Kinematic viscosity used by the diagnostics (`mu / rho_ref`, `rho_ref = 1`).
    pub nu: f64,
    pub steps: usize,
    pub fixed_dt: Option<f64>,
}

fn build_mesh(cfg: &RunConfig) -> Result<Mesh> {
    match cfg.case {
        CaseConfig::Channel(_) => build_channel_box(cfg.mesh.cells, cfg.mesh.stretch_ratio),
        _ => build_periodic_box(
            cfg.mesh.cells,
            cfg.mesh.lengths.unwrap_or([2.0 * std::f64::consts::PI; 3]),
        ),
    }
}

impl Simulation {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = Arc::new(build_mesh(cfg)?);
        let n = cfg.degree;
        let mut gas = cfg.gas;
        let mut wall = None;
        let mut body_force = 0.0;
        let mut field = match &cfg.case {
            CaseConfig::TaylorGreen { mach, v0 } => init_taylor_green(mesh.clone(), n, &gas, *mach, *v0)?,
            CaseConfig::DhitSynthetic(p) => init_dhit_synthetic(mesh.clone(), n, &gas, p)?,
            CaseConfig::DhitImport { path } => dhit_import(path, n, &gas)?,
            CaseConfig::Channel(p) => {
                let (f, setup) = init_channel(mesh.clone(), n, &gas, p)?;
                gas = setup.gas;
                wall = Some(setup.wall);
                body_force = setup.forcing;
                f
            }
        };
        if let Some(path) = &cfg.restart {
            let restored = ConservedField::read(path)?;
            if restored.degree != n || restored.mesh.cells() != mesh.cells() {
                return Err(Error::Format {
                    path: path.clone(),
                    message: "checkpoint does not match the configured mesh and degree".into(),
                });
            }
            for d in 0..3 {
                if restored.mesh.edges(d) != mesh.edges(d) || restored.mesh.boundary(d) != mesh.boundary(d) {
                    return Err(Error::Format {
                        path: path.clone(),
                        message: "checkpoint geometry differs from the configured mesh".into(),
                    });
                }
            }
            field.data = restored.data;
            field.time = restored.time;
        }
        field.validate(&gas)?;
        let mut disc = Discretization::new(mesh, n, gas, cfg.scheme.clone(), wall)?;
        disc.body_force = body_force;
        let integrator = TimeIntegrator::new(field.data.len());
        Ok(Self {
            nu: gas.mu,
            disc,
            field,
            integrator,
            steps: 0,
            fixed_dt: cfg.time.dt,
        })
    }

    pub fn gas(&self) -> &GasModel {
        &self.disc.gas
    }

    pub fn next_dt(&self) -> Result<f64> {
        match self.fixed_dt {
            Some(dt) => Ok(dt),
            None => compute_dt(&self.field, &self.disc, self.disc.scheme.cfl),
        }
    }

    /// One step of size `dt`; on failure the time and step are attached.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let step = self.steps + 1;
        self.integrator
            .step(&self.disc, &mut self.field, dt)
            .map_err(|e| e.with_context(format!("step {step}")))?;
        self.steps = step;
        Ok(())
    }

    /// Steps until `end_time` (last step shortened to land on it) or
    /// `max_steps`.
    pub fn advance_to(&mut self, end_time: f64, max_steps: Option<usize>) -> Result<()> {
        while self.field.time < end_time && max_steps.map_or(true, |m| self.steps < m) {
            let dt = self.next_dt()?.min(end_time - self.field.time);
            self.step(dt)?;
        }
        Ok(())
    }

    /// Volume-averaged diagnostics of the current field.
    pub fn sample(&self, spectral_k_max: Option<usize>) -> Result<TimeSample> {
        let gas = self.gas();
        let vol = self.field.mesh.volume();
        let eps_spectral = if self.field.mesh.is_fully_periodic() && cubic(&self.field.mesh) {
            let s = field_spectrum(&self.field, gas)?;
            let kmax = spectral_k_max.unwrap_or(s.energy.len() - 1).min(s.energy.len() - 1);
            Some(spectral_dissipation_and_ke(&s, self.nu, kmax)?.0)
        } else {
            None
        };
        Ok(TimeSample {
            t: self.field.time,
            kinetic_energy: kinetic_energy(&self.field) / vol,
            eps_spectral,
            eps_volume: volume_dissipation_rate(&self.field, gas, self.nu)?,
            pressure_dilatation: pressure_dilatation(&self.field, gas)? / vol,
        })
    }
}

fn cubic(mesh: &Mesh) -> bool {
    let c = mesh.cells();
    c[0] == c[1] && c[1] == c[2]
}

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub outputs: Vec<PathBuf>,
    pub samples: Vec<TimeSample>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Writes `crash_report.txt` describing an invalid-state failure.
pub fn write_crash_report(dir: &Path, sim: &Simulation, err: &Error) -> Result<PathBuf> {
    let path = dir.join("crash_report.txt");
    let totals = conserved_totals(&sim.field);
    let text = format!(
        "status: crashed\nerror: {err}\ntime: {:.9e}\ncompleted_steps: {}\nconserved_totals: {:?}\n",
        sim.field.time, sim.steps, totals
    );
    fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

/// Executes a configured run, writing all artifacts into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    ensure_dir(out_dir)?;
    let mut sim = Simulation::from_config(cfg)?;
    log::info!(
        "start: {} cells, degree {}, t = {}, end {}",
        sim.field.mesh.n_cells(),
        cfg.degree,
        sim.field.time,
        cfg.time.end_time
    );
    let out = &cfg.output;
    let mut outputs = Vec::new();
    let mut samples = Vec::new();
    let periodic_cube = sim.field.mesh.is_fully_periodic() && cubic(&sim.field.mesh);
    let mut channel = match cfg.case {
        CaseConfig::Channel(_) => Some(ChannelAccumulator::new(&sim.field.mesh, cfg.degree)?),
        _ => None,
    };
    let ts_path = out_dir.join("timeseries.csv");
    if out.diagnostics_every > 0 {
        samples.push(sim.sample(out.spectral_k_max)?);
    }
    let result: Result<()> = (|| {
        while sim.field.time < cfg.time.end_time && cfg.time.max_steps.map_or(true, |m| sim.steps < m) {
            let dt = sim.next_dt()?.min(cfg.time.end_time - sim.field.time);
            sim.step(dt)?;
            let s = sim.steps;
            if out.diagnostics_every > 0 && s % out.diagnostics_every == 0 {
                let x = sim.sample(out.spectral_k_max)?;
                log::info!("step {s}: t = {:.6e}, KE = {:.9e}", x.t, x.kinetic_energy);
                samples.push(x);
            }
            if let (Some(every), true) = (out.spectrum_every, periodic_cube) {
                if s % every == 0 {
                    let spec = field_spectrum(&sim.field, sim.gas())?;
                    let p = out_dir.join(format!("spectrum_{s:08}.csv"));
                    write_spectrum_csv(&p, &spec, sim.nu)?;
                    outputs.push(p);
                }
            }
            if let Some(every) = out.checkpoint_every {
                if s % every == 0 {
                    let p = out_dir.join(format!("checkpoint_{s:08}.bin"));
                    sim.field.write(&p)?;
                    outputs.push(p);
                }
            }
            if let Some(acc) = channel.as_mut() {
                if sim.field.time >= out.channel_spinup && s % out.channel_sample_every.max(1) == 0 {
                    acc.add(&sim.field, &sim.disc.gas)?;
                }
            }
        }
        Ok(())
    })();
    if out.diagnostics_every > 0 {
        write_timeseries_csv(&ts_path, &samples, sim.nu)?;
        outputs.push(ts_path);
    }
    if let Err(e) = result {
        if matches!(e, Error::InvalidState { .. } | Error::NonFinite(_)) {
            let p = write_crash_report(out_dir, &sim, &e)?;
            log::error!("simulation crashed: {e} (report {})", p.display());
        }
        return Err(e);
    }
    let final_path = out_dir.join("field_final.bin");
    sim.field.write(&final_path)?;
    outputs.push(final_path);
    if periodic_cube {
        let spec = field_spectrum(&sim.field, sim.gas())?;
        let p = out_dir.join("spectrum_final.csv");
        write_spectrum_csv(&p, &spec, sim.nu)?;
        outputs.push(p);
    }
    if let Some(acc) = channel {
        if acc.samples() > 0 {
            let stats = acc.finish(&sim.field.mesh, sim.nu)?;
            let p = out_dir.join("channel_stats.csv");
            write_channel_csv(&p, &stats, sim.nu)?;
            outputs.push(p);
        }
    }
    Ok(RunSummary {
        steps: sim.steps,
        final_time: sim.field.time,
        outputs,
        samples,
    })
}

/// Offline diagnostics of a stored field.
#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    pub spectrum: bool,
    pub channel_stats: bool,
    pub nu: Option<f64>,
    pub gas: GasModel,
}

pub fn analyze(path: &Path, opts: &AnalyzeOptions, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let field = ConservedField::read(path)?;
    ensure_dir(out_dir)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into());
    let nu = opts.nu.unwrap_or(opts.gas.mu);
    let mut outputs = Vec::new();
    if opts.spectrum {
        let spec = field_spectrum(&field, &opts.gas)?;
        let p = out_dir.join(format!("{stem}_spectrum.csv"));
        write_spectrum_csv(&p, &spec, nu)?;
        outputs.push(p);
    }
    if opts.channel_stats {
        let mut acc = ChannelAccumulator::new(&field.mesh, field.degree)?;
        acc.add(&field, &opts.gas)?;
        let stats = acc.finish(&field.mesh, nu)?;
        let p = out_dir.join(format!("{stem}_channel_stats.csv"));
        write_channel_csv(&p, &stats, nu)?;
        outputs.push(p);
    }
    Ok(outputs)
}
