//! Run manifests: JSON-lines, one `start` event written before outputs and
//! one `finish` event after. A manifest carries everything needed to
//! reproduce the run exactly; reruns with identical inputs produce
//! byte-identical CSVs.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use opo_core::{Scenario, SystemParams, Topology};
use serde_json::json;

fn params_json(p: &SystemParams) -> serde_json::Value {
    json!({
        "gamma": p.gamma[..p.n_modes()].to_vec(),
        "chi1": p.chi1,
        "chi2": p.chi2,
        "drive_re": p.drive.re,
        "drive_im": p.drive.im,
        "detuning": p.detuning[..p.n_modes()].to_vec(),
        "topology": match p.topology {
            Topology::Nondegenerate => "nondegenerate",
            Topology::Degenerate => "degenerate",
        },
    })
}

pub struct ManifestWriter {
    path: PathBuf,
    started: Instant,
}

impl ManifestWriter {
    /// Write the `start` event and return the open manifest.
    pub fn start(path: &Path, command: &str, scenario_ref: &str, sc: &Scenario) -> Result<Self> {
        let start = json!({
            "event": "start",
            "command": command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "scenario": scenario_ref,
            "scenario_name": sc.name,
            "params": params_json(&sc.params),
            "seed": sc.config.seed,
            "dt": sc.config.dt,
            "t_end": sc.config.t_end,
            "record_stride": sc.config.record_stride,
            "planned_steps": sc.config.planned_steps(),
        });
        let mut w = Self { path: path.to_path_buf(), started: Instant::now() };
        w.write_line(&start)?;
        Ok(w)
    }

    fn write_line(&mut self, value: &serde_json::Value) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{value}")?;
        Ok(())
    }

    /// Append an arbitrary intermediate event (e.g. a recovery report).
    pub fn event(&mut self, value: serde_json::Value) -> Result<()> {
        self.write_line(&value)
    }

    /// Write the `finish` event with outputs and wall-clock.
    pub fn finish(mut self, outputs: &[PathBuf], extra: serde_json::Value) -> Result<()> {
        let finish = json!({
            "event": "finish",
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "wall_clock_s": self.started.elapsed().as_secs_f64(),
            "extra": extra,
        });
        self.write_line(&finish)
    }
}
