//! CSV output with 17-significant-digit floats (locale-independent, fixed
//! field order) and the matching reader used for round-trip checks.

use std::fmt::Write as _;

use opo_core::experiments::{PhaseSeries, ThresholdSweepRow};
use opo_core::{EnsembleStats, Representation, Trajectory};

/// 17 significant digits round-trip any f64 exactly through decimal text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// Trajectory CSV: t, per-mode (Re α, Im α, |α|², φ), θ₁, θ₂. The phase
/// column carries the unwrapped phase; θ columns are wrapped. Positive-P
/// trajectories append the conjugate-sector components afterwards.
pub fn trajectory_csv(traj: &Trajectory, phases: &PhaseSeries) -> String {
    let n_modes = phases.phases.len();
    let mut header: Vec<String> = vec!["t".into()];
    for m in 0..n_modes {
        header.push(format!("re{m}"));
        header.push(format!("im{m}"));
        header.push(format!("n{m}"));
        header.push(format!("phi{m}"));
    }
    header.push("theta1".into());
    header.push("theta2".into());
    let conj_sector = traj.representation == Representation::PositiveP;
    if conj_sector {
        for m in 0..n_modes {
            header.push(format!("re{m}p"));
            header.push(format!("im{m}p"));
        }
    }
    let mut out = String::new();
    push_row(&mut out, &header);
    for k in 0..traj.n_samples() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        row.push(fmt_f64(traj.times[k]));
        for m in 0..n_modes {
            let a = traj.series[m][k];
            row.push(fmt_f64(a.re));
            row.push(fmt_f64(a.im));
            row.push(fmt_f64(a.norm_sqr()));
            row.push(fmt_f64(phases.phases[m][k]));
        }
        row.push(fmt_f64(phases.theta1[k]));
        row.push(fmt_f64(phases.theta2[k]));
        if conj_sector {
            for m in 0..n_modes {
                let a = traj.series[n_modes + m][k];
                row.push(fmt_f64(a.re));
                row.push(fmt_f64(a.im));
            }
        }
        push_row(&mut out, &row);
    }
    out
}

/// Ensemble CSV: t, then per observable (mean Re, mean Im, variance,
/// std error).
pub fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut header: Vec<String> = vec!["t".into()];
    for m in &stats.moments {
        let label = m.observable.label();
        header.push(format!("{label}_mean_re"));
        header.push(format!("{label}_mean_im"));
        header.push(format!("{label}_var"));
        header.push(format!("{label}_se"));
    }
    let mut out = String::new();
    push_row(&mut out, &header);
    for k in 0..stats.times.len() {
        let mut row = vec![fmt_f64(stats.times[k])];
        for m in &stats.moments {
            row.push(fmt_f64(m.mean[k].re));
            row.push(fmt_f64(m.mean[k].im));
            row.push(fmt_f64(m.variance[k]));
            row.push(fmt_f64(m.std_error[k]));
        }
        push_row(&mut out, &row);
    }
    out
}

/// Sweep CSV: ε², analytic scaled intensities, numeric ones, worst gap.
pub fn sweep_csv(rows: &[ThresholdSweepRow]) -> String {
    let mut header: Vec<String> = vec!["epsilon_sq".into()];
    for m in 0..5 {
        header.push(format!("n{m}_analytic"));
    }
    for m in 0..5 {
        header.push(format!("n{m}_numeric"));
    }
    header.push("rel_gap".into());
    header.push("marginal".into());
    let mut out = String::new();
    push_row(&mut out, &header);
    for r in rows {
        let mut row = vec![fmt_f64(r.epsilon_sq)];
        for m in 0..5 {
            row.push(fmt_f64(r.analytic[m]));
        }
        for m in 0..5 {
            row.push(fmt_f64(r.numeric.map(|n| n[m]).unwrap_or(f64::NAN)));
        }
        row.push(fmt_f64(r.rel_gap.unwrap_or(f64::NAN)));
        row.push((r.marginal as u8).to_string());
        push_row(&mut out, &row);
    }
    out
}

/// Parsed CSV (header + float rows); NaNs survive the round trip as "NaN".
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Reader matching the writers above.
pub fn parse_csv(text: &str) -> Result<CsvTable, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty csv")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 2)))
            .collect::<Result<_, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} fields, expected {}", ln + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Self-contained gnuplot script rendering the trajectory layout
/// (intensities on top, stage phase differences below).
pub fn trajectory_plot_script(csv_name: &str, n_modes: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run: gnuplot -persist {csv_name}.gp");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set multiplot layout 2,1");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set ylabel '|alpha|^2'");
    let cols: Vec<String> = (0..n_modes)
        .map(|m| format!("'{csv_name}' using 1:{} with lines title 'n{m}'", 4 + 4 * m))
        .collect();
    let _ = writeln!(s, "plot {}", cols.join(", \\\n     "));
    let _ = writeln!(s, "set ylabel 'theta (rad)'");
    let t1 = 2 + 4 * n_modes;
    let _ = writeln!(
        s,
        "plot '{csv_name}' using 1:{t1} with lines title 'theta1', \\\n     '{csv_name}' using 1:{} with lines title 'theta2'",
        t1 + 1
    );
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Sweep plot: scaled steady intensities against ε².
pub fn sweep_plot_script(csv_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run: gnuplot -persist {csv_name}.gp");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set xlabel 'epsilon^2'");
    let _ = writeln!(s, "set ylabel 'n_i / n0_cr'");
    let cols: Vec<String> = (0..5)
        .map(|m| format!("'{csv_name}' using 1:{} with lines title 'n{m}'", 2 + m))
        .collect();
    let _ = writeln!(s, "plot {}", cols.join(", \\\n     "));
    s
}
