//! `analyze`: tag CSVs in, per-trial artifacts and a run manifest out.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lapswim_core::ingest::{linestring_geojson, read_tag_csv};
use lapswim_core::pipeline::analyze_trial;
use lapswim_core::{LagoonBoundary, Phase, TrialAnalysis};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{hex_digest, Emit, Resolved, RunConfig};
use crate::output::{csv_writer, finish, num, opt, write_json};
use crate::CliError;

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub name: String,
    pub input: PathBuf,
    pub sha256: String,
    pub result: Result<TrialStats, String>,
}

#[derive(Debug, Clone)]
pub struct TrialStats {
    pub laps: usize,
    pub samples: usize,
    pub flagged_rows: usize,
    pub outside_boundary: Option<usize>,
    pub files: Vec<String>,
}

/// Trial directory names: input file stems, de-duplicated in input order.
pub fn trial_names(inputs: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trial".into());
            let stem = stem.strip_suffix(".tag").map(str::to_string).unwrap_or(stem);
            let mut name = stem.clone();
            let mut k = 2;
            while !seen.insert(name.clone()) {
                name = format!("{stem}-{k}");
                k += 1;
            }
            name
        })
        .collect()
}

pub fn cmd_analyze(resolved: Resolved) -> Result<Vec<TrialOutcome>, CliError> {
    let Resolved { mut run, station_explicit } = resolved;
    if run.inputs.is_empty() {
        return Err(CliError::Usage(anyhow::anyhow!("no input files given")));
    }
    // fail fast on paths that cannot be read
    let mut digests = Vec::with_capacity(run.inputs.len());
    for p in &run.inputs {
        let bytes = std::fs::read(p).with_context(|| format!("cannot read input {}", p.display())).map_err(CliError::Usage)?;
        digests.push(hex_digest(&bytes));
    }
    let boundary = match &run.boundary {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read boundary {}", p.display()))
                .map_err(CliError::Usage)?;
            let b = LagoonBoundary::from_geojson(&text, None)
                .with_context(|| format!("invalid boundary {}", p.display()))
                .map_err(CliError::Analysis)?;
            if !station_explicit {
                let v = *b.vertices.get(run.station_vertex).ok_or_else(|| {
                    CliError::Analysis(anyhow::anyhow!(
                        "station_vertex {} out of range for a boundary with {} vertices",
                        run.station_vertex,
                        b.vertices.len()
                    ))
                })?;
                run.analysis.station = [v.0, v.1];
            }
            Some(b)
        }
        None => None,
    };
    std::fs::create_dir_all(&run.output)
        .with_context(|| format!("cannot create output directory {}", run.output.display()))
        .map_err(CliError::Usage)?;

    let names = trial_names(&run.inputs);
    let jobs = if run.jobs == 0 { rayon::current_num_threads() } else { run.jobs };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(anyhow::anyhow!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        run.inputs
            .par_iter()
            .zip(names.par_iter())
            .zip(digests.par_iter())
            .map(|((input, name), sha)| TrialOutcome {
                name: name.clone(),
                input: input.clone(),
                sha256: sha.clone(),
                result: run_trial(&run, boundary.as_ref(), input, name).map_err(|e| format!("{e:#}")),
            })
            .collect()
    });

    for o in &outcomes {
        match &o.result {
            Ok(s) => log::info!("{}: {} laps", o.name, s.laps),
            Err(e) => log::error!("{}: {e}", o.name),
        }
    }
    write_json(&run.output.join("manifest.json"), &manifest(&run, &outcomes)).map_err(CliError::Usage)?;
    Ok(outcomes)
}

fn run_trial(run: &RunConfig, boundary: Option<&LagoonBoundary>, input: &Path, name: &str) -> anyhow::Result<TrialStats> {
    let tag = read_tag_csv(input, &run.columns).with_context(|| format!("cannot ingest {}", input.display()))?;
    let a = analyze_trial(&tag, &run.analysis)?;
    let dir = run.output.join(name);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let origin = boundary.map_or((run.origin[0], run.origin[1]), |b| b.origin);
    let mut files = Vec::new();
    for e in Emit::ALL {
        if !run.emits(e) {
            continue;
        }
        match e {
            Emit::Laps => write_laps(&dir.join("laps.csv"), &a)?,
            Emit::Tracks => {
                write_tracks(&dir.join("tracks.csv"), &a)?;
                write_json(&dir.join("tracks.geojson"), &tracks_geojson(&a, origin, name))?;
            }
            Emit::Energetics => write_energetics(&dir.join("energetics.csv"), &a)?,
            Emit::Normalized => write_normalized(&dir.join("normalized.csv"), &a)?,
            Emit::Fits => write_json(&dir.join("fits.json"), &fits_json(&a, run))?,
        }
        files.extend(e.files().iter().map(|f| f.to_string()));
    }
    Ok(TrialStats {
        laps: a.laps.len(),
        samples: a.states.len(),
        flagged_rows: tag.flags.len(),
        outside_boundary: boundary.map(|b| (0..a.track.len()).filter(|&i| !b.contains(a.track.point(i))).count()),
        files,
    })
}

fn manifest(run: &RunConfig, outcomes: &[TrialOutcome]) -> Value {
    let trials: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            let mut t = json!({
                "name": o.name,
                "input": o.input.display().to_string(),
                "sha256": o.sha256,
            });
            match &o.result {
                Ok(s) => {
                    t["status"] = json!("ok");
                    t["laps"] = json!(s.laps);
                    t["samples"] = json!(s.samples);
                    t["flagged_rows"] = json!(s.flagged_rows);
                    t["outside_boundary"] = json!(s.outside_boundary);
                    t["files"] = json!(s.files);
                }
                Err(e) => {
                    t["status"] = json!("error");
                    t["error"] = json!(e);
                }
            }
            t
        })
        .collect();
    json!({
        "tool": "lapswim",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": lapswim_core::VERSION,
        "config_hash": run.config_hash(),
        "emit": run.emit,
        "boundary": run.boundary.as_ref().map(|p| p.display().to_string()),
        "config": {
            "analysis": run.analysis,
            "columns": run.columns,
            "origin": run.origin,
            "station_vertex": run.station_vertex,
        },
        "trials": trials,
    })
}

/// Lap the sample belongs to (1-based), if any.
fn lap_of(a: &TrialAnalysis) -> Vec<Option<usize>> {
    let mut out = vec![None; a.states.len()];
    for (k, lap) in a.laps.iter().enumerate() {
        out[lap.samples()].iter_mut().for_each(|o| *o = Some(k + 1));
    }
    out
}

pub const LAP_COLUMNS: &[&str] = &[
    "lap",
    "t_s",
    "t_c",
    "t_e",
    "i_s",
    "i_c",
    "i_e",
    "turn_start",
    "turn_end",
    "duration",
    "turn_duration",
    "out_transient",
    "out_consistent_speed",
    "out_glide",
    "ret_transient",
    "ret_consistent_speed",
    "ret_glide",
    "path_length",
    "endpoint_mismatch",
    "peak_speed",
    "mean_speed",
    "peak_power",
    "mean_power",
    "peak_omega",
    "peak_a_n",
    "radius_at_corner",
    "kinematic_radius_at_corner",
    "turn_radius_mean",
    "circle_radius",
    "circle_rms",
    "work",
    "work_rectified",
    "work_drag",
    "work_transient",
    "work_consistent_speed",
    "work_glide",
    "work_active_fluking",
    "work_nd",
    "mean_cot",
    "active_speed",
    "active_power",
    "consistent_speed",
    "consistent_power",
];

fn write_laps(path: &Path, a: &TrialAnalysis) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(LAP_COLUMNS)?;
    for (k, s) in a.summaries.iter().enumerate() {
        let e = &s.events;
        let row = vec![
            (k + 1).to_string(),
            num(e.t_s),
            num(e.t_c),
            num(e.t_e),
            e.i_s.to_string(),
            e.i_c.to_string(),
            e.i_e.to_string(),
            num(e.turn_start),
            num(e.turn_end),
            num(s.duration),
            num(s.turn_duration),
            num(s.outgoing.transient),
            num(s.outgoing.consistent_speed),
            num(s.outgoing.glide),
            num(s.returning.transient),
            num(s.returning.consistent_speed),
            num(s.returning.glide),
            num(s.path_length),
            num(s.endpoint_mismatch),
            num(s.peak_speed),
            num(s.mean_speed),
            num(s.peak_power),
            num(s.mean_power),
            num(s.peak_omega),
            num(s.peak_a_n),
            num(s.radius_at_corner),
            num(s.kinematic_radius_at_corner),
            num(s.turn_radius_mean),
            opt(s.turn_circle.map(|c| c.radius)),
            opt(s.turn_circle.map(|c| c.rms_residual)),
            num(s.work.thrust_signed),
            num(s.work.thrust_rectified),
            num(s.work.drag),
            num(s.work_transient.thrust_signed),
            num(s.work_consistent.thrust_signed),
            num(s.work_glide.thrust_signed),
            num(s.work_active.thrust_signed),
            num(s.work_nd),
            opt(s.mean_cot),
            num(s.active_speed),
            num(s.active_power),
            num(s.consistent_speed),
            num(s.consistent_power),
        ];
        debug_assert_eq!(row.len(), LAP_COLUMNS.len());
        w.write_record(&row)?;
    }
    finish(w, path)
}

fn write_tracks(path: &Path, a: &TrialAnalysis) -> anyhow::Result<()> {
    let laps = lap_of(a);
    let mut w = csv_writer(path)?;
    w.write_record(["t", "x", "y", "r", "lap", "phase"])?;
    for i in 0..a.track.len() {
        w.write_record([
            num(a.track.t[i]),
            num(a.track.x[i]),
            num(a.track.y[i]),
            num(a.track.r[i]),
            laps[i].map(|k| k.to_string()).unwrap_or_default(),
            a.phases[i].as_str().to_string(),
        ])?;
    }
    finish(w, path)
}

fn tracks_geojson(a: &TrialAnalysis, origin: (f64, f64), name: &str) -> Value {
    let mut features = vec![linestring_geojson(
        &(0..a.track.len()).map(|i| a.track.point(i)).collect::<Vec<_>>(),
        origin,
        json!({"trial": name, "lap": null}),
    )];
    for (k, lap) in a.laps.iter().enumerate() {
        let pts: Vec<_> = lap.samples().map(|i| a.track.point(i)).collect();
        let c = a.track.point(lap.i_c);
        features.push(linestring_geojson(
            &pts,
            origin,
            json!({"trial": name, "lap": k + 1, "t_s": lap.t_s, "t_c": lap.t_c, "t_e": lap.t_e, "corner_xy": [c.0, c.1]}),
        ));
    }
    json!({"type": "FeatureCollection", "features": features})
}

fn write_energetics(path: &Path, a: &TrialAnalysis) -> anyhow::Result<()> {
    let laps = lap_of(a);
    let mut w = csv_writer(path)?;
    w.write_record([
        "t", "v", "a_t", "depth", "gamma", "f_drag", "f_thrust", "p_thrust", "p_drag", "p_inertial", "cot", "p_t_nd",
        "lap", "phase",
    ])?;
    for (i, p) in a.power.iter().enumerate() {
        w.write_record([
            num(p.t),
            num(p.v),
            num(p.a_t),
            num(p.depth),
            num(p.gamma),
            num(p.f_drag),
            num(p.f_thrust),
            num(p.p_thrust),
            num(p.p_drag),
            num(p.p_inertial),
            opt(p.cot),
            num(p.p_t_nd),
            laps[i].map(|k| k.to_string()).unwrap_or_default(),
            a.phases[i].as_str().to_string(),
        ])?;
    }
    finish(w, path)
}

fn write_normalized(path: &Path, a: &TrialAnalysis) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["lap", "pct"];
    header.extend(lapswim_core::NormalizedLap::CHANNELS);
    w.write_record(&header)?;
    for (k, n) in a.normalized.iter().enumerate() {
        for j in 0..n.pct.len() {
            let mut row = vec![(k + 1).to_string(), num(n.pct[j])];
            for ch in lapswim_core::NormalizedLap::CHANNELS {
                row.push(num(n.channel(ch).expect("known channel")[j]));
            }
            w.write_record(&row)?;
        }
    }
    finish(w, path)
}

fn fits_json(a: &TrialAnalysis, run: &RunConfig) -> Value {
    let classes: Vec<Value> = a
        .fits
        .iter()
        .map(|f| {
            json!({
                "class": f.class,
                "n_points": f.points.len(),
                "points": f.points.iter().map(|&(v, p)| json!({"v": v, "p": p})).collect::<Vec<_>>(),
                "a1": f.dimensional.map(|d| d.coefficient),
                "a2": f.dimensional.map(|d| d.exponent),
                "rms": f.dimensional.map(|d| d.rms),
                "b1": f.nondimensional.map(|d| d.coefficient),
                "b2": f.nondimensional.map(|d| d.exponent),
                "rms_nd": f.nondimensional.map(|d| d.rms),
                "min_cot_speed": f.min_cot_speed,
                "error": f.error,
            })
        })
        .collect();
    let phases = [Phase::Transient, Phase::ConsistentSpeed, Phase::Glide];
    let phase_time: Vec<Value> = phases
        .iter()
        .map(|&p| json!({"phase": p.as_str(), "seconds": a.summaries.iter().map(|s| s.phase_duration(p)).sum::<f64>()}))
        .collect();
    json!({
        "animal": run.analysis.animal.name,
        "fit_space": run.analysis.fit_space,
        "laps": a.laps.len(),
        "classes": classes,
        "phase_time": phase_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_deduplicated_in_order() {
        let n = trial_names(&[
            PathBuf::from("a/t1.csv"),
            PathBuf::from("b/t1.csv"),
            PathBuf::from("c/t2.tag.csv"),
            PathBuf::from("d/t1.csv"),
        ]);
        assert_eq!(n, ["t1", "t1-2", "t2", "t1-3"]);
    }
}
