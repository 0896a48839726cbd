//! `report`: trial-level tables over a finished `analyze` run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use lapswim_core::energetics::predicted_cot;
use lapswim_core::localization::align_at_corner;
use lapswim_core::{AnimalParams, NormalizedLap, PowerLawFit, Track};
use serde_json::Value;

use crate::output::{csv_writer, finish, num};
use crate::CliError;

/// Lap-table columns averaged per trial.
pub const SUMMARY_METRICS: &[&str] = &[
    "duration",
    "turn_duration",
    "path_length",
    "peak_speed",
    "mean_speed",
    "peak_power",
    "mean_power",
    "peak_omega",
    "peak_a_n",
    "radius_at_corner",
    "kinematic_radius_at_corner",
    "circle_radius",
    "work",
    "work_transient",
    "work_consistent_speed",
    "work_glide",
    "work_active_fluking",
    "work_nd",
    "mean_cot",
];

/// Speed bin width of the power and COT tables (m/s).
pub const SPEED_BIN: f64 = 0.25;

/// Running mean and sample standard deviation; identical inputs give exactly zero spread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        if !x.is_finite() {
            return;
        }
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    pub fn sd(&self) -> f64 {
        match self.n {
            0 => f64::NAN,
            1 => 0.0,
            n => (self.m2 / (n - 1) as f64).sqrt(),
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().collect::<Result<_, _>>().with_context(|| format!("cannot parse {}", path.display()))?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> anyhow::Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| anyhow!("missing column `{name}`"))
    }

    fn f64_at(row: &csv::StringRecord, c: usize) -> f64 {
        row.get(c).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
    }

    fn floats(&self, name: &str) -> anyhow::Result<Vec<f64>> {
        let c = self.col(name)?;
        Ok(self.rows.iter().map(|r| Self::f64_at(r, c)).collect())
    }

    fn strings(&self, name: &str) -> anyhow::Result<Vec<String>> {
        let c = self.col(name)?;
        Ok(self.rows.iter().map(|r| r.get(c).unwrap_or("").to_string()).collect())
    }
}

struct TrialDir {
    name: String,
    dir: PathBuf,
    files: Vec<String>,
}

impl TrialDir {
    fn has(&self, f: &str) -> bool {
        self.files.iter().any(|x| x == f)
    }

    fn table(&self, f: &str) -> anyhow::Result<Table> {
        Table::read(&self.dir.join(f))
    }
}

fn incomplete(msg: impl std::fmt::Display) -> CliError {
    CliError::Analysis(anyhow!("incomplete run manifest: {msg}"))
}

fn load(run_dir: &Path) -> Result<(Value, Vec<TrialDir>), CliError> {
    let path = run_dir.join("manifest.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Usage)?;
    let m: Value = serde_json::from_str(&text).map_err(|e| incomplete(format!("{}: {e}", path.display())))?;
    let trials = m.get("trials").and_then(Value::as_array).ok_or_else(|| incomplete("no `trials` list"))?;
    m.pointer("/config/analysis/animal").ok_or_else(|| incomplete("no `config.analysis.animal`"))?;
    let mut out = Vec::new();
    for t in trials {
        let name = t.get("name").and_then(Value::as_str).ok_or_else(|| incomplete("trial without `name`"))?;
        if t.get("status").and_then(Value::as_str) != Some("ok") {
            log::warn!("skipping failed trial {name}");
            continue;
        }
        let files: Vec<String> = t
            .get("files")
            .and_then(Value::as_array)
            .ok_or_else(|| incomplete(format!("trial {name} has no `files` list")))?
            .iter()
            .filter_map(|f| f.as_str().map(str::to_string))
            .collect();
        let dir = run_dir.join(name);
        for f in &files {
            if !dir.join(f).is_file() {
                return Err(incomplete(format!("{} listed but missing", dir.join(f).display())));
            }
        }
        out.push(TrialDir { name: name.to_string(), dir, files });
    }
    Ok((m, out))
}

/// Writes the report tables into `<run_dir>/report` and returns their paths.
pub fn cmd_report(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (manifest, trials) = load(run_dir)?;
    let animal: AnimalParams = serde_json::from_value(manifest.pointer("/config/analysis/animal").cloned().unwrap_or_default())
        .map_err(|e| incomplete(format!("animal parameters: {e}")))?;
    let out = run_dir.join("report");
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(CliError::Usage)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> anyhow::Result<()>| -> Result<(), CliError> {
        let p = out.join(name);
        f(&p).map_err(CliError::Analysis)?;
        written.push(p);
        Ok(())
    };
    let with_laps: Vec<&TrialDir> = trials.iter().filter(|t| t.has("laps.csv")).collect();
    if !with_laps.is_empty() {
        emit("trial_summary.csv", &|p| trial_summary(p, &with_laps))?;
        emit("phase_work.csv", &|p| phase_work(p, &with_laps))?;
    }
    let with_norm: Vec<&TrialDir> = trials.iter().filter(|t| t.has("normalized.csv")).collect();
    if !with_norm.is_empty() {
        emit("normalized_mean.csv", &|p| normalized_mean(p, &with_norm))?;
    }
    let with_tracks: Vec<&TrialDir> = trials.iter().filter(|t| t.has("laps.csv") && t.has("tracks.csv")).collect();
    if !with_tracks.is_empty() {
        emit("corner_tracks.csv", &|p| corner_tracks(p, &with_tracks))?;
    }
    let with_power: Vec<&TrialDir> = trials.iter().filter(|t| t.has("energetics.csv")).collect();
    if !with_power.is_empty() {
        emit("speed_table.csv", &|p| speed_table(p, &with_power, &animal))?;
    }
    Ok(written)
}

fn trial_summary(path: &Path, trials: &[&TrialDir]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["trial".to_string(), "laps".to_string()];
    for m in SUMMARY_METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_sd"));
    }
    w.write_record(&header)?;
    for t in trials {
        let laps = t.table("laps.csv")?;
        let mut row = vec![t.name.clone(), laps.rows.len().to_string()];
        for m in SUMMARY_METRICS {
            let mut acc = Welford::default();
            laps.floats(m)?.into_iter().for_each(|x| acc.push(x));
            row.push(num(acc.mean()));
            row.push(num(acc.sd()));
        }
        w.write_record(&row)?;
    }
    finish(w, path)
}

fn phase_work(path: &Path, trials: &[&TrialDir]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["trial", "lap", "quantity", "work"])?;
    for t in trials {
        let laps = t.table("laps.csv")?;
        let lap_ids = laps.strings("lap")?;
        let tr = laps.floats("work_transient")?;
        let cs = laps.floats("work_consistent_speed")?;
        let gl = laps.floats("work_glide")?;
        let af = laps.floats("work_active_fluking")?;
        let total = laps.floats("work")?;
        let mut acc = [Welford::default(); 7];
        for k in 0..lap_ids.len() {
            let vals = [
                ("transient", tr[k]),
                ("consistent_speed", cs[k]),
                ("glide", gl[k]),
                ("total", total[k]),
                ("active_fluking", af[k]),
                ("active_fluking - (transient + consistent_speed)", af[k] - (tr[k] + cs[k])),
                ("total - (transient + consistent_speed + glide)", total[k] - (tr[k] + cs[k] + gl[k])),
            ];
            for (j, (q, v)) in vals.iter().enumerate() {
                acc[j].push(*v);
                w.write_record([t.name.as_str(), lap_ids[k].as_str(), q, &num(*v)])?;
            }
        }
        let names = [
            "transient",
            "consistent_speed",
            "glide",
            "total",
            "active_fluking",
            "active_fluking - (transient + consistent_speed)",
            "total - (transient + consistent_speed + glide)",
        ];
        for (q, a) in names.iter().zip(&acc) {
            w.write_record([t.name.as_str(), "mean", q, &num(a.mean())])?;
        }
    }
    finish(w, path)
}

fn normalized_mean(path: &Path, trials: &[&TrialDir]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["trial".to_string(), "pct".to_string(), "laps".to_string()];
    for ch in NormalizedLap::CHANNELS {
        header.push(format!("{ch}_mean"));
        header.push(format!("{ch}_sd"));
    }
    w.write_record(&header)?;
    for t in trials {
        let tab = t.table("normalized.csv")?;
        let laps = tab.strings("lap")?;
        let pct = tab.floats("pct")?;
        let chans: Vec<Vec<f64>> = NormalizedLap::CHANNELS.iter().map(|c| tab.floats(c)).collect::<Result<_, _>>()?;
        // grid position within each lap
        let mut pos = Vec::with_capacity(laps.len());
        let mut k = 0usize;
        for i in 0..laps.len() {
            k = if i > 0 && laps[i] == laps[i - 1] { k + 1 } else { 0 };
            pos.push(k);
        }
        let mut grid: BTreeMap<usize, (f64, Vec<Welford>, usize)> = BTreeMap::new();
        for i in 0..laps.len() {
            let e = grid.entry(pos[i]).or_insert_with(|| (pct[i], vec![Welford::default(); chans.len()], 0));
            e.2 += 1;
            for (c, acc) in e.1.iter_mut().enumerate() {
                acc.push(chans[c][i]);
            }
        }
        for (p, accs, n) in grid.values() {
            let mut row = vec![t.name.clone(), num(*p), n.to_string()];
            for a in accs {
                row.push(num(a.mean()));
                row.push(num(a.sd()));
            }
            w.write_record(&row)?;
        }
    }
    finish(w, path)
}

fn corner_tracks(path: &Path, trials: &[&TrialDir]) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["trial", "lap", "offset", "t_rel", "x", "y"])?;
    for t in trials {
        let laps = t.table("laps.csv")?;
        let tracks = t.table("tracks.csv")?;
        let (tt, x, y) = (tracks.floats("t")?, tracks.floats("x")?, tracks.floats("y")?);
        let ids = laps.strings("lap")?;
        let idx = |name: &str| -> anyhow::Result<Vec<usize>> {
            laps.strings(name)?
                .iter()
                .map(|s| s.parse::<usize>().with_context(|| format!("bad `{name}` value `{s}`")))
                .collect()
        };
        let (i_s, i_c, i_e) = (idx("i_s")?, idx("i_c")?, idx("i_e")?);
        let mut segs = Vec::new();
        let mut corners = Vec::new();
        for k in 0..ids.len() {
            if !(i_s[k] <= i_c[k] && i_c[k] < i_e[k] && i_e[k] <= tt.len()) {
                bail!("lap {} indices outside tracks.csv", ids[k]);
            }
            let r = i_s[k]..i_e[k];
            segs.push(Track {
                t: tt[r.clone()].to_vec(),
                x: x[r.clone()].to_vec(),
                y: y[r.clone()].to_vec(),
                r: vec![f64::INFINITY; r.len()],
            });
            corners.push(Some(i_c[k] - i_s[k]));
        }
        let aligned = align_at_corner(&segs, &corners)?;
        for (k, a) in aligned.iter().enumerate() {
            let c = corners[k].unwrap_or(0);
            for j in 0..a.len() {
                w.write_record([
                    t.name.clone(),
                    ids[k].clone(),
                    (j as i64 - c as i64).to_string(),
                    num(a.t[j] - a.t[c]),
                    num(a.x[j]),
                    num(a.y[j]),
                ])?;
            }
        }
    }
    finish(w, path)
}

fn read_af_fit(t: &TrialDir) -> anyhow::Result<Option<PowerLawFit>> {
    if !t.has("fits.json") {
        return Ok(None);
    }
    let p = t.dir.join("fits.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p)?).with_context(|| format!("cannot parse {}", p.display()))?;
    let class = v
        .get("classes")
        .and_then(Value::as_array)
        .and_then(|c| c.iter().find(|c| c.get("class").and_then(Value::as_str) == Some("active_fluking")));
    Ok(class.and_then(|c| {
        let a1 = c.get("a1")?.as_f64()?;
        let a2 = c.get("a2")?.as_f64()?;
        Some(PowerLawFit { coefficient: a1, exponent: a2, rms: f64::NAN, nondimensional: false, iterations: 0 })
    }))
}

fn speed_table(path: &Path, trials: &[&TrialDir], animal: &AnimalParams) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["trial", "v_lo", "v_hi", "samples", "p_thrust_mean", "p_thrust_sd", "cot_mean", "p_fit", "cot_fit"])?;
    for t in trials {
        let e = t.table("energetics.csv")?;
        let (v, p, cot) = (e.floats("v")?, e.floats("p_thrust")?, e.floats("cot")?);
        let phase = e.strings("phase")?;
        let fit = read_af_fit(t)?;
        let mut bins: BTreeMap<i64, (Welford, Welford)> = BTreeMap::new();
        for i in 0..v.len() {
            if !(phase[i] == "transient" || phase[i] == "consistent_speed") || !v[i].is_finite() {
                continue;
            }
            let b = bins.entry((v[i] / SPEED_BIN).floor() as i64).or_default();
            b.0.push(p[i]);
            b.1.push(cot[i]);
        }
        for (b, (pa, ca)) in &bins {
            let (lo, hi) = (*b as f64 * SPEED_BIN, (*b + 1) as f64 * SPEED_BIN);
            let mid = 0.5 * (lo + hi);
            w.write_record([
                t.name.clone(),
                num(lo),
                num(hi),
                pa.count().to_string(),
                num(pa.mean()),
                num(pa.sd()),
                num(ca.mean()),
                num(fit.map_or(f64::NAN, |f| f.eval(mid))),
                num(fit.map_or(f64::NAN, |f| predicted_cot(&f, mid, animal))),
            ])?;
        }
    }
    finish(w, path)
}
