use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::signal::Channel;
use crate::error::{Error, Result};

/// Maps the canonical channel names onto the column headers of a tag export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub t: String,
    pub accel: [String; 3],
    pub gyro: [String; 3],
    pub mag: [String; 3],
    pub depth: String,
    pub speed: String,
    pub temp: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        let s = |x: &str| x.to_string();
        Self {
            t: s("t"),
            accel: [s("ax"), s("ay"), s("az")],
            gyro: [s("gx"), s("gy"), s("gz")],
            mag: [s("mx"), s("my"), s("mz")],
            depth: s("depth"),
            speed: s("speed"),
            temp: s("temp"),
        }
    }
}

/// One 50 Hz inertial sample (body frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub accel: [f64; 3],
    pub gyro: [f64; 3],
    pub mag: Option<[f64; 3]>,
}

/// One 5 Hz pressure/turbine sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSample {
    pub t: f64,
    pub depth: f64,
    pub speed: f64,
    pub temp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagReason {
    NonFinite,
    Unparsable,
    PartialGroup,
    Negative,
}

/// A cell group that was excluded from its stream, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowFlag {
    /// Zero-based data row (header excluded).
    pub row: usize,
    pub column: String,
    pub reason: FlagReason,
}

/// Raw tag channels at their native rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagSeries {
    pub imu: Vec<ImuSample>,
    pub aux: Vec<AuxSample>,
    pub flags: Vec<RowFlag>,
    /// Number of data rows read.
    pub rows: usize,
}

impl TagSeries {
    pub fn has_mag(&self) -> bool {
        !self.imu.is_empty() && self.imu.iter().all(|s| s.mag.is_some())
    }

    pub fn depth(&self) -> Channel {
        Channel::new(self.aux.iter().map(|s| s.t).collect(), self.aux.iter().map(|s| s.depth).collect())
    }

    pub fn speed(&self) -> Channel {
        Channel::new(self.aux.iter().map(|s| s.t).collect(), self.aux.iter().map(|s| s.speed).collect())
    }

    /// Median sample interval of the IMU stream, if it has at least two samples.
    pub fn imu_dt(&self) -> Option<f64> {
        median_dt(self.imu.iter().map(|s| s.t))
    }

    pub fn aux_dt(&self) -> Option<f64> {
        median_dt(self.aux.iter().map(|s| s.t))
    }
}

fn median_dt(times: impl Iterator<Item = f64>) -> Option<f64> {
    let t: Vec<f64> = times.collect();
    if t.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}

enum Cell {
    Empty,
    Value(f64),
    Bad(FlagReason),
}

fn cell(record: &csv::StringRecord, idx: Option<usize>) -> Cell {
    let Some(raw) = idx.and_then(|i| record.get(i)) else {
        return Cell::Empty;
    };
    let raw = raw.trim();
    if raw.is_empty() {
        return Cell::Empty;
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Value(v),
        Ok(_) => Cell::Bad(FlagReason::NonFinite),
        Err(_) => Cell::Bad(FlagReason::Unparsable),
    }
}

/// Reads a group of cells that must be either all present or all empty.
fn group<const N: usize>(
    record: &csv::StringRecord,
    idx: &[Option<usize>; N],
) -> std::result::Result<Option<[f64; N]>, FlagReason> {
    let mut out = [0.0; N];
    let mut present = 0;
    for (k, &i) in idx.iter().enumerate() {
        match cell(record, i) {
            Cell::Empty => {}
            Cell::Value(v) => {
                out[k] = v;
                present += 1;
            }
            Cell::Bad(r) => return Err(r),
        }
    }
    match present {
        0 => Ok(None),
        p if p == N => Ok(Some(out)),
        _ => Err(FlagReason::PartialGroup),
    }
}

/// Parses a tag CSV export.
///
/// Rows carrying IMU cells feed the IMU stream; rows carrying depth and speed
/// feed the auxiliary stream, so mixed-rate files keep both native rates.
/// Non-finite or malformed cell groups are recorded in [`TagSeries::flags`]
/// and left out of their stream.
pub fn parse_tag_csv<R: Read>(reader: R, columns: &ColumnMap) -> Result<TagSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

    let t_idx = require(&columns.t)?;
    let accel_idx = [
        Some(require(&columns.accel[0])?),
        Some(require(&columns.accel[1])?),
        Some(require(&columns.accel[2])?),
    ];
    let gyro_idx = [
        Some(require(&columns.gyro[0])?),
        Some(require(&columns.gyro[1])?),
        Some(require(&columns.gyro[2])?),
    ];
    let mag_idx = [find(&columns.mag[0]), find(&columns.mag[1]), find(&columns.mag[2])];
    let depth_idx = require(&columns.depth)?;
    let speed_idx = require(&columns.speed)?;
    let temp_idx = find(&columns.temp);

    let mut series = TagSeries::default();
    let mut prev_t: Option<f64> = None;
    let flag = |series: &mut TagSeries, row: usize, column: &str, reason: FlagReason| {
        series.flags.push(RowFlag { row, column: column.to_string(), reason });
    };

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        series.rows += 1;

        let t = match cell(&record, Some(t_idx)) {
            Cell::Value(t) => t,
            Cell::Empty => {
                flag(&mut series, row, &columns.t, FlagReason::NonFinite);
                continue;
            }
            Cell::Bad(r) => {
                flag(&mut series, row, &columns.t, r);
                continue;
            }
        };
        if let Some(p) = prev_t {
            if t <= p {
                return Err(Error::NonMonotoneTime { row, prev: p, t });
            }
        }
        prev_t = Some(t);

        let accel = group(&record, &accel_idx);
        let gyro = group(&record, &gyro_idx);
        match (accel, gyro) {
            (Ok(Some(accel)), Ok(Some(gyro))) => {
                let mag = if mag_idx.iter().all(Option::is_some) {
                    match group(&record, &mag_idx) {
                        Ok(m) => m,
                        Err(r) => {
                            flag(&mut series, row, &columns.mag[0], r);
                            None
                        }
                    }
                } else {
                    None
                };
                series.imu.push(ImuSample { t, accel, gyro, mag });
            }
            (Ok(None), Ok(None)) => {}
            (Err(r), _) | (_, Err(r)) => {
                flag(&mut series, row, &columns.accel[0], r)
            }
            (Ok(_), Ok(_)) => flag(&mut series, row, &columns.accel[0], FlagReason::PartialGroup),
        }

        match group(&record, &[Some(depth_idx), Some(speed_idx)]) {
            Ok(Some([depth, speed])) => {
                if depth < 0.0 {
                    flag(&mut series, row, &columns.depth, FlagReason::Negative);
                } else if speed < 0.0 {
                    flag(&mut series, row, &columns.speed, FlagReason::Negative);
                } else {
                    let temp = match cell(&record, temp_idx) {
                        Cell::Value(v) => Some(v),
                        _ => None,
                    };
                    series.aux.push(AuxSample { t, depth, speed, temp });
                }
            }
            Ok(None) => {}
            Err(r) => flag(&mut series, row, &columns.depth, r),
        }
    }

    if series.rows == 0 {
        return Err(Error::EmptyFile);
    }
    if !series.flags.is_empty() {
        log::warn!("{} tag cell groups flagged and excluded", series.flags.len());
    }
    Ok(series)
}

pub fn read_tag_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<TagSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_tag_csv(std::io::BufReader::new(file), columns)
}

/// Writes the canonical tag CSV. Samples of both streams that share a
/// timestamp (bitwise) land on the same row.
pub fn write_tag_csv<W: Write>(writer: W, series: &TagSeries) -> Result<()> {
    // both streams are time-sorted; merge them, pairing equal timestamps
    let mut rows: Vec<(f64, Option<&ImuSample>, Option<&AuxSample>)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < series.imu.len() || j < series.aux.len() {
        let ti = series.imu.get(i).map(|s| s.t);
        let tj = series.aux.get(j).map(|s| s.t);
        match (ti, tj) {
            (Some(a), Some(b)) if a == b => {
                rows.push((a, Some(&series.imu[i]), Some(&series.aux[j])));
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                rows.push((a, Some(&series.imu[i]), None));
                i += 1;
            }
            (Some(a), None) => {
                rows.push((a, Some(&series.imu[i]), None));
                i += 1;
            }
            (_, Some(b)) => {
                rows.push((b, None, Some(&series.aux[j])));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }

    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz", "depth", "speed", "temp"])?;
    // shortest round-trip text; adding 0.0 turns -0 into 0
    let num = |x: &f64| (x + 0.0).to_string();
    let fmt = |v: Option<f64>| v.as_ref().map(num).unwrap_or_default();
    for (t, imu, aux) in rows {
        let mut rec: Vec<String> = Vec::with_capacity(13);
        rec.push(num(&t));
        match imu {
            Some(s) => {
                rec.extend(s.accel.iter().map(num));
                rec.extend(s.gyro.iter().map(num));
                match s.mag {
                    Some(m) => rec.extend(m.iter().map(num)),
                    None => rec.extend(std::iter::repeat(String::new()).take(3)),
                }
            }
            None => rec.extend(std::iter::repeat(String::new()).take(9)),
        }
        rec.push(fmt(aux.map(|a| a.depth)));
        rec.push(fmt(aux.map(|a| a.speed)));
        rec.push(fmt(aux.and_then(|a| a.temp)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })?;
    Ok(())
}
