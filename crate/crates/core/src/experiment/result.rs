//! Sweep results: per-cell metric records on a named grid.

use std::io::{BufRead, Write};

use serde::Serialize;

use super::config::{axis_unit, hex_digest, Axis};
use crate::error::{Error, Result};

/// A metric value. `floor` marks a BER with no error events in the test
/// set; `value` then holds the `1/M` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub floor: bool,
}

impl Metric {
    pub fn plain(value: f64) -> Self {
        Self { value, floor: false }
    }

    /// Error rate from `errors` events over `n` decisions.
    pub fn ber(errors: usize, n: usize) -> Self {
        if errors == 0 {
            Self {
                value: 1.0 / n as f64,
                floor: true,
            }
        } else {
            Self::plain(errors as f64 / n as f64)
        }
    }

    /// CSV form, `<1e-3` for a floored BER.
    pub fn format(&self) -> String {
        if self.floor {
            format!("<{:e}", self.value)
        } else {
            format!("{:e}", self.value)
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text.strip_prefix('<') {
            Some(rest) => rest.parse().ok().map(|value| Self { value, floor: true }),
            None => text.parse().ok().map(Self::plain),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub index: usize,
    pub seed: u64,
    pub status: CellStatus,
    /// One entry per map metric; NaN when diverged.
    pub metrics: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

impl Provenance {
    pub fn new(kind: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultMap {
    pub axes: Vec<Axis>,
    pub metrics: Vec<String>,
    pub cells: Vec<CellRecord>,
    pub provenance: Provenance,
}

/// Grid coordinates of cell `index`, last axis fastest.
fn unravel(axes: &[Axis], index: usize) -> Vec<usize> {
    let mut rest = index;
    let mut idx = vec![0; axes.len()];
    for (k, a) in axes.iter().enumerate().rev() {
        idx[k] = rest % a.values.len();
        rest /= a.values.len();
    }
    idx
}

fn ravel(axes: &[Axis], idx: &[usize]) -> usize {
    axes.iter().zip(idx).fold(0, |acc, (a, &i)| acc * a.values.len() + i)
}

impl ResultMap {
    pub fn new(axes: Vec<Axis>, metrics: Vec<String>, cells: Vec<CellRecord>, provenance: Provenance) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.values.len()).product();
        if cells.len() != n {
            return Err(Error::invalid(format!("{} cells for a grid of {n}", cells.len())));
        }
        if let Some(c) = cells.iter().enumerate().find(|(i, c)| c.index != *i) {
            return Err(Error::invalid(format!("cell {} is out of order", c.1.index)));
        }
        if cells.iter().any(|c| c.metrics.len() != metrics.len()) {
            return Err(Error::invalid("every cell needs one value per metric"));
        }
        Ok(Self {
            axes,
            metrics,
            cells,
            provenance,
        })
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m == name)
    }

    /// Axis values of cell `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        unravel(&self.axes, index)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.values[i])
            .collect()
    }

    /// Values of one metric in cell order.
    pub fn column(&self, name: &str) -> Option<Vec<Metric>> {
        let k = self.metric_index(name)?;
        Some(self.cells.iter().map(|c| c.metrics[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.provenance;
        writeln!(
            out,
            "# kind={} seed={} config_sha256={} version={}",
            p.kind, p.seed, p.config_hash, p.code_version
        )?;
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        header.extend(["seed", "status"]);
        header.extend(self.metrics.iter().map(String::as_str));
        writeln!(out, "{}", header.join(","))?;
        for cell in &self.cells {
            let mut row: Vec<String> = self.point(cell.index).iter().map(|v| format!("{v:e}")).collect();
            row.push(cell.seed.to_string());
            row.push(
                match cell.status {
                    CellStatus::Ok => "ok",
                    CellStatus::Diverged => "diverged",
                }
                .to_string(),
            );
            row.extend(cell.metrics.iter().map(Metric::format));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = input.lines().enumerate();
        let mut next = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                Some((i, l)) => Ok(Some((i + 1, l?))),
                None => Ok(None),
            }
        };
        let (_, first) = next()?.ok_or_else(|| perr(1, "empty file".into()))?;
        let info = first
            .strip_prefix('#')
            .ok_or_else(|| perr(1, "missing provenance comment".into()))?;
        let field = |key: &str| -> Result<String> {
            info.split_whitespace()
                .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| perr(1, format!("provenance lacks `{key}`")))
        };
        let provenance = Provenance {
            kind: field("kind")?,
            seed: field("seed")?
                .parse()
                .map_err(|_| perr(1, "bad seed".into()))?,
            config_hash: field("config_sha256")?,
            code_version: field("version")?,
        };
        let (_, header) = next()?.ok_or_else(|| perr(2, "missing header".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let n_axes = cols
            .iter()
            .position(|c| *c == "seed")
            .ok_or_else(|| perr(2, "header lacks a `seed` column".into()))?;
        if cols.get(n_axes + 1) != Some(&"status") {
            return Err(perr(2, "`status` must follow `seed`".into()));
        }
        let metrics: Vec<String> = cols[n_axes + 2..].iter().map(|s| s.to_string()).collect();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut records = Vec::new();
        while let Some((ln, line)) = next()? {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(perr(ln, format!("expected {} fields, got {}", cols.len(), f.len())));
            }
            let point = f[..n_axes]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("bad axis value `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            let seed = f[n_axes]
                .parse()
                .map_err(|_| perr(ln, format!("bad seed `{}`", f[n_axes])))?;
            let status = match f[n_axes + 1] {
                "ok" => CellStatus::Ok,
                "diverged" => CellStatus::Diverged,
                other => return Err(perr(ln, format!("bad status `{other}`"))),
            };
            let values = f[n_axes + 2..]
                .iter()
                .map(|t| Metric::parse(t).ok_or_else(|| perr(ln, format!("bad metric `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            records.push(CellRecord {
                index: records.len(),
                seed,
                status,
                metrics: values,
            });
            points.push(point);
        }
        let mut axes = Vec::with_capacity(n_axes);
        for (k, name) in cols[..n_axes].iter().enumerate() {
            let mut values: Vec<f64> = Vec::new();
            for p in &points {
                if !values.contains(&p[k]) {
                    values.push(p[k]);
                }
            }
            let unit = axis_unit(name).map_or("", |(_, u)| u);
            axes.push(Axis {
                name: name.to_string(),
                unit: unit.to_string(),
                values,
            });
        }
        let map = Self::new(axes, metrics, records, provenance).map_err(|e| perr(0, e.to_string()))?;
        for (i, p) in points.iter().enumerate() {
            if map.point(i) != *p {
                return Err(perr(i + 3, "rows are not in grid order".into()));
            }
        }
        Ok(map)
    }
}

/// Cellwise `RB = BER_in / BER_out` for every BER metric the two maps
/// share. The result carries `rb…` plus both inputs with their floor flags.
pub fn compare_baseline(map_out: &ResultMap, map_in: &ResultMap) -> Result<ResultMap> {
    if map_out.axes.len() != map_in.axes.len()
        || map_out
            .axes
            .iter()
            .zip(&map_in.axes)
            .any(|(a, b)| a.name != b.name || a.values != b.values)
    {
        let desc = |m: &ResultMap| {
            m.axes
                .iter()
                .map(|a| format!("{}[{}]", a.name, a.values.len()))
                .collect::<Vec<_>>()
                .join(" x ")
        };
        return Err(Error::invalid(format!(
            "axis mismatch: {} vs {}",
            desc(map_out),
            desc(map_in)
        )));
    }
    let shared: Vec<(usize, usize, &str)> = map_out
        .metrics
        .iter()
        .enumerate()
        .filter(|(_, m)| m.starts_with("ber"))
        .filter_map(|(i, m)| map_in.metric_index(m).map(|j| (i, j, m.as_str())))
        .collect();
    if shared.is_empty() {
        return Err(Error::invalid("the maps share no BER metric"));
    }
    let mut metrics = Vec::new();
    for &(_, _, m) in &shared {
        metrics.push(format!("rb{}", &m[3..]));
        metrics.push(format!("{m}_out"));
        metrics.push(format!("{m}_in"));
    }
    let cells = map_out
        .cells
        .iter()
        .zip(&map_in.cells)
        .map(|(o, i)| {
            let diverged = o.status == CellStatus::Diverged || i.status == CellStatus::Diverged;
            let mut values = Vec::new();
            for &(ko, ki, _) in &shared {
                let (bo, bi) = (o.metrics[ko], i.metrics[ki]);
                let rb = if diverged { f64::NAN } else { bi.value / bo.value };
                values.extend([Metric::plain(rb), bo, bi]);
            }
            CellRecord {
                index: o.index,
                seed: o.seed,
                status: if diverged { CellStatus::Diverged } else { CellStatus::Ok },
                metrics: values,
            }
        })
        .collect();
    let hash = hex_digest(format!("{}{}", map_out.provenance.config_hash, map_in.provenance.config_hash).as_bytes());
    ResultMap::new(
        map_out.axes.clone(),
        metrics,
        cells,
        Provenance::new("compare", &hash, map_out.provenance.seed),
    )
}

/// Minimum of each named metric over the `power` axis, with the power
/// that reaches it (`power_at_<metric>`) (the lowest such power on ties). Diverged cells are
/// skipped; a fully diverged column stays diverged.
pub fn best_power_projection(map: &ResultMap, metrics: &[&str]) -> Result<ResultMap> {
    let pk = map
        .axes
        .iter()
        .position(|a| a.name == "power")
        .ok_or_else(|| Error::invalid("map has no power axis"))?;
    let ks = metrics
        .iter()
        .map(|m| {
            map.metric_index(m)
                .ok_or_else(|| Error::invalid(format!("map has no metric `{m}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let powers = &map.axes[pk].values;
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| powers[a].total_cmp(&powers[b]));

    let axes: Vec<Axis> = map
        .axes
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != pk)
        .map(|(_, a)| a.clone())
        .collect();
    let n_out: usize = axes.iter().map(|a| a.values.len()).product();
    let mut names = Vec::new();
    for m in metrics {
        names.push(m.to_string());
        names.push(format!("power_at_{m}"));
    }
    let mut cells = Vec::with_capacity(n_out);
    for index in 0..n_out {
        let reduced = unravel(&axes, index);
        let mut values = Vec::new();
        let mut seed = None;
        let mut any_ok = false;
        for &k in &ks {
            let mut best: Option<(Metric, f64, u64)> = None;
            for &ip in &order {
                let mut full = reduced.clone();
                full.insert(pk, ip);
                let cell = &map.cells[ravel(&map.axes, &full)];
                if cell.status == CellStatus::Diverged {
                    continue;
                }
                let v = cell.metrics[k];
                if best.map_or(true, |(b, _, _)| v.value < b.value) {
                    best = Some((v, powers[ip], cell.seed));
                }
            }
            match best {
                Some((v, p, s)) => {
                    any_ok = true;
                    seed.get_or_insert(s);
                    values.extend([v, Metric::plain(p)]);
                }
                None => values.extend([Metric::plain(f64::NAN), Metric::plain(f64::NAN)]),
            }
        }
        let mut full = reduced.clone();
        full.insert(pk, order[0]);
        cells.push(CellRecord {
            index,
            seed: seed.unwrap_or(map.cells[ravel(&map.axes, &full)].seed),
            status: if any_ok { CellStatus::Ok } else { CellStatus::Diverged },
            metrics: values,
        });
    }
    ResultMap::new(axes, names, cells, map.provenance.clone())
}
