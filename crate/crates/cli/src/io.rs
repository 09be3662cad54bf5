//! File formats shared by the subcommands.
//!
//! Every CSV starts with a `# config_hash: <hex>` line and every JSON
//! document carries a `config_hash` member; readers skip `#` lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use chinet_core::domain::{CoordSystem, MaximaMatrix, StationSet};

use crate::config::{Manifest, MANIFEST_FILE};

/// Files with extension `ext` directly inside `dir`, sorted by name.
pub fn dir_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Shortest round-trip decimal; empty for missing or non-finite values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

/// Output directory of one run; records what was written for the manifest.
pub struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    pub fn create(dir: &Path, manifest: Manifest) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.config_hash
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let hash = self.hash().to_string();
        let mut w = self.open(name)?;
        writeln!(w, "# config_hash: {hash}")?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(header)?;
        for r in rows {
            cw.write_record(r)?;
        }
        cw.flush()?;
        Ok(())
    }

    /// Writes `value` with a leading `config_hash` member.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let body = stamp(self.hash(), serde_json::to_value(value)?);
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &body)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes the manifest last so it lists every output.
    pub fn finish(mut self) -> Result<()> {
        self.manifest.outputs.sort();
        let path = self.dir.join(MANIFEST_FILE);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn stamp(hash: &str, value: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("config_hash".into(), Value::String(hash.into()));
    match value {
        Value::Object(inner) => map.extend(inner),
        other => {
            map.insert("data".into(), other);
        }
    }
    Value::Object(map)
}

/// `id,x,y` station table, keyed by id. Geographic files hold lon in `x`
/// and lat in `y`.
pub fn read_station_table(path: &Path) -> Result<BTreeMap<String, [f64; 2]>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "x", "y"] {
        bail!("{}: expected header id,x,y, found {:?}", path.display(), header.iter().collect::<Vec<_>>());
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse = |s: &str| {
            s.parse::<f64>()
                .with_context(|| format!("{}:{line}: bad coordinate {s:?}", path.display()))
        };
        let (id, x, y) = (rec[0].to_string(), parse(&rec[1])?, parse(&rec[2])?);
        if out.insert(id.clone(), [x, y]).is_some() {
            bail!("{}:{line}: duplicate station {id:?}", path.display());
        }
    }
    Ok(out)
}

/// Stations in the order of `ids`, looked up in the station table.
pub fn stations_for(table: &BTreeMap<String, [f64; 2]>, ids: &[String], system: CoordSystem) -> Result<StationSet> {
    let coords = ids
        .iter()
        .map(|id| table.get(id).copied().with_context(|| format!("station {id:?} has no coordinates")))
        .collect::<Result<Vec<_>>>()?;
    Ok(StationSet::new(ids.to_vec(), coords, system)?)
}

pub fn write_stations(out: &mut Output, s: &StationSet) -> Result<()> {
    let rows = s
        .ids()
        .iter()
        .zip(s.coords())
        .map(|(id, c)| vec![id.clone(), num(c[0]), num(c[1])]);
    out.csv("stations.csv", &["id", "x", "y"], rows)
}

/// Wide maxima table: `block,<id>...`, one row per block, empty cells missing.
pub struct WideMaxima {
    pub ids: Vec<String>,
    pub maxima: MaximaMatrix,
}

pub fn read_maxima(path: &Path) -> Result<WideMaxima> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "block" {
        bail!("{}: expected header block,<station>,<station>,...", path.display());
    }
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let d = ids.len();
    let (mut labels, mut cells) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 1 {
            bail!("{}:{line}: {} fields, expected {}", path.display(), rec.len(), d + 1);
        }
        labels.push(
            rec[0]
                .parse::<i32>()
                .with_context(|| format!("{}:{line}: bad block label {:?}", path.display(), &rec[0]))?,
        );
        for f in rec.iter().skip(1) {
            cells.push(if f.is_empty() || f == "NA" {
                None
            } else {
                Some(f.parse::<f64>().with_context(|| format!("{}:{line}: bad value {f:?}", path.display()))?)
            });
        }
    }
    let maxima = MaximaMatrix::new(labels, d, cells).with_context(|| format!("{}", path.display()))?;
    Ok(WideMaxima { ids, maxima })
}

pub fn write_maxima(out: &mut Output, ids: &[String], mx: &MaximaMatrix) -> Result<()> {
    let mut header = vec!["block"];
    header.extend(ids.iter().map(String::as_str));
    let rows = (0..mx.blocks()).map(|t| {
        let mut r = vec![mx.labels()[t].to_string()];
        r.extend((0..mx.stations()).map(|i| opt(mx.get(t, i))));
        r
    });
    out.csv("maxima.csv", &header, rows)
}

/// Square matrix with station ids on both axes; `value(i, j)` may be missing.
pub fn write_matrix(out: &mut Output, name: &str, ids: &[String], value: impl Fn(usize, usize) -> Option<f64>) -> Result<()> {
    let mut header = vec!["id"];
    header.extend(ids.iter().map(String::as_str));
    let rows = (0..ids.len()).map(|i| {
        let mut r = vec![ids[i].clone()];
        r.extend((0..ids.len()).map(|j| opt(value(i, j))));
        r
    });
    out.csv(name, &header, rows)
}
