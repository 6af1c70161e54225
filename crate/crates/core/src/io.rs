//! Field snapshots (`SFLD2`), CSV export, JSON sidecars and isotopy
//! directories.
//!
//! An `SFLD2` file is the ASCII line `SFLD2 <n_x> <n_y> <n_comp>\n` followed
//! by little-endian `f64` values, component after component, each component
//! row-major.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, OneForm, ScalarField, TimeSeries, VectorField};
use crate::hodge::{HarmonicBasis, HodgeSplit};
use crate::isotopy::{invert, DisplacementField, Isotopy};

/// A grid field with a fixed number of components.
pub trait Snapshot: Sized {
    const COMPONENTS: usize;
    fn grid(&self) -> GridSpec;
    fn components(&self) -> Vec<&[f64]>;
    fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self>;
}

fn two(comps: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut it = comps.into_iter();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::Format("expected 2 components".into())),
    }
}

impl Snapshot for ScalarField {
    const COMPONENTS: usize = 1;
    fn grid(&self) -> GridSpec {
        ScalarField::grid(self)
    }
    fn components(&self) -> Vec<&[f64]> {
        vec![self.values()]
    }
    fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let mut it = comps.into_iter();
        match (it.next(), it.next()) {
            (Some(v), None) => ScalarField::new(grid, v),
            _ => Err(Error::Format("expected 1 component".into())),
        }
    }
}

impl Snapshot for OneForm {
    const COMPONENTS: usize = 2;
    fn grid(&self) -> GridSpec {
        OneForm::grid(self)
    }
    fn components(&self) -> Vec<&[f64]> {
        vec![self.comp_x(), self.comp_y()]
    }
    fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let (a, b) = two(comps)?;
        OneForm::new(grid, a, b)
    }
}

impl Snapshot for VectorField {
    const COMPONENTS: usize = 2;
    fn grid(&self) -> GridSpec {
        VectorField::grid(self)
    }
    fn components(&self) -> Vec<&[f64]> {
        vec![self.v_x(), self.v_y()]
    }
    fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let (a, b) = two(comps)?;
        VectorField::new(grid, a, b)
    }
}

impl Snapshot for DisplacementField {
    const COMPONENTS: usize = 2;
    fn grid(&self) -> GridSpec {
        DisplacementField::grid(self)
    }
    fn components(&self) -> Vec<&[f64]> {
        vec![self.d_x(), self.d_y()]
    }
    fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let (a, b) = two(comps)?;
        DisplacementField::new(grid, a, b)
    }
}

pub fn write_sfld2<W: Write>(mut w: W, grid: GridSpec, comps: &[&[f64]]) -> Result<()> {
    writeln!(w, "SFLD2 {} {} {}", grid.n_x(), grid.n_y(), comps.len())?;
    for c in comps {
        if c.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                what: "snapshot component",
                expected: grid.len(),
                got: c.len(),
            });
        }
        let mut buf = Vec::with_capacity(8 * c.len());
        for v in c.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_sfld2<R: Read>(r: R) -> Result<(GridSpec, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(r);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad header {header:?}")));
    if parts.len() != 4 || parts[0] != "SFLD2" {
        return Err(Error::Format(format!("bad header {header:?}")));
    }
    let grid = GridSpec::new(parse(parts[1])?, parse(parts[2])?)?;
    let n_comp = parse(parts[3])?;
    let mut comps = Vec::with_capacity(n_comp);
    let mut buf = vec![0u8; 8 * grid.len()];
    for _ in 0..n_comp {
        r.read_exact(&mut buf).map_err(|_| Error::Format("truncated data".into()))?;
        comps.push(buf.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect());
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok((grid, comps))
}

pub fn encode<T: Snapshot>(field: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_sfld2(&mut out, field.grid(), &field.components())?;
    Ok(out)
}

pub fn decode<T: Snapshot>(bytes: &[u8]) -> Result<T> {
    let (grid, comps) = read_sfld2(bytes)?;
    if comps.len() != T::COMPONENTS {
        return Err(Error::Format(format!("expected {} components, found {}", T::COMPONENTS, comps.len())));
    }
    T::from_components(grid, comps)
}

pub fn save<T: Snapshot>(path: &Path, field: &T) -> Result<()> {
    write_atomic(path, &encode(field)?)
}

pub fn load<T: Snapshot>(path: &Path) -> Result<T> {
    decode(&fs::read(path)?)
}

/// `x,y,comp0[,comp1]` rows in storage order.
pub fn to_csv<T: Snapshot>(field: &T) -> String {
    let grid = field.grid();
    let comps = field.components();
    let mut s = String::from("x,y");
    for q in 0..comps.len() {
        s.push_str(&format!(",comp{q}"));
    }
    s.push('\n');
    for (k, (x, y)) in grid.points().enumerate() {
        s.push_str(&format!("{x},{y}"));
        for c in &comps {
            s.push_str(&format!(",{:e}", c[k]));
        }
        s.push('\n');
    }
    s
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &json_bytes(value)?)
}

/// File names relative to a directory, with their contents.
pub type FileSet = Vec<(String, Vec<u8>)>;

/// Creates `dir` and writes each file atomically.
pub fn write_files(dir: &Path, files: &FileSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(())
}

/// JSON sidecar of a Hodge split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSidecar {
    pub lambda: [f64; 2],
    pub residual: f64,
    pub metric_tag: String,
}

/// `harmonic.sfld2`, `potential.sfld2` and `split.json`.
pub fn hodge_split_files(split: &HodgeSplit, metric_tag: &str) -> Result<FileSet> {
    let side = SplitSidecar {
        lambda: split.lambda,
        residual: split.residual,
        metric_tag: metric_tag.to_string(),
    };
    Ok(vec![
        ("harmonic.sfld2".into(), encode(&split.harmonic)?),
        ("potential.sfld2".into(), encode(&split.potential)?),
        ("split.json".into(), json_bytes(&side)?),
    ])
}

pub fn write_hodge_split(dir: &Path, split: &HodgeSplit, metric_tag: &str) -> Result<()> {
    write_files(dir, &hodge_split_files(split, metric_tag)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSidecar {
    pub id: String,
    pub metric_tag: String,
    pub period_matrix: [[f64; 2]; 2],
    pub closed_defect: f64,
    pub coclosed_defect: f64,
}

/// `h1.sfld2`, `h2.sfld2` and `basis.json`.
pub fn basis_files(basis: &HarmonicBasis) -> Result<FileSet> {
    let (closed_defect, coclosed_defect) = basis.defects()?;
    let side = BasisSidecar {
        id: basis.id(),
        metric_tag: basis.metric().tag().to_string(),
        period_matrix: basis.period_matrix(),
        closed_defect,
        coclosed_defect,
    };
    Ok(vec![
        ("h1.sfld2".into(), encode(basis.h1())?),
        ("h2.sfld2".into(), encode(basis.h2())?),
        ("basis.json".into(), json_bytes(&side)?),
    ])
}

pub fn write_basis(dir: &Path, basis: &HarmonicBasis) -> Result<()> {
    write_files(dir, &basis_files(basis)?)
}

/// Manifest of an isotopy directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopyManifest {
    pub n_t: usize,
    pub substeps: usize,
    pub consistency_residual: f64,
    pub n_x: usize,
    pub n_y: usize,
}

/// `generator_NNNN.sfld2` and `flow_NNNN.sfld2` per sample, plus
/// `manifest.json`.
pub fn isotopy_files(iso: &Isotopy) -> Result<FileSet> {
    let mut files = Vec::with_capacity(2 * iso.n_t() + 1);
    for i in 0..iso.n_t() {
        files.push((format!("generator_{i:04}.sfld2"), encode(iso.generator().get(i))?));
        files.push((format!("flow_{i:04}.sfld2"), encode(iso.flow().get(i))?));
    }
    let grid = iso.grid();
    let manifest = IsotopyManifest {
        n_t: iso.n_t(),
        substeps: iso.substeps(),
        consistency_residual: iso.consistency_residual(),
        n_x: grid.n_x(),
        n_y: grid.n_y(),
    };
    files.push(("manifest.json".into(), json_bytes(&manifest)?));
    Ok(files)
}

pub fn write_isotopy(dir: &Path, iso: &Isotopy) -> Result<()> {
    write_files(dir, &isotopy_files(iso)?)
}

/// Reads a directory written by [`write_isotopy`]; inverse flows are
/// recomputed.
pub fn read_isotopy(dir: &Path) -> Result<Isotopy> {
    let manifest: IsotopyManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let grid = GridSpec::new(manifest.n_x, manifest.n_y)?;
    let mut gen = Vec::with_capacity(manifest.n_t);
    let mut flow = Vec::with_capacity(manifest.n_t);
    let mut inv = Vec::with_capacity(manifest.n_t);
    for i in 0..manifest.n_t {
        let g: VectorField = load(&dir.join(format!("generator_{i:04}.sfld2")))?;
        let f: DisplacementField = load(&dir.join(format!("flow_{i:04}.sfld2")))?;
        grid.ensure_same(&g.grid())?;
        grid.ensure_same(&DisplacementField::grid(&f))?;
        inv.push(invert(&f)?);
        gen.push(g);
        flow.push(f);
    }
    Isotopy::assemble(
        TimeSeries::new(gen)?,
        TimeSeries::new(flow)?,
        TimeSeries::new(inv)?,
        manifest.substeps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::shear_path;
    use crate::hodge::{harmonic_basis, hodge_decompose, MetricSpec};

    #[test]
    fn header_and_layout() {
        let g = GridSpec::new(8, 10).unwrap();
        let v = VectorField::from_fn(g, |x, y| (x, 10.0 + y));
        let bytes = encode(&v).unwrap();
        assert!(bytes.starts_with(b"SFLD2 8 10 2\n"));
        assert_eq!(bytes.len(), 13 + 2 * 80 * 8);
        // second node of the first component is x = 1/8
        let at = 13 + 8;
        assert_eq!(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()), 0.125);
        // first node of the second component
        let at = 13 + 80 * 8;
        assert_eq!(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()), 10.0);
        let back: VectorField = decode(&bytes).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn malformed_snapshots_rejected() {
        let g = GridSpec::square(8).unwrap();
        let bytes = encode(&ScalarField::constant(g, 1.0)).unwrap();
        assert!(matches!(decode::<ScalarField>(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(decode::<VectorField>(&bytes), Err(Error::Format(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode::<ScalarField>(&extra), Err(Error::Format(_))));
        assert!(matches!(decode::<ScalarField>(b"SFLD1 8 8 1\n"), Err(Error::Format(_))));
    }

    #[test]
    fn csv_header() {
        let g = GridSpec::square(8).unwrap();
        let s = to_csv(&OneForm::constant(g, 1.0, 2.0));
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("x,y,comp0,comp1"));
        assert_eq!(lines.next(), Some("0,0,1e0,2e0"));
        assert_eq!(s.lines().count(), 65);
    }

    #[test]
    fn isotopy_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::square(16).unwrap();
        let iso = shear_path().isotopy(g, 5, 2).unwrap();
        write_isotopy(dir.path(), &iso).unwrap();
        let back = read_isotopy(dir.path()).unwrap();
        assert_eq!(back.generator(), iso.generator());
        assert_eq!(back.flow(), iso.flow());
        assert_eq!(back.consistency_residual(), iso.consistency_residual());
        let m: IsotopyManifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!((m.n_t, m.substeps), (5, 2));
    }

    #[test]
    fn split_and_basis_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::square(16).unwrap();
        let metric = MetricSpec::flat(g);
        let basis = harmonic_basis(&metric).unwrap();
        let theta = OneForm::constant(g, 3.0, 0.0);
        let split = hodge_decompose(&theta, &metric, &basis).unwrap();
        write_hodge_split(dir.path(), &split, metric.tag()).unwrap();
        write_basis(dir.path(), &basis).unwrap();
        let side: SplitSidecar = serde_json::from_slice(&fs::read(dir.path().join("split.json")).unwrap()).unwrap();
        assert_eq!(side.lambda, [3.0, 0.0]);
        let h1: OneForm = load(&dir.path().join("h1.sfld2")).unwrap();
        assert_eq!(&h1, basis.h1());
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
