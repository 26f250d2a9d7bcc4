//! JSON documents and CSV tables.
//!
//! Matrices are stored row-major, one flattened sample per frequency, in
//! qq..pp ordering. JSON numbers are written in the shortest form that parses
//! back to the same `f64`; CSV cells carry 17 significant digits, which is
//! also exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::decompose::{CircuitFactors, MeshProgram, OpticalCircuit};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::matfn::{FrequencyGrid, MatrixFunction};
use crate::quantize::{NoiseModeInfo, NoiseModel, RankWarning};
use crate::sdm::SpectralDensityMatrix;

pub const MATFN_SCHEMA: &str = "qlti.matfn/1";
pub const CIRCUIT_SCHEMA: &str = "qlti.circuit/1";
pub const NOISE_SCHEMA: &str = "qlti.noise/1";
pub const ORDERING: &str = "qqpp";
pub const SDM_KIND: &str = "sdm";

fn schema_err(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn expect_tag(field: &str, found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(schema_err(format!("{field} is {found:?}, expected {want:?}")));
    }
    Ok(())
}

fn flatten(m: &CMat) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    (re, im)
}

fn unflatten(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> Result<CMat> {
    if re.len() != rows * cols || im.len() != rows * cols {
        return Err(schema_err(format!("sample has {}/{} entries, expected {}", re.len(), im.len(), rows * cols)));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| c(re[i * cols + j], im[i * cols + j])))
}

/// `qlti.matfn/1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatfnDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Set for square samples only.
    pub n_modes: Option<usize>,
    pub rows: usize,
    pub cols: usize,
    pub ordering: String,
    pub frequencies: Vec<f64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatfnDocument {
    pub fn new(m: &MatrixFunction, kind: Option<&str>) -> Self {
        let (re, im) = m.samples().iter().map(flatten).unzip();
        Self {
            schema: MATFN_SCHEMA.into(),
            kind: kind.map(str::to_owned),
            n_modes: (m.rows() == m.cols()).then_some(m.rows() / 2),
            rows: m.rows(),
            cols: m.cols(),
            ordering: ORDERING.into(),
            frequencies: m.grid().as_slice().to_vec(),
            re,
            im,
        }
    }

    pub fn to_matfn(&self) -> Result<MatrixFunction> {
        expect_tag("schema", &self.schema, MATFN_SCHEMA)?;
        expect_tag("ordering", &self.ordering, ORDERING)?;
        if self.rows % 2 != 0 || self.cols % 2 != 0 {
            return Err(schema_err(format!("odd quadrature count {}x{}", self.rows, self.cols)));
        }
        if self.n_modes.is_some_and(|n| self.rows != self.cols || 2 * n != self.rows) {
            return Err(schema_err(format!("n_modes {:?} inconsistent with {}x{}", self.n_modes, self.rows, self.cols)));
        }
        let k = self.frequencies.len();
        if self.re.len() != k || self.im.len() != k {
            return Err(schema_err(format!("{} frequencies but {}/{} samples", k, self.re.len(), self.im.len())));
        }
        let grid = FrequencyGrid::new(self.frequencies.clone())?;
        let samples = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(re, im)| unflatten(self.rows, self.cols, re, im))
            .collect::<Result<Vec<_>>>()?;
        MatrixFunction::new(grid, samples)
    }
}

/// Unitary factors per frequency, `null` where the decomposition failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSeries {
    pub re: Vec<Option<Vec<f64>>>,
    pub im: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSeries {
    #[serde(rename = "V1")]
    pub v1: ComplexSeries,
    pub theta1: Vec<Option<Vec<f64>>>,
    #[serde(rename = "W1")]
    pub w1: ComplexSeries,
    pub r: Vec<Option<Vec<f64>>>,
    #[serde(rename = "W2")]
    pub w2: ComplexSeries,
    pub theta2: Vec<Option<Vec<f64>>>,
    #[serde(rename = "V2")]
    pub v2: ComplexSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSet {
    #[serde(rename = "V1")]
    pub v1: MeshProgram,
    #[serde(rename = "W1")]
    pub w1: MeshProgram,
    #[serde(rename = "W2")]
    pub w2: MeshProgram,
    #[serde(rename = "V2")]
    pub v2: MeshProgram,
}

/// `qlti.circuit/1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub schema: String,
    pub n_modes: usize,
    pub ordering: String,
    pub frequencies: Vec<f64>,
    pub factors: FactorSeries,
    /// Failure message per frequency, `null` on success.
    pub errors: Vec<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meshes: Option<Vec<Option<MeshSet>>>,
}

fn series<'a>(it: impl Iterator<Item = Option<&'a CMat>>) -> ComplexSeries {
    let (re, im) = it.map(|m| m.map(flatten).unzip()).unzip();
    ComplexSeries { re, im }
}

fn series_at(s: &ComplexSeries, k: usize, n: usize, name: &str) -> Result<CMat> {
    match (s.re.get(k), s.im.get(k)) {
        (Some(Some(re)), Some(Some(im))) => unflatten(n, n, re, im),
        _ => Err(schema_err(format!("{name} missing at index {k}"))),
    }
}

fn vector_at(s: &[Option<Vec<f64>>], k: usize, n: usize, name: &str) -> Result<Vec<f64>> {
    match s.get(k) {
        Some(Some(v)) if v.len() == n => Ok(v.clone()),
        _ => Err(schema_err(format!("{name} missing or of wrong length at index {k}"))),
    }
}

impl CircuitDocument {
    /// With `meshes`, every successful frequency also carries mesh programs.
    pub fn new(circuit: &OpticalCircuit, meshes: bool) -> Result<Self> {
        let ok: Vec<Option<&CircuitFactors>> = circuit.samples.iter().map(|s| s.as_ref().ok()).collect();
        let vecs = |f: fn(&CircuitFactors) -> &Vec<f64>| ok.iter().map(|o| o.map(|x| f(x).clone())).collect();
        let factors = FactorSeries {
            v1: series(ok.iter().map(|o| o.map(|x| &x.v1))),
            theta1: vecs(|x| &x.theta1),
            w1: series(ok.iter().map(|o| o.map(|x| &x.w1))),
            r: vecs(|x| &x.r),
            w2: series(ok.iter().map(|o| o.map(|x| &x.w2))),
            theta2: vecs(|x| &x.theta2),
            v2: series(ok.iter().map(|o| o.map(|x| &x.v2))),
        };
        let meshes = if meshes {
            Some(
                ok.iter()
                    .map(|o| {
                        o.map(|f| f.meshes().map(|[v1, w1, w2, v2]| MeshSet { v1, w1, w2, v2 })).transpose()
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self {
            schema: CIRCUIT_SCHEMA.into(),
            n_modes: circuit.n,
            ordering: ORDERING.into(),
            frequencies: circuit.grid.as_slice().to_vec(),
            factors,
            errors: circuit.samples.iter().map(|s| s.as_ref().err().map(|e| e.to_string())).collect(),
            meshes,
        })
    }

    pub fn to_circuit(&self) -> Result<OpticalCircuit> {
        expect_tag("schema", &self.schema, CIRCUIT_SCHEMA)?;
        expect_tag("ordering", &self.ordering, ORDERING)?;
        let grid = FrequencyGrid::new(self.frequencies.clone())?;
        if self.errors.len() != grid.len() {
            return Err(schema_err(format!("{} error slots for {} frequencies", self.errors.len(), grid.len())));
        }
        let n = self.n_modes;
        let f = &self.factors;
        let samples = self
            .errors
            .iter()
            .enumerate()
            .map(|(k, e)| match e {
                Some(msg) => Ok(Err(Error::Numeric(msg.clone()))),
                None => Ok(Ok(CircuitFactors {
                    v1: series_at(&f.v1, k, n, "V1")?,
                    theta1: vector_at(&f.theta1, k, n, "theta1")?,
                    w1: series_at(&f.w1, k, n, "W1")?,
                    r: vector_at(&f.r, k, n, "r")?,
                    w2: series_at(&f.w2, k, n, "W2")?,
                    theta2: vector_at(&f.theta2, k, n, "theta2")?,
                    v2: series_at(&f.v2, k, n, "V2")?,
                })),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OpticalCircuit { grid, n, samples })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBlocks {
    pub g: MatfnDocument,
    pub n: MatfnDocument,
}

/// `qlti.noise/1`: a transfer matrix together with its minimal noise block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDocument {
    pub schema: String,
    pub model: NoiseBlocks,
    pub per_freq: Vec<NoiseModeInfo>,
    #[serde(default)]
    pub warnings: Vec<RankWarning>,
}

impl NoiseDocument {
    pub fn new(model: &NoiseModel) -> Self {
        Self {
            schema: NOISE_SCHEMA.into(),
            model: NoiseBlocks { g: MatfnDocument::new(&model.g, None), n: MatfnDocument::new(&model.n, None) },
            per_freq: model.per_freq.clone(),
            warnings: model.warnings.clone(),
        }
    }

    pub fn to_model(&self) -> Result<NoiseModel> {
        expect_tag("schema", &self.schema, NOISE_SCHEMA)?;
        let mut m = NoiseModel::from_parts(self.model.g.to_matfn()?, self.model.n.to_matfn()?, self.per_freq.clone())?;
        m.warnings = self.warnings.clone();
        Ok(m)
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

/// Parses JSON; any syntax or structure problem is a schema violation.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| schema_err(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = to_json(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

pub fn read_matfn(path: &Path) -> Result<MatrixFunction> {
    read_json::<MatfnDocument>(path)?.to_matfn()
}

pub fn write_matfn(path: &Path, m: &MatrixFunction) -> Result<()> {
    write_json(path, &MatfnDocument::new(m, None))
}

/// Accepts documents tagged `"kind": "sdm"` or untagged.
pub fn read_sdm(path: &Path) -> Result<SpectralDensityMatrix> {
    let doc: MatfnDocument = read_json(path)?;
    if let Some(k) = &doc.kind {
        expect_tag("kind", k, SDM_KIND)?;
    }
    SpectralDensityMatrix::new(doc.to_matfn()?)
}

pub fn write_sdm(path: &Path, s: &SpectralDensityMatrix) -> Result<()> {
    write_json(path, &MatfnDocument::new(s.data(), Some(SDM_KIND)))
}

/// A CSV table whose first line names the table and its version, e.g.
/// `# qlti.williamson/1`, followed by the column header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable {
    pub fn new(name: impl Into<String>, columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { name: name.into(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!("row of {} cells for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# {}", self.name)?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let name = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| schema_err("missing table name line"))?
            .to_owned();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| schema_err("missing header row"))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let mut table = Self { name, columns, rows: Vec::new() };
        for (i, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            let row = line
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|e| schema_err(format!("row {i}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            table.push(row).map_err(|e| schema_err(e.to_string()))?;
        }
        Ok(table)
    }
}

impl std::fmt::Display for CsvTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|_| std::fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::optical_decomposition;
    use crate::group::random_group_element;
    use crate::quantize::{minimal_noise, scaled_identity};

    fn roundtrip<T: Serialize + DeserializeOwned>(doc: &T) -> T {
        from_json(&to_json(doc).unwrap()).unwrap()
    }

    #[test]
    fn matfn_roundtrip_is_bitwise() {
        let grid = FrequencyGrid::linear(0.0, 3.0, 7).unwrap();
        let m = random_group_element(&grid, 2, 11, 1.0).unwrap();
        let back = roundtrip(&MatfnDocument::new(&m, None)).to_matfn().unwrap();
        assert_eq!(back, m);
        let text = to_json(&MatfnDocument::new(&m, None)).unwrap();
        assert!(text.contains("\"schema\": \"qlti.matfn/1\"") && text.contains("\"ordering\": \"qqpp\""));
    }

    #[test]
    fn matfn_rejects_bad_documents() {
        let grid = FrequencyGrid::single(1.0).unwrap();
        let mut doc = MatfnDocument::new(&MatrixFunction::identity(&grid, 2), None);
        doc.schema = "qlti.matfn/2".into();
        assert!(matches!(doc.to_matfn(), Err(Error::Schema(_))));
        let mut doc = MatfnDocument::new(&MatrixFunction::identity(&grid, 2), None);
        doc.re[0].pop();
        assert!(matches!(doc.to_matfn(), Err(Error::Schema(_))));
        assert!(matches!(from_json::<MatfnDocument>("{\"schema\": 3}"), Err(Error::Schema(_))));
    }

    #[test]
    fn circuit_roundtrip_with_failure() {
        let grid = FrequencyGrid::linear(0.0, 2.0, 3).unwrap();
        let m = random_group_element(&grid, 2, 5, 0.8).unwrap();
        let mut circuit = optical_decomposition(&m).unwrap();
        circuit.samples[1] = Err(Error::Degenerate("test".into()));
        let doc = CircuitDocument::new(&circuit, true).unwrap();
        let back = roundtrip(&doc);
        assert_eq!(back, doc);
        let c2 = back.to_circuit().unwrap();
        assert_eq!(c2.samples[0].as_ref().unwrap(), circuit.samples[0].as_ref().unwrap());
        assert!(c2.samples[1].is_err());
        assert!(doc.meshes.as_ref().unwrap()[1].is_none());
    }

    #[test]
    fn noise_roundtrip() {
        let grid = FrequencyGrid::linear(0.0, 1.0, 4).unwrap();
        let model = minimal_noise(&scaled_identity(&grid, 1, 0.4).unwrap()).unwrap();
        let back = roundtrip(&NoiseDocument::new(&model)).to_model().unwrap();
        assert_eq!(back.n, model.n);
        assert_eq!(back.per_freq, model.per_freq);
    }

    #[test]
    fn csv_roundtrip() {
        let mut t = CsvTable::new("qlti.test/1", ["omega", "value"]);
        t.push(vec![0.1, 1.0 / 3.0]).unwrap();
        t.push(vec![2.0, -f64::MIN_POSITIVE]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let text = t.to_string();
        assert!(text.starts_with("# qlti.test/1\nomega,value\n1.0000000000000001e-1,"));
        assert_eq!(CsvTable::parse(&text).unwrap(), t);
    }
}
