//! JSON file formats. Matrices are stored as
//! `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major order;
//! floats are written in shortest round-trip form, so parsing a written
//! file reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_row_major, ComplexMatrix};
use crate::pencil::StructuredPerturbation;
use crate::systems::{descriptor_to_ph, ph_to_descriptor, DescriptorSystem, PHSystem};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Format(format!(
                "matrix declares {}x{} but holds {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        let entries: Vec<Complex64> = j.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        from_row_major(j.rows, j.cols, &entries)
    }
}

fn mat(j: &MatrixJson) -> Result<ComplexMatrix> {
    ComplexMatrix::try_from(j)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub e: MatrixJson,
    pub a: MatrixJson,
    pub b: MatrixJson,
    pub c: MatrixJson,
    pub d: MatrixJson,
}

impl From<&DescriptorSystem> for DescriptorJson {
    fn from(s: &DescriptorSystem) -> Self {
        Self {
            e: (&s.e).into(),
            a: (&s.a).into(),
            b: (&s.b).into(),
            c: (&s.c).into(),
            d: (&s.d).into(),
        }
    }
}

impl DescriptorJson {
    pub fn to_system(&self) -> Result<DescriptorSystem> {
        DescriptorSystem::new(
            mat(&self.e)?,
            mat(&self.a)?,
            mat(&self.b)?,
            mat(&self.c)?,
            mat(&self.d)?,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhJson {
    #[serde(rename = "E")]
    pub e: MatrixJson,
    #[serde(rename = "J")]
    pub j: MatrixJson,
    #[serde(rename = "R")]
    pub r: MatrixJson,
    #[serde(rename = "G")]
    pub g: MatrixJson,
    #[serde(rename = "P")]
    pub p: MatrixJson,
    #[serde(rename = "S")]
    pub s: MatrixJson,
    #[serde(rename = "N")]
    pub n: MatrixJson,
}

impl From<&PHSystem> for PhJson {
    fn from(p: &PHSystem) -> Self {
        Self {
            e: (&p.e).into(),
            j: (&p.j).into(),
            r: (&p.r).into(),
            g: (&p.g).into(),
            p: (&p.p).into(),
            s: (&p.s).into(),
            n: (&p.n).into(),
        }
    }
}

impl PhJson {
    pub fn to_system(&self) -> Result<PHSystem> {
        PHSystem::new(
            mat(&self.e)?,
            mat(&self.j)?,
            mat(&self.r)?,
            mat(&self.g)?,
            mat(&self.p)?,
            mat(&self.s)?,
            mat(&self.n)?,
        )
    }
}

/// A system file carries the pH form, the descriptor form, or both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ph: Option<PhJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<DescriptorJson>,
}

impl SystemFile {
    pub fn from_ph(ph: &PHSystem, seed: Option<u64>) -> Self {
        let sys = ph_to_descriptor(ph);
        Self {
            format_version: FORMAT_VERSION,
            n: ph.order(),
            m: ph.ports(),
            seed,
            ph: Some(ph.into()),
            descriptor: Some((&sys).into()),
        }
    }

    pub fn from_descriptor(sys: &DescriptorSystem, seed: Option<u64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: sys.order(),
            m: sys.ports(),
            seed,
            ph: None,
            descriptor: Some(sys.into()),
        }
    }

    /// The descriptor form; derived from the pH form when only that is stored.
    pub fn descriptor(&self) -> Result<DescriptorSystem> {
        let sys = match (&self.descriptor, &self.ph) {
            (Some(d), _) => d.to_system()?,
            (None, Some(p)) => ph_to_descriptor(&p.to_system()?),
            (None, None) => return Err(Error::Format("system file holds neither form".into())),
        };
        self.check_dims(sys.order(), sys.ports())?;
        Ok(sys)
    }

    pub fn ph(&self) -> Result<PHSystem> {
        let ph = match (&self.ph, &self.descriptor) {
            (Some(p), _) => p.to_system()?,
            (None, Some(d)) => descriptor_to_ph(&d.to_system()?),
            (None, None) => return Err(Error::Format("system file holds neither form".into())),
        };
        self.check_dims(ph.order(), ph.ports())?;
        Ok(ph)
    }

    fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if (n, m) != (self.n, self.m) {
            return Err(Error::Format(format!(
                "header says n={}, m={} but matrices give n={n}, m={m}",
                self.n, self.m
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFile {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub de11: MatrixJson,
    pub de12: MatrixJson,
    pub de22: MatrixJson,
    pub da11: MatrixJson,
    pub da12: MatrixJson,
    pub da22: MatrixJson,
    pub da13: MatrixJson,
    pub da23: MatrixJson,
    pub da33: MatrixJson,
}

impl PerturbationFile {
    pub fn new(p: &StructuredPerturbation, seed: Option<u64>, delta: Option<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: p.n(),
            m: p.m(),
            seed,
            delta,
            de11: (&p.de11).into(),
            de12: (&p.de12).into(),
            de22: (&p.de22).into(),
            da11: (&p.da11).into(),
            da12: (&p.da12).into(),
            da22: (&p.da22).into(),
            da13: (&p.da13).into(),
            da23: (&p.da23).into(),
            da33: (&p.da33).into(),
        }
    }

    pub fn perturbation(&self) -> Result<StructuredPerturbation> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let p = StructuredPerturbation {
            de11: mat(&self.de11)?,
            de12: mat(&self.de12)?,
            de22: mat(&self.de22)?,
            da11: mat(&self.da11)?,
            da12: mat(&self.da12)?,
            da22: mat(&self.da22)?,
            da13: mat(&self.da13)?,
            da23: mat(&self.da23)?,
            da33: mat(&self.da33)?,
        };
        if (p.n(), p.m()) != (self.n, self.m) {
            return Err(Error::Format("perturbation header does not match its blocks".into()));
        }
        crate::pencil::assemble_perturbation(&p)?;
        Ok(p)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_system(path: &Path) -> Result<SystemFile> {
    read_json(path)
}

/// `[re, im]` pair for reports.
pub fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}
