use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

pub const MAX_DIM: u32 = 5;
pub const MAGIC: &[u8; 8] = b"MAXLAT01";
const LAYOUT_ROW_MAJOR: u8 = 0;
const ELEMENT_C64_PAIR: u8 = 0;
const HEADER_LEN: usize = 8 + 4 + 8 + 1 + 1 + 2 + 8;

/// A complex function on `(Z/MZ)^d`, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    d: u32,
    m: u64,
    values: Vec<Complex64>,
    norm: f64,
}

fn l2_norm(values: &[Complex64]) -> f64 {
    let mut s = NeumaierSum::new();
    for v in values {
        s.add(v.norm_sqr());
    }
    s.value().sqrt()
}

fn cells(d: u32, m: u64) -> Result<usize> {
    if d == 0 || d > MAX_DIM || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid functions need 1 <= d <= {MAX_DIM} and M >= 1, got d={d}, M={m}"
        )));
    }
    m.checked_pow(d)
        .filter(|&n| n <= 1 << 28)
        .map(|n| n as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("M^d = {m}^{d} is too large")))
}

impl GridFunction {
    pub fn new(d: u32, m: u64, values: Vec<Complex64>) -> Result<Self> {
        let n = cells(d, m)?;
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} values, got {}",
                values.len()
            )));
        }
        let norm = l2_norm(&values);
        Ok(Self { d, m, values, norm })
    }

    pub fn zeros(d: u32, m: u64) -> Result<Self> {
        Self::new(d, m, vec![Complex64::new(0.0, 0.0); cells(d, m)?])
    }

    pub fn from_fn(d: u32, m: u64, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self> {
        let n = cells(d, m)?;
        let mut x = vec![0i64; d as usize];
        let values = (0..n)
            .map(|i| {
                unravel(i, d, m, &mut x);
                f(&x)
            })
            .collect();
        Self::new(d, m, values)
    }

    pub fn from_real(d: u32, m: u64, mut f: impl FnMut(&[i64]) -> f64) -> Result<Self> {
        Self::from_fn(d, m, |x| Complex64::new(f(x), 0.0))
    }

    /// The unit mass at the origin.
    pub fn delta(d: u32, m: u64) -> Result<Self> {
        Self::from_real(d, m, |x| if x.iter().all(|&v| v == 0) { 1.0 } else { 0.0 })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn period(&self) -> u64 {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn recompute_norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn sum(&self) -> Complex64 {
        let (mut re, mut im) = (NeumaierSum::new(), NeumaierSum::new());
        for v in &self.values {
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Linear index of `x`, coordinates taken mod `M`.
    pub fn index(&self, x: &[i64]) -> usize {
        let m = self.m as i64;
        x.iter()
            .fold(0usize, |acc, &v| acc * self.m as usize + v.rem_euclid(m) as usize)
    }

    pub fn get(&self, x: &[i64]) -> Complex64 {
        self.values[self.index(x)]
    }

    /// Coordinates of entry `i` in `[-M/2, M/2)`.
    pub fn coords(&self, i: usize) -> Vec<i64> {
        let mut x = vec![0; self.d as usize];
        unravel(i, self.d, self.m, &mut x);
        x
    }

    /// Largest per-axis extent of the support, measured cyclically.
    pub fn support_diameter(&self) -> u64 {
        let m = self.m as usize;
        let mut widest = 0;
        for axis in 0..self.d as usize {
            let stride = m.pow(self.d - 1 - axis as u32);
            let mut occupied = vec![false; m];
            for (i, v) in self.values.iter().enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    occupied[i / stride % m] = true;
                }
            }
            if !occupied.iter().any(|&o| o) {
                continue;
            }
            // Longest cyclic run of empty residues.
            let mut gap = 0;
            let mut run = 0;
            for k in 0..2 * m {
                if occupied[k % m] {
                    run = 0;
                } else {
                    run += 1;
                    gap = gap.max(run.min(m));
                }
            }
            widest = widest.max((m - gap - 1) as u64);
        }
        widest
    }

    fn header(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..8].copy_from_slice(MAGIC);
        h[8..12].copy_from_slice(&self.d.to_le_bytes());
        h[12..20].copy_from_slice(&self.m.to_le_bytes());
        h[20] = LAYOUT_ROW_MAJOR;
        h[21] = ELEMENT_C64_PAIR;
        h[24..32].copy_from_slice(&(self.values.len() as u64).to_le_bytes());
        h
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.header())?;
        w.write_all(&self.payload())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h)
            .map_err(|e| Error::Format(format!("short header: {e}")))?;
        if &h[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let d = u32::from_le_bytes(h[8..12].try_into().expect("4 bytes"));
        let m = u64::from_le_bytes(h[12..20].try_into().expect("8 bytes"));
        if h[20] != LAYOUT_ROW_MAJOR || h[21] != ELEMENT_C64_PAIR || h[22..24] != [0, 0] {
            return Err(Error::Format("unsupported layout or element type".into()));
        }
        let count = u64::from_le_bytes(h[24..32].try_into().expect("8 bytes"));
        let want = cells(d, m).map_err(|e| Error::Format(e.to_string()))?;
        if count != want as u64 {
            return Err(Error::Format(format!("header count {count} does not match {m}^{d}")));
        }
        let mut bytes = vec![0u8; want * 16];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("short payload: {e}")))?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::new(d, m, values)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            d: self.d,
            period: self.m,
            layout: "row-major".into(),
            element: "complex-f64-le".into(),
            count: self.values.len() as u64,
            l2_norm: self.norm,
            payload_sha256: hex::encode(Sha256::digest(self.payload())),
        }
    }

    /// Writes the container to `path` and its metadata to `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        fs::write(
            sidecar_path(path),
            crate::canonical::to_canonical_string(&self.sidecar())?,
        )?;
        Ok(())
    }

    /// Reads a container, checking it against its sidecar when one exists.
    pub fn load(path: &Path) -> Result<Self> {
        let f = Self::read_from(fs::File::open(path)?)?;
        let side = sidecar_path(path);
        if side.exists() {
            let meta: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
            let have = f.sidecar();
            if meta.d != have.d || meta.period != have.period || meta.payload_sha256 != have.payload_sha256 {
                return Err(Error::Format("sidecar does not match the container".into()));
            }
        }
        Ok(f)
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self::new(self.d, self.m, values).expect("same shape")
    }
}

fn unravel(mut i: usize, d: u32, m: u64, x: &mut [i64]) {
    let m = m as usize;
    for axis in (0..d as usize).rev() {
        let k = (i % m) as i64;
        x[axis] = if 2 * k >= m as i64 { k - m as i64 } else { k };
        i /= m;
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// JSON metadata stored beside a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub d: u32,
    #[serde(rename = "M")]
    pub period: u64,
    pub layout: String,
    pub element: String,
    pub count: u64,
    pub l2_norm: f64,
    pub payload_sha256: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_and_norms() {
        let f = GridFunction::from_real(2, 5, |x| (x[0] * 10 + x[1]) as f64).unwrap();
        assert_eq!(f.get(&[1, -2]).re, 8.0);
        assert_eq!(f.get(&[6, 3]).re, 8.0);
        assert_eq!(f.coords(f.index(&[-1, 2])), vec![-1, 2]);
        let direct: f64 = f.values().iter().map(|v| v.re * v.re).sum::<f64>().sqrt();
        assert!((f.norm() - direct).abs() <= 1e-12 * direct);
        assert_eq!(f.norm(), f.recompute_norm());
        assert!(GridFunction::zeros(6, 2).is_err());
        assert!(GridFunction::new(1, 4, vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn support_diameter_is_cyclic() {
        let d = GridFunction::delta(2, 16).unwrap();
        assert_eq!(d.support_diameter(), 0);
        let f = GridFunction::from_real(1, 16, |x| if (-2..=3).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(f.support_diameter(), 5);
        assert_eq!(GridFunction::zeros(1, 8).unwrap().support_diameter(), 0);
        let full = GridFunction::from_real(1, 8, |_| 1.0).unwrap();
        assert_eq!(full.support_diameter(), 7);
    }

    #[test]
    fn container_round_trip() {
        let f = GridFunction::from_fn(3, 4, |x| Complex64::new(x[0] as f64, (x[1] * x[2]) as f64 * 0.5)).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(buf.len(), HEADER_LEN + 64 * 16);
        assert_eq!(GridFunction::read_from(&buf[..]).unwrap(), f);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(GridFunction::read_from(&bad[..]), Err(Error::Format(_))));
        assert!(GridFunction::read_from(&buf[..buf.len() - 1]).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        f.save(&path).unwrap();
        assert_eq!(GridFunction::load(&path).unwrap(), f);
        let meta: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta.count, 64);
    }
}
