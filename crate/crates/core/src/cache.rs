//! On-disk cache for coupling matrices.
//!
//! Each entry is `<key>.bin` holding `A` then `B` as little-endian `f64`
//! pairs (re, im) in row-major order, plus `<key>.json` with the metadata.
//! The key is the SHA-256 of the canonical JSON of everything the matrices
//! depend on.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{CouplingMatrices, CouplingMeta, CouplingSpec, HermitianMatrix};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, TargetRegion, Vec3};

const FORMAT: &str = "phasebeam-coupling-cache/1";

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: &'a str,
    positions: &'a [Vec3],
    wavelength: f64,
    region: TargetRegion,
    spec: CouplingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub format: String,
    pub key: String,
    pub dim: usize,
    pub region: TargetRegion,
    pub wavelength: f64,
    pub meta: CouplingMeta,
}

pub fn cache_key(geometry: &ArrayGeometry, region: &TargetRegion, spec: &CouplingSpec) -> String {
    let material = KeyMaterial {
        format: FORMAT,
        positions: geometry.positions(),
        wavelength: geometry.wavelength(),
        region: *region,
        spec: *spec,
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone)]
pub struct CouplingCache {
    dir: PathBuf,
}

impl CouplingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.bin")), self.dir.join(format!("{key}.json")))
    }

    /// Cached matrices, or `None` on a miss. A sidecar that disagrees with
    /// the request counts as a miss.
    pub fn load(&self, geometry: &ArrayGeometry, region: &TargetRegion, spec: &CouplingSpec) -> Result<Option<CouplingMatrices>> {
        let key = cache_key(geometry, region, spec);
        let (bin, json) = self.paths(&key);
        if !bin.exists() || !json.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let sidecar: CacheSidecar = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", json.display())))?;
        let n = geometry.len();
        if sidecar.format != FORMAT || sidecar.key != key || sidecar.dim != n {
            log::warn!("ignoring stale cache entry {}", json.display());
            return Ok(None);
        }
        let mut raw = Vec::new();
        fs::File::open(&bin)
            .and_then(|mut f| f.read_to_end(&mut raw))
            .map_err(|e| Error::io(&bin, e))?;
        if raw.len() != 2 * n * n * 16 {
            return Err(Error::Parse(format!("{}: expected {} bytes, found {}", bin.display(), 2 * n * n * 16, raw.len())));
        }
        let (a_bytes, b_bytes) = raw.split_at(n * n * 16);
        Ok(Some(CouplingMatrices {
            a: decode(n, a_bytes),
            b: decode(n, b_bytes),
            meta: sidecar.meta,
        }))
    }

    pub fn store(&self, geometry: &ArrayGeometry, region: &TargetRegion, matrices: &CouplingMatrices) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let key = cache_key(geometry, region, &matrices.meta.spec);
        let (bin, json) = self.paths(&key);
        let write_bin = || -> std::io::Result<()> {
            let mut out = BufWriter::new(fs::File::create(&bin)?);
            encode(&matrices.a, &mut out)?;
            encode(&matrices.b, &mut out)?;
            out.flush()
        };
        write_bin().map_err(|e| Error::io(&bin, e))?;
        let sidecar = CacheSidecar {
            format: FORMAT.into(),
            key,
            dim: matrices.dim(),
            region: *region,
            wavelength: geometry.wavelength(),
            meta: matrices.meta.clone(),
        };
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        Ok(bin)
    }

    /// Load on hit, otherwise build and store.
    pub fn get_or_build(&self, geometry: &ArrayGeometry, region: &TargetRegion, spec: &CouplingSpec) -> Result<CouplingMatrices> {
        if let Some(m) = self.load(geometry, region, spec)? {
            return Ok(m);
        }
        let m = CouplingMatrices::build(geometry, region, spec)?;
        self.store(geometry, region, &m)?;
        Ok(m)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn encode<W: Write>(m: &HermitianMatrix, out: &mut W) -> std::io::Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn decode(n: usize, bytes: &[u8]) -> HermitianMatrix {
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8-byte slice"));
    HermitianMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    })
}
