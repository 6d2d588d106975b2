use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::atomic_write;
use crate::dynamics::Trajectory;
use crate::ensemble::{EmpiricalMeasure, Provenance};
use crate::error::{Error, Result};
use crate::nudging::ObservationStream;
use crate::spectral::{FieldFlags, SpectralVectorField, TorusGrid};

pub const MAGIC: &[u8; 8] = b"NSE2DSNP";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

pub const FLAG_DIV_FREE: u32 = 1;
pub const FLAG_MEAN_ZERO: u32 = 2;

/// Payload layout of a container.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContainerKind {
    Fields = 0,
    Trajectory = 1,
    Ensemble = 2,
    Observations = 3,
}

impl ContainerKind {
    fn from_code(c: u16) -> Result<Self> {
        Ok(match c {
            0 => Self::Fields,
            1 => Self::Trajectory,
            2 => Self::Ensemble,
            3 => Self::Observations,
            _ => return Err(Error::Format(format!("unknown container kind {c}"))),
        })
    }
}

/// Fixed 64-byte little-endian header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n_modes: u32,
    pub period_l: f64,
    /// Time of the first sample.
    pub time: f64,
    /// Fields per atom (samples of a trajectory, or 1).
    pub field_count: u32,
    /// AND of the flags of all stored fields.
    pub flags: u32,
    /// Sample spacing; 0 for plain field lists.
    pub dt_sample: f64,
    pub atom_count: u32,
    pub kind: ContainerKind,
    /// Provenance code of an ensemble (see docs/formats.md); 0 otherwise.
    pub provenance: u16,
    /// Accumulated shift of a shifted ensemble; 0 otherwise.
    pub shift: f64,
}

impl SnapshotHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&self.version.to_le_bytes());
        b[12..16].copy_from_slice(&self.n_modes.to_le_bytes());
        b[16..24].copy_from_slice(&self.period_l.to_le_bytes());
        b[24..32].copy_from_slice(&self.time.to_le_bytes());
        b[32..36].copy_from_slice(&self.field_count.to_le_bytes());
        b[36..40].copy_from_slice(&self.flags.to_le_bytes());
        b[40..48].copy_from_slice(&self.dt_sample.to_le_bytes());
        b[48..52].copy_from_slice(&self.atom_count.to_le_bytes());
        b[52..54].copy_from_slice(&(self.kind as u16).to_le_bytes());
        b[54..56].copy_from_slice(&self.provenance.to_le_bytes());
        b[56..64].copy_from_slice(&self.shift.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN {
            return Err(Error::Format(format!("truncated header ({} bytes)", b.len())));
        }
        if &b[0..8] != MAGIC {
            return Err(Error::Format("bad magic: not a snapshot container".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().expect("4 bytes"));
        let u16_at = |i: usize| u16::from_le_bytes(b[i..i + 2].try_into().expect("2 bytes"));
        let f64_at = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().expect("8 bytes"));
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(Self {
            version,
            n_modes: u32_at(12),
            period_l: f64_at(16),
            time: f64_at(24),
            field_count: u32_at(32),
            flags: u32_at(36),
            dt_sample: f64_at(40),
            atom_count: u32_at(48),
            kind: ContainerKind::from_code(u16_at(52))?,
            provenance: u16_at(54),
            shift: f64_at(56),
        })
    }

    /// Payload bytes implied by the header.
    pub fn payload_len(&self) -> usize {
        let n = self.n_modes as usize;
        self.atom_count as usize * self.field_count as usize * 2 * n * n * 16
    }
}

fn flag_bits(f: FieldFlags) -> u32 {
    (if f.div_free { FLAG_DIV_FREE } else { 0 }) | (if f.mean_zero { FLAG_MEAN_ZERO } else { 0 })
}

fn provenance_code(p: Provenance) -> (u16, f64) {
    match p {
        Provenance::InitialSample => (0, 0.0),
        Provenance::PushforwardS => (1, 0.0),
        Provenance::PushforwardWj => (2, 0.0),
        Provenance::Observed => (3, 0.0),
        Provenance::Shifted(s) => (4, s),
    }
}

fn provenance_from(code: u16, shift: f64) -> Result<Provenance> {
    Ok(match code {
        0 => Provenance::InitialSample,
        1 => Provenance::PushforwardS,
        2 => Provenance::PushforwardWj,
        3 => Provenance::Observed,
        4 => Provenance::Shifted(shift),
        _ => return Err(Error::Format(format!("unknown provenance code {code}"))),
    })
}

fn encode<'a>(
    path: &Path,
    mut header: SnapshotHeader,
    fields: impl Iterator<Item = &'a SpectralVectorField> + Clone,
) -> Result<()> {
    let mut flags = FLAG_DIV_FREE | FLAG_MEAN_ZERO;
    for f in fields.clone() {
        flags &= flag_bits(f.flags());
    }
    header.flags = flags;
    let mut buf = Vec::with_capacity(HEADER_LEN + header.payload_len());
    buf.extend_from_slice(&header.to_bytes());
    for f in fields {
        for i in 0..2 {
            for z in f.coeffs(i) {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    atomic_write(path, |w| w.write_all(&buf))
}

/// Reads a container: header plus the atom-major list of fields.
pub fn read_container(path: &Path, grid: Option<&TorusGrid>) -> Result<(SnapshotHeader, Vec<SpectralVectorField>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let h = SnapshotHeader::from_bytes(&bytes)?;
    let grid = match grid {
        Some(g) => {
            if g.n_modes() != h.n_modes as usize || g.period().to_bits() != h.period_l.to_bits() {
                return Err(Error::GridMismatch(format!(
                    "file has N = {}, L = {}; expected N = {}, L = {}",
                    h.n_modes,
                    h.period_l,
                    g.n_modes(),
                    g.period()
                )));
            }
            g.clone()
        }
        None => TorusGrid::new(h.n_modes as usize, h.period_l)?,
    };
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != h.payload_len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            h.payload_len()
        )));
    }
    let len = grid.len();
    let flags = FieldFlags {
        div_free: h.flags & FLAG_DIV_FREE != 0,
        mean_zero: h.flags & FLAG_MEAN_ZERO != 0,
    };
    let total = h.atom_count as usize * h.field_count as usize;
    let mut fields = Vec::with_capacity(total);
    let mut chunks = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for k in 0..total {
        let mut comp = || -> Vec<Complex64> {
            (0..len)
                .map(|_| {
                    let re = chunks.next().expect("sized payload");
                    let im = chunks.next().expect("sized payload");
                    Complex64::new(re, im)
                })
                .collect()
        };
        let c = [comp(), comp()];
        check_coefficients(&grid, &c).map_err(|m| Error::Format(format!("field {k}: {m}")))?;
        fields.push(SpectralVectorField::from_raw(&grid, c, flags));
    }
    Ok((h, fields))
}

fn check_coefficients(g: &TorusGrid, c: &[Vec<Complex64>; 2]) -> std::result::Result<(), String> {
    for comp in c {
        if comp[0] != Complex64::default() {
            return Err("nonzero mean coefficient".into());
        }
        for p in 0..g.len() {
            let z = comp[p];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(format!("non-finite coefficient at index {p}"));
            }
            if g.is_nyquist(p) && z != Complex64::default() {
                return Err(format!("nonzero Nyquist coefficient at index {p}"));
            }
            if comp[g.mirror(p)] != z.conj() {
                return Err(format!("coefficients at index {p} are not Hermitian-symmetric"));
            }
        }
    }
    Ok(())
}

fn header(
    grid: &TorusGrid,
    kind: ContainerKind,
    time: f64,
    field_count: usize,
    atom_count: usize,
    dt: f64,
) -> SnapshotHeader {
    SnapshotHeader {
        version: FORMAT_VERSION,
        n_modes: grid.n_modes() as u32,
        period_l: grid.period(),
        time,
        field_count: field_count as u32,
        flags: 0,
        dt_sample: dt,
        atom_count: atom_count as u32,
        kind,
        provenance: 0,
        shift: 0.0,
    }
}

fn expect_kind(h: &SnapshotHeader, kind: ContainerKind) -> Result<()> {
    if h.kind != kind {
        return Err(Error::Format(format!(
            "container holds {:?}, expected {kind:?}",
            h.kind
        )));
    }
    Ok(())
}

/// Writes a list of fields (one atom of `fields.len()` fields) at `time`.
pub fn write_fields(path: &Path, fields: &[SpectralVectorField], time: f64) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to write".into()))?;
    for f in fields {
        first.grid().check_same(f.grid())?;
    }
    let h = header(first.grid(), ContainerKind::Fields, time, fields.len(), 1, 0.0);
    encode(path, h, fields.iter())
}

pub fn read_fields(path: &Path, grid: Option<&TorusGrid>) -> Result<(Vec<SpectralVectorField>, f64)> {
    let (h, f) = read_container(path, grid)?;
    expect_kind(&h, ContainerKind::Fields)?;
    Ok((f, h.time))
}

pub fn write_snapshot(path: &Path, field: &SpectralVectorField, time: f64) -> Result<()> {
    write_fields(path, std::slice::from_ref(field), time)
}

/// A single-field container; returns the field and its time.
pub fn read_snapshot(path: &Path, grid: Option<&TorusGrid>) -> Result<(SpectralVectorField, f64)> {
    let (mut f, t) = read_fields(path, grid)?;
    if f.len() != 1 {
        return Err(Error::Format(format!("expected one field, found {}", f.len())));
    }
    Ok((f.pop().expect("one field"), t))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let h = header(
        traj.grid(),
        ContainerKind::Trajectory,
        traj.t0(),
        traj.len(),
        1,
        traj.dt_sample(),
    );
    encode(path, h, traj.states().iter())
}

pub fn read_trajectory(path: &Path, grid: Option<&TorusGrid>) -> Result<Trajectory> {
    let (h, f) = read_container(path, grid)?;
    expect_kind(&h, ContainerKind::Trajectory)?;
    let g = f
        .first()
        .ok_or_else(|| Error::Format("empty trajectory".into()))?
        .grid()
        .clone();
    Trajectory::new(&g, h.time, h.dt_sample, f)
}

pub fn write_ensemble(path: &Path, mu: &EmpiricalMeasure) -> Result<()> {
    let mut h = header(
        mu.grid(),
        ContainerKind::Ensemble,
        mu.t0(),
        mu.n_samples(),
        mu.n_atoms(),
        mu.dt_sample(),
    );
    (h.provenance, h.shift) = provenance_code(mu.provenance());
    encode(path, h, mu.atoms().iter().flat_map(|a| a.states().iter()))
}

pub fn read_ensemble(path: &Path, grid: Option<&TorusGrid>) -> Result<EmpiricalMeasure> {
    let (h, f) = read_container(path, grid)?;
    expect_kind(&h, ContainerKind::Ensemble)?;
    let g = f
        .first()
        .ok_or_else(|| Error::Format("empty ensemble".into()))?
        .grid()
        .clone();
    let per = h.field_count as usize;
    let atoms = f
        .chunks(per)
        .map(|c| Trajectory::new(&g, h.time, h.dt_sample, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms, provenance_from(h.provenance, h.shift)?)
}

/// Observation samples (noise metadata is not stored).
pub fn write_observations(path: &Path, v: &ObservationStream) -> Result<()> {
    let h = header(v.grid(), ContainerKind::Observations, v.t0(), v.len(), 1, v.dt_sample());
    encode(path, h, v.values().iter())
}

pub fn read_observations(path: &Path, grid: Option<&TorusGrid>) -> Result<ObservationStream> {
    let (h, f) = read_container(path, grid)?;
    expect_kind(&h, ContainerKind::Observations)?;
    let g = f
        .first()
        .ok_or_else(|| Error::Format("empty stream".into()))?
        .grid()
        .clone();
    ObservationStream::new(&g, h.time, h.dt_sample, f, None)
}
