//! Volume files are a UTF-8 `key=value` header next to a raw little-endian
//! f32 payload:
//!
//! ```text
//! dims=16,16,16
//! spacing=1,1,1
//! dtype=f32le
//! data=sub-000.raw
//! ```
//!
//! `data` is resolved relative to the header's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Region, RoiSpec, Volume3D};
use crate::error::{Error, Result};

fn parse_triple<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::format(
            path,
            format!("{key} needs three values, got {value:?}"),
        ));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::format(path, format!("{key}: cannot parse {p:?}")))?,
        );
    }
    match <[T; 3]>::try_from(out) {
        Ok(a) => Ok(a),
        Err(_) => unreachable!(),
    }
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dims = None;
    let mut spacing = None;
    let mut dtype = None;
    let mut data = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("expected key=value, got {line:?}")))?;
        match key.trim() {
            "dims" => dims = Some(parse_triple::<usize>(path, "dims", value)?),
            "spacing" => spacing = Some(parse_triple::<f64>(path, "spacing", value)?),
            "dtype" => dtype = Some(value.trim().to_string()),
            "data" => data = Some(value.trim().to_string()),
            other => return Err(Error::format(path, format!("unknown header key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::format(path, format!("missing header key {k:?}"));
    let dims = dims.ok_or_else(|| missing("dims"))?;
    let spacing = spacing.ok_or_else(|| missing("spacing"))?;
    let dtype = dtype.ok_or_else(|| missing("dtype"))?;
    let data = data.ok_or_else(|| missing("data"))?;
    if dtype != "f32le" {
        return Err(Error::format(path, format!("unsupported dtype {dtype:?}")));
    }
    let raw_path = path.parent().unwrap_or(Path::new("")).join(&data);
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::format(
            &raw_path,
            "payload length is not a multiple of 4",
        ));
    }
    let voxels: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Volume3D::new(dims, spacing, voxels)
}

/// Writes `path` (header) and a sibling `.raw` payload.
pub fn save_volume(vol: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if vol.is_empty() {
        return Err(Error::InvalidVolume(
            "refusing to write an empty volume".into(),
        ));
    }
    let raw_path = path.with_extension("raw");
    let raw_name = raw_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::format(path, "header path has no file name"))?
        .to_string();
    let [x, y, z] = vol.dims();
    let [sx, sy, sz] = vol.spacing();
    let header =
        format!("dims={x},{y},{z}\nspacing={sx},{sy},{sz}\ndtype=f32le\ndata={raw_name}\n");
    let mut bytes = Vec::with_capacity(vol.len() * 4);
    for v in vol.voxels() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&raw_path, bytes).map_err(|e| Error::io(&raw_path, e))?;
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One row of a cohort manifest: one ROI of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub subject_id: String,
    pub label: u8,
    pub region: Region,
    /// Header path, relative to the manifest's directory when not absolute.
    pub volume_path: PathBuf,
    pub roi_origin: [usize; 3],
    pub roi_size: [usize; 3],
}

impl ManifestRow {
    pub fn roi(&self) -> RoiSpec {
        RoiSpec {
            region: self.region,
            origin: self.roi_origin,
            size: self.roi_size,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawRow {
    subject_id: String,
    label: u8,
    region: String,
    volume_path: String,
    roi_origin: String,
    roi_size: String,
}

fn fmt_triple(t: [usize; 3]) -> String {
    format!("{};{};{}", t[0], t[1], t[2])
}

fn parse_roi_triple(path: &Path, s: &str) -> Result<[usize; 3]> {
    parse_triple::<usize>(path, "roi", &s.replace(';', ","))
}

/// Reads a manifest. Relative volume paths are resolved against the manifest
/// directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for rec in reader.deserialize::<RawRow>() {
        let raw = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if raw.label > 1 {
            return Err(Error::format(
                path,
                format!("label must be 0 or 1, got {}", raw.label),
            ));
        }
        let vp = PathBuf::from(&raw.volume_path);
        rows.push(ManifestRow {
            subject_id: raw.subject_id,
            label: raw.label,
            region: raw.region.parse()?,
            volume_path: if vp.is_absolute() { vp } else { base.join(vp) },
            roi_origin: parse_roi_triple(path, &raw.roi_origin)?,
            roi_size: parse_roi_triple(path, &raw.roi_size)?,
        });
    }
    Ok(rows)
}

/// Writes a manifest; volume paths are written exactly as given.
pub fn save_manifest(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(RawRow {
            subject_id: r.subject_id.clone(),
            label: r.label,
            region: r.region.to_string(),
            volume_path: r.volume_path.to_string_lossy().replace('\\', "/"),
            roi_origin: fmt_triple(r.roi_origin),
            roi_size: fmt_triple(r.roi_size),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn minimal_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("v.hdr");
        fs::write(&hdr, "dims=2,2,2\nspacing=1,1,1\ndtype=f32le\ndata=v.raw\n").unwrap();
        let bytes: Vec<u8> = (0..8).flat_map(|i| (i as f32).to_le_bytes()).collect();
        fs::write(dir.path().join("v.raw"), bytes).unwrap();
        let v = load_volume(&hdr).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v.get(1, 1, 1), 7.0);
    }

    #[test]
    fn short_payload_is_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("v.hdr");
        fs::write(&hdr, "dims=2,2,2\nspacing=1,1,1\ndtype=f32le\ndata=v.raw\n").unwrap();
        let bytes: Vec<u8> = (0..7).flat_map(|i| (i as f32).to_le_bytes()).collect();
        fs::write(dir.path().join("v.raw"), bytes).unwrap();
        let err = load_volume(&hdr).unwrap_err();
        assert!(err.to_string().contains("voxel count mismatch"), "{err}");
    }

    #[test]
    fn rejects_bad_voxels_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("v.hdr");
        fs::write(&hdr, "dims=1,1,2\nspacing=1,1,1\ndtype=f32le\ndata=v.raw\n").unwrap();
        let bytes: Vec<u8> = [1.0f32, -2.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(dir.path().join("v.raw"), bytes).unwrap();
        assert!(matches!(
            load_volume(&hdr),
            Err(Error::InvalidVoxel { index: 1, .. })
        ));

        let bytes: Vec<u8> = [1.0f32, f32::INFINITY]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(dir.path().join("v.raw"), bytes).unwrap();
        assert!(load_volume(&hdr).is_err());

        let err = load_volume(dir.path().join("nope.hdr")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("nope.hdr"));
    }

    #[test]
    fn seeded_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = crate::rng::stream(16, &[]);
        let voxels: Vec<f32> = (0..16 * 16 * 16)
            .map(|_| rng.random_range(0.0..1000.0))
            .collect();
        let vol = Volume3D::new([16, 16, 16], [0.5, 1.0, 1.25], voxels).unwrap();
        let a = dir.path().join("a.hdr");
        let b = dir.path().join("b.hdr");
        save_volume(&vol, &a).unwrap();
        let loaded = load_volume(&a).unwrap();
        assert_eq!(loaded, vol);
        save_volume(&loaded, &b).unwrap();
        assert_eq!(
            fs::read(dir.path().join("a.raw")).unwrap(),
            fs::read(dir.path().join("b.raw")).unwrap()
        );
    }

    #[test]
    fn single_voxel_payload_is_one_le_float() {
        let dir = tempfile::tempdir().unwrap();
        let vol = Volume3D::new([1, 1, 1], [1.0; 3], vec![5.0]).unwrap();
        save_volume(&vol, dir.path().join("one.hdr")).unwrap();
        assert_eq!(
            fs::read(dir.path().join("one.raw")).unwrap(),
            5.0f32.to_le_bytes().to_vec()
        );
    }

    #[test]
    fn unwritable_path_errors() {
        let vol = Volume3D::new([1, 1, 1], [1.0; 3], vec![5.0]).unwrap();
        assert!(save_volume(&vol, "/nonexistent-dir/x/y.hdr").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![ManifestRow {
            subject_id: "sub-000".into(),
            label: 1,
            region: Region::CorpusCallosum,
            volume_path: PathBuf::from("volumes/sub-000.hdr"),
            roi_origin: [8, 0, 0],
            roi_size: [8, 8, 16],
        }];
        let p = dir.path().join("manifest.csv");
        save_manifest(&rows, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("subject_id,label,region,volume_path,roi_origin,roi_size\n"));
        let back = load_manifest(&p).unwrap();
        assert_eq!(back[0].volume_path, dir.path().join("volumes/sub-000.hdr"));
        assert_eq!(back[0].roi_origin, [8, 0, 0]);
        assert_eq!(back[0].region, Region::CorpusCallosum);
    }
}
