mod common;

use brirsim::hrtf_io::*;
use brirsim_core::hrtf::HrtfSet;
use common::*;

fn minimal() -> HrtfSet {
    let data = (0..16).map(|i| i as f64 / 16.0).collect();
    HrtfSet::new(48_000, 8, vec![[0.0, 0.0, 1.0]], data, Default::default()).unwrap()
}

#[test]
fn minimal_container_layout() {
    let set = minimal();
    let bytes = to_bytes(&set);
    assert_eq!(&bytes[..8], b"HRTFSET1");
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header: serde_json::Value = serde_json::from_slice(&bytes[12..12 + h]).unwrap();
    assert_eq!(header["fs"], 48_000);
    assert_eq!(header["num_directions"], 1);
    assert_eq!(header["ir_length"], 8);
    assert_eq!(header["channels"], 2);
    assert_eq!(header["positions"][0][2], 1.0);
    assert_eq!(bytes.len(), 12 + h + 16 * 4 + 4);
    let data = &bytes[12 + h..12 + h + 64];
    // left then right of the one direction
    assert_eq!(f32::from_le_bytes(data[4 * 9..4 * 10].try_into().unwrap()), 9.0 / 16.0);
    let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    assert_eq!(crc, crc32fast::hash(data));
    let back = from_bytes(&bytes).unwrap();
    assert_eq!(back, set);
    assert_eq!(back.len(), 1);
}

#[test]
fn round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let set = synthetic_hrtf(30, 24, 44_100, 1).with_metadata("subject", "synthetic");
    write_hrtf(dir.path(), "a.hrtf", &set);
    let back = load_hrtf(dir.path().join("a.hrtf")).unwrap();
    assert_eq!(back, set);
    assert_eq!(to_bytes(&back), to_bytes(&set));
}

#[test]
fn truncated_data_is_rejected() {
    let bytes = to_bytes(&minimal());
    let err = from_bytes(&bytes[..bytes.len() - 10]).unwrap_err();
    assert!(err.to_string().starts_with("data block shorter than M·2·N"), "{err}");
}

#[test]
fn corrupt_files_are_rejected() {
    let mut bytes = to_bytes(&minimal());
    assert!(matches!(from_bytes(b"HRTFSET2xxxx"), Err(ContainerError::BadMagic)));
    assert!(matches!(from_bytes(&bytes[..10]), Err(ContainerError::TruncatedHeader)));
    let n = bytes.len();
    bytes[n - 8] ^= 0x40;
    assert!(matches!(from_bytes(&bytes), Err(ContainerError::Checksum { .. })));
    let mut extra = to_bytes(&minimal());
    extra.push(0);
    assert!(matches!(from_bytes(&extra), Err(ContainerError::Trailing(1))));
}

fn container(header: &str, samples: usize) -> Vec<u8> {
    let data = vec![0u8; samples * 4];
    let mut out = b"HRTFSET1".to_vec();
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&data);
    out.extend_from_slice(&crc32fast::hash(&data).to_le_bytes());
    out
}

#[test]
fn header_is_checked() {
    let ok = container(r#"{"fs":48000,"num_directions":1,"ir_length":2,"channels":2,"positions":[[0,0,1]]}"#, 4);
    assert!(from_bytes(&ok).is_ok());
    let mono = container(r#"{"fs":48000,"num_directions":1,"ir_length":2,"channels":1,"positions":[[0,0,1]]}"#, 4);
    assert!(matches!(from_bytes(&mono), Err(ContainerError::Channels(1))));
    let count = container(r#"{"fs":48000,"num_directions":2,"ir_length":2,"channels":2,"positions":[[0,0,1]]}"#, 8);
    assert!(matches!(from_bytes(&count), Err(ContainerError::PositionCount { .. })));
    let missing = container(r#"{"fs":48000,"num_directions":1,"channels":2,"positions":[[0,0,1]]}"#, 4);
    assert!(matches!(from_bytes(&missing), Err(ContainerError::Header(_))));
    let elevation = container(r#"{"fs":48000,"num_directions":1,"ir_length":2,"channels":2,"positions":[[0,95,1]]}"#, 4);
    assert!(matches!(from_bytes(&elevation), Err(ContainerError::Invalid(_))));
}
