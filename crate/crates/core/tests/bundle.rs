use evoscat::bundle::{assemble_bundle, build_bundle, encode_bundle, load_bundle, read_header, BundleOptions, MAGIC};
use evoscat::synth::{self, RandomDatasetParams};
use evoscat::Error;

fn sample() -> Vec<u8> {
    let d = synth::random_dataset(
        12,
        &RandomDatasetParams {
            artifacts: 40,
            ..Default::default()
        },
    );
    let opts = BundleOptions {
        criteria: ["first", "similarity", "m_delta,-age"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect(),
        ..Default::default()
    };
    build_bundle(&d, &opts).unwrap()
}

#[test]
fn every_truncation_is_detected() {
    let bytes = sample();
    for len in 0..bytes.len() {
        assert!(load_bundle(&bytes[..len]).is_err(), "prefix of {len} bytes accepted");
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(load_bundle(&longer).is_err());
}

#[test]
fn header_is_readable_alone() {
    let bytes = sample();
    let (header, payload) = read_header(&bytes).unwrap();
    assert_eq!(&bytes[..8], MAGIC);
    assert_eq!(header.artifact_count, 40);
    assert_eq!(payload.len() as u64, header.payload.compressed_len);
    assert_eq!(
        header.criteria.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(),
        ["path", "first", "similarity", "m_delta,-age"]
    );
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let json: serde_json::Value = serde_json::from_slice(&bytes[12..12 + header_len]).unwrap();
    assert_eq!(json["format_version"], 1);
    assert_eq!(json["checksum"].as_str().unwrap().len(), 64);
}

#[test]
fn newer_format_versions_are_refused() {
    let bytes = sample();
    let mut newer = bytes.clone();
    newer[7] = b'2';
    assert!(matches!(
        load_bundle(&newer),
        Err(Error::VersionMismatch { found: 2, expected: 1 })
    ));

    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let text = std::str::from_utf8(&bytes[12..12 + header_len]).unwrap();
    let bumped = text.replacen("\"format_version\":1", "\"format_version\":9", 1);
    assert_ne!(bumped, text);
    let mut out = bytes[..12].to_vec();
    out.extend_from_slice(bumped.as_bytes());
    out.extend_from_slice(&bytes[12 + header_len..]);
    assert!(matches!(
        load_bundle(&out),
        Err(Error::VersionMismatch { found: 9, .. })
    ));
}

#[test]
fn encoding_is_deterministic() {
    let d = synth::random_dataset(13, &RandomDatasetParams::default());
    let opts = BundleOptions {
        criteria: vec!["similarity".parse().unwrap()],
        ..Default::default()
    };
    let mut a = assemble_bundle(&d, &opts).unwrap();
    let mut b = assemble_bundle(&d, &opts).unwrap();
    assert_eq!(encode_bundle(&mut a).unwrap(), encode_bundle(&mut b).unwrap());
}
