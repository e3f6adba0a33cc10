use std::fs;

use patchblend::io::{load_frame, load_sequence, save_frame, save_sequence, ImageFormat};
use patchblend::synthetic::noise_frame;
use patchblend::{Error, FrameSequence};

#[test]
fn ppm_and_png_round_trip_exactly_after_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let frame = noise_frame(13, 5, 1).quantized();
    for format in [ImageFormat::Ppm, ImageFormat::Png] {
        let path = dir.path().join(format!("f.{}", format.extension()));
        save_frame(&frame, &path, format).unwrap();
        assert_eq!(load_frame(&path).unwrap(), frame, "{format:?}");
    }
}

#[test]
fn sequences_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = FrameSequence::new((0..4).map(|s| noise_frame(6, 4, s).quantized()).collect())
        .unwrap();
    for format in [ImageFormat::Ppm, ImageFormat::Png] {
        let sub = dir.path().join(format.extension());
        let pattern = format.default_pattern();
        save_sequence(&seq, &sub, &pattern, format).unwrap();
        assert_eq!(load_sequence(&sub, &pattern).unwrap(), seq);
    }
}

#[test]
fn gaps_and_mismatches_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let seq = FrameSequence::new((0..3).map(|s| noise_frame(4, 4, s)).collect()).unwrap();
    save_sequence(&seq, dir.path(), "f_%03d.ppm", ImageFormat::Ppm).unwrap();
    fs::remove_file(dir.path().join("f_002.ppm")).unwrap();
    match load_sequence(dir.path(), "f_%03d.ppm") {
        Err(Error::Gap { index, .. }) => assert_eq!(index, 2),
        other => panic!("expected a gap, got {other:?}"),
    }
    save_frame(&noise_frame(5, 4, 9), dir.path().join("f_002.ppm"), ImageFormat::Ppm).unwrap();
    let err = load_sequence(dir.path(), "f_%03d.ppm").unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_sequence(empty.path(), "f_%03d.ppm"),
        Err(Error::EmptySequence { .. })
    ));
}

#[test]
fn malformed_images_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ppm");
    fs::write(&path, b"P6\n4 4\n65535\n").unwrap();
    let err = load_frame(&path).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
    let missing = load_frame(dir.path().join("nope.ppm")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
}
