use std::path::PathBuf;

use coordfit::numerics::RngStream;
use coordfit::tasks::{test_image_rgb, AudioSignal, ImageSignal};
use coordfit_cli::codec::{decode_pnm, decode_wav, encode_pnm, encode_wav, read_audio, read_image, write_audio, write_image};
use coordfit_cli::CliError;

fn corpus() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn malformed_corpus_is_rejected_with_parse_errors() {
    let files = corpus();
    assert_eq!(files.len(), 10);
    for f in files {
        let bytes = std::fs::read(&f).unwrap();
        let outcome = std::panic::catch_unwind(|| {
            if f.extension().is_some_and(|e| e == "wav") {
                decode_wav(&bytes).map(|_| ())
            } else {
                decode_pnm(&bytes).map(|_| ())
            }
        });
        match outcome {
            Ok(Err(CliError::Parse { offset, .. })) => assert!(offset <= bytes.len(), "{}", f.display()),
            other => panic!("{}: {other:?}", f.display()),
        }
    }
}

#[test]
fn truncations_of_valid_files_never_panic() {
    let img = encode_pnm(&test_image_rgb(5, 4).unwrap()).unwrap();
    let audio = encode_wav(&AudioSignal::tone(440.0, 8000, 0.01, 0.5).unwrap());
    for n in 0..img.len() {
        assert!(decode_pnm(&img[..n]).is_err());
    }
    for n in 0..audio.len() {
        assert!(decode_wav(&audio[..n]).is_err());
    }
}

#[test]
fn image_files_round_trip_within_half_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(11);
    for channels in [1, 3] {
        let pixels = (0..7 * 5 * channels).map(|_| rng.uniform(0.0, 1.0).unwrap()).collect();
        let img = ImageSignal::new(7, 5, channels, pixels).unwrap();
        let path = dir.path().join(format!("img{channels}.pnm"));
        write_image(&img, &path).unwrap();
        let back = read_image(&path).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (7, 5, channels));
        let worst = img.pixels().iter().zip(back.pixels()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1.0 / 510.0, "{worst}");
    }
}

#[test]
fn audio_files_round_trip_within_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(12);
    let mut samples: Vec<f64> = (0..500).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect();
    samples.extend([-1.0, 1.0, 0.0]);
    let a = AudioSignal::new(22050, samples).unwrap();
    let path = dir.path().join("a.wav");
    write_audio(&a, &path).unwrap();
    let back = read_audio(&path).unwrap();
    assert_eq!(back.sample_rate(), 22050);
    let worst = a.samples().iter().zip(back.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1.0 / 32768.0, "{worst}");
}

#[test]
fn ascii_and_binary_color_agree() {
    let mut ascii = b"P3\n# rgb\n2 1\n255\n255 0 10  0 128 255\n".to_vec();
    let a = decode_pnm(&ascii).unwrap();
    ascii.clear();
    ascii.extend_from_slice(b"P6\n2 1\n# trailing comment\n255\n");
    ascii.extend([255, 0, 10, 0, 128, 255]);
    assert_eq!(decode_pnm(&ascii).unwrap(), a);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(read_image("/nonexistent/x.pgm"), Err(CliError::Io { .. })));
}
