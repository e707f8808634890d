use deckforge::traj::{read_gro_trajectory, read_xtc, write_xtc, Frame, TrajError, Trajectory, XtcReader};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xdrfile::Trajectory as _;

const FIXTURE_XTC: &[u8] = include_bytes!("data/fixture_3x20.xtc");
const FIXTURE_GRO: &str = include_str!("data/fixture_3x20.gro");

/// Three-site molecules spread through a box, as in a solvated system, so the
/// encoder exercises its run and swap paths. Coordinates are f32-representable.
fn clustered(rng: &mut ChaCha8Rng, atoms: usize, frames: usize) -> Trajectory {
    let centers: Vec<[f64; 3]> = (0..atoms.div_ceil(3))
        .map(|_| [rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)])
        .collect();
    let mut traj = Trajectory::new(atoms);
    for f in 0..frames {
        let positions = (0..atoms)
            .map(|i| {
                let c = centers[i / 3];
                let jitter = if i % 3 == 0 { 0.0 } else { 0.1 };
                [0, 1, 2].map(|d| (c[d] + rng.gen_range(-jitter..=jitter) + 0.01 * f as f64) as f32 as f64)
            })
            .collect();
        let mut frame = Frame::new(f as i64 * 500, f as f64 * 10.0, positions);
        frame.box_matrix = [[6.0, 0.0, 0.0], [0.0, 6.0, 0.0], [0.0, 0.0, 6.0]];
        traj.push(frame).unwrap();
    }
    traj
}

fn uniform(rng: &mut ChaCha8Rng, atoms: usize, frames: usize, span: f64) -> Trajectory {
    let mut traj = Trajectory::new(atoms);
    for f in 0..frames {
        let positions = (0..atoms).map(|_| [0, 1, 2].map(|_| rng.gen_range(-span..=span))).collect();
        traj.push(Frame::new(f as i64, f as f64, positions)).unwrap();
    }
    traj
}

fn max_error(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst: f64 = 0.0;
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        for (pa, pb) in fa.positions.iter().zip(&fb.positions) {
            for d in 0..3 {
                worst = worst.max((pa[d] - pb[d]).abs());
            }
        }
    }
    worst
}

fn reference_write(traj: &Trajectory, path: &std::path::Path) {
    let mut out = xdrfile::XTCTrajectory::open_write(path).unwrap();
    for f in &traj.frames {
        let frame = xdrfile::Frame {
            step: f.step as usize,
            time: f.time as f32,
            box_vector: f.box_matrix.map(|r| r.map(|v| v as f32)),
            coords: f.positions.iter().map(|p| p.map(|v| v as f32)).collect(),
        };
        out.write(&frame).unwrap();
    }
    out.flush().unwrap();
}

fn reference_read(path: &std::path::Path) -> Vec<xdrfile::Frame> {
    let mut input = xdrfile::XTCTrajectory::open_read(path).unwrap();
    let natoms = input.get_num_atoms().unwrap();
    let mut frames = Vec::new();
    loop {
        let mut frame = xdrfile::Frame::with_len(natoms);
        match input.read(&mut frame) {
            Ok(()) => frames.push(frame),
            Err(e) if e.is_eof() => break,
            Err(e) => panic!("reference decoder failed: {e}"),
        }
    }
    frames
}

#[test]
fn encoder_matches_reference_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (i, atoms) in [10, 11, 30, 100, 301, 500].into_iter().enumerate() {
        let traj = if i % 2 == 0 { clustered(&mut rng, atoms, 4) } else { uniform(&mut rng, atoms, 4, 3.0) };
        let path = dir.path().join(format!("ref{i}.xtc"));
        reference_write(&traj, &path);
        let reference = std::fs::read(&path).unwrap();
        let ours = write_xtc(&traj, 1000.0).unwrap();
        let first_diff = ours.iter().zip(&reference).position(|(a, b)| a != b);
        assert_eq!((ours.len(), first_diff), (reference.len(), None), "{atoms} atoms");
        let decoded = read_xtc(&reference).unwrap();
        assert!(max_error(&traj, &decoded) <= 1e-3);
    }
}

#[test]
fn reference_decoder_reads_every_precision() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for precision in [100.0, 1000.0, 10000.0] {
        let traj = clustered(&mut rng, 240, 3);
        let path = dir.path().join("ours.xtc");
        std::fs::write(&path, write_xtc(&traj, precision).unwrap()).unwrap();
        let frames = reference_read(&path);
        assert_eq!(frames.len(), 3);
        for (ours, theirs) in traj.frames.iter().zip(&frames) {
            assert_eq!(theirs.step as i64, ours.step);
            for (p, q) in ours.positions.iter().zip(&theirs.coords) {
                for d in 0..3 {
                    assert!((p[d] - f64::from(q[d])).abs() <= 1.0 / precision + 1e-6);
                }
            }
        }
    }
}

#[test]
fn committed_fixture() {
    let source = read_gro_trajectory(FIXTURE_GRO).unwrap();
    let decoded = read_xtc(FIXTURE_XTC).unwrap();
    assert_eq!((decoded.len(), decoded.atom_count), (3, 20));
    assert!(decoded.frames.iter().all(|f| f.precision == 1000.0));
    assert_eq!(decoded.times(), source.times());
    assert!(max_error(&source, &decoded) <= 1e-3);
}

#[test]
fn small_frames_are_stored_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for atoms in 1..=9 {
        let mut traj = uniform(&mut rng, atoms, 2, 5.0);
        for f in &mut traj.frames {
            for p in &mut f.positions {
                *p = p.map(|v| v as f32 as f64);
            }
        }
        let decoded = read_xtc(&write_xtc(&traj, 1000.0).unwrap()).unwrap();
        assert_eq!(max_error(&traj, &decoded), 0.0);
        assert!(decoded.frames.iter().all(|f| f.precision == 0.0));
    }
}

#[test]
fn empty_trajectory_is_empty_stream() {
    let bytes = write_xtc(&Trajectory::new(5), 1000.0).unwrap();
    assert!(bytes.is_empty());
    assert!(read_xtc(&bytes).unwrap().is_empty());
}

#[test]
fn forced_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let traj = clustered(&mut rng, 60, 3);
    let bytes = write_xtc(&traj, 1000.0).unwrap();

    let mut bad = bytes.clone();
    bad[3] ^= 0x55;
    assert!(matches!(read_xtc(&bad), Err(TrajError::Format { offset: 0, .. })));

    let frame_len = bytes.len() / 3;
    match read_xtc(&bytes[..frame_len + frame_len / 2]) {
        Err(TrajError::TruncatedFrame { frames_read: 1, partial: Some(p) }) => assert_eq!(p.len(), 1),
        other => panic!("expected truncation, got {other:?}"),
    }

    let mut other = clustered(&mut rng, 61, 1);
    other.frames[0].time = 100.0;
    let mut mixed = bytes.clone();
    mixed.extend(write_xtc(&other, 1000.0).unwrap());
    assert!(matches!(read_xtc(&mixed), Err(TrajError::AtomCountChanged { frame: 3, .. })));

    let mut far = uniform(&mut rng, 20, 1, 1.0);
    far.frames[0].positions[4][1] = 1e7;
    assert!(matches!(write_xtc(&far, 1000.0), Err(TrajError::CoordinateOverflow { frame: 0, .. })));
    assert!(matches!(write_xtc(&far, 0.0), Err(TrajError::InvalidPrecision(_))));
}

#[test]
fn streaming_reader_yields_frames_incrementally() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let traj = clustered(&mut rng, 90, 5);
    let bytes = write_xtc(&traj, 1000.0).unwrap();
    let mut reader = XtcReader::new(std::io::Cursor::new(bytes));
    let first = reader.next().unwrap().unwrap();
    assert_eq!(reader.frames_read(), 1);
    assert_eq!(first.step, 0);
    assert_eq!(reader.count(), 4);
}

#[test]
fn gro_trajectory_times() {
    let text = "frame t= 0.0\n1\n    1SOL     OW    1   0.126   1.624   1.679\n   1.0 1.0 1.0\n\
                frame t= 10.0 step= 5000\n1\n    1SOL     OW    1   0.130   1.620   1.680\n   1.0 1.0 1.0\n";
    let t = read_gro_trajectory(text).unwrap();
    assert_eq!(t.times(), vec![0.0, 10.0]);
    assert_eq!(t.frames[1].step, 5000);

    let changed = "a\n1\n    1SOL     OW    1   0.126   1.624   1.679\n   1.0 1.0 1.0\n\
                   b\n2\n    1SOL     OW    1   0.126   1.624   1.679\n    1SOL    HW1    2   0.100   1.600   1.600\n   1.0 1.0 1.0\n";
    assert!(matches!(read_gro_trajectory(changed), Err(TrajError::AtomCountChanged { frame: 1, .. })));

    let single = "GlyG1\n    1\n    1MET      N    1   2.015   2.970   0.528\n   5.00000   5.00000   5.00000\n";
    let t = read_gro_trajectory(single).unwrap();
    let s = deckforge::structure::parse_gro(single).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.frames[0].positions, s.positions());
    assert_eq!(t.frames[0].time, 0.0);
}

#[test]
fn decreasing_time_is_a_warning() {
    let mut t = Trajectory::new(1);
    t.push(Frame::new(0, 5.0, vec![[0.0; 3]])).unwrap();
    t.push(Frame::new(1, 1.0, vec![[0.0; 3]])).unwrap();
    assert_eq!(t.warnings.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_within_precision(
        seed in any::<u64>(),
        atoms in 1usize..500,
        frames in 1usize..8,
        precision in prop::sample::select(vec![100.0, 1000.0, 10000.0]),
        clustered_layout in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = if clustered_layout { clustered(&mut rng, atoms, frames) } else { uniform(&mut rng, atoms, frames, 10.0) };
        let decoded = read_xtc(&write_xtc(&traj, precision).unwrap()).unwrap();
        prop_assert!(max_error(&traj, &decoded) <= 1.0 / precision);
    }

    #[test]
    fn decoder_is_total(seed in any::<u64>(), flips in 1usize..16, cut in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bytes = write_xtc(&clustered(&mut rng, 40, 2), 1000.0).unwrap();
        for _ in 0..flips {
            let i = rng.gen_range(0..bytes.len());
            bytes[i] = rng.gen();
        }
        bytes.truncate(cut.index(bytes.len() + 1));
        let _ = read_xtc(&bytes);
    }
}
