use proptest::prelude::*;
use radar_odom::io::{
    decode_scan_archive, encode_scan_archive, parse_trajectory, read_scan_archive, read_trajectory,
    trajectory_to_string, write_atomic, write_scan_archive, write_trajectory, IoError,
};
use radar_odom::{PolarScan, Pose2, ScanArchive, TrajectoryEstimate, TrajectoryFormat};

fn archive() -> impl Strategy<Value = ScanArchive> {
    (1usize..12, 0usize..5).prop_flat_map(|(n, count)| {
        prop::collection::vec(
            (1usize..10, 0.01..10.0f64).prop_flat_map(move |(m, gap)| {
                (Just(gap), prop::collection::vec(0.0f32..1e4, m * n), Just(m))
            }),
            count,
        )
        .prop_map(move |rows| {
            let mut t = 1e9;
            let scans = rows
                .into_iter()
                .map(|(gap, power, m)| {
                    t += gap;
                    PolarScan::new(t, 0.25, 0.0438, PolarScan::uniform_azimuths(m), n, power).unwrap()
                })
                .collect();
            ScanArchive::new(scans).unwrap()
        })
    })
}

fn trajectory() -> impl Strategy<Value = TrajectoryEstimate> {
    prop::collection::vec((0.001..5.0f64, -1e4..1e4f64, -1e4..1e4f64, -3.14..3.14f64), 0..30).prop_map(|rows| {
        let mut t = 0.0;
        TrajectoryEstimate::new(
            rows.into_iter()
                .map(|(dt, x, y, th)| {
                    t += dt;
                    (t, Pose2::new(x, y, th))
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn archive_round_trip_is_bit_exact(a in archive()) {
        let bytes = encode_scan_archive(&a).unwrap();
        let back = decode_scan_archive(&bytes).unwrap();
        prop_assert_eq!(back.len(), a.len());
        for (x, y) in a.scans().iter().zip(back.scans()) {
            prop_assert_eq!(x.timestamp().to_bits(), y.timestamp().to_bits());
            prop_assert_eq!(x.azimuths(), y.azimuths());
            prop_assert_eq!(x.power(), y.power());
            prop_assert_eq!(x.num_bins(), y.num_bins());
        }
    }

    #[test]
    fn truncated_archives_fail_with_offsets(a in archive(), cut in 0.0..1.0f64) {
        let bytes = encode_scan_archive(&a).unwrap();
        let len = (bytes.len() as f64 * cut) as usize;
        prop_assume!(len < bytes.len());
        match decode_scan_archive(&bytes[..len]) {
            Err(IoError::MalformedFile { offset, .. }) => prop_assert!(offset as usize <= len),
            // Cutting exactly at a record boundary leaves a shorter, valid archive.
            Ok(shorter) => prop_assert!(shorter.len() < a.len()),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        if let Err(e) = decode_scan_archive(&bytes) {
            prop_assert!(e.is_malformed());
        }
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_trajectory(&text, None);
        let _ = radar_odom::io::decode_oxford_scan(&bytes);
    }

    #[test]
    fn native_trajectory_round_trip_is_exact(t in trajectory()) {
        let text = trajectory_to_string(&t, TrajectoryFormat::Native);
        prop_assert_eq!(parse_trajectory(&text, None).unwrap(), t);
    }

    #[test]
    fn kitti_trajectory_round_trip(t in trajectory()) {
        let text = trajectory_to_string(&t, TrajectoryFormat::Kitti);
        let back = parse_trajectory(&text, Some(TrajectoryFormat::Kitti)).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (i, ((ts, a), (_, b))) in back.entries().iter().zip(t.entries()).enumerate() {
            prop_assert_eq!(*ts, i as f64);
            prop_assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
            prop_assert!((a.theta - b.theta).abs() < 1e-12);
        }
    }
}

#[test]
fn files_round_trip_and_leave_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let a = ScanArchive::new(vec![PolarScan::new(3.0, 0.25, 0.05, PolarScan::uniform_azimuths(4), 3, vec![7.5; 12]).unwrap()]).unwrap();
    let path = dir.path().join("scans.rdr");
    write_scan_archive(&a, &path).unwrap();
    assert_eq!(read_scan_archive(&path).unwrap().scans()[0].power(), a.scans()[0].power());

    let t = TrajectoryEstimate::new(vec![(0.5, Pose2::new(1.0, 2.0, 0.5))]).unwrap();
    let tpath = dir.path().join("poses.txt");
    write_trajectory(&t, &tpath, TrajectoryFormat::Native).unwrap();
    assert_eq!(read_trajectory(&tpath, None).unwrap(), t);

    write_atomic(&tpath, b"replaced").unwrap();
    assert_eq!(std::fs::read(&tpath).unwrap(), b"replaced");
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_scan_archive(std::path::Path::new("/nonexistent/scans.rdr")).unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(!err.is_malformed());
}
