use std::io::Write;

use ipcw_additive::{empirical_censoring_rate, load_csv, read_csv, write_csv, write_csv_to, CensoredObservation, CensoredSample, Error};
use proptest::prelude::*;

#[test]
fn parses_two_rows() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "z,delta,x1,x2\n2.0,1,0.1,0.2\n3.0,0,-0.5,0.4").unwrap();
    let s = load_csv(f.path(), 2).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s.dim(), 2);
    assert_eq!(s.observations()[1].x, vec![-0.5, 0.4]);
    assert_eq!(empirical_censoring_rate(&s), 0.5);
}

#[test]
fn missing_file_names_the_path() {
    let err = load_csv("/nonexistent/data.csv", 2).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/data.csv"));
}

proptest! {
    #[test]
    fn round_trip(
        rows in proptest::collection::vec(
            (0.0f64..1e6, any::<bool>(), proptest::collection::vec(-1e3f64..1e3, 3)),
            1..40,
        )
    ) {
        let obs: Vec<CensoredObservation> = rows
            .into_iter()
            .map(|(z, d, x)| CensoredObservation::new(z, d, x).unwrap())
            .collect();
        let s = CensoredSample::new(obs, 3).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&s, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), 3).unwrap();
        prop_assert_eq!(&back, &s);

        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&s, f.path()).unwrap();
        prop_assert_eq!(load_csv(f.path(), 3).unwrap(), s);
    }
}
