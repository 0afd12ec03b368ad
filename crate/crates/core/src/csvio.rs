//! Trajectory CSV format.
//!
//! ```text
//! t,x_true,y_true,x_rssi,y_rssi,x_pdr,y_pdr,x_aoa,y_aoa
//! 0,0.000000,0.000000,0.123456,...
//! ```
//!
//! Comma separated, LF line endings, no quoting, positions with six decimals.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{Position2D, Scenario, SyncedEstimates, Trajectory};

pub const HEADER: [&str; 9] = [
    "t", "x_true", "y_true", "x_rssi", "y_rssi", "x_pdr", "y_pdr", "x_aoa", "y_aoa",
];

pub fn write_trajectory<W: Write>(trajectory: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for e in trajectory.records() {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            e.t,
            e.truth.x(),
            e.truth.y(),
            e.rssi.x(),
            e.rssi.y(),
            e.pdr.x(),
            e.pdr.y(),
            e.aoa.x(),
            e.aoa.y()
        )?;
    }
    Ok(())
}

pub fn trajectory_to_string(trajectory: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory(trajectory, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn csv_err(row: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        row,
        message: message.into(),
    }
}

/// Parses a trajectory. Rows are numbered from 1 for the first data line.
pub fn read_trajectory<R: Read>(input: R, env_id: &str, scenario: Scenario) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .quoting(false)
        .from_reader(input);

    let header = reader.headers().map_err(|e| csv_err(0, format!("unreadable header: {e}")))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(csv_err(
            0,
            format!(
                "header must be '{}', got '{}'",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut records: Vec<SyncedEstimates> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
        if rec.len() != HEADER.len() {
            return Err(csv_err(row, format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let t: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| csv_err(row, format!("t: '{}' is not a non-negative integer", &rec[0])))?;
        let mut v = [0.0f64; 8];
        for (j, slot) in v.iter_mut().enumerate() {
            let field = &rec[j + 1];
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| csv_err(row, format!("{}: '{field}' is not a number", HEADER[j + 1])))?;
            if !x.is_finite() {
                return Err(csv_err(row, format!("{}: non-finite value '{field}'", HEADER[j + 1])));
            }
            *slot = x;
        }
        if let Some(prev) = records.last() {
            if t <= prev.t {
                return Err(csv_err(
                    row,
                    format!("timestamps must increase strictly ({} then {t})", prev.t),
                ));
            }
        }
        let p = |a: f64, b: f64| Position2D::from_finite(a, b);
        records.push(SyncedEstimates {
            t,
            truth: p(v[0], v[1]),
            rssi: p(v[2], v[3]),
            pdr: p(v[4], v[5]),
            aoa: p(v[6], v[7]),
        });
    }
    if records.is_empty() {
        return Err(csv_err(1, "no data rows"));
    }
    Trajectory::new(env_id, scenario, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GOOD: &str = "t,x_true,y_true,x_rssi,y_rssi,x_pdr,y_pdr,x_aoa,y_aoa\n\
                        0,0.000000,0.000000,0.100000,0.000000,0.000000,0.200000,0.000000,0.000000\n\
                        1,0.200000,0.000000,0.250000,0.050000,0.200000,0.100000,0.210000,-0.010000\n";

    fn read(s: &str) -> Result<Trajectory> {
        read_trajectory(s.as_bytes(), "env1", Scenario::Rectangular)
    }

    #[test]
    fn round_trips_exactly() {
        let t = read(GOOD).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(trajectory_to_string(&t), GOOD);
    }

    #[test]
    fn nan_cell_cites_row() {
        let bad = GOOD.replace("0.250000", "NaN");
        let err = read(&bad).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("x_rssi"), "{err}");
    }

    #[test]
    fn rejects_schema_violations() {
        assert!(read("a,b,c\n1,2,3\n").unwrap_err().to_string().contains("header"));
        let short = GOOD.replace(",-0.010000", "");
        assert!(read(&short).unwrap_err().to_string().contains("row 2"));
        let backwards = GOOD.replace("\n1,", "\n0,");
        assert!(read(&backwards).unwrap_err().to_string().contains("increase"));
        let neg = GOOD.replace("\n1,", "\n-1,");
        assert!(read(&neg).is_err());
        assert!(read("t,x_true,y_true,x_rssi,y_rssi,x_pdr,y_pdr,x_aoa,y_aoa\n").is_err());
    }

    proptest! {
        #[test]
        fn six_decimal_round_trip_is_stable(
            vals in proptest::collection::vec(-1000.0..1000.0f64, 8..=8)
        ) {
            let p = |a: f64, b: f64| Position2D::new(a, b).unwrap();
            let rec = SyncedEstimates {
                t: 3,
                truth: p(vals[0], vals[1]),
                rssi: p(vals[2], vals[3]),
                pdr: p(vals[4], vals[5]),
                aoa: p(vals[6], vals[7]),
            };
            let t = Trajectory::new("e", Scenario::Random, vec![rec]).unwrap();
            let once = trajectory_to_string(&t);
            let again = trajectory_to_string(&read_trajectory(once.as_bytes(), "e", Scenario::Random).unwrap());
            prop_assert_eq!(once, again);
        }
    }
}
