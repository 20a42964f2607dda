//! CSV serialization.
//!
//! Every file has a header row, `,` separators, `.` decimals and LF line
//! endings. Floats are written in shortest round-trip form, so a value read
//! back is bit-identical to the one written.
//!
//! ```
//! use lonestar::io::{read_codebook_csv, write_codebook_csv};
//! use lonestar::{CMatrix, C64};
//!
//! let f = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 * 0.1, -(j as f64)));
//! let mut buf = Vec::new();
//! write_codebook_csv(&mut buf, &f).unwrap();
//! assert!(buf.starts_with(b"beam,element,re,im\n"));
//! assert_eq!(read_codebook_csv(buf.as_slice()).unwrap(), f);
//! ```

use std::io::{Read, Write};

use crate::codebook::PatternPoint;
use crate::error::Error;
use crate::montecarlo::{SweepRow, TrialResult};
use crate::{CMatrix, Result, C64};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes `header` and then `rows` of pre-formatted fields.
pub fn write_rows<W: Write, I>(w: W, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut wr = writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for r in rows {
        wr.write_record(&r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn write_indexed<W: Write>(w: W, names: [&str; 4], m: &CMatrix, by_column: bool) -> Result<()> {
    let rows = if by_column {
        (0..m.ncols())
            .flat_map(|j| (0..m.nrows()).map(move |i| (j, i, m[(i, j)])))
            .collect::<Vec<_>>()
    } else {
        (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j, m[(i, j)])))
            .collect::<Vec<_>>()
    };
    write_rows(
        w,
        &header(&names),
        rows.into_iter().map(|(a, b, z)| vec![a.to_string(), b.to_string(), z.re.to_string(), z.im.to_string()]),
    )
}

fn read_indexed<R: Read>(r: R, names: [&str; 4], by_column: bool) -> Result<CMatrix> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let hdr = rd.headers().map_err(csv_err)?.clone();
    if hdr.iter().collect::<Vec<_>>() != names {
        return Err(Error::Format(format!("expected header {}, found {}", names.join(","), hdr.iter().collect::<Vec<_>>().join(","))));
    }
    let mut entries = Vec::new();
    let (mut n0, mut n1) = (0usize, 0usize);
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 4 {
            return Err(Error::Format(format!("row {} has {} fields, expected 4", line + 2, rec.len())));
        }
        let idx = |k: usize| -> Result<usize> {
            rec[k].trim().parse().map_err(|_| Error::Format(format!("row {}: bad index '{}'", line + 2, &rec[k])))
        };
        let num = |k: usize| -> Result<f64> {
            rec[k].trim().parse().map_err(|_| Error::Format(format!("row {}: bad number '{}'", line + 2, &rec[k])))
        };
        let (a, b) = (idx(0)?, idx(1)?);
        n0 = n0.max(a + 1);
        n1 = n1.max(b + 1);
        entries.push((a, b, C64::new(num(2)?, num(3)?)));
    }
    if entries.len() != n0 * n1 {
        return Err(Error::Format(format!("{} entries do not fill a {n0}x{n1} grid", entries.len())));
    }
    let mut m = if by_column { CMatrix::zeros(n1, n0) } else { CMatrix::zeros(n0, n1) };
    let mut seen = vec![false; n0 * n1];
    for (a, b, z) in entries {
        if std::mem::replace(&mut seen[a * n1 + b], true) {
            return Err(Error::Format(format!("duplicate entry ({a}, {b})")));
        }
        if by_column {
            m[(b, a)] = z;
        } else {
            m[(a, b)] = z;
        }
    }
    Ok(m)
}

/// Channel matrix as `m,n,re,im` rows.
pub fn write_matrix_csv<W: Write>(w: W, m: &CMatrix) -> Result<()> {
    write_indexed(w, ["m", "n", "re", "im"], m, false)
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<CMatrix> {
    read_indexed(r, ["m", "n", "re", "im"], false)
}

/// Codebook as `beam,element,re,im` rows, beam-major.
pub fn write_codebook_csv<W: Write>(w: W, f: &CMatrix) -> Result<()> {
    write_indexed(w, ["beam", "element", "re", "im"], f, true)
}

pub fn read_codebook_csv<R: Read>(r: R) -> Result<CMatrix> {
    read_indexed(r, ["beam", "element", "re", "im"], true)
}

pub fn write_trials_csv<W: Write>(w: W, trials: &[TrialResult]) -> Result<()> {
    write_rows(
        w,
        &header(&["trial", "snr_tx_db", "snr_rx_db", "inr_rx_db", "inr_tx_db", "r_tx", "r_rx", "gamma_sum"]),
        trials.iter().map(|t| {
            vec![
                t.trial.to_string(),
                t.snr_tx_db.to_string(),
                t.snr_rx_db.to_string(),
                t.inr_rx_db.to_string(),
                t.inr_tx_db.to_string(),
                t.r_tx.to_string(),
                t.r_rx.to_string(),
                t.gamma_sum.to_string(),
            ]
        }),
    )
}

/// Sweep rows; parameter columns are named after the first row's parameters.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut hdr: Vec<String> = rows.first().map(|r| r.params.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    hdr.extend(header(&["mean_gamma", "median_gamma", "mean_inr_db", "n_trials"]));
    write_rows(
        w,
        &hdr,
        rows.iter().map(|r| {
            let mut v: Vec<String> = r.params.iter().map(|(_, x)| x.to_string()).collect();
            v.extend([
                r.mean_gamma.to_string(),
                r.median_gamma.to_string(),
                r.mean_inr_db.to_string(),
                r.n_trials.to_string(),
            ]);
            v
        }),
    )
}

/// Beam pattern as `angle_deg,gain,gain_db`.
pub fn write_pattern_csv<W: Write>(w: W, pattern: &[PatternPoint]) -> Result<()> {
    write_rows(
        w,
        &header(&["angle_deg", "gain", "gain_db"]),
        pattern
            .iter()
            .map(|p| vec![p.angle_deg.to_string(), p.gain.to_string(), crate::metrics::db(p.gain).to_string()]),
    )
}

/// Design trace as `step,objective,coverage_tx,coverage_rx`.
pub fn write_design_report_csv<W: Write>(w: W, objective: &[f64], coverage: &[(f64, f64)]) -> Result<()> {
    write_rows(
        w,
        &header(&["step", "objective", "coverage_tx", "coverage_rx"]),
        objective
            .iter()
            .zip(coverage)
            .enumerate()
            .map(|(k, (o, (ct, cr)))| vec![k.to_string(), o.to_string(), ct.to_string(), cr.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_bit_exact() {
        let m = CMatrix::from_fn(3, 4, |i, j| C64::new((i as f64 + 0.1).sqrt(), -(j as f64) / 3.0));
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m,n,re,im\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 13);
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(read_matrix_csv("a,b,c,d\n0,0,1,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv("m,n,re,im\n0,0,1,x\n".as_bytes()).is_err());
        assert!(read_matrix_csv("m,n,re,im\n0,0,1,1\n1,1,1,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv("m,n,re,im\n0,0,1,1\n0,0,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn sweep_header_uses_param_names() {
        let rows = vec![SweepRow {
            params: vec![("inrbar_db".into(), 30.0), ("sigma_sq".into(), 0.01)],
            mean_gamma: 0.5,
            median_gamma: 0.25,
            mean_inr_db: f64::NEG_INFINITY,
            n_trials: 3,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "inrbar_db,sigma_sq,mean_gamma,median_gamma,mean_inr_db,n_trials\n30,0.01,0.5,0.25,-inf,3\n"
        );
    }
}
