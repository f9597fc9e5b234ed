//! Eigenvalue-sweep table: numerical and fitted eigenvalues per sweep value.

use std::io::{Read, Write};

use ep3_core::fitting::EigenvalueComparison;
use ep3_core::io::{fmt_num, parse_num, Table};
use ep3_core::{Error, Result, C64};

use crate::config::SweepAxis;

pub const EIGENSWEEP_COLUMNS: [&str; 22] = [
    "axis",
    "value",
    "num_re1",
    "num_im1",
    "num_re2",
    "num_im2",
    "num_re3",
    "num_im3",
    "fit_re1",
    "fit_im1",
    "fit_re2",
    "fit_im2",
    "fit_re3",
    "fit_im3",
    "dev_re1",
    "dev_im1",
    "dev_re2",
    "dev_im2",
    "dev_re3",
    "dev_im3",
    "residual",
    "converged",
];

/// One swept point. `fitted[k]` is matched to `numerical[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub numerical: [C64; 3],
    pub fitted: [C64; 3],
    pub residual: f64,
    pub converged: bool,
}

impl SweepRow {
    pub fn new(
        axis: SweepAxis,
        value: f64,
        cmp: &EigenvalueComparison<f64>,
        residual: f64,
        converged: bool,
    ) -> Self {
        Self {
            axis,
            value,
            numerical: cmp.numerical,
            fitted: cmp.fitted,
            residual,
            converged,
        }
    }

    pub fn deviation(&self) -> [C64; 3] {
        [0, 1, 2].map(|k| self.fitted[k] - self.numerical[k])
    }

    /// Largest absolute Re or Im deviation.
    pub fn max_deviation(&self) -> f64 {
        self.deviation()
            .iter()
            .fold(0.0, |m, d| m.max(d.re.abs()).max(d.im.abs()))
    }
}

fn push_triple(row: &mut Vec<String>, t: &[C64; 3]) {
    for z in t {
        row.push(fmt_num(z.re));
        row.push(fmt_num(z.im));
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut t = Table::new(&EIGENSWEEP_COLUMNS);
    for r in rows {
        let mut row = vec![r.axis.as_str().to_string(), fmt_num(r.value)];
        push_triple(&mut row, &r.numerical);
        push_triple(&mut row, &r.fitted);
        push_triple(&mut row, &r.deviation());
        row.push(fmt_num(r.residual));
        row.push(r.converged.to_string());
        t.push(row);
    }
    t.write_to(out)
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let t = Table::read_from(input, &EIGENSWEEP_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| {
            let axis = match r[0].as_str() {
                "g" => SweepAxis::G,
                "omega" => SweepAxis::Omega,
                other => return Err(Error::Parse(format!("unknown sweep axis `{other}`"))),
            };
            let num = |i: usize| parse_num::<f64>(&r[i]);
            let triple = |at: usize| -> Result<[C64; 3]> {
                Ok([
                    C64::new(num(at)?, num(at + 1)?),
                    C64::new(num(at + 2)?, num(at + 3)?),
                    C64::new(num(at + 4)?, num(at + 5)?),
                ])
            };
            let converged = r[21]
                .parse()
                .map_err(|_| Error::Parse(format!("bad converged flag `{}`", r[21])))?;
            Ok(SweepRow {
                axis,
                value: num(1)?,
                numerical: triple(2)?,
                fitted: triple(8)?,
                residual: num(20)?,
                converged,
            })
        })
        .collect()
}
