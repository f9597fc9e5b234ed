//! Branch-continuous eigenvalue sheets over a `(g, W)` grid.

use std::collections::VecDeque;
use std::io::{Read, Write};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_num, parse_num, Table};
use crate::scalar::Real;
use crate::spectral::cubic::{
    best_permutation, coefficients_from_rates, solve_cubic, ComplexTriple,
};

pub const SURFACE_COLUMNS: [&str; 9] = [
    "g", "omega", "re1", "im1", "re2", "im2", "re3", "im3", "perm",
];

/// Eigenvalue sheets sampled on a rectangular grid.
///
/// Cells are stored g-major: cell `(ig, iw)` lives at `ig * omega_axis.len() + iw`.
/// `sheets[c][k]` is the value of sheet `k` at cell `c`; `perms[c]` maps sheet
/// `k` to the canonical index of the root it took (`sheets[c][k] = roots[perms[c][k]]`).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSurfaceGrid<T> {
    pub g_axis: Vec<T>,
    pub omega_axis: Vec<T>,
    pub sheets: Vec<[Complex<T>; 3]>,
    pub perms: Vec<[usize; 3]>,
}

pub(crate) fn validate_axis<T: Real>(name: &str, axis: &[T]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{name} axis has non-finite samples"
        )));
    }
    if axis.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(format!(
            "{name} axis is not strictly increasing"
        )));
    }
    Ok(())
}

/// Solves every cell, then assigns roots to sheets by region growing from
/// the cell nearest `(0, 0)`. Each newly reached cell takes the permutation
/// (out of six) that minimizes the summed squared distance to the sheets of
/// the neighbor it was reached from. Visiting order is breadth first with
/// neighbors in the order `-g, +g, -W, +W`, so the result is deterministic.
pub fn sweep_surfaces<T: Real>(
    gamma: T,
    kappa: T,
    g_axis: &[T],
    omega_axis: &[T],
) -> Result<EigenSurfaceGrid<T>> {
    validate_axis("g", g_axis)?;
    validate_axis("omega", omega_axis)?;
    let (ng, nw) = (g_axis.len(), omega_axis.len());
    let roots: Vec<ComplexTriple<T>> = (0..ng * nw)
        .into_par_iter()
        .map(|c| {
            let (g, w) = (g_axis[c / nw], omega_axis[c % nw]);
            solve_cubic(&coefficients_from_rates(g, w, gamma, kappa))
        })
        .collect();

    let start = (0..ng * nw)
        .min_by(|&a, &b| {
            let d = |c: usize| {
                let (g, w) = (g_axis[c / nw], omega_axis[c % nw]);
                g * g + w * w
            };
            d(a).partial_cmp(&d(b)).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);

    let zero = Complex::new(T::zero(), T::zero());
    let mut sheets = vec![[zero; 3]; ng * nw];
    let mut perms = vec![[0usize, 1, 2]; ng * nw];
    let mut assigned = vec![false; ng * nw];
    sheets[start] = *roots[start].values();
    assigned[start] = true;

    let mut queue = VecDeque::from([start]);
    while let Some(cell) = queue.pop_front() {
        let (ig, iw) = (cell / nw, cell % nw);
        let neighbors = [
            (ig > 0).then(|| cell - nw),
            (ig + 1 < ng).then(|| cell + nw),
            (iw > 0).then(|| cell - 1),
            (iw + 1 < nw).then(|| cell + 1),
        ];
        for next in neighbors.into_iter().flatten() {
            if assigned[next] {
                continue;
            }
            let r = roots[next].values();
            // perm[k] = index of the root assigned to sheet k
            let (perm, _) = best_permutation(&sheets[cell], r, |a, b| (a - b).norm_sqr());
            sheets[next] = [r[perm[0]], r[perm[1]], r[perm[2]]];
            perms[next] = perm;
            assigned[next] = true;
            queue.push_back(next);
        }
    }

    Ok(EigenSurfaceGrid {
        g_axis: g_axis.to_vec(),
        omega_axis: omega_axis.to_vec(),
        sheets,
        perms,
    })
}

impl<T: Real> EigenSurfaceGrid<T> {
    #[inline]
    pub fn cell(&self, ig: usize, iw: usize) -> usize {
        ig * self.omega_axis.len() + iw
    }

    pub fn sheet_values(&self, ig: usize, iw: usize) -> &[Complex<T>; 3] {
        &self.sheets[self.cell(ig, iw)]
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&SURFACE_COLUMNS);
        for (ig, &g) in self.g_axis.iter().enumerate() {
            for (iw, &w) in self.omega_axis.iter().enumerate() {
                let c = self.cell(ig, iw);
                let s = &self.sheets[c];
                let p = self.perms[c];
                t.push(vec![
                    fmt_num(g),
                    fmt_num(w),
                    fmt_num(s[0].re),
                    fmt_num(s[0].im),
                    fmt_num(s[1].re),
                    fmt_num(s[1].im),
                    fmt_num(s[2].re),
                    fmt_num(s[2].im),
                    format!("{}{}{}", p[0], p[1], p[2]),
                ]);
            }
        }
        t
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.to_table().write_to(out)
    }

    /// Reads back a grid written by [`EigenSurfaceGrid::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let table = Table::read_from(input, &SURFACE_COLUMNS)?;
        let mut g_axis: Vec<T> = Vec::new();
        let mut omega_axis: Vec<T> = Vec::new();
        let mut sheets = Vec::with_capacity(table.rows.len());
        let mut perms = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let g: T = parse_num(&row[0])?;
            let w: T = parse_num(&row[1])?;
            if g_axis.last() != Some(&g) {
                g_axis.push(g);
            }
            if g_axis.len() == 1 {
                omega_axis.push(w);
            }
            let mut vals = [Complex::new(T::zero(), T::zero()); 3];
            for (k, v) in vals.iter_mut().enumerate() {
                *v = Complex::new(parse_num(&row[2 + 2 * k])?, parse_num(&row[3 + 2 * k])?);
            }
            sheets.push(vals);
            perms.push(parse_perm(&row[8])?);
        }
        if g_axis.len() * omega_axis.len() != sheets.len() {
            return Err(Error::Parse("surface rows do not form a full grid".into()));
        }
        Ok(Self {
            g_axis,
            omega_axis,
            sheets,
            perms,
        })
    }
}

fn parse_perm(s: &str) -> Result<[usize; 3]> {
    let digits: Vec<usize> = s
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Parse(format!("bad permutation `{s}`")))?;
    match digits.as_slice() {
        &[a, b, c]
            if {
                let mut v = [a, b, c];
                v.sort_unstable();
                v == [0, 1, 2]
            } =>
        {
            Ok([a, b, c])
        }
        _ => Err(Error::Parse(format!("bad permutation `{s}`"))),
    }
}

/// Evenly spaced samples over `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit((n - 1) as f64))
            .collect(),
    }
}
