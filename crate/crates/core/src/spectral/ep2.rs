//! EP2 lines as the zero contour of the cubic discriminant.
//!
//! With `l = i m` the characteristic polynomial becomes `-i q(m)` where `q`
//! has real coefficients, so the discriminant of `det(x - H_nH)` is real
//! (it equals `-disc(q)`). It changes sign where a pair of purely imaginary
//! eigenvalues turns into a `+-Re` pair, i.e. across an EP2 line. We run
//! marching squares on its sign and refine each edge crossing by bisection
//! on the exact discriminant.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_num, parse_num, Table};
use crate::scalar::Real;
use crate::spectral::cubic::coefficients_from_rates;
use crate::spectral::surfaces::validate_axis;

pub const EP2_COLUMNS: [&str; 2] = ["g", "omega"];

/// Sub-samples per grid interval used by [`ep2_locus`].
///
/// The two EP2 lines meet at the EP3 in a cusp whose width shrinks like
/// `distance^(3/2)`, so on the bare grid the contour turns back a few cells
/// before reaching the EP3. Contouring on a grid sixteen times finer brings
/// the turning point within one original cell for grids up to ~1000 points
/// per axis.
pub const DEFAULT_REFINEMENT: usize = 16;

const BISECTION_STEPS: usize = 60;

/// Real discriminant of the characteristic polynomial at `(g, W)`.
pub fn real_discriminant<T: Real>(g: T, omega: T, gamma: T, kappa: T) -> T {
    coefficients_from_rates(g, omega, gamma, kappa)
        .discriminant()
        .re
}

/// A connected piece of the EP2 locus.
pub type Polyline<T> = Vec<(T, T)>;

// Edge identity on the refined grid: (horizontal?, ig, iw). Horizontal
// edges join (ig, iw)-(ig+1, iw).
type EdgeKey = (bool, usize, usize);

/// Zero contour of [`real_discriminant`] as polylines, contoured on the
/// grid refined by [`DEFAULT_REFINEMENT`].
///
/// An empty axis yields an empty list.
pub fn ep2_locus<T: Real>(
    gamma: T,
    kappa: T,
    g_axis: &[T],
    omega_axis: &[T],
) -> Result<Vec<Polyline<T>>> {
    ep2_locus_refined(gamma, kappa, g_axis, omega_axis, DEFAULT_REFINEMENT)
}

/// As [`ep2_locus`], splitting every grid interval into `refine` pieces.
pub fn ep2_locus_refined<T: Real>(
    gamma: T,
    kappa: T,
    g_axis: &[T],
    omega_axis: &[T],
    refine: usize,
) -> Result<Vec<Polyline<T>>> {
    if g_axis.is_empty() || omega_axis.is_empty() {
        return Ok(Vec::new());
    }
    validate_axis("g", g_axis)?;
    validate_axis("omega", omega_axis)?;
    if refine == 0 {
        return Err(Error::InvalidConfig("refinement must be at least 1".into()));
    }
    let ga = subdivide(g_axis, refine);
    let wa = subdivide(omega_axis, refine);
    let (ng, nw) = (ga.len(), wa.len());
    let f = |g: T, w: T| real_discriminant(g, w, gamma, kappa);
    let row =
        |ig: usize| -> Vec<bool> { wa.par_iter().map(|&w| f(ga[ig], w) >= T::zero()).collect() };

    let mut points: HashMap<EdgeKey, (T, T)> = HashMap::new();
    let mut locate = |key: EdgeKey| {
        points.entry(key).or_insert_with(|| {
            let (horizontal, ig, iw) = key;
            let (a, b) = if horizontal {
                ((ga[ig], wa[iw]), (ga[ig + 1], wa[iw]))
            } else {
                ((ga[ig], wa[iw]), (ga[ig], wa[iw + 1]))
            };
            bisect_edge(&f, a, b)
        });
    };

    // Segments as pairs of edge keys, in cell order; two field rows live at a time.
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut lower = row(0);
    for ig in 0..ng.saturating_sub(1) {
        let upper = row(ig + 1);
        for iw in 0..nw.saturating_sub(1) {
            // Corners counter-clockwise: (ig,iw) (ig+1,iw) (ig+1,iw+1) (ig,iw+1)
            let s = [lower[iw], upper[iw], upper[iw + 1], lower[iw + 1]];
            let edges: [EdgeKey; 4] = [
                (true, ig, iw),
                (false, ig + 1, iw),
                (true, ig, iw + 1),
                (false, ig, iw),
            ];
            let cut: Vec<EdgeKey> = (0..4)
                .filter(|&k| s[k] != s[(k + 1) % 4])
                .map(|k| edges[k])
                .collect();
            let mut add = |a: EdgeKey, b: EdgeKey| {
                locate(a);
                locate(b);
                segments.push((a, b));
            };
            match cut.len() {
                2 => add(cut[0], cut[1]),
                4 => {
                    // Saddle: pair edges according to the sign at the centre.
                    let gc = (ga[ig] + ga[ig + 1]) * T::lit(0.5);
                    let wc = (wa[iw] + wa[iw + 1]) * T::lit(0.5);
                    if (f(gc, wc) >= T::zero()) == s[0] {
                        add(edges[0], edges[1]);
                        add(edges[2], edges[3]);
                    } else {
                        add(edges[3], edges[0]);
                        add(edges[1], edges[2]);
                    }
                }
                _ => {}
            }
        }
        lower = upper;
    }

    Ok(chain(&segments)
        .into_iter()
        .map(|keys| keys.iter().map(|k| points[k]).collect())
        .collect())
}

/// Inserts `refine - 1` evenly spaced samples into every interval.
fn subdivide<T: Real>(axis: &[T], refine: usize) -> Vec<T> {
    let mut out = Vec::with_capacity((axis.len() - 1) * refine + 1);
    for w in axis.windows(2) {
        for k in 0..refine {
            out.push(w[0] + (w[1] - w[0]) * T::lit(k as f64) / T::lit(refine as f64));
        }
    }
    out.extend(axis.last());
    out
}

fn bisect_edge<T: Real>(f: &impl Fn(T, T) -> T, a: (T, T), b: (T, T)) -> (T, T) {
    let lerp = |t: T| (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
    let fa_pos = f(a.0, a.1) >= T::zero();
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * T::lit(0.5);
        let p = lerp(mid);
        if (f(p.0, p.1) >= T::zero()) == fa_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lerp((lo + hi) * T::lit(0.5))
}

/// Joins segments sharing an edge crossing into maximal chains.
fn chain(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut by_point: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        by_point.entry(a).or_default().push(i);
        by_point.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let other = |seg: usize, p: EdgeKey| {
        let (a, b) = segments[seg];
        if a == p {
            b
        } else {
            a
        }
    };
    let extend = |start: EdgeKey, used: &mut Vec<bool>, path: &mut Vec<EdgeKey>| {
        let mut p = start;
        while let Some(&next) = by_point[&p].iter().find(|&&s| !used[s]) {
            used[next] = true;
            p = other(next, p);
            path.push(p);
        }
    };
    for i in 0..segments.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (a, b) = segments[i];
        let mut forward = vec![a, b];
        extend(b, &mut used, &mut forward);
        let mut backward = Vec::new();
        extend(a, &mut used, &mut backward);
        backward.reverse();
        backward.extend(forward);
        out.push(backward);
    }
    out
}

/// Writes all polyline vertices, polyline after polyline.
pub fn write_locus_csv<T: Real, W: Write>(locus: &[Polyline<T>], out: W) -> Result<()> {
    let mut t = Table::new(&EP2_COLUMNS);
    for line in locus {
        for &(g, w) in line {
            t.push(vec![fmt_num(g), fmt_num(w)]);
        }
    }
    t.write_to(out)
}

/// Reads locus vertices written by [`write_locus_csv`].
pub fn read_locus_csv<T: Real, R: Read>(input: R) -> Result<Vec<(T, T)>> {
    let t = Table::read_from(input, &EP2_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| Ok((parse_num(&r[0])?, parse_num(&r[1])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ep3::ep3_analytic;
    use crate::spectral::surfaces::linspace;

    #[test]
    fn locus_passes_through_ep3() {
        let ga = linspace(0.0, 6.0, 121);
        let wa = linspace(0.0, 6.0, 121);
        let locus = ep2_locus(1.0f64, 7.0, &ga, &wa).unwrap();
        assert!(!locus.is_empty());
        let ep = ep3_analytic(1.0, 7.0).unwrap();
        let h = ga[1] - ga[0];
        let nearest = locus
            .iter()
            .flatten()
            .map(|&(g, w)| ((g - ep.g_ep3).powi(2) + (w - ep.omega_ep3).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < h * 2f64.sqrt(), "nearest locus point {nearest}");
    }

    #[test]
    fn locus_points_are_zeros_of_the_discriminant() {
        let ga = linspace(0.0, 6.0, 61);
        let wa = linspace(0.0, 6.0, 61);
        let locus = ep2_locus(1.0f64, 7.0, &ga, &wa).unwrap();
        for &(g, w) in locus.iter().flatten() {
            // Sign changes within a bisection bracket of ~1e-16 of the edge.
            let d: f64 = real_discriminant(g, w, 1.0, 7.0);
            let scale = real_discriminant::<f64>(g + 0.1, w, 1.0, 7.0)
                .abs()
                .max(1.0);
            assert!(d.abs() < 1e-9 * scale, "({g},{w}) -> {d}");
        }
    }

    #[test]
    fn zero_pump_threshold_on_axis() {
        // At W = 0 the cavity-atom pair has an EP2 at g = (kappa - gamma)/2.
        let ga = linspace(0.0, 6.0, 61);
        let wa = linspace(0.0, 1.0, 11);
        let locus = ep2_locus(1.0f64, 7.0, &ga, &wa).unwrap();
        let hit = locus
            .iter()
            .flatten()
            .any(|&(g, w)| w < 1e-12 && (g - 3.0).abs() < 1e-9);
        assert!(hit);
    }

    #[test]
    fn no_ep_is_not_on_the_locus() {
        // (g=4, W=0): roots 0 and +-sqrt(7) - 4i are distinct.
        assert!(real_discriminant(4.0f64, 0.0, 1.0, 7.0).abs() > 1.0);
    }

    #[test]
    fn empty_region_gives_empty_locus() {
        assert!(ep2_locus::<f64>(1.0, 7.0, &[], &[1.0]).unwrap().is_empty());
        // Deep in the ATS region there is no sign change.
        let ga = linspace(0.0, 0.5, 5);
        let wa = linspace(9.0, 10.0, 5);
        assert!(ep2_locus(1.0, 7.0, &ga, &wa).unwrap().is_empty());
    }

    #[test]
    fn bare_grid_stops_short_of_the_cusp() {
        // Documents why the default contour is refined.
        let ga = linspace(0.0, 6.0, 121);
        let ep = ep3_analytic(1.0f64, 7.0).unwrap();
        let nearest = |locus: Vec<Polyline<f64>>| {
            locus
                .iter()
                .flatten()
                .map(|&(g, w)| ((g - ep.g_ep3).powi(2) + (w - ep.omega_ep3).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        let coarse = nearest(ep2_locus_refined(1.0, 7.0, &ga, &ga, 1).unwrap());
        let fine = nearest(ep2_locus(1.0, 7.0, &ga, &ga).unwrap());
        assert!(fine < coarse);
        assert!(ep2_locus_refined(1.0, 7.0, &ga, &ga, 0).is_err());
    }

    #[test]
    fn subdivision_keeps_original_nodes() {
        let s = subdivide(&[0.0, 1.0, 3.0], 4);
        assert_eq!(s, [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    #[test]
    fn csv_round_trip() {
        let locus = vec![vec![(1.0, 2.0), (1.5, 2.25)], vec![(3.0, 0.1)]];
        let mut buf = Vec::new();
        write_locus_csv(&locus, &mut buf).unwrap();
        let back: Vec<(f64, f64)> = read_locus_csv(buf.as_slice()).unwrap();
        assert_eq!(back, locus.concat());
    }
}
