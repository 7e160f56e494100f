//! CSV emission helpers with fixed 12-significant-digit decimal formatting,
//! so repeated runs with the same inputs emit identical bytes.

use crate::grid::Path;
use crate::procgen::TanakaPaths;
use crate::xform::TimeChange;

/// Format with 12 significant digits in plain decimal notation.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 40) as usize;
    format!("{x:.decimals$}")
}

/// `t,value` rows for a single path.
pub fn path_to_csv(path: &Path) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in path.grid().times().zip(path.values()) {
        out.push_str(&format_sig12(t));
        out.push(',');
        out.push_str(&format_sig12(*v));
        out.push('\n');
    }
    out
}

/// `t,absB,L,M` rows for a Tanaka decomposition sample.
pub fn tanaka_to_csv(paths: &TanakaPaths) -> String {
    let mut out = String::from("t,absB,L,M\n");
    let grid = paths.abs.grid();
    for i in 0..grid.len() {
        out.push_str(&format_sig12(grid.time(i)));
        out.push(',');
        out.push_str(&format_sig12(paths.abs.value(i)));
        out.push(',');
        out.push_str(&format_sig12(paths.local_time.value(i)));
        out.push(',');
        out.push_str(&format_sig12(paths.martingale.value(i)));
        out.push('\n');
    }
    out
}

/// `t,s,K` rows for the lower-triangular kernel table (cell midpoints).
pub fn kernel_grid_to_csv(kg: &crate::frackernel::KernelGrid) -> String {
    let mut out = String::from("t,s,K\n");
    let grid = kg.grid();
    let dt = grid.dt();
    for i in 1..grid.len() {
        for j in 0..i {
            out.push_str(&format_sig12(grid.time(i)));
            out.push(',');
            out.push_str(&format_sig12((j as f64 + 0.5) * dt));
            out.push(',');
            out.push_str(&format_sig12(kg.value(i, j)));
            out.push('\n');
        }
    }
    out
}

/// `t,nu,C` rows for a time change: the change itself and its
/// right-continuous inverse evaluated at the grid times.
pub fn time_change_to_csv(tc: &TimeChange) -> String {
    let mut out = String::from("t,nu,C\n");
    let grid = tc.grid();
    for i in 0..grid.len() {
        let t = grid.time(i);
        out.push_str(&format_sig12(t));
        out.push(',');
        out.push_str(&format_sig12(tc.nu(i)));
        out.push(',');
        out.push_str(&format_sig12(tc.inverse_at(t)));
        out.push('\n');
    }
    out
}
