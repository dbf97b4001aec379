//! CSV and TOML artifacts of a run.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::gauge::compute_gauge;
use crate::grid::RadialGrid;
use crate::profiles::{EquivariantState, ModelParams};

/// Column order of `timeseries.csv`.
pub const TIMESERIES_HEADER: &str = "t,sigma,theta,x_norm_z,l2_z,E,Estar,dissipation,forcing,residual,V_L2,V1_sup,\
V2_L2,Wstar_over_r_L2,Wstar1_over_r2_sup,Wstar2_over_r_L2,weighted_z_accumulator,A1_ok,A2_ok";

/// Column order of the `profile_t<t>.csv` snapshots.
pub const PROFILE_HEADER: &str = "r,phi1,phi2,phi3,W,V,q_re,q_im,v_re,v_im";

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)
}

/// Writes through a temporary file and renames, so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write_file(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn timeseries_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 400);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let cols = [
            r.t,
            r.sigma,
            r.theta,
            r.x_norm_z,
            r.l2_z,
            r.energy_e,
            r.energy_estar,
            r.dissipation,
            r.oseen_forcing,
            r.energy_identity_residual,
            r.v_l2,
            r.v1_sup,
            r.v2_l2,
            r.wstar_over_r_l2,
            r.wstar1_over_r2_sup,
            r.wstar2_over_r_l2,
            r.weighted_z_accumulator,
        ];
        let row: Vec<String> = cols.iter().map(|&x| num(x)).collect();
        out.push_str(&row.join(","));
        out.push_str(if r.bootstrap_a1_ok { ",1" } else { ",0" });
        out.push_str(if r.bootstrap_a2_ok { ",1\n" } else { ",0\n" });
    }
    out
}

pub fn profile_csv(state: &EquivariantState, grid: &RadialGrid, params: &ModelParams) -> Result<String> {
    let g = compute_gauge(state, params, grid)?;
    let mut out = String::with_capacity(grid.len() * 250);
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for i in 0..grid.len() {
        let p = state.phi[i];
        let cols = [
            grid.nodes()[i],
            p.x,
            p.y,
            p.z,
            state.w[i],
            state.v_vert[i],
            g.q[i].re,
            g.q[i].im,
            g.v[i].re,
            g.v[i].im,
        ];
        let row: Vec<String> = cols.iter().map(|&x| num(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn profile_file_name(t: f64) -> String {
    format!("profile_t{t:.4}.csv")
}

/// Reads one column of a headered CSV as `(t, value)` pairs; the first column is time.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let text = super::config::read_text(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidArgument(format!("{} is empty", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = names
        .iter()
        .position(|&n| n == column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column '{column}' in {}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |j: usize| -> Result<f64> {
            fields
                .get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::ConfigParse { line: k + 2, message: format!("bad value in column {}", j + 1) })
        };
        out.push((parse(0)?, parse(idx)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
