//! File interchange: CSV and binary exports of states, phase-space grids,
//! trajectories and tomograms, plus JSON for estimates and reports.
//!
//! All schemas are stable and documented in the book's CLI chapter:
//!
//! * state CSV: `q,re_psi,im_psi`
//! * phase-space CSV: `q,p,value`
//! * phase-space binary: magic `MOYALPS1`, little-endian u64 `n_q`, u64
//!   `n_p`, f64 `dq` (row spacing), f64 `dp`, f64 `hbar`, then row-major
//!   f64 values
//! * trajectory CSV: `t,q,p,provenance,hbar,epsilon`
//! * norm-series CSV: `t,norm`
//! * tomogram CSV: `theta,q,value`

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::states::WaveFunction;
use crate::tomography::Tomogram;
use crate::trajectory::{Provenance, Trajectory};
use crate::weyl::PhaseSpaceFunction;
use ndarray::Array2;
use std::io::{BufRead, Write};

const PSF_MAGIC: &[u8; 8] = b"MOYALPS1";

pub fn write_state_csv(w: &mut impl Write, psi: &WaveFunction) -> Result<()> {
    writeln!(w, "q,re_psi,im_psi").map_err(io_err)?;
    for (i, amp) in psi.amplitudes.iter().enumerate() {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", psi.lattice.q(i), amp.re, amp.im)
            .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_phase_space_csv(w: &mut impl Write, f: &PhaseSpaceFunction) -> Result<()> {
    writeln!(w, "q,p,value").map_err(io_err)?;
    for m in 0..f.lattice.n_half() {
        for j in 0..f.lattice.n_points() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e}",
                f.lattice.half_point(m),
                f.lattice.p(j),
                f.values[[m, j]].re
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Compact binary layout for real phase-space grids.
pub fn write_phase_space_binary(w: &mut impl Write, f: &PhaseSpaceFunction) -> Result<()> {
    if f.imag_residue() > 1e-6 * (1.0 + f.max_abs()) {
        return Err(Error::Config(
            "binary phase-space export is defined for real-valued grids".into(),
        ));
    }
    w.write_all(PSF_MAGIC).map_err(io_err)?;
    let n_q = f.lattice.n_half() as u64;
    let n_p = f.lattice.n_points() as u64;
    w.write_all(&n_q.to_le_bytes()).map_err(io_err)?;
    w.write_all(&n_p.to_le_bytes()).map_err(io_err)?;
    for val in [f.lattice.dq() / 2.0, f.lattice.dp(), f.lattice.hbar()] {
        w.write_all(&val.to_le_bytes()).map_err(io_err)?;
    }
    for m in 0..f.lattice.n_half() {
        for j in 0..f.lattice.n_points() {
            w.write_all(&f.values[[m, j]].re.to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Header fields of the binary phase-space layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceHeader {
    pub n_q: u64,
    pub n_p: u64,
    pub dq: f64,
    pub dp: f64,
    pub hbar: f64,
}

/// Read back the binary layout (header plus row-major values).
pub fn read_phase_space_binary(r: &mut impl std::io::Read) -> Result<(PhaseSpaceHeader, Array2<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != PSF_MAGIC {
        return Err(Error::Config("bad phase-space binary magic".into()));
    }
    let mut b8 = [0u8; 8];
    let mut read_u64 = |r: &mut dyn std::io::Read| -> Result<u64> {
        r.read_exact(&mut b8).map_err(io_err)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n_q = read_u64(r)?;
    let n_p = read_u64(r)?;
    let read_f64 = |r: &mut dyn std::io::Read| -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io_err)?;
        Ok(f64::from_le_bytes(b))
    };
    let dq = read_f64(r)?;
    let dp = read_f64(r)?;
    let hbar = read_f64(r)?;
    let mut values = Array2::zeros((n_q as usize, n_p as usize));
    for m in 0..n_q as usize {
        for j in 0..n_p as usize {
            values[[m, j]] = read_f64(r)?;
        }
    }
    Ok((PhaseSpaceHeader { n_q, n_p, dq, dp, hbar }, values))
}

fn provenance_fields(p: &Provenance) -> (&'static str, f64, f64) {
    match p {
        Provenance::Classical => ("classical", f64::NAN, f64::NAN),
        Provenance::Quantum { hbar } => ("quantum", *hbar, 0.0),
        Provenance::Smeared { hbar, epsilon } => ("smeared", *hbar, *epsilon),
    }
}

pub fn write_trajectory_csv(w: &mut impl Write, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,q,p,provenance,hbar,epsilon").map_err(io_err)?;
    let (label, hbar, eps) = provenance_fields(&traj.provenance);
    for (&t, &(q, p)) in traj.times.iter().zip(traj.points.iter()) {
        writeln!(w, "{t:.17e},{q:.17e},{p:.17e},{label},{hbar},{eps}").map_err(io_err)?;
    }
    Ok(())
}

pub fn write_norm_series_csv(w: &mut impl Write, series: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "t,norm").map_err(io_err)?;
    for &(t, v) in series {
        writeln!(w, "{t:.17e},{v:.17e}").map_err(io_err)?;
    }
    Ok(())
}

pub fn write_tomogram_csv(w: &mut impl Write, tom: &Tomogram) -> Result<()> {
    writeln!(w, "theta,q,value").map_err(io_err)?;
    for (a, &theta) in tom.thetas.iter().enumerate() {
        for (i, &q) in tom.q_values.iter().enumerate() {
            writeln!(w, "{theta:.17e},{q:.17e},{:.17e}", tom.values[[a, i]]).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Import a tomogram from the `theta,q,value` schema (rows grouped by θ,
/// both grids uniform ascending).  The lattice names the reconstruction
/// target.
pub fn read_tomogram_csv(r: &mut impl BufRead, lattice: &Lattice) -> Result<Tomogram> {
    let mut thetas: Vec<f64> = Vec::new();
    let mut q_values: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.starts_with("theta")) {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "tomogram csv line {}: expected theta,q,value",
                lineno + 1
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| {
                Error::Config(format!("tomogram csv line {}: bad {what}: {e}", lineno + 1))
            })
        };
        let theta = parse(parts[0], "theta")?;
        let q = parse(parts[1], "q")?;
        let v = parse(parts[2], "value")?;
        let is_new_theta = thetas.last().map(|&t| (t - theta).abs() > 1e-12).unwrap_or(true);
        if is_new_theta {
            thetas.push(theta);
            rows.push(Vec::new());
        }
        if thetas.len() == 1 {
            q_values.push(q);
        }
        rows.last_mut().unwrap().push(v);
    }
    if thetas.is_empty() || q_values.len() < 2 {
        return Err(Error::Config("tomogram csv holds no data".into()));
    }
    let n_q = q_values.len();
    for (a, row) in rows.iter().enumerate() {
        if row.len() != n_q {
            return Err(Error::Config(format!(
                "tomogram csv: slice {a} has {} samples, expected {n_q}",
                row.len()
            )));
        }
    }
    let mut values = Array2::zeros((thetas.len(), n_q));
    for (a, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            values[[a, i]] = v;
        }
    }
    Ok(Tomogram { thetas, q_values, values, lattice: lattice.clone() })
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("json: {e}")))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("io: {e}"))
}
