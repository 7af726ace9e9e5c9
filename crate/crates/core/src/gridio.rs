//! CSV dump of a [`DiscreteMap`].
//!
//! ```text
//! # harmap discrete map v1
//! dims,<n0>,<n1>
//! spacing,<h0>,<h1>
//! ambient_dim,<n>
//! domain,rectangle,<u_min>,<u_max>,<v_min>,<v_max>,<periodic_u>,<periodic_v>
//! solver,<residual>,<converged>,<iterations>
//! i,j,x0,x1,...
//! <i>,<j>,<value>,...
//! ```
//!
//! Annuli write `domain,annulus,<r_min>,<r_max>`. Reals are written with 17
//! significant digits so parsing restores every bit.

use crate::analytic::{DomainShape, DomainSpec};
use crate::grid::TensorGrid;
use crate::solver::DiscreteMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const GRID_HEADER: &str = "# harmap discrete map v1";

#[derive(Debug, Error)]
pub enum GridIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_grid_csv(map: &DiscreteMap) -> String {
    let g = &map.grid;
    let (n0, n1) = g.dims();
    let (h0, h1) = g.spacing();
    let mut out = String::new();
    let _ = writeln!(out, "{GRID_HEADER}");
    let _ = writeln!(out, "dims,{n0},{n1}");
    let _ = writeln!(out, "spacing,{},{}", real(h0), real(h1));
    let _ = writeln!(out, "ambient_dim,{}", map.ambient_dim);
    match map.domain.shape {
        DomainShape::Rectangle {
            u_min,
            u_max,
            v_min,
            v_max,
        } => {
            let _ = writeln!(
                out,
                "domain,rectangle,{},{},{},{},{},{}",
                real(u_min),
                real(u_max),
                real(v_min),
                real(v_max),
                map.domain.periodic_u,
                map.domain.periodic_v
            );
        }
        DomainShape::Annulus { r_min, r_max } => {
            let _ = writeln!(out, "domain,annulus,{},{}", real(r_min), real(r_max));
        }
    }
    let _ = writeln!(
        out,
        "solver,{},{},{}",
        real(map.solver_residual),
        map.converged,
        map.iterations
    );
    out.push_str("i,j");
    for c in 0..map.ambient_dim {
        let _ = write!(out, ",x{c}");
    }
    out.push('\n');
    for k in 0..g.len() {
        let (i, j) = g.ij(k);
        let _ = write!(out, "{i},{j}");
        for x in map.value(i, j) {
            let _ = write!(out, ",{}", real(*x));
        }
        out.push('\n');
    }
    out
}

pub fn read_grid_csv(text: &str) -> Result<DiscreteMap, GridIoError> {
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, Vec<String>), GridIoError> {
        let (n, line) = lines.next().ok_or(GridIoError::Parse {
            line: 0,
            msg: format!("missing `{expect}` line"),
        })?;
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if !expect.is_empty() && fields[0] != expect {
            return Err(GridIoError::Parse {
                line: n + 1,
                msg: format!("expected `{expect}`"),
            });
        }
        Ok((n + 1, fields))
    };
    let perr = |line: usize, msg: &str| GridIoError::Parse {
        line,
        msg: msg.to_string(),
    };
    let num = |line: usize, s: &str| -> Result<f64, GridIoError> {
        s.parse::<f64>().map_err(|_| perr(line, "bad number"))
    };
    let int = |line: usize, s: &str| -> Result<usize, GridIoError> {
        s.parse::<usize>().map_err(|_| perr(line, "bad integer"))
    };
    let flag = |line: usize, s: &str| -> Result<bool, GridIoError> {
        s.parse::<bool>().map_err(|_| perr(line, "bad flag"))
    };

    let (l, head) = next("")?;
    if head.join(",") != GRID_HEADER {
        return Err(perr(l, "missing header"));
    }
    let (l, dims) = next("dims")?;
    if dims.len() != 3 {
        return Err(perr(l, "dims needs two entries"));
    }
    let (n0, n1) = (int(l, &dims[1])?, int(l, &dims[2])?);
    next("spacing")?;
    let (l, ad) = next("ambient_dim")?;
    let ambient_dim = int(l, ad.get(1).ok_or(perr(l, "missing value"))?)?;
    let (l, dom) = next("domain")?;
    let domain = match dom.get(1).map(String::as_str) {
        Some("rectangle") if dom.len() == 8 => DomainSpec {
            shape: DomainShape::Rectangle {
                u_min: num(l, &dom[2])?,
                u_max: num(l, &dom[3])?,
                v_min: num(l, &dom[4])?,
                v_max: num(l, &dom[5])?,
            },
            periodic_u: flag(l, &dom[6])?,
            periodic_v: flag(l, &dom[7])?,
        },
        Some("annulus") if dom.len() == 4 => {
            DomainSpec::annulus(num(l, &dom[2])?, num(l, &dom[3])?)
        }
        _ => return Err(perr(l, "bad domain line")),
    };
    let (l, sol) = next("solver")?;
    if sol.len() != 4 {
        return Err(perr(l, "solver line needs three entries"));
    }
    let (solver_residual, converged, iterations) =
        (num(l, &sol[1])?, flag(l, &sol[2])?, int(l, &sol[3])?);
    next("i")?;

    let cells = |nodes: usize, periodic: bool| {
        if periodic {
            nodes
        } else {
            nodes.saturating_sub(1)
        }
    };
    let resolution = cells(n0, domain.periodic_u);
    let grid = TensorGrid::new(&domain, resolution);
    if grid.dims() != (n0, n1) {
        return Err(perr(l, "dims inconsistent with domain"));
    }
    let mut values = vec![f64::NAN; grid.len() * ambient_dim];
    let mut seen = 0;
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 2 + ambient_dim {
            return Err(perr(n + 1, "wrong column count"));
        }
        let (i, j) = (int(n + 1, f[0])?, int(n + 1, f[1])?);
        if i >= n0 || j >= n1 {
            return Err(perr(n + 1, "node index out of range"));
        }
        let k = grid.index(i, j);
        for c in 0..ambient_dim {
            values[k * ambient_dim + c] = num(n + 1, f[2 + c])?;
        }
        seen += 1;
    }
    if seen != grid.len() {
        return Err(perr(0, "missing nodes"));
    }
    Ok(DiscreteMap {
        domain,
        grid,
        ambient_dim,
        values,
        solver_residual,
        converged,
        iterations,
    })
}
