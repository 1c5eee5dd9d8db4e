//! CSV serialization shared by the command-line driver and the plotting
//! scripts. Floats are written with 17 significant digits, a header row is
//! always present and every row ends in a newline.

use std::io::{self, Write};

use crate::chain::{ChainParams, Distribution};
use crate::deterministic::BifurcationDiagram;
use crate::escape::ComparisonRow;
use crate::sim::Heatmap;

/// 17 significant digits in scientific notation, locale-free.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// `i,x,prob` and, when given, a trailing `method` column.
pub fn write_distribution<W: Write>(w: &mut W, dist: &Distribution, method: Option<&str>) -> io::Result<()> {
    match method {
        Some(_) => writeln!(w, "i,x,prob,method")?,
        None => writeln!(w, "i,x,prob")?,
    }
    for (i, p) in dist.probs().iter().enumerate() {
        write!(w, "{i},{},{}", fmt_f64(dist.x(i)), fmt_f64(*p))?;
        match method {
            Some(m) => writeln!(w, ",{m}")?,
            None => writeln!(w)?,
        }
    }
    Ok(())
}

/// Per-round rates next to the scaled rates at `x = i / N`.
pub fn write_rates<W: Write>(w: &mut W, params: &ChainParams) -> io::Result<()> {
    writeln!(w, "i,x,w_up,w_down,omega_up,omega_down")?;
    let m = params.model();
    let (up, down) = params.rate_tables();
    for i in 0..=params.n {
        let x = i as f64 / params.n as f64;
        let (ou, od) = m.rates(x);
        writeln!(
            w,
            "{i},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(up[i]),
            fmt_f64(down[i]),
            fmt_f64(ou),
            fmt_f64(od)
        )?;
    }
    Ok(())
}

/// Header `x,<mu_1>,...,<mu_k>`, then one row per state.
pub fn write_heatmap<W: Write>(w: &mut W, h: &Heatmap) -> io::Result<()> {
    write!(w, "x")?;
    for mu in &h.mus {
        write!(w, ",{}", fmt_f64(*mu))?;
    }
    writeln!(w)?;
    let n = h.log_occupancy.len().saturating_sub(1).max(1);
    for (i, row) in h.log_occupancy.iter().enumerate() {
        write!(w, "{}", fmt_f64(i as f64 / n as f64))?;
        for v in row {
            write!(w, ",{}", fmt_f64(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `branch_id,mu,x,stability`, sorted by branch then `mu`.
pub fn write_diagram<W: Write>(w: &mut W, d: &BifurcationDiagram) -> io::Result<()> {
    writeln!(w, "branch_id,mu,x,stability")?;
    for b in &d.branches {
        for p in &b.points {
            writeln!(w, "{},{},{},{}", b.id, fmt_f64(p.mu), fmt_f64(p.x), p.stability.as_str())?;
        }
    }
    Ok(())
}

/// `x,phi,psi,diff,q`.
pub fn write_comparison<W: Write>(w: &mut W, rows: &[ComparisonRow]) -> io::Result<()> {
    writeln!(w, "x,phi,psi,diff,q")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.x),
            fmt_f64(r.phi),
            fmt_f64(r.psi),
            fmt_f64(r.diff),
            fmt_f64(r.q)
        )?;
    }
    Ok(())
}

/// Generic numeric table: a header and rows of floats, with an optional
/// trailing text column per row.
pub fn write_table<W: Write>(w: &mut W, header: &[&str], rows: &[(Vec<f64>, Option<String>)]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for (vals, tag) in rows {
        let cells: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        write!(w, "{}", cells.join(","))?;
        match tag {
            Some(t) => writeln!(w, ",{t}")?,
            None => writeln!(w)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PayoffMatrix;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn distribution_csv() {
        let d = Distribution::new(vec![0.25, 0.5, 0.25]).unwrap();
        let mut out = Vec::new();
        write_distribution(&mut out, &d, Some("exact")).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,x,prob,method");
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n'));
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[0], "1");
        assert_eq!(cells[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(cells[3], "exact");
    }

    #[test]
    fn rates_csv_scaling_columns() {
        let p = ChainParams::new(PayoffMatrix::new(4., 1., 3., 2.).unwrap(), 4, 0.1).unwrap();
        let mut out = Vec::new();
        write_rates(&mut out, &p).unwrap();
        let text = String::from_utf8(out).unwrap();
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!((v[2] - v[4]).abs() <= 1e-14);
            assert!((v[3] - v[5]).abs() <= 1e-14);
        }
        let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[2], 0.1);
        assert_eq!(first[3], 0.0);
    }

    #[test]
    fn table_with_tag() {
        let mut out = Vec::new();
        write_table(&mut out, &["a", "b", "tag"], &[(vec![1.0, 2.0], Some("t".into()))]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().ends_with(",t"));
    }
}
