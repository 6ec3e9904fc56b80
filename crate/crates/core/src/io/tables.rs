//! Text formats: the energy CSV, the boundary-record CSV and the
//! boundary-data file. Numbers are written in shortest round-trip form, so
//! reading a file back reproduces the values bit for bit.

use crate::bounded::{BoundaryData, BoundaryHistory, BoundaryRecord};
use crate::diagnostics::EnergyRecord;

pub fn energy_csv(records: &[EnergyRecord]) -> String {
    let mut s = String::from(EnergyRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        let v: Vec<String> = r.values().iter().map(|x| x.to_string()).collect();
        s.push_str(&v.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_energy_csv(text: &str) -> Result<Vec<EnergyRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == EnergyRecord::CSV_HEADER => {}
        other => return Err(format!("energy CSV header must be '{}', got '{}'", EnergyRecord::CSV_HEADER, other.unwrap_or(""))),
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if v.len() == 10 => out.push(EnergyRecord::from_values(v.try_into().expect("10 values"))),
            _ => return Err(format!("energy CSV line {}: expected 10 numbers, got '{line}'", k + 2)),
        }
    }
    Ok(out)
}

pub const BOUNDARY_CSV_HEADER: &str = "t,node,length,hx,hy,hz,dnx,dny,dnz";

pub fn boundary_csv(history: &BoundaryHistory) -> String {
    let mut s = String::from(BOUNDARY_CSV_HEADER);
    s.push('\n');
    for r in &history.records {
        for (k, len) in history.lengths.iter().enumerate() {
            let (h, dn) = (r.h[k], r.normal_derivative[k]);
            s.push_str(&format!("{},{k},{len},{},{},{},{},{},{}\n", r.t, h[0], h[1], h[2], dn[0], dn[1], dn[2]));
        }
    }
    s
}

pub fn parse_boundary_csv(text: &str) -> Result<BoundaryHistory, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(BOUNDARY_CSV_HEADER) {
        return Err(format!("boundary CSV header must be '{BOUNDARY_CSV_HEADER}'"));
    }
    let mut hist = BoundaryHistory::default();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        let v = match v {
            Ok(v) if v.len() == 9 => v,
            _ => return Err(format!("boundary CSV line {}: expected 9 numbers", k + 2)),
        };
        let node = v[1] as usize;
        if node == 0 {
            hist.records.push(BoundaryRecord { t: v[0], h: Vec::new(), normal_derivative: Vec::new() });
        }
        let first = hist.records.len() == 1;
        let rec = hist.records.last_mut().ok_or_else(|| format!("boundary CSV line {}: records must start at node 0", k + 2))?;
        if node != rec.h.len() || v[0] != rec.t {
            return Err(format!("boundary CSV line {}: nodes out of order", k + 2));
        }
        if first {
            hist.lengths.push(v[2]);
        }
        rec.h.push([v[3], v[4], v[5]]);
        rec.normal_derivative.push([v[6], v[7], v[8]]);
    }
    if hist.records.iter().any(|r| r.h.len() != hist.lengths.len()) {
        return Err("boundary CSV: every record must list the same nodes".into());
    }
    Ok(hist)
}

/// Boundary-data file: lines `t node hx hy hz`, grouped by increasing `t`,
/// nodes numbered counterclockwise from the origin; `#` starts a comment.
pub fn boundary_data_text(h: &BoundaryData) -> String {
    let mut s = String::from("# t node hx hy hz\n");
    for (t, row) in h.times().iter().zip(h.values()) {
        for (k, v) in row.iter().enumerate() {
            s.push_str(&format!("{t} {k} {} {} {}\n", v[0], v[1], v[2]));
        }
    }
    s
}

pub fn parse_boundary_data(text: &str) -> Result<BoundaryData, String> {
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<[f64; 3]>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || format!("boundary data line {}: expected 't node hx hy hz', got '{line}'", lineno + 1);
        if f.len() != 5 {
            return Err(bad());
        }
        let t: f64 = f[0].parse().map_err(|_| bad())?;
        let node: usize = f[1].parse().map_err(|_| bad())?;
        let mut v = [0.0; 3];
        for c in 0..3 {
            v[c] = f[2 + c].parse().map_err(|_| bad())?;
        }
        if times.last() != Some(&t) {
            times.push(t);
            values.push(Vec::new());
        }
        let row = values.last_mut().expect("row pushed above");
        if node != row.len() {
            return Err(format!("boundary data line {}: expected node {}, got {node}", lineno + 1, row.len()));
        }
        row.push(v);
    }
    BoundaryData::new(times, values).map_err(|e| e.to_string())
}
