//! Kernel snapshots: a JSON header line followed by `degree,d,tuple,re,im`
//! records, one per stored component. `tuple` lists `l:k₁ k₂ …` per slot
//! (l 1-based), separated by `|`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ipow;
use super::kernel::{ChaosKernel, Key};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub cutoff: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub total: Option<Vec<i32>>,
}

pub fn write_snapshot<const D: usize, W: Write>(f: &ChaosKernel<D>, cutoff: f64, lambda: f64, mut w: W) -> std::io::Result<()> {
    let h = SnapshotHeader {
        d: D,
        n: f.degree(),
        cutoff,
        lambda,
        total: f.total().map(|t| t.to_vec()),
    };
    writeln!(w, "{}", serde_json::to_string(&h).expect("header serializes"))?;
    let n = f.degree();
    for (ks, blk) in f.iter() {
        for (c, z) in blk.iter().enumerate() {
            let mut slots = Vec::with_capacity(n);
            for (s, k) in ks.iter().enumerate() {
                let l = (c / ipow(D, n - 1 - s)) % D + 1;
                let kk: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                slots.push(format!("{l}:{}", kk.join(" ")));
            }
            writeln!(w, "{n},{D},{},{},{}", slots.join("|"), z.re, z.im)?;
        }
    }
    Ok(())
}

fn bad(line: usize, what: &str) -> Error {
    Error::InvalidParam(format!("snapshot line {line}: {what}"))
}

pub fn read_snapshot<const D: usize, R: BufRead>(r: R) -> Result<(SnapshotHeader, ChaosKernel<D>)> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| bad(1, "missing header"))?
        .map_err(|e| bad(1, &e.to_string()))?;
    let h: SnapshotHeader = serde_json::from_str(&head).map_err(|e| bad(1, &e.to_string()))?;
    if h.d != D {
        return Err(bad(1, "dimension mismatch"));
    }
    let total = match &h.total {
        Some(t) => Some(<[i32; D]>::try_from(t.as_slice()).map_err(|_| bad(1, "bad total momentum"))?),
        None => None,
    };
    let n = h.n;
    let bs = ipow(D, n);
    let mut keys: Vec<Key<D>> = Vec::new();
    let mut vals: Vec<Complex64> = Vec::new();
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line.map_err(|e| bad(no, &e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 || parts[0].parse::<usize>().ok() != Some(n) || parts[1].parse::<usize>().ok() != Some(D) {
            return Err(bad(no, "malformed record"));
        }
        let mut key = Vec::with_capacity(n);
        let mut comp = 0;
        for slot in parts[2].split('|') {
            let (l, k) = slot.split_once(':').ok_or_else(|| bad(no, "malformed slot"))?;
            let l: usize = l.parse().map_err(|_| bad(no, "bad l"))?;
            let k: Vec<i32> = k.split(' ').map(|x| x.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad(no, "bad k"))?;
            if l == 0 || l > D {
                return Err(bad(no, "l out of range"));
            }
            comp = comp * D + (l - 1);
            key.push(<[i32; D]>::try_from(k.as_slice()).map_err(|_| bad(no, "bad k"))?);
        }
        if key.len() != n {
            return Err(bad(no, "wrong tuple length"));
        }
        let key: Key<D> = key.into_boxed_slice();
        if keys.last() != Some(&key) {
            if keys.last().is_some_and(|last| last >= &key) {
                return Err(bad(no, "tuples out of canonical order"));
            }
            keys.push(key);
            vals.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), bs));
        }
        let re: f64 = parts[3].parse().map_err(|_| bad(no, "bad re"))?;
        let im: f64 = parts[4].parse().map_err(|_| bad(no, "bad im"))?;
        let base = vals.len() - bs;
        vals[base + comp] = Complex64::new(re, im);
    }
    Ok((h, ChaosKernel::from_sorted(n, total, keys, vals)))
}
