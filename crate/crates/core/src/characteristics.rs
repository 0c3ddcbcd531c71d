//! Eighteen descriptive statistics of an interaction matrix, used as
//! dataset features for clustering and for correlation with performance.
//!
//! Definitions:
//!
//! * `SpaceSize = Nu·Ni`, `Shape = Nu/Ni`, `Density = Nr/(Nu·Ni)`.
//! * `Rpu = Nr/Nu`, `Rpi = Nr/Ni`.
//! * Gini over ascending counts `c`: `Σ (2i − n − 1)·c_i / (n·Σc)`.
//! * Item popularity `φ(i) = count(i)/Nr`. `APB`/`StPB` are the mean and
//!   standard deviation over users of the mean φ of each user's items;
//!   `SkPB`/`KuPB` are the skewness and excess kurtosis of φ over items.
//! * Long tail: with items sorted by descending count, the longest suffix
//!   holding at most 20% of interactions. `LT*` are the moments of the
//!   counts in that suffix (0 when it is empty).
//!
//! All moments use the population (1/n) convention; the skewness and
//! kurtosis of a constant vector are 0.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryMatrix, InteractionSet};
use crate::{Error, Result};

pub const LONG_TAIL_SHARE: f64 = 0.2;

pub const NAMES: [&str; 18] = [
    "SpaceSize", "Shape", "Density", "Nu", "Ni", "Nr", "Rpu", "Rpi", "Giniu", "Ginii", "APB", "StPB", "SkPB",
    "KuPB", "LTavg", "LTstd", "LTsk", "LTku",
];

#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsVector {
    pub SpaceSize: f64,
    pub Shape: f64,
    pub Density: f64,
    pub Nu: f64,
    pub Ni: f64,
    pub Nr: f64,
    pub Rpu: f64,
    pub Rpi: f64,
    pub Giniu: f64,
    pub Ginii: f64,
    pub APB: f64,
    pub StPB: f64,
    pub SkPB: f64,
    pub KuPB: f64,
    pub LTavg: f64,
    pub LTstd: f64,
    pub LTsk: f64,
    pub LTku: f64,
}

impl CharacteristicsVector {
    /// Values in [`NAMES`] order.
    pub fn to_array(&self) -> [f64; 18] {
        [
            self.SpaceSize,
            self.Shape,
            self.Density,
            self.Nu,
            self.Ni,
            self.Nr,
            self.Rpu,
            self.Rpi,
            self.Giniu,
            self.Ginii,
            self.APB,
            self.StPB,
            self.SkPB,
            self.KuPB,
            self.LTavg,
            self.LTstd,
            self.LTsk,
            self.LTku,
        ]
    }

    pub fn from_array(v: [f64; 18]) -> Self {
        CharacteristicsVector {
            SpaceSize: v[0],
            Shape: v[1],
            Density: v[2],
            Nu: v[3],
            Ni: v[4],
            Nr: v[5],
            Rpu: v[6],
            Rpi: v[7],
            Giniu: v[8],
            Ginii: v[9],
            APB: v[10],
            StPB: v[11],
            SkPB: v[12],
            KuPB: v[13],
            LTavg: v[14],
            LTstd: v[15],
            LTsk: v[16],
            LTku: v[17],
        }
    }
}

/// Population mean, standard deviation, skewness and excess kurtosis.
pub fn moments(x: &[f64]) -> (f64, f64, f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Rounding noise around a constant vector.
    if m2 <= (1e-12 * scale).powi(2) {
        return (mean, 0.0, 0.0, 0.0);
    }
    (mean, m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Gini coefficient of non-negative counts.
pub fn gini(counts: &[f64]) -> f64 {
    let n = counts.len();
    let total: f64 = counts.iter().sum();
    if n == 0 || total == 0.0 {
        return 0.0;
    }
    let mut c = counts.to_vec();
    c.sort_by(f64::total_cmp);
    let num: f64 = c
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * v)
        .sum();
    num / (n as f64 * total)
}

/// Counts of the long-tail items: the longest suffix of the descending
/// counts whose sum is at most `share` of the total.
pub fn long_tail(counts: &[f64], share: f64) -> Vec<f64> {
    let mut c = counts.to_vec();
    c.sort_by(|a, b| b.total_cmp(a));
    let limit = share * c.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut start = c.len();
    while start > 0 && acc + c[start - 1] <= limit {
        acc += c[start - 1];
        start -= 1;
    }
    c.split_off(start)
}

pub fn compute_characteristics(data: &InteractionSet) -> Result<CharacteristicsVector> {
    characteristics_of_matrix(&data.to_matrix())
}

pub fn characteristics_of_matrix(m: &BinaryMatrix) -> Result<CharacteristicsVector> {
    let (nu, ni) = (m.n_users(), m.n_items());
    if nu < 2 || ni < 2 {
        return Err(Error::invalid(format!(
            "characteristics need at least 2 users and 2 items, got {nu}×{ni}"
        )));
    }
    let nr = m.nnz() as f64;
    if nr == 0.0 {
        return Err(Error::Empty("no interactions".into()));
    }
    let (nuf, nif) = (nu as f64, ni as f64);
    let user_counts: Vec<f64> = m.user_counts().into_iter().map(|c| c as f64).collect();
    let item_counts: Vec<f64> = m.item_counts().into_iter().map(|c| c as f64).collect();
    let phi: Vec<f64> = item_counts.iter().map(|c| c / nr).collect();
    let profile_pop: Vec<f64> = (0..nu as u32)
        .filter(|&u| !m.row(u).is_empty())
        .map(|u| {
            let row = m.row(u);
            row.iter().map(|&i| phi[i as usize]).sum::<f64>() / row.len() as f64
        })
        .collect();
    let (apb, stpb, _, _) = moments(&profile_pop);
    let (_, _, skpb, kupb) = moments(&phi);
    let (ltavg, ltstd, ltsk, ltku) = moments(&long_tail(&item_counts, LONG_TAIL_SHARE));
    Ok(CharacteristicsVector {
        SpaceSize: nuf * nif,
        Shape: nuf / nif,
        Density: nr / (nuf * nif),
        Nu: nuf,
        Ni: nif,
        Nr: nr,
        Rpu: nr / nuf,
        Rpi: nr / nif,
        Giniu: gini(&user_counts),
        Ginii: gini(&item_counts),
        APB: apb,
        StPB: stpb,
        SkPB: skpb,
        KuPB: kupb,
        LTavg: ltavg,
        LTstd: ltstd,
        LTsk: ltsk,
        LTku: ltku,
    })
}

/// One characteristics row per dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsTable {
    pub rows: Vec<(String, CharacteristicsVector)>,
}

impl CharacteristicsTable {
    pub fn labels(&self) -> Vec<String> {
        self.rows.iter().map(|(l, _)| l.clone()).collect()
    }

    /// `dataset,<18 names>` text.
    pub fn to_csv(&self) -> String {
        let mut out = format!("dataset,{}\n", NAMES.join(","));
        for (label, v) in &self.rows {
            out.push_str(label);
            for x in v.to_array() {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(x));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() != 19 || header[1..] != NAMES {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header dataset,{}", NAMES.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            if rec.len() != 19 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 19 fields, got {}", rec.len()),
                });
            }
            let mut v = [0.0; 18];
            for (j, slot) in v.iter_mut().enumerate() {
                *slot = rec[j + 1].trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad value {:?} for {}", &rec[j + 1], NAMES[j]),
                })?;
            }
            rows.push((rec[0].to_string(), CharacteristicsVector::from_array(v)));
        }
        Ok(CharacteristicsTable { rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read(crate::io::read_to_string(path)?.as_bytes())
    }
}
