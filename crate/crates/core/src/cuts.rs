//! Big-M cuts derived from a trained decoder.
//!
//! With `z = Wᵀh + a`, a binary vector `u` is admissible when some latent
//! `h` satisfies `M(u_i - 1) <= z_i <= M u_i` for every coordinate.

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::lp::feasible_point;
use crate::model::{LinConstraint, MilpModel, RowSense, VarSpec};
use crate::net::{encode, Ae4bvParams, BinaryDataset};

/// Tag carried by every row that [`tighten`] adds.
pub const CUT_TAG: &str = "ae4bv-cut";

const MEMBERSHIP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSet {
    pub d: usize,
    pub p: usize,
    #[serde(rename = "M", with = "decimal::real")]
    pub big_m: f64,
    /// d × p, row-major.
    #[serde(rename = "W", with = "decimal::real_matrix")]
    pub w: Vec<Vec<f64>>,
    #[serde(with = "decimal::real_vec")]
    pub a: Vec<f64>,
}

impl CutSet {
    pub fn check(&self) -> Result<()> {
        if self.w.len() != self.d {
            return Err(Error::DimensionMismatch {
                what: "cutset W rows",
                expected: self.d,
                got: self.w.len(),
            });
        }
        if let Some(row) = self.w.iter().find(|r| r.len() != self.p) {
            return Err(Error::DimensionMismatch {
                what: "cutset W columns",
                expected: self.p,
                got: row.len(),
            });
        }
        if self.a.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "cutset a",
                expected: self.p,
                got: self.a.len(),
            });
        }
        if !(self.big_m >= 0.0) || !self.big_m.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "big-M must be finite and >= 0, got {}",
                self.big_m
            )));
        }
        Ok(())
    }

    /// Coefficients of `h` in coordinate `i`: column `i` of W.
    fn column(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.w.iter().enumerate().map(move |(k, row)| (k, row[i]))
    }

    /// `W_iᵀ h + a_i` for every coordinate.
    pub fn scores(&self, h: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|i| self.a[i] + self.column(i).map(|(k, w)| w * h[k]).sum::<f64>())
            .collect()
    }
}

/// `safety · max |W_iᵀ h_n + a_i|` over the encoder features of `data`.
pub fn estimate_m(params: &Ae4bvParams, data: &BinaryDataset, safety: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot estimate M from an empty dataset".into(),
        ));
    }
    if !(safety >= 1.0) {
        return Err(Error::InvalidConfig(format!("safety factor {safety} is below 1")));
    }
    let cs = build_cutset(params, 0.0)?;
    let features = data
        .samples
        .iter()
        .map(|s| encode(params, &s.bits))
        .collect::<Result<Vec<_>>>()?;
    Ok(safety * max_abs_score(&cs, &features))
}

/// Largest `|W_iᵀ h + a_i|` over the given latent vectors.
pub fn max_abs_score(cs: &CutSet, features: &[Vec<f64>]) -> f64 {
    features
        .iter()
        .flat_map(|h| cs.scores(h))
        .fold(0.0, |acc: f64, z| acc.max(z.abs()))
}

/// Copy the decoder weights into a cut set with the given big-M.
pub fn build_cutset(params: &Ae4bvParams, big_m: f64) -> Result<CutSet> {
    let cs = CutSet {
        d: params.latent_dim(),
        p: params.input_dim(),
        big_m,
        w: crate::net::to_rows(&params.decoder_w),
        a: params.decoder_a.to_vec(),
    };
    cs.check()?;
    Ok(cs)
}

/// Rows over `h` alone that encode membership of a fixed `u`. Coordinates
/// whose W column is zero reduce to a constant test on `a_i`; the second
/// return value is false when one of those fails.
fn membership_rows(cs: &CutSet, u: &[u8]) -> (Vec<LinConstraint>, bool) {
    let m = cs.big_m;
    let mut rows = Vec::with_capacity(2 * cs.p);
    let mut constants_ok = true;
    for i in 0..cs.p {
        let lo = m * (f64::from(u[i]) - 1.0) - cs.a[i];
        let hi = m * f64::from(u[i]) - cs.a[i];
        let terms: Vec<(usize, f64)> = cs.column(i).filter(|&(_, w)| w != 0.0).collect();
        if terms.is_empty() {
            constants_ok &= lo <= MEMBERSHIP_TOL && -MEMBERSHIP_TOL <= hi;
            continue;
        }
        rows.push(LinConstraint::new(
            format!("lo{i}"),
            terms.iter().copied(),
            RowSense::Ge,
            lo,
        ));
        rows.push(LinConstraint::new(format!("hi{i}"), terms, RowSense::Le, hi));
    }
    (rows, constants_ok)
}

/// Whether `u` lies in the polytope, with a latent witness when it does.
pub fn contains(cs: &CutSet, u: &[u8]) -> Result<(bool, Option<Vec<f64>>)> {
    cs.check()?;
    if u.len() != cs.p {
        return Err(Error::DimensionMismatch {
            what: "binary vector vs cutset",
            expected: cs.p,
            got: u.len(),
        });
    }
    let (rows, constants_ok) = membership_rows(cs, u);
    if !constants_ok {
        return Ok((false, None));
    }
    if rows.is_empty() {
        return Ok((true, Some(vec![0.0; cs.d])));
    }
    match feasible_point(cs.d, &rows)? {
        Some(h) => Ok((true, Some(h))),
        None => Ok((false, None)),
    }
}

/// Fraction of `data` inside the polytope.
pub fn ppo(cs: &CutSet, data: &BinaryDataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut inside = 0usize;
    for s in &data.samples {
        if contains(cs, &s.bits)?.0 {
            inside += 1;
        }
    }
    Ok(inside as f64 / data.len() as f64)
}

/// Append `d` free latent columns and `2p` cut rows linking them to the
/// binaries listed in `binary_vars` (position `i` is coordinate `u_i`).
pub fn tighten(model: &MilpModel, binary_vars: &[usize], cs: &CutSet) -> Result<MilpModel> {
    cs.check()?;
    if binary_vars.len() != cs.p {
        return Err(Error::LayoutMismatch(format!(
            "cutset has p = {} but {} binaries were mapped",
            cs.p,
            binary_vars.len()
        )));
    }
    let mut seen = vec![false; model.num_vars()];
    for &j in binary_vars {
        if j >= model.num_vars() || !model.vars()[j].is_binary() || seen[j] {
            return Err(Error::LayoutMismatch(format!(
                "column {j} is not a distinct binary of the model"
            )));
        }
        seen[j] = true;
    }
    let mut b = model.clone().into_builder();
    let first = b.num_vars();
    for k in 0..cs.d {
        b.add_var(VarSpec::free(format!("latent[{k}]")));
    }
    let m = cs.big_m;
    for (i, &uj) in binary_vars.iter().enumerate() {
        let z: Vec<(usize, f64)> = cs.column(i).map(|(k, w)| (first + k, w)).collect();
        // Wᵀh + a >= M(u - 1)  <=>  Wᵀh - M u >= -M - a
        b.add_constraint(
            CUT_TAG,
            z.iter().copied().chain([(uj, -m)]),
            RowSense::Ge,
            -m - cs.a[i],
        );
        // Wᵀh + a <= M u  <=>  Wᵀh - M u <= -a
        b.add_constraint(CUT_TAG, z.into_iter().chain([(uj, -m)]), RowSense::Le, -cs.a[i]);
    }
    Ok(b.build())
}
