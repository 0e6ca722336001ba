//! Row-wise spectral transforms and column-wise centering/scaling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::PreprocessSpec;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::DenseMatrix;
use crate::stats::{ColumnStats, NeumaierSum};

/// Standard normal variate: each row shifted to mean 0 and divided by its
/// `n − 1` standard deviation.
pub fn snv(x: &DenseMatrix) -> Result<DenseMatrix> {
    let k = x.cols();
    if k < 2 {
        return Err(Error::invalid("SNV needs at least two columns"));
    }
    let mut out = x.clone();
    for i in 0..x.rows() {
        let row = out.row_mut(i);
        let mean = row.iter().copied().collect::<NeumaierSum>().value() / k as f64;
        let ss = row
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .collect::<NeumaierSum>()
            .value();
        let std = (ss / (k as f64 - 1.0)).sqrt();
        if std <= 1e-14 * mean.abs() || std == 0.0 {
            return Err(Error::ZeroStdRow { row: i });
        }
        for v in row.iter_mut() {
            *v = (*v - mean) / std;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavGolSpec {
    pub window: usize,
    pub poly_order: usize,
    pub deriv_order: usize,
    /// Channel spacing; derivatives are divided by `delta^deriv_order`.
    pub delta: f64,
}

impl SavGolSpec {
    pub fn new(window: usize, poly_order: usize, deriv_order: usize) -> Result<Self> {
        let s = Self {
            window,
            poly_order,
            deriv_order,
            delta: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::invalid(format!(
                "Savitzky-Golay window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.poly_order >= self.window {
            return Err(Error::invalid("polynomial order must be below the window size"));
        }
        if self.deriv_order > self.poly_order {
            return Err(Error::invalid("derivative order cannot exceed the polynomial order"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid("channel spacing must be positive"));
        }
        Ok(())
    }

    fn half(&self) -> usize {
        self.window / 2
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    /// Drop positions without a full window; output is `window − 1`
    /// columns narrower.
    #[default]
    Shrink,
    /// Mirror the signal about its end samples (edge sample not repeated).
    Reflect,
}

/// Filter taps for the window centred at offset 0: the `deriv_order`-th
/// derivative at 0 of the least-squares polynomial fitted on offsets
/// `−h..=h`.
pub fn savgol_coefficients(spec: &SavGolSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let h = spec.half() as i64;
    let terms = spec.poly_order + 1;
    // Vandermonde V: window × terms
    let v = DenseMatrix::from_fn(spec.window, terms, |i, p| ((i as i64 - h) as f64).powi(p as i32));
    let vt = v.transpose();
    let normal = vt.matmul(&v)?;
    // (VᵀV)⁻¹Vᵀ, one row per polynomial coefficient
    let hat = linalg::solve(&normal, &vt)?;
    let fact: f64 = (1..=spec.deriv_order).map(|f| f as f64).product();
    let scale = fact / spec.delta.powi(spec.deriv_order as i32);
    Ok(hat.row(spec.deriv_order).iter().map(|c| c * scale).collect())
}

pub fn savgol_apply(x: &DenseMatrix, spec: &SavGolSpec, edge: EdgePolicy) -> Result<DenseMatrix> {
    let taps = savgol_coefficients(spec)?;
    let k = x.cols();
    if k < spec.window {
        return Err(Error::invalid(format!(
            "{k} columns is narrower than the Savitzky-Golay window {}",
            spec.window
        )));
    }
    let h = spec.half();
    let out_cols = match edge {
        EdgePolicy::Shrink => k - spec.window + 1,
        EdgePolicy::Reflect => k,
    };
    let mut out = DenseMatrix::zeros(x.rows(), out_cols);
    for i in 0..x.rows() {
        let src = x.row(i);
        let dst = out.row_mut(i);
        match edge {
            EdgePolicy::Shrink => {
                for (j, d) in dst.iter_mut().enumerate() {
                    *d = linalg::dot(&taps, &src[j..j + spec.window]);
                }
            }
            EdgePolicy::Reflect => {
                let last = k as i64 - 1;
                for (j, d) in dst.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (t, &c) in taps.iter().enumerate() {
                        let mut idx = j as i64 + t as i64 - h as i64;
                        if idx < 0 {
                            idx = -idx;
                        } else if idx > last {
                            idx = 2 * last - idx;
                        }
                        acc += c * src[idx as usize];
                    }
                    *d = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Reflectance to pseudo-absorbance, `−ln(x)`.
pub fn to_pseudo_absorbance(x: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = x.clone();
    let k = x.cols();
    for (pos, v) in out.as_mut_slice().iter_mut().enumerate() {
        if *v <= 0.0 {
            return Err(Error::Domain {
                row: pos / k,
                col: pos % k,
                value: *v,
            });
        }
        *v = -v.ln();
    }
    Ok(out)
}

/// Column `j` becomes `(x_j − center·mean_j) / (scale ? std_j : 1)`.
pub fn apply_center_scale(
    x: &DenseMatrix,
    stats: &ColumnStats,
    center: bool,
    scale: bool,
    unit_for_zero: bool,
) -> Result<DenseMatrix> {
    if stats.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            what: "column count",
            expected: stats.len(),
            found: x.cols(),
        });
    }
    if !center && !scale {
        return Ok(x.clone());
    }
    let divisors = if scale {
        Some(stats.scale_divisors(unit_for_zero)?)
    } else {
        None
    };
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            if center {
                *v -= stats.mean[j];
            }
            if let Some(d) = &divisors {
                *v /= d[j];
            }
        }
    }
    Ok(out)
}

/// One row-wise transform in a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowStep {
    Snv,
    SavGol { spec: SavGolSpec, edge: EdgePolicy },
    Absorbance,
}

impl RowStep {
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            RowStep::Snv => snv(x),
            RowStep::SavGol { spec, edge } => savgol_apply(x, spec, *edge),
            RowStep::Absorbance => to_pseudo_absorbance(x),
        }
    }
}

/// Ordered row-wise transforms plus the column flags named in the same
/// pipeline string, e.g. `snv|savgol:w=7,p=2,d=2|center_x|scale_x`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub steps: Vec<RowStep>,
    pub flags: PreprocessSpec,
}

impl Pipeline {
    /// Applies the row-wise steps left to right.
    pub fn apply_rows(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut cur = x.clone();
        for s in &self.steps {
            cur = s.apply(&cur)?;
        }
        Ok(cur)
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Pipeline::default();
        for tok in s.split('|').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, args) = tok.split_once(':').unwrap_or((tok, ""));
            match name {
                "snv" => p.steps.push(RowStep::Snv),
                "absorbance" | "pseudo_absorbance" => p.steps.push(RowStep::Absorbance),
                "savgol" | "sg" => p.steps.push(parse_savgol(args)?),
                "center_x" | "cx" => p.flags.center_x = true,
                "center_y" | "cy" => p.flags.center_y = true,
                "scale_x" | "sx" => p.flags.scale_x = true,
                "scale_y" | "sy" => p.flags.scale_y = true,
                other => return Err(Error::invalid(format!("unknown pipeline step {other:?}"))),
            }
        }
        Ok(p)
    }
}

fn parse_savgol(args: &str) -> Result<RowStep> {
    let (mut w, mut p, mut d, mut delta) = (7usize, 2usize, 0usize, 1.0f64);
    let mut edge = EdgePolicy::Shrink;
    for kv in args.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("savgol argument {kv:?} is not key=value")))?;
        let bad = || Error::invalid(format!("bad savgol value {kv:?}"));
        match k {
            "w" | "window" => w = v.parse().map_err(|_| bad())?,
            "p" | "poly" => p = v.parse().map_err(|_| bad())?,
            "d" | "deriv" => d = v.parse().map_err(|_| bad())?,
            "delta" => delta = v.parse().map_err(|_| bad())?,
            "edge" => {
                edge = match v {
                    "shrink" => EdgePolicy::Shrink,
                    "reflect" => EdgePolicy::Reflect,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(Error::invalid(format!("unknown savgol key {k:?}"))),
        }
    }
    let spec = SavGolSpec::new(w, p, d)?.with_delta(delta)?;
    Ok(RowStep::SavGol { spec, edge })
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut toks: Vec<String> = self
            .steps
            .iter()
            .map(|s| match s {
                RowStep::Snv => "snv".to_string(),
                RowStep::Absorbance => "absorbance".to_string(),
                RowStep::SavGol { spec, edge } => {
                    let mut t = format!("savgol:w={},p={},d={}", spec.window, spec.poly_order, spec.deriv_order);
                    if spec.delta != 1.0 {
                        t.push_str(&format!(",delta={:?}", spec.delta));
                    }
                    if *edge == EdgePolicy::Reflect {
                        t.push_str(",edge=reflect");
                    }
                    t
                }
            })
            .collect();
        let fl = self.flags;
        for (on, name) in [
            (fl.center_x, "center_x"),
            (fl.center_y, "center_y"),
            (fl.scale_x, "scale_x"),
            (fl.scale_y, "scale_y"),
        ] {
            if on {
                toks.push(name.to_string());
            }
        }
        f.write_str(&toks.join("|"))
    }
}
