//! One-dimensional steady-state scans over the coupling ratio or the detuning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::lyapunov_steady_state;
use crate::error::{Error, Result};
use crate::matrices::{diffusion, DriftMode, DriftModel};
use crate::measures::{bogoliubov_occupations, entanglement_report};
use crate::model::{direct_couplings, SystemParams};
use crate::stability::hurwitz_stable;

/// Axis tolerance of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-4;

pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `G+/G-` with `G-` held fixed.
    CouplingRatio,
    /// Cavity-drive detuning `delta`.
    Detuning,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::CouplingRatio => "coupling_ratio",
            SweepAxis::Detuning => "detuning",
        }
    }

    /// 200 uniform points on [0.01, 0.99] for the ratio, 200 log-spaced
    /// points on [0.05, 10] for the detuning.
    pub fn default_grid(&self) -> Vec<f64> {
        let n = DEFAULT_GRID_POINTS;
        match self {
            SweepAxis::CouplingRatio => linspace(0.01, 0.99, n),
            SweepAxis::Detuning => {
                let (a, b) = (0.05f64.ln(), 10f64.ln());
                linspace(a, b, n).into_iter().map(f64::exp).collect()
            }
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Optional measures computed for each stable row. The logarithmic negativity
/// is always computed since the optimum is defined by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub purity: bool,
    pub occupations: bool,
}

impl Default for MeasureSet {
    fn default() -> Self {
        Self {
            purity: true,
            occupations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub params: SystemParams,
    pub g_minus: f64,
    /// `G+` for detuning sweeps; ignored along the ratio axis.
    pub g_plus: f64,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub measures: MeasureSet,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite value".into()));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        if self.axis == SweepAxis::CouplingRatio && self.grid.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidGrid("coupling ratios must lie in (0, 1)".into()));
        }
        self.params.validate()
    }

    /// RWA model at one axis value.
    pub fn model_at(&self, value: f64) -> Result<DriftModel> {
        let mut params = self.params;
        let couplings = match self.axis {
            SweepAxis::CouplingRatio => direct_couplings(value * self.g_minus, self.g_minus)?,
            SweepAxis::Detuning => {
                params.delta = value;
                direct_couplings(self.g_plus, self.g_minus)?
            }
        };
        Ok(DriftModel::new(params, couplings, DriftMode::Rwa))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub stable: bool,
    pub log_negativity: Option<f64>,
    pub purity: Option<f64>,
    pub occupations: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// `(axis value, E_N)` of the best stable row.
    pub optimum: Option<(f64, f64)>,
    pub all_unstable: bool,
}

impl SweepResult {
    /// Grid index of the optimum row.
    pub fn optimum_index(&self) -> Option<usize> {
        let (value, _) = self.optimum?;
        self.rows.iter().position(|r| r.value == value)
    }
}

/// Steady-state measures at a single axis value.
pub fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let model = spec.model_at(value)?;
    if !hurwitz_stable(&model)? {
        return Ok(SweepRow {
            value,
            stable: false,
            log_negativity: None,
            purity: None,
            occupations: None,
        });
    }
    let state = lyapunov_steady_state(&model, &diffusion(&model.params))?;
    let report = entanglement_report(&state.reduced())?;
    Ok(SweepRow {
        value,
        stable: true,
        log_negativity: Some(report.log_negativity),
        purity: spec.measures.purity.then_some(report.purity),
        occupations: spec
            .measures
            .occupations
            .then(|| bogoliubov_occupations(&state, model.couplings.squeezing)),
    })
}

/// Evaluates every grid point in parallel; rows keep grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .grid
        .par_iter()
        .map(|&v| evaluate_point(spec, v))
        .collect::<Result<Vec<_>>>()?;
    let optimum = locate_optimum(&rows);
    Ok(SweepResult {
        axis: spec.axis,
        all_unstable: optimum.is_none(),
        rows,
        optimum,
    })
}

/// Maximum-E_N stable row; on ties the earlier (smaller) axis value wins.
pub fn locate_optimum(rows: &[SweepRow]) -> Option<(f64, f64)> {
    let mut optimum: Option<(f64, f64)> = None;
    for row in rows {
        if let Some(e) = row.log_negativity {
            if optimum.is_none_or(|(_, best)| e > best) {
                optimum = Some((row.value, e));
            }
        }
    }
    optimum
}

/// Golden-section search for the maximum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`.
pub fn golden_section_max<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Refines the grid optimum between its two neighbours.
pub fn refine_optimum(spec: &SweepSpec, result: &SweepResult) -> Result<(f64, f64)> {
    let idx = result.optimum_index().ok_or(Error::NoStableRows)?;
    if idx == 0 || idx + 1 >= result.rows.len() {
        return Err(Error::EndpointOptimum);
    }
    let (lo, hi) = (result.rows[idx - 1].value, result.rows[idx + 1].value);
    let objective = |v: f64| match evaluate_point(spec, v) {
        Ok(SweepRow { log_negativity: Some(e), .. }) => e,
        _ => f64::NEG_INFINITY,
    };
    let (x, fx) = golden_section_max(objective, lo, hi, REFINE_TOL);
    // never report something worse than the grid optimum
    let (grid_x, grid_e) = result.optimum.expect("index implies optimum");
    Ok(if fx >= grid_e { (x, fx) } else { (grid_x, grid_e) })
}
