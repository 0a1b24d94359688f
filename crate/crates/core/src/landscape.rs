//! Objective landscapes over one or two control coefficients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::grid::SimulationConfig;
use crate::objectives::{self, ObjectiveKind, FAILED};
use crate::preset::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Index into the packed `(a, b)` vector.
    pub index: usize,
    pub low: f64,
    pub high: f64,
    pub samples: usize,
}

impl Axis {
    pub fn new(index: usize, low: f64, high: f64, samples: usize) -> Result<Self> {
        let a = Self {
            index,
            low,
            high,
            samples,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 3 {
            return Err(Error::Landscape(format!("axis needs at least 3 samples, got {}", self.samples)));
        }
        if self.low.is_nan() || self.high.is_nan() || self.low >= self.high {
            return Err(Error::Landscape(format!("axis bounds must satisfy low < high, got [{}, {}]", self.low, self.high)));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            return self.high;
        }
        self.low + (self.high - self.low) * i as f64 / (self.samples - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.value(i)).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.high - self.low) / (self.samples - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSpec {
    pub objectives: Vec<ObjectiveKind>,
    pub base: SimulationConfig,
    /// Control order N; parameters outside the axes stay at `base_params`.
    pub order: usize,
    pub base_params: Vec<f64>,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub preset: Option<String>,
}

impl LandscapeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Landscape(format!("sweeps take 1 or 2 axes, got {}", self.axes.len())));
        }
        if self.objectives.is_empty() {
            return Err(Error::Landscape("no objective requested".into()));
        }
        if self.base_params.len() != 2 * self.order {
            return Err(Error::LengthMismatch {
                expected: 2 * self.order,
                got: self.base_params.len(),
            });
        }
        for a in &self.axes {
            a.validate()?;
            if a.index >= 2 * self.order {
                return Err(Error::Landscape(format!(
                    "axis index {} outside the {}-coefficient control",
                    a.index,
                    2 * self.order
                )));
            }
        }
        if self.axes.len() == 2 && self.axes[0].index == self.axes[1].index {
            return Err(Error::Landscape("both axes move the same coefficient".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.samples).collect()
    }

    pub fn cells(&self) -> usize {
        self.shape().iter().product()
    }

    /// Parameters at flat cell index (first axis outermost).
    pub fn params_at(&self, cell: usize) -> Vec<f64> {
        let mut p = self.base_params.clone();
        match self.axes.as_slice() {
            [a] => p[a.index] = a.value(cell),
            [a, b] => {
                p[a.index] = a.value(cell / b.samples);
                p[b.index] = b.value(cell % b.samples);
            }
            _ => {}
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeResult {
    pub objective: ObjectiveKind,
    pub axes: Vec<Axis>,
    /// Flat values, first axis outermost; failed cells hold the sentinel.
    pub values: Vec<f64>,
    pub status: Vec<CellStatus>,
}

impl LandscapeResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.samples).collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.status.iter().filter(|s| **s == CellStatus::Failed).count()
    }

    pub fn all_failed(&self) -> bool {
        self.failed_cells() == self.status.len()
    }

    /// Flat index and value of the smallest successful cell.
    pub fn argmin(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .zip(&self.status)
            .enumerate()
            .filter(|(_, (_, s))| **s == CellStatus::Ok)
            .map(|(i, (v, _))| (i, *v))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Axis coordinates of a flat cell index.
    pub fn coords(&self, cell: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a.value(cell)],
            [a, b] => vec![a.value(cell / b.samples), b.value(cell % b.samples)],
            _ => vec![],
        }
    }

    fn ensure_ok(&self) -> Result<()> {
        let failed = self.failed_cells();
        if failed > 0 {
            return Err(Error::Landscape(format!("{failed} failed cells; minima are undefined")));
        }
        Ok(())
    }

    /// Number of interior strict local minima of a 1D sweep; equal-valued
    /// runs count once.
    pub fn count_local_minima(&self) -> Result<usize> {
        self.ensure_ok()?;
        if self.axes.len() != 1 {
            return Err(Error::Landscape("count_local_minima expects a 1D sweep".into()));
        }
        Ok(count_local_minima_1d(&self.values))
    }

    /// Interior cells of a 2D sweep strictly below their four neighbours.
    pub fn local_minima_2d(&self) -> Result<Vec<(usize, usize)>> {
        self.ensure_ok()?;
        if self.axes.len() != 2 {
            return Err(Error::Landscape("local_minima_2d expects a 2D sweep".into()));
        }
        Ok(local_minima_2d(&self.values, self.axes[0].samples, self.axes[1].samples))
    }
}

pub fn count_local_minima_1d(values: &[f64]) -> usize {
    let n = values.len();
    let mut count = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        if i > 0 && j + 1 < n && values[i - 1] > values[i] && values[j + 1] > values[i] {
            count += 1;
        }
        i = j + 1;
    }
    count
}

pub fn local_minima_2d(values: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let at = |i: usize, j: usize| values[i * cols + j];
    let mut out = Vec::new();
    for i in 1..rows.saturating_sub(1) {
        for j in 1..cols.saturating_sub(1) {
            let v = at(i, j);
            if v < at(i - 1, j) && v < at(i + 1, j) && v < at(i, j - 1) && v < at(i, j + 1) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Evaluates every requested objective at every cell, one PDE run per cell.
/// Runs on the current rayon pool; output order is independent of it.
pub fn sweep(spec: &LandscapeSpec) -> Result<Vec<LandscapeResult>> {
    sweep_with(spec, |params| {
        let h = ControlField::unpack(params, spec.order, spec.base.grid.k0())?;
        objectives::evaluate_many(&spec.objectives, &spec.base.clone().with_control(h))
    })
}

/// Sweep with a caller-supplied evaluator returning one value per objective.
pub fn sweep_with<F>(spec: &LandscapeSpec, eval: F) -> Result<Vec<LandscapeResult>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    spec.validate()?;
    let n_obj = spec.objectives.len();
    let cells: Vec<Option<Vec<f64>>> = (0..spec.cells())
        .into_par_iter()
        .map(|c| match eval(&spec.params_at(c)) {
            Ok(v) if v.len() == n_obj && v.iter().all(|x| x.is_finite() && *x < FAILED) => Some(v),
            Ok(_) => None,
            Err(e) => {
                log::warn!("cell {c} failed: {e}");
                None
            }
        })
        .collect();
    let results: Vec<LandscapeResult> = spec
        .objectives
        .iter()
        .enumerate()
        .map(|(k, &objective)| LandscapeResult {
            objective,
            axes: spec.axes.clone(),
            values: cells.iter().map(|c| c.as_ref().map_or(FAILED, |v| v[k])).collect(),
            status: cells
                .iter()
                .map(|c| if c.is_some() { CellStatus::Ok } else { CellStatus::Failed })
                .collect(),
        })
        .collect();
    if results.first().is_some_and(|r| r.all_failed()) {
        log::error!("every cell of the sweep failed");
    }
    Ok(results)
}

/// Named sweep geometries: `{ts,bot}-{1d-fig,1d-text,2d-far,2d-mid,2d-near}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePreset {
    pub name: String,
    pub problem: Problem,
    pub order: usize,
    pub axes: Vec<Axis>,
}

impl LandscapePreset {
    pub const NAMES: [&'static str; 10] = [
        "ts-1d-fig",
        "ts-1d-text",
        "ts-2d-far",
        "ts-2d-mid",
        "ts-2d-near",
        "bot-1d-fig",
        "bot-1d-text",
        "bot-2d-far",
        "bot-2d-mid",
        "bot-2d-near",
    ];

    pub fn by_name(name: &str) -> Result<Self> {
        let (prefix, rest) = name
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("unknown sweep preset '{name}'")))?;
        let problem = match prefix {
            "ts" => Problem::TwoStream,
            "bot" => Problem::BumpOnTail,
            _ => return Err(Error::Config(format!("unknown sweep preset '{name}'"))),
        };
        // 1D: TS moves b₁ of an N=1 field, BoT moves a₁.
        // 2D: TS moves (b₁, b₂) of N=2, BoT moves (a₁, b₁) of N=1.
        let (order, one_d, two_d) = match problem {
            Problem::TwoStream => (1, 1, (2, 3)),
            Problem::BumpOnTail => (1, 0, (0, 1)),
        };
        let two_d_order = problem.under_order();
        let near = problem.init_box(crate::preset::InitBox::Near);
        let (order, axes) = match rest {
            "1d-fig" => (order, vec![Axis::new(one_d, -0.07, 0.07, 29)?]),
            "1d-text" => (order, vec![Axis::new(one_d, -0.1, 0.1, 29)?]),
            "2d-far" => (
                two_d_order,
                vec![Axis::new(two_d.0, -1.0, 1.0, 21)?, Axis::new(two_d.1, -1.0, 1.0, 21)?],
            ),
            "2d-mid" => (
                two_d_order,
                vec![Axis::new(two_d.0, -0.1, 0.1, 41)?, Axis::new(two_d.1, -0.1, 0.1, 41)?],
            ),
            "2d-near" => (
                two_d_order,
                vec![
                    Axis::new(two_d.0, near.0, near.1, 41)?,
                    Axis::new(two_d.1, near.0, near.1, 41)?,
                ],
            ),
            _ => return Err(Error::Config(format!("unknown sweep preset '{name}'"))),
        };
        Ok(Self {
            name: name.to_string(),
            problem,
            order,
            axes,
        })
    }

    pub fn spec(&self, base: SimulationConfig, objectives: Vec<ObjectiveKind>) -> LandscapeSpec {
        LandscapeSpec {
            objectives,
            base,
            order: self.order,
            base_params: vec![0.0; 2 * self.order],
            axes: self.axes.clone(),
            preset: Some(self.name.clone()),
        }
    }

    /// Same geometry with a different per-axis resolution.
    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        for a in &mut self.axes {
            *a = Axis::new(a.index, a.low, a.high, samples)?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima_counting() {
        assert_eq!(count_local_minima_1d(&[3.0, 1.0, 2.0]), 1);
        assert_eq!(count_local_minima_1d(&[1.0, 2.0, 1.0, 2.0, 1.0]), 1);
        assert_eq!(count_local_minima_1d(&[3.0, 1.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(count_local_minima_1d(&[3.0, 1.0, 1.0, 0.5]), 0);
        assert_eq!(count_local_minima_1d(&[1.0, 2.0, 3.0]), 0);
        let grid = [5.0, 5.0, 5.0, 5.0, 1.0, 5.0, 5.0, 5.0, 5.0];
        assert_eq!(local_minima_2d(&grid, 3, 3), vec![(1, 1)]);
    }

    #[test]
    fn axis_validation_and_endpoints() {
        assert!(Axis::new(0, -1.0, 1.0, 1).is_err());
        assert!(Axis::new(0, 1.0, -1.0, 5).is_err());
        let a = Axis::new(0, -0.07, 0.07, 29).unwrap();
        assert_eq!(a.value(0), -0.07);
        assert_eq!(a.value(28), 0.07);
        assert!((a.value(14)).abs() < 1e-17);
    }

    #[test]
    fn constant_objective_sweep() {
        let p = Problem::TwoStream;
        let preset = LandscapePreset::by_name("ts-2d-far").unwrap().with_samples(3).unwrap();
        let spec = preset.spec(p.config(), vec![ObjectiveKind::Ee]);
        let res = sweep_with(&spec, |_| Ok(vec![4.2])).unwrap();
        assert_eq!(res[0].values, vec![4.2; 9]);
        assert_eq!(res[0].failed_cells(), 0);

        let res = sweep_with(&spec, |p| {
            if p[2] > 0.5 {
                Err(Error::RunFailed { step: 1, reason: "test".into() })
            } else {
                Ok(vec![p[2] + p[3]])
            }
        })
        .unwrap();
        assert_eq!(res[0].failed_cells(), 3);
        assert!(res[0].local_minima_2d().is_err());
        assert_eq!(res[0].argmin().unwrap().0, 0);
    }

    #[test]
    fn presets_resolve() {
        for name in LandscapePreset::NAMES {
            let p = LandscapePreset::by_name(name).unwrap();
            let spec = p.spec(p.problem.config(), vec![ObjectiveKind::Eet]);
            spec.validate().unwrap();
        }
        let near = LandscapePreset::by_name("bot-2d-near").unwrap();
        assert_eq!(near.axes[0].samples, 41);
        assert_eq!((near.axes[0].low, near.axes[0].high), (-0.001, 0.003));
        assert!(LandscapePreset::by_name("ts-3d-far").is_err());
    }

    #[test]
    fn cell_layout() {
        let p = LandscapePreset::by_name("ts-2d-near").unwrap().with_samples(3).unwrap();
        let spec = p.spec(Problem::TwoStream.config(), vec![ObjectiveKind::Eet]);
        let c = spec.params_at(5);
        assert_eq!(c[2], spec.axes[0].value(1));
        assert_eq!(c[3], spec.axes[1].value(2));
        assert_eq!(&c[..2], &[0.0, 0.0]);
    }
}
