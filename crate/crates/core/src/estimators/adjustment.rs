use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::RolloutBatch;
use crate::error::{Error, Result};

/// Half-open interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
}

impl Bin {
    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v <= self.hi
    }
}

/// Ordered, disjoint bins over one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Bin>", into = "Vec<Bin>")]
pub struct BinGrid {
    bins: Vec<Bin>,
}

impl TryFrom<Vec<Bin>> for BinGrid {
    type Error = Error;
    fn try_from(bins: Vec<Bin>) -> Result<Self> {
        BinGrid::new(bins)
    }
}

impl From<BinGrid> for Vec<Bin> {
    fn from(g: BinGrid) -> Self {
        g.bins
    }
}

impl BinGrid {
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::Argument("a bin grid needs at least one bin".into()));
        }
        for b in &bins {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.hi > b.lo) {
                return Err(Error::Argument(format!("bin ({}, {}] has no positive width", b.lo, b.hi)));
            }
        }
        if bins.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::Argument("bins must be ordered and disjoint".into()));
        }
        Ok(BinGrid { bins })
    }

    /// Contiguous bins `(e_0, e_1], (e_1, e_2], ...`.
    pub fn from_edges(edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Argument("need at least two bin edges".into()));
        }
        BinGrid::new(edges.windows(2).map(|w| Bin { lo: w[0], hi: w[1] }).collect())
    }

    /// `count` equal-width bins covering `[min, max]`, with the lower edge
    /// nudged below `min` so the minimum falls inside the first bin.
    pub fn equal_width(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 0 || !(min.is_finite() && max.is_finite()) || max < min {
            return Err(Error::Argument(format!("cannot build {count} bins over [{min}, {max}]")));
        }
        let lo = min - 1e-9 * (1.0 + min.abs());
        let hi = if max > lo { max } else { lo + 1.0 };
        let width = (hi - lo) / count as f64;
        let mut edges: Vec<f64> = (0..count).map(|i| lo + width * i as f64).collect();
        edges.push(hi);
        BinGrid::from_edges(&edges)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    /// Index of the bin holding `v`, or `None` (the overflow stratum).
    pub fn index(&self, v: f64) -> Option<usize> {
        self.bins.iter().position(|b| b.contains(v))
    }

    /// Index with overflow mapped to `len()`.
    fn slot(&self, v: f64) -> usize {
        self.index(v).unwrap_or(self.bins.len())
    }
}

/// Bin grids for every state coordinate (reused for each lag of the
/// confounder) and every action coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub state_bins: Vec<BinGrid>,
    pub action_bins: Vec<BinGrid>,
}

impl Discretization {
    pub fn new(state_bins: Vec<BinGrid>, action_bins: Vec<BinGrid>) -> Self {
        Discretization {
            state_bins,
            action_bins,
        }
    }

    /// Equal-width grids fitted to the observed range of every state and action coordinate.
    pub fn equal_width_from(batch: &RolloutBatch, state_count: usize, action_count: usize) -> Result<Self> {
        let range = |values: &mut dyn Iterator<Item = f64>| {
            values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let state_bins = (0..batch.state_dim())
            .map(|j| {
                let (lo, hi) = range(&mut batch.rollouts().iter().flat_map(|r| r.states.iter().map(move |x| x[j])));
                BinGrid::equal_width(lo, hi, state_count)
            })
            .collect::<Result<Vec<_>>>()?;
        let action_bins = (0..batch.action_dim())
            .map(|j| {
                let (lo, hi) = range(&mut batch.rollouts().iter().flat_map(|r| r.actions.iter().map(move |u| u[j])));
                BinGrid::equal_width(lo, hi, action_count)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Discretization {
            state_bins,
            action_bins,
        })
    }

    fn check(&self, batch: &RolloutBatch) -> Result<()> {
        if self.state_bins.len() != batch.state_dim() || self.action_bins.len() != batch.action_dim() {
            return Err(Error::Spec(format!(
                "discretization covers {} state / {} action coordinates, batch has {} / {}",
                self.state_bins.len(),
                self.action_bins.len(),
                batch.state_dim(),
                batch.action_dim()
            )));
        }
        Ok(())
    }

    /// Confounder stratum of the lagged states `x_{T-K} .. x_{T-1}`.
    pub fn stratum(&self, lagged: &[DVector<f64>]) -> Vec<usize> {
        lagged
            .iter()
            .flat_map(|x| x.iter().zip(&self.state_bins).map(|(&v, g)| g.slot(v)))
            .collect()
    }

    /// Treatment cell of an action; overflow coordinates map to `len()`.
    pub fn action_cell(&self, u: &DVector<f64>) -> Vec<usize> {
        u.iter().zip(&self.action_bins).map(|(&v, g)| g.slot(v)).collect()
    }

    /// Treatment cell, failing when a coordinate lies outside every bin.
    pub fn action_cell_strict(&self, u: &DVector<f64>) -> Result<Vec<usize>> {
        u.iter()
            .zip(&self.action_bins)
            .enumerate()
            .map(|(coordinate, (&value, g))| g.index(value).ok_or(Error::OutOfBins { coordinate, value }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustmentMode {
    /// Any occupied stratum lacking the treatment makes the estimate undefined.
    #[default]
    Strict,
    /// Empty cells contribute a conditional mean of 0.
    ZeroFill,
}

/// Adjustment-formula estimate of `E[x_T | do(u_{T-1} in cell)]` with overlap diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentEstimate {
    /// `None` when strict mode hits an undefined stratum.
    pub x_hat: Option<Vec<f64>>,
    pub action_cell: Vec<usize>,
    pub undefined_strata: usize,
    pub occupied_strata: usize,
    pub undefined_fraction: f64,
    pub undefined_mass: f64,
    pub mode: AdjustmentMode,
    pub n: usize,
}

impl std::str::FromStr for AdjustmentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(AdjustmentMode::Strict),
            "zero-fill" => Ok(AdjustmentMode::ZeroFill),
            other => Err(Error::Argument(format!("unknown mode {other:?}, expected strict or zero-fill"))),
        }
    }
}

impl AdjustmentEstimate {
    pub fn is_defined(&self) -> bool {
        self.x_hat.is_some()
    }
}

#[derive(Default)]
struct StratumTally {
    occupied: usize,
    treated: Vec<DVector<f64>>,
}

/// Sum of vectors, independent of input order.
fn ordered_sum(mut values: Vec<DVector<f64>>, dim: usize) -> DVector<f64> {
    values.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    values.into_iter().fold(DVector::zeros(dim), |acc, v| acc + v)
}

/// Adjustment formula for an explicit treatment cell.
///
/// `x_hat = sum_g mean(x_T | z in Z_g, u in cell) * #(z in Z_g) / n`, with
/// the confounder `z` the `K` lagged states of each rollout.
pub fn adjustment_estimate_cell(
    batch: &RolloutBatch,
    disc: &Discretization,
    cell: &[usize],
    mode: AdjustmentMode,
) -> Result<AdjustmentEstimate> {
    disc.check(batch)?;
    if cell.len() != batch.action_dim() {
        return Err(Error::Spec("treatment cell has the wrong number of coordinates".into()));
    }
    let k = batch.window();
    let d = batch.state_dim();
    let mut strata: BTreeMap<Vec<usize>, StratumTally> = BTreeMap::new();
    let mut treated_total = 0usize;
    for r in batch.rollouts() {
        let tally = strata.entry(disc.stratum(&r.states[..k])).or_default();
        tally.occupied += 1;
        if disc.action_cell(r.treatment()) == cell {
            tally.treated.push(r.outcome().clone());
            treated_total += 1;
        }
    }
    if treated_total == 0 {
        return Err(Error::EmptyTreatmentBin { bin: cell.to_vec() });
    }

    let n = batch.len() as f64;
    let mut undefined_strata = 0;
    let mut undefined_count = 0;
    let mut contributions = Vec::with_capacity(strata.len());
    let occupied_strata = strata.len();
    for tally in strata.into_values() {
        if tally.treated.is_empty() {
            undefined_strata += 1;
            undefined_count += tally.occupied;
            continue;
        }
        let m = tally.treated.len() as f64;
        let mean = ordered_sum(tally.treated, d) / m;
        contributions.push(mean * (tally.occupied as f64 / n));
    }
    let x_hat = match mode {
        AdjustmentMode::Strict if undefined_strata > 0 => None,
        _ => Some(contributions.into_iter().fold(DVector::zeros(d), |acc, c| acc + c)),
    };
    Ok(AdjustmentEstimate {
        x_hat: x_hat.map(|v| v.iter().copied().collect()),
        action_cell: cell.to_vec(),
        undefined_strata,
        occupied_strata,
        undefined_fraction: undefined_strata as f64 / occupied_strata as f64,
        undefined_mass: undefined_count as f64 / n,
        mode,
        n: batch.len(),
    })
}

/// Adjustment formula for the treatment cell containing `u`.
pub fn adjustment_estimate(
    batch: &RolloutBatch,
    disc: &Discretization,
    u: &DVector<f64>,
    mode: AdjustmentMode,
) -> Result<AdjustmentEstimate> {
    disc.check(batch)?;
    let cell = disc.action_cell_strict(u)?;
    adjustment_estimate_cell(batch, disc, &cell, mode)
}

/// Slope of the adjustment-predicted outcome against the treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub mode: AdjustmentMode,
    /// Predicted outcome per treatment bin that occurs in the data.
    pub per_bin: Vec<(usize, f64)>,
}

/// Assign `x_hat(u_t)` to every observed scalar treatment and fit an OLS
/// line of the predictions on the raw observed `u_t`.
pub fn ped_from_adjustment(batch: &RolloutBatch, disc: &Discretization, mode: AdjustmentMode) -> Result<PedEstimate> {
    disc.check(batch)?;
    if batch.state_dim() != 1 || batch.action_dim() != 1 {
        return Err(Error::Argument("PED needs scalar state and action".into()));
    }
    let mut predictions: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pairs = Vec::with_capacity(batch.len());
    for r in batch.rollouts() {
        let u = r.treatment();
        let cell = disc.action_cell_strict(u)?;
        let pred = match predictions.get(&cell[0]) {
            Some(&p) => p,
            None => {
                let est = adjustment_estimate_cell(batch, disc, &cell, mode)?;
                let p = est.x_hat.map(|v| v[0]).ok_or(Error::UndefinedEstimate {
                    undefined: est.undefined_strata,
                    occupied: est.occupied_strata,
                })?;
                predictions.insert(cell[0], p);
                p
            }
        };
        pairs.push((u[0], pred));
    }
    let (slope, intercept) = ols_line(&pairs)?;
    Ok(PedEstimate {
        slope,
        intercept,
        mode,
        per_bin: predictions.into_iter().collect(),
    })
}

/// Simple linear regression `y = a + b x`; returns `(b, a)`.
fn ols_line(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateTreatment);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Rollout;

    fn s(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn k1_batch(rows: &[(f64, f64, f64)]) -> RolloutBatch {
        let rollouts = rows
            .iter()
            .map(|&(z, u, x)| Rollout::new(vec![s(z), s(x)], vec![s(u)]).unwrap())
            .collect();
        RolloutBatch::new(rollouts, 1, None, "test").unwrap()
    }

    fn two_by_two() -> Discretization {
        Discretization::new(
            vec![BinGrid::from_edges(&[0.0, 1.0, 2.0]).unwrap()],
            vec![BinGrid::from_edges(&[0.0, 1.0, 2.0]).unwrap()],
        )
    }

    #[test]
    fn bins_are_half_open() {
        let g = BinGrid::from_edges(&[-0.479, 0.131, 0.683]).unwrap();
        assert_eq!(g.index(0.131), Some(0));
        assert_eq!(g.index(0.1310001), Some(1));
        assert_eq!(g.index(-0.479), None);
        assert_eq!(g.index(0.683), Some(1));
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(BinGrid::from_edges(&[1.0]).is_err());
        assert!(BinGrid::from_edges(&[0.0, 0.0]).is_err());
        assert!(BinGrid::new(vec![Bin { lo: 0.0, hi: 2.0 }, Bin { lo: 1.0, hi: 3.0 }]).is_err());
    }

    #[test]
    fn equal_width_covers_minimum() {
        let g = BinGrid::equal_width(1.0, 3.0, 4).unwrap();
        assert_eq!(g.index(1.0), Some(0));
        assert_eq!(g.index(3.0), Some(3));
    }

    #[test]
    fn single_stratum_collapses_to_conditional_mean() {
        let batch = k1_batch(&[(0.5, 0.5, 1.0), (0.6, 0.7, 3.0), (0.7, 1.5, 10.0), (0.2, 1.2, 20.0)]);
        let disc = Discretization::new(
            vec![BinGrid::from_edges(&[0.0, 1.0]).unwrap()],
            vec![BinGrid::from_edges(&[0.0, 1.0, 2.0]).unwrap()],
        );
        let est = adjustment_estimate(&batch, &disc, &s(0.9), AdjustmentMode::Strict).unwrap();
        assert_eq!(est.x_hat, Some(vec![2.0]));
        assert_eq!(est.occupied_strata, 1);
        assert_eq!(est.undefined_strata, 0);
    }

    #[test]
    fn strict_mode_marks_undefined_and_zero_fill_does_not() {
        // stratum 1 only sees treatment bin 0
        let batch = k1_batch(&[(0.5, 0.5, 1.0), (0.5, 1.5, 3.0), (1.5, 0.5, 5.0), (1.5, 0.4, 7.0)]);
        let disc = two_by_two();
        let strict = adjustment_estimate(&batch, &disc, &s(1.5), AdjustmentMode::Strict).unwrap();
        assert_eq!(strict.x_hat, None);
        assert_eq!(strict.undefined_strata, 1);
        assert_eq!(strict.occupied_strata, 2);
        assert_eq!(strict.undefined_fraction, 0.5);
        assert_eq!(strict.undefined_mass, 0.5);

        let filled = adjustment_estimate(&batch, &disc, &s(1.5), AdjustmentMode::ZeroFill).unwrap();
        // 3.0 * 2/4 + 0 * 2/4
        assert_eq!(filled.x_hat, Some(vec![1.5]));

        let low = adjustment_estimate(&batch, &disc, &s(0.5), AdjustmentMode::Strict).unwrap();
        // 1.0 * 2/4 + 6.0 * 2/4
        assert_eq!(low.x_hat, Some(vec![3.5]));
    }

    #[test]
    fn empty_treatment_bin_is_an_error() {
        let batch = k1_batch(&[(0.5, 0.5, 1.0), (1.5, 0.4, 7.0)]);
        assert!(matches!(
            adjustment_estimate(&batch, &two_by_two(), &s(1.5), AdjustmentMode::ZeroFill),
            Err(Error::EmptyTreatmentBin { .. })
        ));
    }

    #[test]
    fn query_outside_bins_is_an_error() {
        let batch = k1_batch(&[(0.5, 0.5, 1.0)]);
        assert!(matches!(
            adjustment_estimate(&batch, &two_by_two(), &s(5.0), AdjustmentMode::Strict),
            Err(Error::OutOfBins { .. })
        ));
    }

    #[test]
    fn overflow_stratum_counts_as_occupied() {
        let batch = k1_batch(&[(0.5, 0.5, 1.0), (9.0, 1.5, 3.0)]);
        let est = adjustment_estimate(&batch, &two_by_two(), &s(0.5), AdjustmentMode::Strict).unwrap();
        assert_eq!(est.occupied_strata, 2);
        assert_eq!(est.undefined_strata, 1);
        assert!(!est.is_defined());
    }

    #[test]
    fn ped_flat_response_has_zero_slope() {
        let batch = k1_batch(&[(0.5, 0.5, 2.0), (0.5, 1.5, 2.0), (0.6, 0.2, 2.0), (0.7, 1.9, 2.0)]);
        let ped = ped_from_adjustment(&batch, &two_by_two(), AdjustmentMode::Strict).unwrap();
        assert!(ped.slope.abs() < 1e-12);
    }

    #[test]
    fn ped_two_group_closed_form() {
        // one stratum; bin 0 mean 14.95, bin 1 mean 15.11
        let rows = [
            (0.5, 0.2, 14.90),
            (0.5, 0.4, 15.00),
            (0.5, 0.9, 14.95),
            (0.5, 1.1, 15.11),
            (0.5, 1.7, 15.01),
            (0.5, 1.3, 15.21),
        ];
        let batch = k1_batch(&rows);
        let ped = ped_from_adjustment(&batch, &two_by_two(), AdjustmentMode::Strict).unwrap();
        // closed form: slope = sum (u - mean u)(yhat - mean yhat) / sum (u - mean u)^2
        let us: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let yhat: Vec<f64> = us.iter().map(|&u| if u <= 1.0 { 14.95 } else { 15.11 }).collect();
        let mu = us.iter().sum::<f64>() / 6.0;
        let my = yhat.iter().sum::<f64>() / 6.0;
        let num: f64 = us.iter().zip(&yhat).map(|(u, y)| (u - mu) * (y - my)).sum();
        let den: f64 = us.iter().map(|u| (u - mu).powi(2)).sum();
        assert!((ped.slope - num / den).abs() < 1e-9);
    }

    #[test]
    fn ped_strict_undefined_propagates() {
        let batch = k1_batch(&[(0.5, 0.5, 1.0), (0.5, 1.5, 3.0), (1.5, 0.5, 5.0), (1.5, 0.4, 7.0)]);
        assert!(matches!(
            ped_from_adjustment(&batch, &two_by_two(), AdjustmentMode::Strict),
            Err(Error::UndefinedEstimate { .. })
        ));
        assert!(ped_from_adjustment(&batch, &two_by_two(), AdjustmentMode::ZeroFill).is_ok());
    }
}
