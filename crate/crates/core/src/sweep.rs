//! Parameter sweeps over the binary example and cost/key-rate frontiers.
//!
//! A sweep walks the four-dimensional grid `(alpha0, alpha1, p0, p1)` in
//! lexicographic order, evaluates one bound per vertex, and hands points to a
//! sink in that order regardless of how the work was scheduled. Frontiers are
//! folded incrementally so full-resolution sweeps never hold every point.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate, AuxParams, Model, RatePoint, Side};
use crate::error::{domain, validation, Result};
use crate::system::{binary_example_joint, BinaryExampleConfig};

/// Default cost-bin width of frontiers.
pub const DEFAULT_RESOLUTION: f64 = 0.002;
/// Key rates within this distance of the maximum count as attaining it.
pub const SUMMARY_TOL: f64 = 1e-9;

const CHUNK: usize = 1 << 14;

/// `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(start: f64, end: f64, step: f64) -> Self {
        AxisRange { start, end, step }
    }

    pub fn single(v: f64) -> Self {
        AxisRange { start: v, end: v, step: 1.0 }
    }

    fn validate(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return validation(format!("{name}: step must be positive, got {}", self.step));
        }
        if !(lo..=hi).contains(&self.start) || !(lo..=hi).contains(&self.end) || self.start > self.end {
            return validation(format!(
                "{name}: range [{}, {}] must be ordered and lie within [{lo}, {hi}]",
                self.start, self.end
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        (self.start + i as f64 * self.step).min(self.end)
    }
}

/// Sweep axes and the bound evaluated at every vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha0: AxisRange,
    pub alpha1: AxisRange,
    pub p0: AxisRange,
    pub p1: AxisRange,
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default = "default_side")]
    pub side: Side,
}

fn default_model() -> Model {
    Model::Gs
}

fn default_side() -> Side {
    Side::Inner
}

impl SweepGrid {
    /// Full action and auxiliary space at a uniform step.
    pub fn uniform(step: f64) -> Self {
        SweepGrid {
            alpha0: AxisRange::new(0.0, 1.0, step),
            alpha1: AxisRange::new(0.0, 1.0, step),
            p0: AxisRange::new(0.0, 0.5, step),
            p1: AxisRange::new(0.0, 0.5, step),
            model: Model::Gs,
            side: Side::Inner,
        }
    }

    /// Default full-resolution grid.
    pub fn fine() -> Self {
        SweepGrid::uniform(0.01)
    }

    /// Smoke-test grid.
    pub fn coarse() -> Self {
        SweepGrid::uniform(0.05)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha0.validate("alpha0", 0.0, 1.0)?;
        self.alpha1.validate("alpha1", 0.0, 1.0)?;
        self.p0.validate("p0", 0.0, 0.5)?;
        self.p1.validate("p1", 0.0, 0.5)?;
        Ok(())
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.alpha0.len() * self.alpha1.len() * self.p0.len() * self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Vertex `i` in lexicographic `(alpha0, alpha1, p0, p1)` order.
    pub fn vertex(&self, i: usize) -> AuxParams {
        let (n1, n2, n3) = (self.alpha1.len(), self.p0.len(), self.p1.len());
        AuxParams {
            alpha0: self.alpha0.value(i / (n1 * n2 * n3)),
            alpha1: self.alpha1.value(i / (n2 * n3) % n1),
            p0: self.p0.value(i / n3 % n2),
            p1: self.p1.value(i % n3),
        }
    }
}

/// Evaluates the grid's bound at one parameter choice.
pub fn evaluate_at(cfg: &BinaryExampleConfig, params: AuxParams, model: Model, side: Side) -> Result<RatePoint> {
    let c = cfg.with_aux(params.alpha0, params.alpha1, params.p0, params.p1);
    let joint = binary_example_joint(&c)?;
    let mut point = evaluate(&joint, &c.cost_function()?, model, side)?;
    point.params = Some(params);
    Ok(point)
}

/// Evaluates every grid vertex and feeds the points to `sink` in grid order.
/// Returns the number of points.
pub fn sweep_each(
    cfg: &BinaryExampleConfig,
    grid: &SweepGrid,
    mut sink: impl FnMut(RatePoint) -> Result<()>,
) -> Result<usize> {
    grid.validate()?;
    cfg.validate()?;
    let n = grid.len();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk: Vec<Result<RatePoint>> =
            (start..end).into_par_iter().map(|i| evaluate_at(cfg, grid.vertex(i), grid.model, grid.side)).collect();
        for p in chunk {
            sink(p?)?;
        }
    }
    Ok(n)
}

/// Collects a whole sweep into memory.
pub fn sweep(cfg: &BinaryExampleConfig, grid: &SweepGrid) -> Result<Vec<RatePoint>> {
    let mut out = Vec::with_capacity(grid.len());
    sweep_each(cfg, grid, |p| {
        out.push(p);
        Ok(())
    })?;
    Ok(out)
}

/// One step of a frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    /// Largest cost among the points in this cost bin.
    pub cost: f64,
    /// Best key rate over all points with cost `<= cost`.
    pub r_s: f64,
    /// Parameters of the point attaining `r_s`.
    pub achiever: Option<AuxParams>,
    /// Cost of the point attaining `r_s`.
    pub achiever_cost: f64,
}

/// Cost-vs-key-rate frontier at one storage budget. An empty point list means
/// no evaluated point satisfied the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub budget: f64,
    pub resolution: f64,
    pub points: Vec<FrontierPoint>,
}

impl Frontier {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct BinBest {
    max_cost: f64,
    r_s: f64,
    cost: f64,
    params: Option<AuxParams>,
}

/// Incremental frontier construction.
#[derive(Debug, Clone)]
pub struct FrontierBuilder {
    budget: f64,
    resolution: f64,
    bins: BTreeMap<i64, BinBest>,
}

impl FrontierBuilder {
    pub fn new(budget: f64, resolution: f64) -> Result<Self> {
        if budget.is_nan() || budget < 0.0 {
            return validation(format!("storage budget must be nonnegative, got {budget}"));
        }
        if !resolution.is_finite() || resolution <= 0.0 {
            return validation(format!("cost resolution must be positive, got {resolution}"));
        }
        Ok(FrontierBuilder { budget, resolution, bins: BTreeMap::new() })
    }

    pub fn push(&mut self, p: &RatePoint) {
        if p.r_w > self.budget {
            return;
        }
        let key = (p.cost / self.resolution).floor() as i64;
        let cand = BinBest { max_cost: p.cost, r_s: p.r_s, cost: p.cost, params: p.params };
        self.bins
            .entry(key)
            .and_modify(|b| {
                b.max_cost = b.max_cost.max(p.cost);
                if p.r_s > b.r_s || (p.r_s == b.r_s && p.cost < b.cost) {
                    b.r_s = p.r_s;
                    b.cost = p.cost;
                    b.params = p.params;
                }
            })
            .or_insert(cand);
    }

    pub fn finish(self) -> Frontier {
        let mut points = Vec::with_capacity(self.bins.len());
        let mut best: Option<BinBest> = None;
        for b in self.bins.values() {
            match best {
                Some(cur) if cur.r_s >= b.r_s => {}
                _ => best = Some(*b),
            }
            let cur = best.expect("set above");
            points.push(FrontierPoint {
                cost: b.max_cost,
                r_s: cur.r_s,
                achiever: cur.params,
                achiever_cost: cur.cost,
            });
        }
        Frontier { budget: self.budget, resolution: self.resolution, points }
    }
}

/// Frontier of `points` under storage budget `r_w_budget`.
pub fn frontier(points: &[RatePoint], r_w_budget: f64, resolution: f64) -> Result<Frontier> {
    if points.is_empty() {
        return validation("frontier of an empty point set");
    }
    let mut b = FrontierBuilder::new(r_w_budget, resolution)?;
    points.iter().for_each(|p| b.push(p));
    Ok(b.finish())
}

/// Upper concave envelope of a frontier (time sharing between its points).
/// Keeps only hull vertices.
pub fn concave_envelope(f: &Frontier) -> Frontier {
    let mut hull: Vec<FrontierPoint> = Vec::new();
    for p in &f.points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or below the chord a -> p
            let cross = (b.cost - a.cost) * (p.r_s - a.r_s) - (b.r_s - a.r_s) * (p.cost - a.cost);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(*p);
    }
    Frontier { budget: f.budget, resolution: f.resolution, points: hull }
}

/// Maximum key rate of a frontier and the smallest cost attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierSummary {
    pub c_star: f64,
    pub r_s_star: f64,
    pub achiever: Option<AuxParams>,
}

pub fn frontier_summary(f: &Frontier) -> Result<FrontierSummary> {
    let r_s_star = f.points.iter().map(|p| p.r_s).fold(f64::NEG_INFINITY, f64::max);
    let first = f
        .points
        .iter()
        .find(|p| p.r_s >= r_s_star - SUMMARY_TOL)
        .ok_or_else(|| crate::Error::Domain(format!("frontier at budget {} is empty", f.budget)))?;
    Ok(FrontierSummary { c_star: first.achiever_cost, r_s_star, achiever: first.achiever })
}

/// Percent changes from a tighter (`low`) to a looser (`high`) storage budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub key_rate_gain_pct: f64,
    pub cost_reduction_pct: f64,
}

pub fn gain_report(low: &FrontierSummary, high: &FrontierSummary) -> Result<Gains> {
    if low.r_s_star == 0.0 {
        return domain("key-rate gain undefined: reference key rate is zero");
    }
    if low.c_star == 0.0 {
        return domain("cost reduction undefined: reference cost is zero");
    }
    Ok(Gains {
        key_rate_gain_pct: (high.r_s_star - low.r_s_star) / low.r_s_star * 100.0,
        cost_reduction_pct: (low.c_star - high.c_star) / low.c_star * 100.0,
    })
}

pub const POINTS_HEADER: &str = "alpha0,alpha1,p0,p1,r_s,r_l,r_w,cost,model,side";
pub const FRONTIER_HEADER: &str = "cost,r_s,alpha0,alpha1,p0,p1";

/// One CSV row in [`POINTS_HEADER`] layout.
pub fn write_point_row(w: &mut impl Write, p: &RatePoint) -> std::io::Result<()> {
    let a = p.params.unwrap_or(AuxParams { alpha0: f64::NAN, alpha1: f64::NAN, p0: f64::NAN, p1: f64::NAN });
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        a.alpha0,
        a.alpha1,
        a.p0,
        a.p1,
        p.r_s,
        p.r_l,
        p.r_w,
        p.cost,
        p.model.as_str(),
        p.side.as_str()
    )
}

/// Writes a frontier in [`FRONTIER_HEADER`] layout; `comment` lines are
/// prefixed with `#`. An empty frontier gets an explicit `# empty` marker.
pub fn write_frontier_csv(w: &mut impl Write, f: &Frontier, comment: &str) -> std::io::Result<()> {
    for line in comment.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{FRONTIER_HEADER}")?;
    if f.is_empty() {
        writeln!(w, "# empty: no evaluated point has r_w <= {}", f.budget)?;
    }
    for p in &f.points {
        let a = p.achiever.unwrap_or(AuxParams { alpha0: f64::NAN, alpha1: f64::NAN, p0: f64::NAN, p1: f64::NAN });
        writeln!(w, "{},{},{},{},{},{}", p.cost, p.r_s, a.alpha0, a.alpha1, a.p0, a.p1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::LeakageTerms;
    use approx::assert_abs_diff_eq;

    fn pt(cost: f64, r_s: f64, r_w: f64) -> RatePoint {
        RatePoint {
            r_s,
            r_s_raw: r_s,
            r_l: 0.0,
            r_w,
            r_w_raw: r_w,
            cost,
            model: Model::Gs,
            side: Side::Inner,
            leakage: LeakageTerms { l1: 0.0, l2: 0.0, l3: 0.0 },
            params: None,
        }
    }

    #[test]
    fn axis_lengths() {
        assert_eq!(AxisRange::new(0.0, 1.0, 0.01).len(), 101);
        assert_eq!(AxisRange::new(0.0, 0.5, 0.01).len(), 51);
        assert_eq!(AxisRange::new(0.0, 0.5, 0.05).len(), 11);
        assert_eq!(AxisRange::single(0.3).len(), 1);
        assert_eq!(AxisRange::new(0.0, 1.0, 0.3).value(3), 0.8999999999999999);
        assert_eq!(SweepGrid::fine().len(), 101 * 101 * 51 * 51);
    }

    #[test]
    fn grid_validation() {
        let mut g = SweepGrid::coarse();
        g.p0 = AxisRange::new(0.0, 0.7, 0.1);
        assert!(g.validate().is_err());
        let mut g = SweepGrid::coarse();
        g.alpha1.step = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn lexicographic_vertices() {
        let g = SweepGrid::uniform(0.25);
        assert_eq!(g.vertex(0), AuxParams { alpha0: 0.0, alpha1: 0.0, p0: 0.0, p1: 0.0 });
        assert_eq!(g.vertex(1).p1, 0.25);
        assert_eq!(g.vertex(3).p0, 0.25);
        assert_eq!(g.vertex(g.len() - 1), AuxParams { alpha0: 1.0, alpha1: 1.0, p0: 0.5, p1: 0.5 });
    }

    #[test]
    fn single_vertex_sweep() {
        let g = SweepGrid {
            alpha0: AxisRange::single(0.4),
            alpha1: AxisRange::single(0.6),
            p0: AxisRange::single(0.1),
            p1: AxisRange::single(0.2),
            model: Model::Gs,
            side: Side::Inner,
        };
        let pts = sweep(&BinaryExampleConfig::reference(), &g).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].params.unwrap().alpha1, 0.6);
    }

    #[test]
    fn pure_noise_grid_has_no_key() {
        let mut g = SweepGrid::uniform(0.25);
        g.p0 = AxisRange::single(0.5);
        g.p1 = AxisRange::single(0.5);
        for p in sweep(&BinaryExampleConfig::reference(), &g).unwrap() {
            assert!(p.r_s < 1e-12);
        }
    }

    #[test]
    fn single_point_frontier() {
        let f = frontier(&[pt(0.4, 0.2, 0.0)], 1.0, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(f.points.len(), 1);
        let s = frontier_summary(&f).unwrap();
        assert_eq!((s.c_star, s.r_s_star), (0.4, 0.2));
    }

    #[test]
    fn running_max_envelope() {
        let f = frontier(&[pt(0.3, 0.1, 0.0), pt(0.5, 0.05, 0.0)], f64::INFINITY, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(f.points.len(), 2);
        assert_eq!(f.points[1].cost, 0.5);
        assert_eq!(f.points[1].r_s, 0.1);
        assert_eq!(f.points[1].achiever_cost, 0.3);
    }

    #[test]
    fn budget_filter_and_empty_marker() {
        let pts = [pt(0.3, 0.1, 0.2), pt(0.5, 0.05, 0.01)];
        let f = frontier(&pts, 0.05, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(f.points.len(), 1);
        assert_eq!(f.points[0].r_s, 0.05);
        let empty = frontier(&pts, 0.001, DEFAULT_RESOLUTION).unwrap();
        assert!(empty.is_empty());
        assert!(matches!(frontier_summary(&empty), Err(crate::Error::Domain(_))));
        let mut buf = Vec::new();
        write_frontier_csv(&mut buf, &empty, "x").unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("# empty"));
        assert!(frontier(&[], 1.0, DEFAULT_RESOLUTION).is_err());
    }

    #[test]
    fn flat_frontier_summary_takes_leftmost_cost() {
        let pts = [pt(0.3, 0.2, 0.0), pt(0.4, 0.2, 0.0), pt(0.6, 0.2, 0.0)];
        let s = frontier_summary(&frontier(&pts, 1.0, DEFAULT_RESOLUTION).unwrap()).unwrap();
        assert_eq!(s.c_star, 0.3);
    }

    #[test]
    fn bin_keeps_best_and_max_cost() {
        let pts = [pt(0.3001, 0.1, 0.0), pt(0.3009, 0.05, 0.0), pt(0.3005, 0.1, 0.0)];
        let f = frontier(&pts, 1.0, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(f.points.len(), 1);
        assert_eq!(f.points[0].cost, 0.3009);
        assert_eq!(f.points[0].achiever_cost, 0.3001);
    }

    #[test]
    fn gains() {
        let a = FrontierSummary { c_star: 1.0, r_s_star: 1.0, achiever: None };
        let b = FrontierSummary { c_star: 0.5, r_s_star: 2.0, achiever: None };
        let g = gain_report(&a, &b).unwrap();
        assert_abs_diff_eq!(g.key_rate_gain_pct, 100.0);
        assert_abs_diff_eq!(g.cost_reduction_pct, 50.0);
        let g = gain_report(&a, &a).unwrap();
        assert_eq!((g.key_rate_gain_pct, g.cost_reduction_pct), (0.0, 0.0));
        let zero = FrontierSummary { c_star: 1.0, r_s_star: 0.0, achiever: None };
        assert!(gain_report(&zero, &a).is_err());
    }

    #[test]
    fn envelope_is_concave_and_dominates() {
        let pts = [pt(0.1, 0.0, 0.0), pt(0.2, 0.05, 0.0), pt(0.3, 0.3, 0.0), pt(0.5, 0.32, 0.0), pt(0.7, 0.33, 0.0)];
        let f = frontier(&pts, 1.0, DEFAULT_RESOLUTION).unwrap();
        let e = concave_envelope(&f);
        assert_eq!(e.points.iter().map(|p| p.cost).collect::<Vec<_>>(), vec![0.1, 0.3, 0.5, 0.7]);
        for w in e.points.windows(2) {
            assert!(w[1].r_s >= w[0].r_s);
        }
    }
}
