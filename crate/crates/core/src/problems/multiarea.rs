//! Load flow solved by a chain of areas exchanging connection-point voltages
//! and measured boundary power flows.
//!
//! Area `k` treats the upstream end of its incoming tie line (the slack bus
//! for the first area) as its source and solves
//! `v_k = anchor·1 + Z_k conj(s_eff ./ v_k)`, where `Z_k` is the kernel of the
//! area's buses plus its incoming tie. At the bus feeding the next area the
//! injection is reduced by the measured flow `g` into that area. Flows are
//! measured on the physical network, i.e. at the monolithic operating point
//! `v^(*,t)`, so the only state an area reads is its upstream anchor voltage.
//!
//! Voltages are compared in the weighted block-max ℓ∞ norm with weight
//! `ratio^k` on area `k`: each area passes its anchor through with unit gain,
//! which the growing weights turn into a contraction.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::loadflow::{
    build_loadflow_map, impedance_kernel, tie_flow, to_complex, to_real, zbus_displacement_bound, zbus_lipschitz_bound,
    zbus_step, Injection, PowerNetwork,
};
use super::qp::MeasurementNoise;
use crate::async_sim::{DependencyGraph, InexactMapFamily};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::{BlockLayout, NormSpec};
use crate::solver::solve_fixed_point;

#[derive(Clone, Debug, PartialEq)]
pub struct Area {
    /// Global bus ids in block order.
    pub buses: Vec<usize>,
    /// Incoming tie: local index of the bus it reaches and its impedance.
    /// `None` for the first area, which is fed from the slack bus.
    pub tie: Option<(usize, Complex64)>,
    /// Local index of the bus feeding the next area.
    pub connection: Option<usize>,
    pub kernel: DMatrix<Complex64>,
}

/// A network partitioned into a chain of areas with single tie lines.
#[derive(Clone, Debug, PartialEq)]
pub struct AreaChain {
    pub areas: Vec<Area>,
    pub slack: Complex64,
    n_buses: usize,
}

impl AreaChain {
    /// Checks that `net.areas` partitions the buses into a chain: only the
    /// first area touches the slack, consecutive areas share exactly one line,
    /// nonconsecutive areas share none.
    pub fn from_network(net: &PowerNetwork) -> Result<Self> {
        let unsupported = |m: String| Err(Error::PartitionUnsupported(m));
        let n_areas = net.areas.len();
        if n_areas == 0 {
            return unsupported("network has no area assignment".into());
        }
        let mut area_of = vec![None; net.n_buses + 1];
        for (k, buses) in net.areas.iter().enumerate() {
            if buses.is_empty() {
                return unsupported(format!("area {} is empty", k + 1));
            }
            for &b in buses {
                if b == 0 || b > net.n_buses || area_of[b].is_some() {
                    return unsupported(format!("bus {b} is the slack, unknown or assigned twice"));
                }
                area_of[b] = Some(k);
            }
        }
        if let Some(b) = (1..=net.n_buses).find(|b| area_of[*b].is_none()) {
            return unsupported(format!("bus {b} belongs to no area"));
        }

        let mut internal: Vec<Vec<(usize, usize, Complex64)>> = vec![Vec::new(); n_areas];
        // ties[k] joins area k-1 (first element) to area k (second element)
        let mut ties: Vec<Option<(usize, usize, Complex64)>> = vec![None; n_areas];
        for l in &net.lines {
            match (area_of[l.from], area_of[l.to]) {
                (None, Some(k)) | (Some(k), None) => {
                    if k != 0 {
                        return unsupported(format!("area {} is connected to the slack bus", k + 1));
                    }
                    internal[0].push((l.from, l.to, l.z));
                }
                (Some(a), Some(b)) if a == b => internal[a].push((l.from, l.to, l.z)),
                (Some(a), Some(b)) => {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    if hi != lo + 1 {
                        return unsupported(format!("areas {} and {} are not adjacent", lo + 1, hi + 1));
                    }
                    if ties[hi].is_some() {
                        return unsupported(format!("areas {} and {} share several lines", lo + 1, hi + 1));
                    }
                    let (up, down) = if a < b { (l.from, l.to) } else { (l.to, l.from) };
                    ties[hi] = Some((up, down, l.z));
                }
                (None, None) => return unsupported("line between slack and slack".into()),
            }
        }
        if let Some(k) = (1..n_areas).find(|k| ties[*k].is_none()) {
            return unsupported(format!("areas {} and {} are not connected", k, k + 1));
        }

        let mut areas = Vec::with_capacity(n_areas);
        for (k, buses) in net.areas.iter().enumerate() {
            let mut idx = vec![None; net.n_buses + 1];
            for (i, &b) in buses.iter().enumerate() {
                idx[b] = Some(i);
            }
            let mut lines = internal[k].clone();
            let tie = ties[k].map(|(up, down, z)| {
                lines.push((up, down, z));
                (idx[down].expect("tie endpoint lies in its area"), z)
            });
            let connection = ties
                .get(k + 1)
                .copied()
                .flatten()
                .map(|(up, _, _)| idx[up].expect("tie start lies in area"));
            let kernel = impedance_kernel(buses.len(), &idx, lines)?;
            areas.push(Area {
                buses: buses.clone(),
                tie,
                connection,
                kernel,
            });
        }
        Ok(Self {
            areas,
            slack: net.slack_voltage,
            n_buses: net.n_buses,
        })
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.areas.iter().map(|a| 2 * a.buses.len()).collect()
    }

    /// Reorders interleaved bus voltages `1..=n` into area-block order.
    pub fn to_area_order(&self, x: &[f64]) -> Vec<f64> {
        self.areas
            .iter()
            .flat_map(|a| a.buses.iter().flat_map(|b| [x[2 * (b - 1)], x[2 * (b - 1) + 1]]))
            .collect()
    }

    /// Inverse of [`Self::to_area_order`].
    pub fn to_bus_order(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n_buses];
        let mut p = 0;
        for a in &self.areas {
            for b in &a.buses {
                x[2 * (b - 1)] = y[p];
                x[2 * (b - 1) + 1] = y[p + 1];
                p += 2;
            }
        }
        x
    }

    fn split(&self, y: &[f64]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.areas.len());
        let mut p = 0;
        for a in &self.areas {
            let n = 2 * a.buses.len();
            out.push(to_complex(&y[p..p + n]));
            p += n;
        }
        out
    }

    /// Flows `g_k` from area `k` into area `k+1` at the voltages `y`.
    pub fn tie_flows(&self, y: &[f64]) -> Vec<Complex64> {
        let v = self.split(y);
        (0..self.areas.len() - 1)
            .map(|k| {
                let c = self.areas[k].connection.expect("inner area feeds the next one");
                let (first, z) = self.areas[k + 1].tie.expect("outer area has a tie");
                tie_flow(v[k][c], v[k + 1][first], z)
            })
            .collect()
    }

    /// Effective area injections given global injections and tie flows.
    fn effective(&self, k: usize, s: &[Complex64], flows: &[Complex64]) -> Vec<Complex64> {
        let a = &self.areas[k];
        let mut se: Vec<Complex64> = a.buses.iter().map(|b| s[b - 1]).collect();
        if let Some(c) = a.connection {
            se[c] -= flows[k];
        }
        se
    }

    fn step(&self, y: &[f64], s: &[Complex64], flows: &[Complex64], t: usize) -> Result<Vec<f64>> {
        let v = self.split(y);
        let mut out = Vec::with_capacity(y.len());
        for (k, a) in self.areas.iter().enumerate() {
            let anchor = if k == 0 {
                self.slack
            } else {
                v[k - 1][self.areas[k - 1].connection.expect("inner area feeds the next one")]
            };
            let se = self.effective(k, s, flows);
            out.extend(to_real(&zbus_step(&a.kernel, anchor, &se, &v[k], t)?));
        }
        Ok(out)
    }

    /// The stacked area equations with every tie flow computed from `y`
    /// itself. Its fixed points are exactly the monolithic load-flow
    /// solutions (in area order).
    pub fn stacked_map(&self, y: &[f64], s: &[Complex64], t: usize) -> Result<Vec<f64>> {
        self.step(y, s, &self.tie_flows(y), t)
    }
}

fn measured(flows: &[Vec<Complex64>], t: usize) -> Result<&Vec<Complex64>> {
    flows
        .get(t.wrapping_sub(1))
        .ok_or_else(|| Error::IndexOutOfRange(format!("multi-area maps were built for {} ticks, t = {t}", flows.len())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiAreaOptions {
    /// ℓ∞ radius per area around flat voltage; must grow along the chain.
    pub radii: Vec<f64>,
    /// Weight ratio between consecutive areas in the block-max norm.
    pub weight_ratio: f64,
}

impl MultiAreaOptions {
    /// Radii `0.1, 0.2, ...` and weight ratio 4.
    pub fn for_areas(n: usize) -> Self {
        Self {
            radii: (1..=n).map(|k| 0.1 * k as f64).collect(),
            weight_ratio: 4.0,
        }
    }
}

/// The assembled multi-area problem.
#[derive(Clone)]
pub struct MultiArea {
    pub chain: AreaChain,
    /// Area maps with measured flows; exact when the noise bound is zero.
    pub family: InexactMapFamily,
    /// Edges in both directions between consecutive areas.
    pub graph: DependencyGraph,
    pub monolithic: MapFamily,
    /// Monolithic solutions `v^(*,t)` in area order for `t = 1..=horizon+1`.
    pub reference: Arc<Vec<Vec<f64>>>,
}

/// Builds the area maps for ticks `1..=horizon+1`.
///
/// The declared constant at tick `t` is `max_k(w_{k-1}/w_k + A_k(t))` with
/// `A_k` the ℓ∞ Z-bus bound of area `k`. Measurement noise `ν` with
/// `|ν| <= noise.bound` on each tie flow changes area `k`'s output by at most
/// `max_row |Z_k[row, c_k]| · |ν| / ρ_k` per coordinate, which after the
/// weighting gives `e_f`.
pub fn build_multiarea_maps(
    net: &PowerNetwork,
    injection: &Injection,
    horizon: usize,
    noise: MeasurementNoise,
    opts: &MultiAreaOptions,
) -> Result<MultiArea> {
    let chain = AreaChain::from_network(net)?;
    let n_areas = chain.areas.len();
    if opts.radii.len() != n_areas {
        return Err(Error::LengthMismatch {
            expected: n_areas,
            found: opts.radii.len(),
        });
    }
    if !(opts.weight_ratio >= 1.0) {
        return Err(Error::InvalidInput("weight ratio must be >= 1".into()));
    }
    if !(noise.bound >= 0.0 && noise.bound.is_finite()) {
        return Err(Error::InvalidInput("noise bound must be >= 0".into()));
    }
    let w_mag = chain.slack.norm();
    let rho: Vec<f64> = opts
        .radii
        .iter()
        .map(|r| w_mag - std::f64::consts::SQRT_2 * r)
        .collect();
    if opts.radii.iter().zip(&rho).any(|(r, p)| !(*r > 0.0 && *p > 0.0)) {
        return Err(Error::InvalidInput(
            "area radii must be positive and keep voltages away from zero".into(),
        ));
    }
    let weights: Vec<f64> = (0..n_areas).map(|k| opts.weight_ratio.powi(k as i32)).collect();

    // monolithic operating points: the physical system that the flows are measured on
    let monolithic = build_loadflow_map(net, injection)?;
    let ticks = horizon + 1;
    let mut reference = Vec::with_capacity(ticks);
    let mut warm = net.flat();
    for t in 1..=ticks {
        let x = solve_fixed_point(&monolithic, t, &warm, 1e-14, 10_000)?;
        reference.push(chain.to_area_order(&x));
        warm = x;
    }
    let flows: Vec<Vec<Complex64>> = reference.iter().map(|y| chain.tie_flows(y)).collect();

    let mut l_series = Vec::with_capacity(ticks);
    for t in 1..=ticks {
        let s = injection.at(t)?;
        let mut l_t: f64 = 0.0;
        for (k, a) in chain.areas.iter().enumerate() {
            let mags: Vec<f64> = chain.effective(k, s, &flows[t - 1]).iter().map(|c| c.norm()).collect();
            let upstream = if k == 0 { 0.0 } else { opts.radii[k - 1] };
            let reach = upstream + zbus_displacement_bound(&a.kernel, &mags, rho[k]);
            if reach > opts.radii[k] {
                return Err(Error::PreconditionFailed(format!(
                    "area {} can move voltages by {reach} > radius {} at t = {t}",
                    k + 1,
                    opts.radii[k]
                )));
            }
            let pass = if k == 0 { 0.0 } else { weights[k - 1] / weights[k] };
            l_t = l_t.max(pass + zbus_lipschitz_bound(&a.kernel, &mags, rho[k]));
        }
        l_series.push(l_t);
    }
    let l_sup = l_series.iter().copied().fold(0.0, f64::max);
    if l_sup >= 1.0 {
        return Err(Error::ContractionUncertified { estimate: l_sup });
    }

    let sizes = chain.block_sizes();
    let norm = NormSpec::weighted_block_max(BlockLayout::new(sizes.clone()), weights.clone())?;
    let flat = chain.to_area_order(&net.flat());
    let per_coord: Vec<f64> = chain
        .areas
        .iter()
        .zip(&opts.radii)
        .flat_map(|(a, r)| std::iter::repeat_n(*r, 2 * a.buses.len()))
        .collect();
    let domain = DomainSpec::boxed(
        flat.iter().zip(&per_coord).map(|(c, r)| c - r).collect(),
        flat.iter().zip(&per_coord).map(|(c, r)| c + r).collect(),
    )?;

    let reference = Arc::new(reference);
    let flows = Arc::new(flows);
    let (c_eval, f_eval, inj_eval) = (chain.clone(), Arc::clone(&flows), injection.clone());
    let l_eval = Arc::new(l_series);
    let ref_fp = Arc::clone(&reference);
    let base = MapFamily::new("multiarea-loadflow", domain.clone(), norm, l_sup, move |y, t| {
        c_eval.step(y, inj_eval.at(t)?, measured(&f_eval, t)?, t)
    })?
    .with_lipschitz_series(l_sup, move |t| l_eval.get(t.wrapping_sub(1)).copied().unwrap_or(l_sup))?
    .with_fixed_point(move |t| ref_fp.get(t.wrapping_sub(1)).cloned().unwrap_or_default());

    let family = if noise.bound == 0.0 {
        InexactMapFamily::exact(base)
    } else {
        let e_f = chain
            .areas
            .iter()
            .enumerate()
            .filter_map(|(k, a)| {
                let c = a.connection?;
                let col = (0..a.kernel.nrows())
                    .map(|r| a.kernel[(r, c)].norm())
                    .fold(0.0, f64::max);
                Some(col * noise.bound / rho[k] / weights[k])
            })
            .fold(0.0, f64::max);
        let (c_eval, inj_eval) = (chain.clone(), injection.clone());
        InexactMapFamily::from_evaluator(
            base,
            move |y, t| {
                let mut g = measured(&flows, t)?.clone();
                for (k, gk) in g.iter_mut().enumerate() {
                    let k = k as u64;
                    let nu = Complex64::new(noise.sample(t, 2 * k), noise.sample(t, 2 * k + 1));
                    *gk += nu / std::f64::consts::SQRT_2;
                }
                Ok(domain.project(&c_eval.step(y, inj_eval.at(t)?, &g, t)?))
            },
            e_f,
            move |_| e_f,
        )
    };
    let graph = DependencyGraph::chain_blocks(sizes)?;
    Ok(MultiArea {
        chain,
        family,
        graph,
        monolithic,
        reference,
    })
}
