//! Single-phase per-unit load flow in implicit-impedance (Z-bus) fixed-point
//! form: `v ↦ w·1 + Z conj(s ./ v)` over interleaved `(re, im)` coordinates.
//!
//! Bus 0 is the slack bus with fixed voltage `w`; buses `1..=n` carry complex
//! power injections `s` (negative real part for loads). `Z` is the inverse of
//! the admittance matrix restricted to the non-slack buses. Lines carry no
//! shunt elements, so the slack contribution `-Z Y_L0 w` equals `w·1`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::map::MapFamily;
use crate::norm::NormSpec;
use crate::rng::stream;

/// Voltages closer to zero than this are rejected before dividing.
pub const VOLTAGE_GUARD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series impedance as `[re, im]`.
    pub z: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerNetwork {
    /// Number of non-slack buses; buses are numbered `0..=n_buses`.
    pub n_buses: usize,
    pub slack_voltage: Complex64,
    pub lines: Vec<Line>,
    /// Nominal injections of buses `1..=n_buses`.
    pub injections: Vec<Complex64>,
    /// ℓ∞ radius (per real coordinate) of the ball around flat voltage.
    pub radius: f64,
    /// Buses of each area in chain order; empty for a single-area network.
    #[serde(default)]
    pub areas: Vec<Vec<usize>>,
}

impl PowerNetwork {
    pub fn from_json(text: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_buses == 0 {
            return Err(Error::InvalidInput("network needs at least one non-slack bus".into()));
        }
        if self.injections.len() != self.n_buses {
            return Err(Error::LengthMismatch {
                expected: self.n_buses,
                found: self.injections.len(),
            });
        }
        for l in &self.lines {
            if l.from > self.n_buses || l.to > self.n_buses || l.from == l.to {
                return Err(Error::InvalidInput(format!("bad line {}-{}", l.from, l.to)));
            }
            if l.z.norm() == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "line {}-{} has zero impedance",
                    l.from, l.to
                )));
            }
        }
        if !(self.radius > 0.0) || self.slack_voltage.norm() <= std::f64::consts::SQRT_2 * self.radius {
            return Err(Error::InvalidInput(
                "radius must be positive and the ball must stay away from zero voltage".into(),
            ));
        }
        self.kernel()?;
        Ok(())
    }

    /// Flat voltage `w·1` in interleaved coordinates.
    pub fn flat(&self) -> Vec<f64> {
        to_real(&vec![self.slack_voltage; self.n_buses])
    }

    /// `Z = inv(Y_LL)`.
    pub fn kernel(&self) -> Result<DMatrix<Complex64>> {
        let idx: Vec<Option<usize>> = (0..=self.n_buses).map(|b| b.checked_sub(1)).collect();
        impedance_kernel(self.n_buses, &idx, self.lines.iter().map(|l| (l.from, l.to, l.z)))
    }

    /// Lower bound `|w| - √2 r` on voltage magnitudes inside the ball.
    pub fn min_voltage(&self) -> f64 {
        self.slack_voltage.norm() - std::f64::consts::SQRT_2 * self.radius
    }

    /// A 2-bus network: slack and one bus joined by impedance `z`.
    pub fn two_bus(z: Complex64, w: f64, s: Complex64, radius: f64) -> Result<Self> {
        let net = Self {
            n_buses: 1,
            slack_voltage: Complex64::new(w, 0.0),
            lines: vec![Line { from: 0, to: 1, z }],
            injections: vec![s],
            radius,
            areas: Vec::new(),
        };
        net.validate()?;
        Ok(net)
    }

    /// Synthetic 12-bus radial feeder in three areas of four buses.
    ///
    /// Area 1 is buses 1-4 fed from the slack through 0-1; areas 2 and 3 hang
    /// off tie lines 3-5 and 7-9. Every line is `0.01 + 0.02j` per unit and
    /// loads are between 0.03 and 0.045 per unit at power factor about 0.9.
    pub fn twelve_bus_three_area() -> Self {
        let z = Complex64::new(0.01, 0.02);
        let pairs = [
            (0, 1),
            (1, 2),
            (2, 3),
            (2, 4),
            (3, 5),
            (5, 6),
            (6, 7),
            (6, 8),
            (7, 9),
            (9, 10),
            (10, 11),
            (10, 12),
        ];
        let injections = (1..=12)
            .map(|k| {
                let p = 0.03 + 0.005 * (k % 4) as f64;
                -Complex64::new(p, 0.5 * p)
            })
            .collect();
        Self {
            n_buses: 12,
            slack_voltage: Complex64::new(1.0, 0.0),
            lines: pairs.iter().map(|&(from, to)| Line { from, to, z }).collect(),
            injections,
            radius: 0.2,
            areas: vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8], vec![9, 10, 11, 12]],
        }
    }
}

/// Inverse admittance over the buses with `idx[b] = Some(row)`; lines touching
/// a bus with `idx[b] = None` count as connections to a fixed voltage.
pub(crate) fn impedance_kernel(
    n: usize,
    idx: &[Option<usize>],
    lines: impl IntoIterator<Item = (usize, usize, Complex64)>,
) -> Result<DMatrix<Complex64>> {
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for (a, b, z) in lines {
        let adm = z.inv();
        let (ia, ib) = (idx.get(a).copied().flatten(), idx.get(b).copied().flatten());
        if let Some(i) = ia {
            y[(i, i)] += adm;
        }
        if let Some(j) = ib {
            y[(j, j)] += adm;
        }
        if let (Some(i), Some(j)) = (ia, ib) {
            y[(i, j)] -= adm;
            y[(j, i)] -= adm;
        }
    }
    y.try_inverse()
        .ok_or_else(|| Error::InvalidInput("admittance matrix is singular (bus not connected to the slack)".into()))
}

pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// `anchor·1 + Z conj(s ./ v)` with the division guard.
pub(crate) fn zbus_step(
    z: &DMatrix<Complex64>,
    anchor: Complex64,
    s: &[Complex64],
    v: &[Complex64],
    t: usize,
) -> Result<Vec<Complex64>> {
    let mut u = Vec::with_capacity(v.len());
    for (k, (sk, vk)) in s.iter().zip(v).enumerate() {
        if vk.norm() < VOLTAGE_GUARD {
            return Err(Error::DomainViolation {
                t,
                detail: format!("voltage at position {k} is below {VOLTAGE_GUARD}"),
            });
        }
        u.push((sk / vk).conj());
    }
    Ok((0..v.len())
        .map(|k| anchor + (0..v.len()).map(|l| z[(k, l)] * u[l]).sum::<Complex64>())
        .collect())
}

/// `max_k Σ_l √2 |Z_kl| |s_l| / ρ²`: bound on the ℓ∞ Lipschitz constant of
/// `v ↦ Z conj(s ./ v)` over real coordinates when every `|v_l| >= ρ`.
///
/// Each term is a real 2×2 rotation-scaling of magnitude `|Z_kl||s_l|/|v_l|²`
/// whose ℓ∞-induced norm is at most `√2` times that magnitude.
pub fn zbus_lipschitz_bound(z: &DMatrix<Complex64>, s_mag: &[f64], rho: f64) -> f64 {
    (0..z.nrows())
        .map(|k| {
            (0..z.ncols())
                .map(|l| std::f64::consts::SQRT_2 * z[(k, l)].norm() * s_mag[l])
                .sum::<f64>()
                / (rho * rho)
        })
        .fold(0.0, f64::max)
}

/// `max_k Σ_l |Z_kl| |s_l| / ρ`: largest possible displacement of any real
/// coordinate of `Z conj(s ./ v)` when every `|v_l| >= ρ`.
pub fn zbus_displacement_bound(z: &DMatrix<Complex64>, s_mag: &[f64], rho: f64) -> f64 {
    (0..z.nrows())
        .map(|k| (0..z.ncols()).map(|l| z[(k, l)].norm() * s_mag[l]).sum::<f64>() / rho)
        .fold(0.0, f64::max)
}

/// Time profile applied to the nominal injections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InjectionProfile {
    #[default]
    Constant,
    /// `s_l · (1 + amplitude · sin(2πt/period))`.
    Sine { amplitude: f64, period: f64 },
    /// Per-bus multiplicative factors starting at 1 and moving by at most
    /// `step` per tick, clipped to `[1 - band, 1 + band]`.
    RandomWalk { step: f64, band: f64 },
}

impl InjectionProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant => true,
            Self::Sine { amplitude, period } => amplitude >= 0.0 && period > 0.0,
            Self::RandomWalk { step, band } => step >= 0.0 && (0.0..1.0).contains(&band),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad injection profile {self:?}")))
        }
    }

    /// Largest multiplicative factor the profile can apply.
    pub fn peak_factor(&self) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Sine { amplitude, .. } => 1.0 + amplitude,
            Self::RandomWalk { band, .. } => 1.0 + band,
        }
    }

    /// The same profile with its time variation multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        match *self {
            Self::Constant => Self::Constant,
            Self::Sine { amplitude, period } => Self::Sine {
                amplitude: amplitude * scale,
                period,
            },
            Self::RandomWalk { step, band } => Self::RandomWalk {
                step: step * scale,
                band,
            },
        }
    }
}

/// Realized injections `s^(t)` for `t = 1..=ticks`.
#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    series: Arc<Vec<Vec<Complex64>>>,
    envelope: Vec<f64>,
}

impl Injection {
    pub fn new(profile: &InjectionProfile, nominal: &[Complex64], ticks: usize, seed: u64) -> Result<Self> {
        profile.validate()?;
        if *profile == InjectionProfile::Constant {
            return Ok(Self::constant(nominal));
        }
        let n = nominal.len();
        let mut series = Vec::with_capacity(ticks);
        let mut factors = vec![1.0; n];
        let mut rng = stream(seed, &[0x494e_4a45]);
        for t in 1..=ticks.max(1) {
            match *profile {
                InjectionProfile::Constant => {}
                InjectionProfile::Sine { amplitude, period } => {
                    let f = 1.0 + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin();
                    factors.iter_mut().for_each(|x| *x = f);
                }
                InjectionProfile::RandomWalk { step, band } => {
                    if t > 1 {
                        for f in factors.iter_mut() {
                            let d: f64 = if step > 0.0 {
                                rng.random_range(-step..=step)
                            } else {
                                0.0
                            };
                            *f = (*f + d).clamp(1.0 - band, 1.0 + band);
                        }
                    }
                }
            }
            series.push(nominal.iter().zip(&factors).map(|(s, f)| s * f).collect());
        }
        let envelope = nominal.iter().map(|s| s.norm() * profile.peak_factor()).collect();
        Ok(Self {
            series: Arc::new(series),
            envelope,
        })
    }

    pub fn constant(nominal: &[Complex64]) -> Self {
        Self {
            series: Arc::new(vec![nominal.to_vec()]),
            envelope: nominal.iter().map(|s| s.norm()).collect(),
        }
    }

    /// Injections at tick `t`; a single-entry series is constant in time.
    pub fn at(&self, t: usize) -> Result<&[Complex64]> {
        if self.series.len() == 1 {
            return Ok(&self.series[0]);
        }
        self.series.get(t.wrapping_sub(1)).map(Vec::as_slice).ok_or_else(|| {
            Error::IndexOutOfRange(format!(
                "injections were realized for {} ticks, t = {t} requested",
                self.series.len()
            ))
        })
    }

    pub fn ticks(&self) -> usize {
        self.series.len()
    }

    /// Upper bound on `|s_l^(t)|` over all ticks.
    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }
}

/// The load-flow family on the ℓ∞ box of radius `net.radius` around flat
/// voltage.
///
/// The declared constant at tick `t` is [`zbus_lipschitz_bound`] evaluated at
/// `s^(t)`; the supremum uses the injection envelope. A supremum at or above 1
/// gives `ContractionUncertified`, and an envelope that could push a point out
/// of the box gives `PreconditionFailed`.
pub fn build_loadflow_map(net: &PowerNetwork, injection: &Injection) -> Result<MapFamily> {
    net.validate()?;
    if injection.envelope().len() != net.n_buses {
        return Err(Error::LengthMismatch {
            expected: net.n_buses,
            found: injection.envelope().len(),
        });
    }
    let z = Arc::new(net.kernel()?);
    let rho = net.min_voltage();
    let l_sup = zbus_lipschitz_bound(&z, injection.envelope(), rho);
    if l_sup >= 1.0 {
        return Err(Error::ContractionUncertified { estimate: l_sup });
    }
    let reach = zbus_displacement_bound(&z, injection.envelope(), rho);
    if reach > net.radius {
        return Err(Error::PreconditionFailed(format!(
            "injections can move voltages by {reach} > radius {}",
            net.radius
        )));
    }
    let flat = net.flat();
    let domain = DomainSpec::boxed(
        flat.iter().map(|c| c - net.radius).collect(),
        flat.iter().map(|c| c + net.radius).collect(),
    )?;
    let w = net.slack_voltage;
    let (z_eval, inj_eval) = (Arc::clone(&z), injection.clone());
    let family = MapFamily::new("loadflow", domain, NormSpec::ell_inf(), l_sup, move |x, t| {
        let v = to_complex(x);
        Ok(to_real(&zbus_step(&z_eval, w, inj_eval.at(t)?, &v, t)?))
    })?;
    let inj_l = injection.clone();
    family.with_lipschitz_series(l_sup, move |t| match inj_l.at(t) {
        Ok(s) => {
            let mags: Vec<f64> = s.iter().map(|c| c.norm()).collect();
            zbus_lipschitz_bound(&z, &mags, rho)
        }
        Err(_) => l_sup,
    })
}

/// Closed-form high-voltage solution of the 2-bus equation
/// `(v - w) conj(v) = z conj(s)` for real `w > 0`.
///
/// With `c = z conj(s)` and `v = a + jb`: `b = Im(c)/w` and
/// `a = (w + sqrt(w² - 4(b² - Re c)))/2`.
pub fn two_bus_fixed_point(z: Complex64, w: f64, s: Complex64) -> Result<Complex64> {
    let c = z * s.conj();
    let b = c.im / w;
    let disc = w * w - 4.0 * (b * b - c.re);
    if disc < 0.0 {
        return Err(Error::PreconditionFailed("2-bus load flow has no solution".into()));
    }
    Ok(Complex64::new((w + disc.sqrt()) / 2.0, b))
}

/// Complex power flowing through a tie line of impedance `z_tie` from the
/// connection point (voltage `v_connection`) into the bus at its far end
/// (voltage `v_far`), measured at the connection point, as `(P, Q)`.
pub fn boundary_injection(v_connection: [f64; 2], v_far: [f64; 2], z_tie: Complex64) -> Result<[f64; 2]> {
    let vc = Complex64::new(v_connection[0], v_connection[1]);
    if vc.norm() < VOLTAGE_GUARD {
        return Err(Error::DomainViolation {
            t: 0,
            detail: "connection voltage is near zero".into(),
        });
    }
    let g = tie_flow(vc, Complex64::new(v_far[0], v_far[1]), z_tie);
    Ok([g.re, g.im])
}

pub(crate) fn tie_flow(v_connection: Complex64, v_far: Complex64, z_tie: Complex64) -> Complex64 {
    v_connection * ((v_connection - v_far) / z_tie).conj()
}
