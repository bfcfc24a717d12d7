//! Closed domains on which map families are self-maps.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormKind;

/// The closed set a map family acts on.
///
/// Balls carry the norm they are measured in; an ℓ∞ ball is the box
/// `center ± radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    AllSpace {
        dim: usize,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        norm: NormKind,
    },
}

impl DomainSpec {
    pub fn all_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        Ok(Self::AllSpace { dim })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidInput("box requires lo <= hi componentwise".into()));
        }
        Ok(Self::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64, norm: NormKind) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput("ball radius must be positive".into()));
        }
        Ok(Self::Ball { center, radius, norm })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::AllSpace { dim } => *dim,
            Self::Box { lo, .. } => lo.len(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    /// A canonical interior point (origin, box midpoint or ball center).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Self::AllSpace { dim } => vec![0.0; *dim],
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Self::Ball { center, .. } => center.clone(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Self::AllSpace { .. } => true,
            Self::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *l <= *v && *v <= *h),
            Self::Ball { center, radius, norm } => {
                let d = x.iter().zip(center).map(|(a, b)| a - b);
                match norm {
                    NormKind::EllInf => d.fold(0.0f64, |m, v| m.max(v.abs())) <= *radius,
                    NormKind::Ell2 => d.map(|v| v * v).sum::<f64>().sqrt() <= *radius,
                }
            }
        }
    }

    /// Euclidean projection (clamping for boxes and ℓ∞ balls).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::AllSpace { .. } => x.to_vec(),
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            Self::Ball {
                center,
                radius,
                norm: NormKind::EllInf,
            } => x
                .iter()
                .zip(center)
                .map(|(v, c)| {
                    let mut p = v.clamp(c - radius, c + radius);
                    // `c ± radius` may round to a point just outside
                    while (p - c).abs() > *radius {
                        p = if p > *c { p.next_down() } else { p.next_up() };
                    }
                    p
                })
                .collect(),
            Self::Ball {
                center,
                radius,
                norm: NormKind::Ell2,
            } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n <= *radius {
                    x.to_vec()
                } else {
                    // rounding can leave `center + s·d` a few ulps outside
                    let mut s = radius / n;
                    loop {
                        let p: Vec<f64> = center.iter().zip(&d).map(|(c, v)| c + s * v).collect();
                        if self.contains(&p) {
                            return p;
                        }
                        s *= 1.0 - 4.0 * f64::EPSILON;
                    }
                }
            }
        }
    }

    /// Uniform draw from the domain. Unbounded domains are sampled on the box
    /// `[-fallback_radius, fallback_radius]^m`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, fallback_radius: f64) -> Vec<f64> {
        match self {
            Self::AllSpace { dim } => (0..*dim)
                .map(|_| rng.random_range(-fallback_radius..=fallback_radius))
                .collect(),
            Self::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| if l == h { *l } else { rng.random_range(*l..=*h) })
                .collect(),
            Self::Ball {
                center,
                radius,
                norm: NormKind::EllInf,
            } => center
                .iter()
                .map(|c| c + rng.random_range(-*radius..=*radius))
                .collect(),
            Self::Ball {
                center,
                radius,
                norm: NormKind::Ell2,
            } => {
                let dir = unit_ball_ell2(rng, center.len());
                center.iter().zip(dir).map(|(c, d)| c + radius * d).collect()
            }
        }
    }
}

/// Uniform draw from the Euclidean unit ball in `dim` dimensions.
pub fn unit_ball_ell2<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            let r = rng.random::<f64>().powf(1.0 / dim as f64);
            return g.into_iter().map(|v| v / n * r).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn constructors_validate() {
        assert!(DomainSpec::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(DomainSpec::ball(vec![0.0], 0.0, NormKind::Ell2).is_err());
        assert!(DomainSpec::all_space(0).is_err());
    }

    #[test]
    fn projection_survives_rounding() {
        let c = vec![1.0, -1.0, 0.5];
        let l2 = DomainSpec::ball(c.clone(), 0.1, NormKind::Ell2).unwrap();
        assert!(l2.contains(&l2.project(&[0.0, 9.283196641669635, 3.135142084775895])));
        // -1 - 0.1 rounds to a point 1e-16 outside the ball
        let inf = DomainSpec::ball(c, 0.1, NormKind::EllInf).unwrap();
        assert!(inf.contains(&inf.project(&[0.0, -5.474484493565727, 0.0])));
    }

    #[test]
    fn ball_projection_lands_on_sphere() {
        let d = DomainSpec::ball(vec![0.0, 0.0], 1.0, NormKind::Ell2).unwrap();
        let p = d.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert!(d.contains(&p));
    }

    #[test]
    fn samples_are_members() {
        let mut rng = stream(1, &[]);
        let domains = [
            DomainSpec::boxed(vec![-1.0, 2.0], vec![0.0, 5.0]).unwrap(),
            DomainSpec::ball(vec![1.0, 1.0, 1.0], 0.5, NormKind::Ell2).unwrap(),
            DomainSpec::ball(vec![1.0, 1.0], 0.5, NormKind::EllInf).unwrap(),
        ];
        for d in &domains {
            for _ in 0..200 {
                assert!(d.contains(&d.sample(&mut rng, 1.0)));
            }
        }
    }
}
