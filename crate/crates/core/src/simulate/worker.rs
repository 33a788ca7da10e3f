use crate::ability::{AbilityProfile, Marginal, NoiseKind};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which of two sources supplies a subskill.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Per-difficulty choice between two source profiles: B is used where
/// `b_scale · mean_B(s) > mean_A(s)`, A otherwise (ties go to A).
///
/// `b_scale` is the planner's trust in B; the realized ability always follows
/// the chosen source's true profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub a: LevelProfile,
    pub b: LevelProfile,
    pub b_scale: f64,
}

impl Selection {
    pub fn side(&self, s: f64) -> Side {
        if self.b_scale * self.b.mean_ability(s) > self.a.mean_ability(s) {
            Side::B
        } else {
            Side::A
        }
    }

    pub fn source(&self, s: f64) -> &AbilityProfile {
        match self.side(s) {
            Side::A => self.a.profile_at(s),
            Side::B => self.b.profile_at(s),
        }
    }

    /// Difficulties in (0, 1) where the chosen side switches, for affine sources.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        let (ca, ka) = self.a.as_single()?.family().affine_coefficients()?;
        let (cb, kb) = self.b.as_single()?.family().affine_coefficients()?;
        // λ(cb + kb·s) − (ca + ka·s) = 0
        let slope = self.b_scale * kb - ka;
        let icpt = self.b_scale * cb - ca;
        if slope == 0.0 {
            return Some(Vec::new());
        }
        let s = -icpt / slope;
        Some(if s > 0.0 && s < 1.0 { vec![s] } else { Vec::new() })
    }
}

/// Ability at one subskill level: a single profile or a selection between two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelProfile {
    Single(AbilityProfile),
    Selected(Box<Selection>),
}

impl From<AbilityProfile> for LevelProfile {
    fn from(p: AbilityProfile) -> Self {
        LevelProfile::Single(p)
    }
}

impl LevelProfile {
    pub fn profile_at(&self, s: f64) -> &AbilityProfile {
        match self {
            LevelProfile::Single(p) => p,
            LevelProfile::Selected(sel) => sel.source(s),
        }
    }

    pub fn mean_ability(&self, s: f64) -> f64 {
        self.profile_at(s).mean_ability(s)
    }

    pub fn marginal(&self, s: f64) -> Marginal {
        self.profile_at(s).marginal(s)
    }

    pub fn as_single(&self) -> Option<&AbilityProfile> {
        match self {
            LevelProfile::Single(p) => Some(p),
            LevelProfile::Selected(_) => None,
        }
    }

    /// Noise kinds that can occur at this level.
    pub fn noise_kinds(&self) -> Vec<NoiseKind> {
        match self {
            LevelProfile::Single(p) => vec![p.noise().kind],
            LevelProfile::Selected(sel) => {
                let mut k = sel.a.noise_kinds();
                k.extend(sel.b.noise_kinds());
                k
            }
        }
    }
}

/// A decision-level and an action-level profile plus the dependency parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    alpha1: LevelProfile,
    alpha2: LevelProfile,
    p: f64,
}

impl Worker {
    pub fn new(alpha1: impl Into<LevelProfile>, alpha2: impl Into<LevelProfile>, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("dependency p = {p} is outside [0,1]")));
        }
        Ok(Worker {
            alpha1: alpha1.into(),
            alpha2: alpha2.into(),
            p,
        })
    }

    /// Independent worker (p = 0).
    pub fn independent(alpha1: impl Into<LevelProfile>, alpha2: impl Into<LevelProfile>) -> Self {
        Worker {
            alpha1: alpha1.into(),
            alpha2: alpha2.into(),
            p: 0.0,
        }
    }

    pub fn alpha1(&self) -> &LevelProfile {
        &self.alpha1
    }

    pub fn alpha2(&self) -> &LevelProfile {
        &self.alpha2
    }

    pub fn level(&self, level: usize) -> &LevelProfile {
        match level {
            1 => &self.alpha1,
            2 => &self.alpha2,
            _ => panic!("subskill level must be 1 or 2"),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Worker::new(self.alpha1.clone(), self.alpha2.clone(), p)
    }
}
