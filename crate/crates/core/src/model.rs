//! Domain types and the fusion arithmetic shared by every other module.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to every fusion weight.
pub const WEIGHT_MIN: f64 = -1.0;
/// Upper bound applied to every fusion weight.
pub const WEIGHT_MAX: f64 = 2.0;

const SUM_TOLERANCE: f64 = 1e-9;

/// Planar position in meters. Both coordinates are always finite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Position2D {
    x: f64,
    y: f64,
}

impl Position2D {
    pub const ORIGIN: Position2D = Position2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(format!("position ({x}, {y})")));
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Builds a position from coordinates that are finite by construction.
    #[inline]
    pub(crate) fn from_finite(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "({x}, {y})");
        Self { x, y }
    }
}

impl TryFrom<(f64, f64)> for Position2D {
    type Error = Error;

    fn try_from((x, y): (f64, f64)) -> Result<Self> {
        Position2D::new(x, y)
    }
}

impl From<Position2D> for (f64, f64) {
    fn from(p: Position2D) -> Self {
        (p.x, p.y)
    }
}

impl Add for Position2D {
    type Output = Position2D;

    fn add(self, rhs: Self) -> Self {
        Position2D::from_finite(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position2D {
    type Output = Position2D;

    fn sub(self, rhs: Self) -> Self {
        Position2D::from_finite(self.x - rhs.x, self.y - rhs.y)
    }
}

impl fmt::Display for Position2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One timestamp's synchronized tracker estimates plus ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncedEstimates {
    pub t: u64,
    pub truth: Position2D,
    pub rssi: Position2D,
    pub pdr: Position2D,
    pub aoa: Position2D,
}

impl SyncedEstimates {
    /// Shifts every position (truth included) by `delta`.
    pub fn translated(&self, delta: Position2D) -> Self {
        Self {
            t: self.t,
            truth: self.truth + delta,
            rssi: self.rssi + delta,
            pdr: self.pdr + delta,
            aoa: self.aoa + delta,
        }
    }
}

/// Fusion coefficients `(w_rssi, w_pdr, w_aoa)`.
///
/// `w_rssi` and `w_aoa` are the free parameters; `w_pdr` is always derived as
/// `1 - w_rssi - w_aoa`, so the weights sum to one. Every weight stays within
/// `[WEIGHT_MIN, WEIGHT_MAX]`; negative weights are legal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightVector {
    w_rssi: f64,
    w_pdr: f64,
    w_aoa: f64,
}

impl WeightVector {
    pub fn new(w_rssi: f64, w_aoa: f64) -> Result<Self> {
        if !w_rssi.is_finite() || !w_aoa.is_finite() {
            return Err(Error::NonFinite(format!("weights ({w_rssi}, {w_aoa})")));
        }
        let w = Self::derive(w_rssi, w_aoa);
        if !w.in_bounds() {
            return Err(Error::invalid(format!(
                "weights (rssi={}, pdr={}, aoa={}) outside [{WEIGHT_MIN}, {WEIGHT_MAX}]",
                w.w_rssi, w.w_pdr, w.w_aoa
            )));
        }
        Ok(w)
    }

    /// Accepts an explicit triple; it must already sum to one within 1e-9.
    pub fn from_triple(w_rssi: f64, w_pdr: f64, w_aoa: f64) -> Result<Self> {
        let sum = w_rssi + w_pdr + w_aoa;
        if !sum.is_finite() || (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "weights must sum to 1, got {w_rssi} + {w_pdr} + {w_aoa} = {sum}"
            )));
        }
        Self::new(w_rssi, w_aoa)
    }

    pub fn rssi_only() -> Self {
        Self::derive(1.0, 0.0)
    }

    pub fn pdr_only() -> Self {
        Self::derive(0.0, 0.0)
    }

    pub fn aoa_only() -> Self {
        Self::derive(0.0, 1.0)
    }

    /// `(1/3, 1/3, 1/3)` with every component exactly `1.0 / 3.0`.
    pub fn equal() -> Self {
        let third = 1.0 / 3.0;
        Self {
            w_rssi: third,
            w_pdr: third,
            w_aoa: third,
        }
    }

    #[inline]
    pub(crate) fn derive(w_rssi: f64, w_aoa: f64) -> Self {
        Self {
            w_rssi,
            w_pdr: 1.0 - w_rssi - w_aoa,
            w_aoa,
        }
    }

    #[inline]
    pub(crate) fn with_zero_pdr(w_rssi: f64, w_aoa: f64) -> Self {
        Self {
            w_rssi,
            w_pdr: 0.0,
            w_aoa,
        }
    }

    pub(crate) fn in_bounds(&self) -> bool {
        [self.w_rssi, self.w_pdr, self.w_aoa]
            .iter()
            .all(|w| (WEIGHT_MIN..=WEIGHT_MAX).contains(w))
    }

    #[inline]
    pub fn rssi(&self) -> f64 {
        self.w_rssi
    }

    #[inline]
    pub fn pdr(&self) -> f64 {
        self.w_pdr
    }

    #[inline]
    pub fn aoa(&self) -> f64 {
        self.w_aoa
    }

    pub fn sum(&self) -> f64 {
        self.w_rssi + self.w_pdr + self.w_aoa
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            w_rssi: f64,
            w_pdr: f64,
            w_aoa: f64,
        }
        let raw = Raw::deserialize(d)?;
        WeightVector::from_triple(raw.w_rssi, raw.w_pdr, raw.w_aoa).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rssi={:.6} pdr={:.6} aoa={:.6}",
            self.w_rssi, self.w_pdr, self.w_aoa
        )
    }
}

/// Movement scenario labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Rectangular,
    DiagonalA,
    DiagonalB,
    Random,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Rectangular,
        Scenario::DiagonalA,
        Scenario::DiagonalB,
        Scenario::Random,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Rectangular => "rectangular",
            Scenario::DiagonalA => "diagonal_a",
            Scenario::DiagonalB => "diagonal_b",
            Scenario::Random => "random",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" => Ok(Scenario::Rectangular),
            "diagonal_a" => Ok(Scenario::DiagonalA),
            "diagonal_b" => Ok(Scenario::DiagonalB),
            "random" => Ok(Scenario::Random),
            other => Err(Error::invalid(format!(
                "unknown scenario '{other}' (expected rectangular | diagonal_a | diagonal_b | random)"
            ))),
        }
    }
}

/// An ordered, non-empty sequence of synchronized records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    env_id: String,
    scenario: Scenario,
    records: Vec<SyncedEstimates>,
}

impl Trajectory {
    pub fn new(
        env_id: impl Into<String>,
        scenario: Scenario,
        records: Vec<SyncedEstimates>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("trajectory has no records"));
        }
        if let Some(w) = records.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid(format!(
                "timestamps must be strictly increasing ({} followed by {})",
                w[0].t, w[1].t
            )));
        }
        Ok(Self {
            env_id: env_id.into(),
            scenario,
            records,
        })
    }

    pub fn env_id(&self) -> &str {
        &self.env_id
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn records(&self) -> &[SyncedEstimates] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Weighted combination of the three tracker estimates.
///
/// Evaluated relative to the most heavily weighted path `r` as
/// `r + Σ w_i (p_i - r)`. That equals `w_rssi rssi + w_pdr pdr + w_aoa aoa`
/// when the weights sum to one, returns the common point bit-exactly when all
/// three estimates coincide, and returns the selected path bit-exactly for a
/// selector weight such as `(1, 0, 0)`.
#[inline]
pub fn fuse(estimates: &SyncedEstimates, w: &WeightVector) -> Position2D {
    let (x, y) = fuse_coords(estimates, w);
    Position2D::from_finite(x, y)
}

#[inline]
pub(crate) fn fuse_coords(e: &SyncedEstimates, w: &WeightVector) -> (f64, f64) {
    let paths = [(w.w_rssi, e.rssi), (w.w_pdr, e.pdr), (w.w_aoa, e.aoa)];
    let mut anchor = 0;
    for i in 1..3 {
        if paths[i].0 > paths[anchor].0 {
            anchor = i;
        }
    }
    let r = paths[anchor].1;
    let (mut x, mut y) = (r.x, r.y);
    for (i, (wi, p)) in paths.iter().enumerate() {
        if i != anchor {
            x += wi * (p.x - r.x);
            y += wi * (p.y - r.y);
        }
    }
    (x, y)
}

/// Euclidean distance between ground truth and the fused estimate, in meters.
#[inline]
pub fn tracking_error(estimates: &SyncedEstimates, w: &WeightVector) -> f64 {
    let (x, y) = fuse_coords(estimates, w);
    let (dx, dy) = (estimates.truth.x - x, estimates.truth.y - y);
    (dx * dx + dy * dy).sqrt()
}
