use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sweep of a planar range finder. `None` marks a beam without a usable
/// return (nothing within range, or closer than `range_min`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub ranges: Vec<Option<f64>>,
}

impl LaserScan {
    pub fn new(
        angle_min: f64,
        angle_increment: f64,
        range_min: f64,
        range_max: f64,
        ranges: Vec<Option<f64>>,
    ) -> Result<Self> {
        let scan = LaserScan {
            angle_min,
            angle_increment,
            range_min,
            range_max,
            ranges,
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranges.is_empty() {
            return Err(Error::Parameter("scan has no readings".into()));
        }
        if !(self.angle_increment > 0.0) || !self.angle_min.is_finite() {
            return Err(Error::Parameter("scan angle_increment must be > 0".into()));
        }
        if !(self.range_min >= 0.0 && self.range_min < self.range_max && self.range_max.is_finite())
        {
            return Err(Error::Parameter(
                "scan range limits must satisfy 0 <= min < max".into(),
            ));
        }
        if let Some(r) = self
            .ranges
            .iter()
            .flatten()
            .find(|&&r| !(r >= self.range_min && r <= self.range_max))
        {
            return Err(Error::Parameter(format!(
                "reading {r} outside [{}, {}]",
                self.range_min, self.range_max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Beam angle relative to the sensor heading.
    #[inline]
    pub fn angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    pub fn valid_count(&self) -> usize {
        self.ranges.iter().filter(|r| r.is_some()).count()
    }

    pub fn angle_max(&self) -> f64 {
        self.angle(self.ranges.len() - 1)
    }
}
