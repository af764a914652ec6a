use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::Observation;

/// Names accepted by [`DetectorModel::preset`].
pub const PRESET_NAMES: [&str; 3] = ["mrcnn-default", "rednet", "ft-mrcnn"];

/// Parametric stand-in for an object detector of a given quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub name: String,
    /// Per-category probability that a visible instance is reported at all.
    pub recall: Vec<f64>,
    /// Row-stochastic `C x C` matrix: true category -> reported category.
    pub confusion: Vec<Vec<f64>>,
    pub max_detect_range: f64,
    /// Per-ray probability of a spurious label on rays without an object.
    pub false_positive_rate: f64,
}

impl DetectorModel {
    /// Identical recall for every category and the off-diagonal mass spread
    /// evenly over the other categories.
    pub fn uniform(name: &str, categories: usize, recall: f64, off_diagonal: f64, fp_rate: f64, range: f64) -> Self {
        let confusion = (0..categories)
            .map(|i| {
                (0..categories)
                    .map(|j| match (i == j, categories) {
                        (true, 1) => 1.0,
                        (true, _) => 1.0 - off_diagonal,
                        (false, _) => off_diagonal / (categories - 1) as f64,
                    })
                    .collect()
            })
            .collect();
        Self {
            name: name.to_string(),
            recall: vec![recall; categories],
            confusion,
            max_detect_range: range,
            false_positive_rate: fp_rate,
        }
    }

    /// Every visible object reported with its true category.
    pub fn noiseless(categories: usize, range: f64) -> Self {
        Self::uniform("noiseless", categories, 1.0, 0.0, 0.0, range)
    }

    /// Synthetic quality tiers. The numbers are tuning knobs ordered like the
    /// detectors they are named after, not measurements of those detectors.
    pub fn preset(name: &str, categories: usize) -> Result<Self> {
        let (recall, off, fp) = match name {
            "mrcnn-default" => (0.70, 0.15, 0.02),
            "rednet" => (0.82, 0.08, 0.01),
            "ft-mrcnn" => (0.93, 0.03, 0.005),
            _ => return Err(Error::Config(format!("unknown detector preset '{name}'"))),
        };
        Ok(Self::uniform(name, categories, recall, off, fp, 5.0))
    }

    pub fn categories(&self) -> usize {
        self.recall.len()
    }

    pub fn validate(&self, sensor_max_range: f64) -> Result<()> {
        let c = self.recall.len();
        if c == 0 {
            return Err(Error::EmptyInput("detector recall"));
        }
        if self.confusion.len() != c {
            return Err(Error::LengthMismatch { what: "confusion rows", left: self.confusion.len(), right: c });
        }
        for (i, row) in self.confusion.iter().enumerate() {
            if row.len() != c {
                return Err(Error::LengthMismatch { what: "confusion columns", left: row.len(), right: c });
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("confusion row {i} is not a probability distribution")));
            }
        }
        if self.recall.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::OutOfRange("recall must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.false_positive_rate) {
            return Err(Error::OutOfRange("false_positive_rate must lie in [0, 1]".into()));
        }
        if !(self.max_detect_range > 0.0 && self.max_detect_range <= sensor_max_range) {
            return Err(Error::OutOfRange(format!(
                "max_detect_range {} must be in (0, {sensor_max_range}]",
                self.max_detect_range
            )));
        }
        Ok(())
    }
}

fn sample_row(row: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // Rounding slack: fall back to the last category with nonzero mass.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Per-ray reported labels for one observation.
pub fn detect(obs: &Observation, detector: &DetectorModel, rng: &mut impl Rng) -> Vec<Option<usize>> {
    let c = detector.categories();
    obs.true_labels
        .iter()
        .zip(&obs.depth)
        .map(|(&label, &depth)| match label {
            Some(cat) if cat < c => {
                if depth <= detector.max_detect_range && rng.gen::<f64>() < detector.recall[cat] {
                    Some(sample_row(&detector.confusion[cat], rng))
                } else {
                    None
                }
            }
            Some(_) => None,
            None => {
                if detector.false_positive_rate > 0.0 && rng.gen::<f64>() < detector.false_positive_rate {
                    Some(rng.gen_range(0..c))
                } else {
                    None
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{AgentPose, SensorConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(labels: Vec<Option<usize>>, depth: f64) -> Observation {
        let n = labels.len();
        Observation {
            depth: vec![depth; n],
            true_labels: labels,
            pose_reading: AgentPose::new(0.0, 0.0, 0.0, 0),
            sensor: SensorConfig { ray_count: n, ..Default::default() },
            open: vec![],
        }
    }

    #[test]
    fn noiseless_is_identity() {
        let o = obs(vec![Some(0), None, Some(3), Some(5), None], 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(detect(&o, &DetectorModel::noiseless(6, 5.0), &mut rng), o.true_labels);
    }

    #[test]
    fn zero_recall_reports_nothing() {
        let o = obs(vec![Some(1); 100], 1.0);
        let det = DetectorModel::uniform("r0", 6, 0.0, 0.0, 0.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(detect(&o, &det, &mut rng).iter().all(Option::is_none));
    }

    #[test]
    fn out_of_range_objects_are_missed() {
        let o = obs(vec![Some(1); 10], 4.0);
        let det = DetectorModel::noiseless(6, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(detect(&o, &det, &mut rng).iter().all(Option::is_none));
    }

    #[test]
    fn presets_validate_and_are_ordered() {
        let tiers: Vec<_> = PRESET_NAMES.iter().map(|n| DetectorModel::preset(n, 6).unwrap()).collect();
        for t in &tiers {
            t.validate(5.0).unwrap();
        }
        assert!(tiers[0].recall[0] < tiers[1].recall[0] && tiers[1].recall[0] < tiers[2].recall[0]);
        assert!(DetectorModel::preset("yolo", 6).is_err());
    }

    #[test]
    fn bad_confusion_rejected() {
        let mut det = DetectorModel::noiseless(3, 5.0);
        det.confusion[1][0] = 0.5;
        assert!(det.validate(5.0).is_err());
    }
}
