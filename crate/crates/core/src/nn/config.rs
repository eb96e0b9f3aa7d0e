use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and training hyperparameters.
///
/// The defaults give the full-size network: two 5x5 "same" convolutions
/// (32 and 64 filters) each followed by ReLU and 2x2 max pooling, then a
/// 1024-unit hidden layer with dropout and a 2-way softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnnConfig {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub kernel: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub fc1_units: usize,
    pub num_classes: usize,
    /// Probability of dropping a hidden unit during training.
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub rng_seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            input_channels: 2,
            input_height: 128,
            input_width: 128,
            kernel: 5,
            conv1_filters: 32,
            conv2_filters: 64,
            fc1_units: 1024,
            num_classes: 2,
            dropout_rate: 0.5,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 64,
            epochs: 10,
            rng_seed: 42,
        }
    }
}

impl CnnConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.input_channels == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 {
            return fail("channel and filter counts must be positive");
        }
        if self.input_height == 0
            || self.input_width == 0
            || !self.input_height.is_multiple_of(4)
            || !self.input_width.is_multiple_of(4)
        {
            return fail("input sides must be positive multiples of 4");
        }
        if self.kernel.is_multiple_of(2) {
            return fail("kernel size must be odd for same padding");
        }
        if self.fc1_units == 0 || self.num_classes < 2 {
            return fail("need at least one hidden unit and two classes");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail("dropout rate must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return fail("invalid Adam hyperparameters");
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive");
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_height * self.input_width
    }

    pub(crate) fn plane1(&self) -> usize {
        self.input_height * self.input_width
    }

    pub(crate) fn plane2(&self) -> usize {
        self.plane1() / 4
    }

    pub(crate) fn plane3(&self) -> usize {
        self.plane1() / 16
    }

    /// Length of the flattened conv stack output fed to the first dense
    /// layer: 32 * 32 * 64 = 65,536 at default size.
    pub fn flatten_len(&self) -> usize {
        self.conv2_filters * self.plane3()
    }

    /// Whether two configs describe the same parameter shapes.
    pub fn same_architecture(&self, other: &CnnConfig) -> bool {
        self.input_channels == other.input_channels
            && self.input_height == other.input_height
            && self.input_width == other.input_width
            && self.kernel == other.kernel
            && self.conv1_filters == other.conv1_filters
            && self.conv2_filters == other.conv2_filters
            && self.fc1_units == other.fc1_units
            && self.num_classes == other.num_classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let c = CnnConfig::default();
        c.validate().unwrap();
        assert_eq!(c.plane2(), 64 * 64);
        assert_eq!(c.plane3(), 32 * 32);
        assert_eq!(c.flatten_len(), 65_536);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            CnnConfig {
                dropout_rate: 1.0,
                ..Default::default()
            },
            CnnConfig {
                input_height: 130,
                ..Default::default()
            },
            CnnConfig {
                kernel: 4,
                ..Default::default()
            },
            CnnConfig {
                batch_size: 0,
                ..Default::default()
            },
            CnnConfig {
                num_classes: 1,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
