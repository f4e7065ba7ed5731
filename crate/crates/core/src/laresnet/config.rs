use crate::error::{Error, Result};
use crate::laconv::LAConvMode;
use crate::tensor::{check_odd_kernel, PadMode, Tensor4};

/// Architecture hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Number of residual blocks.
    pub blocks: usize,
    /// Feature channels between head and tail.
    pub channels: usize,
    pub kernel: usize,
    /// Bands of the low-resolution image (and of the output).
    pub c_lr: usize,
    /// Bands of the high-resolution guide image.
    pub c_hr: usize,
    pub mode: LAConvMode,
    pub upsample_factor: usize,
    pub pad: PadMode,
}

impl ModelConfig {
    /// WorldView-3 pansharpening: 8-band MS, 1-band PAN, 5 blocks of 32 channels.
    pub fn pansharpening() -> Self {
        ModelConfig {
            blocks: 5,
            channels: 32,
            kernel: 3,
            c_lr: 8,
            c_hr: 1,
            mode: LAConvMode::FULL,
            upsample_factor: 4,
            pad: PadMode::Zero,
        }
    }

    /// CAVE hyperspectral super-resolution: 31-band HSI, RGB guide, 3 blocks of 64 channels.
    pub fn hisr() -> Self {
        ModelConfig {
            blocks: 3,
            channels: 64,
            c_lr: 31,
            c_hr: 3,
            ..ModelConfig::pansharpening()
        }
    }

    /// Desk-scale network used by the tests and the gradient audit.
    pub fn toy() -> Self {
        ModelConfig {
            blocks: 2,
            channels: 8,
            c_lr: 4,
            c_hr: 1,
            ..ModelConfig::pansharpening()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks < 1 {
            return Err(Error::Config("blocks must be >= 1".into()));
        }
        check_odd_kernel(self.kernel)?;
        for (name, v) in [
            ("channels", self.channels),
            ("c_lr", self.c_lr),
            ("c_hr", self.c_hr),
            ("upsample_factor", self.upsample_factor),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Input channels of the head layer (HR bands, then LR bands).
    pub fn head_channels(&self) -> usize {
        self.c_hr + self.c_lr
    }

    /// (name, c_in, c_out) for every LAConv layer, in forward order.
    pub fn layer_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut v = vec![("head".to_string(), self.head_channels(), self.channels)];
        for b in 1..=self.blocks {
            v.push((format!("block{b}.conv1"), self.channels, self.channels));
            v.push((format!("block{b}.conv2"), self.channels, self.channels));
        }
        v.push(("tail".to_string(), self.channels, self.c_lr));
        v
    }

    pub fn num_layers(&self) -> usize {
        2 * self.blocks + 2
    }
}

/// One (upsampled LR, HR, optional ground truth) triple; every tensor may
/// carry several samples along its first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionSample {
    pub lr_up: Tensor4,
    pub hr: Tensor4,
    pub gt: Option<Tensor4>,
}

impl FusionSample {
    pub fn new(lr_up: Tensor4, hr: Tensor4, gt: Option<Tensor4>) -> Result<Self> {
        let s = FusionSample { lr_up, hr, gt };
        s.check_consistent()?;
        Ok(s)
    }

    fn check_consistent(&self) -> Result<()> {
        let [n, _, h, w] = self.lr_up.dims();
        let same = |t: &Tensor4| t.n() == n && t.h() == h && t.w() == w;
        if !same(&self.hr) {
            return Err(Error::Shape(format!(
                "hr {:?} does not match lr_up {:?} in samples/spatial dims",
                self.hr.dims(),
                self.lr_up.dims()
            )));
        }
        if let Some(gt) = &self.gt {
            if gt.dims() != self.lr_up.dims() {
                return Err(Error::Shape(format!(
                    "gt {:?} does not match lr_up {:?}",
                    gt.dims(),
                    self.lr_up.dims()
                )));
            }
        }
        Ok(())
    }

    /// Checks channel counts against a model configuration.
    pub fn check_against(&self, config: &ModelConfig) -> Result<()> {
        self.check_consistent()?;
        if self.lr_up.c() != config.c_lr || self.hr.c() != config.c_hr {
            return Err(Error::Shape(format!(
                "sample has {} LR / {} HR bands, model expects {} / {}",
                self.lr_up.c(),
                self.hr.c(),
                config.c_lr,
                config.c_hr
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lr_up.n()
    }

    pub fn is_empty(&self) -> bool {
        self.lr_up.n() == 0
    }

    /// Concatenates samples along the batch axis.
    pub fn stack(parts: &[&FusionSample]) -> Result<FusionSample> {
        let lr: Vec<&Tensor4> = parts.iter().map(|p| &p.lr_up).collect();
        let hr: Vec<&Tensor4> = parts.iter().map(|p| &p.hr).collect();
        let gt = if parts.iter().all(|p| p.gt.is_some()) {
            let gts: Vec<&Tensor4> = parts.iter().map(|p| p.gt.as_ref().expect("checked")).collect();
            Some(Tensor4::stack_samples(&gts)?)
        } else {
            None
        };
        FusionSample::new(Tensor4::stack_samples(&lr)?, Tensor4::stack_samples(&hr)?, gt)
    }

    /// Circular spatial shift of every component.
    pub fn roll(&self, dy: isize, dx: isize) -> FusionSample {
        FusionSample {
            lr_up: self.lr_up.roll(dy, dx),
            hr: self.hr.roll(dy, dx),
            gt: self.gt.as_ref().map(|g| g.roll(dy, dx)),
        }
    }
}
