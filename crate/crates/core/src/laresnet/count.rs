use super::config::ModelConfig;
use crate::laconv::{BiasKind, ConvKind, LAConvMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCount {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    pub layers: Vec<LayerCount>,
}

/// Learnable values in one LAConv layer, summed group by group.
pub fn layer_param_count(c_in: usize, c_out: usize, k: usize, mode: LAConvMode) -> usize {
    let kk = k * k;
    let mut n = c_out * c_in * kk;
    if mode.conv == ConvKind::LocalAdaptive {
        // shallow conv (k² outputs) + two k²→k² dense layers
        n += kk * c_in * kk + kk;
        n += 2 * (kk * kk + kk);
    }
    n += match mode.bias {
        BiasKind::None => 0,
        BiasKind::Static => c_out,
        BiasKind::Dynamic => (c_out * c_in + c_out) + (c_out * c_out + c_out),
    };
    n
}

pub fn count_params(config: &ModelConfig) -> ParamCount {
    let layers: Vec<LayerCount> = config
        .layer_shapes()
        .into_iter()
        .map(|(name, c_in, c_out)| LayerCount {
            params: layer_param_count(c_in, c_out, config.kernel, config.mode),
            name,
            c_in,
            c_out,
        })
        .collect();
    ParamCount {
        total: layers.iter().map(|l| l.params).sum(),
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laresnet::LAResNetParams;
    use crate::params::ParamSet;

    #[test]
    fn pansharpening_total() {
        // head 4886 + 10 × 14109 + tail 5421
        let c = count_params(&ModelConfig::pansharpening());
        assert_eq!(c.layers[0].params, 4886);
        assert_eq!(c.layers[1].params, 14109);
        assert_eq!(c.layers.last().unwrap().params, 5421);
        assert_eq!(c.total, 151_397);
        assert_eq!(c.layers.len(), 12);
    }

    #[test]
    fn closed_form_matches_materialised_parameters() {
        for mode in LAConvMode::ALL {
            for base in [ModelConfig::toy(), ModelConfig::pansharpening()] {
                let config = ModelConfig { mode, ..base };
                let p = LAResNetParams::zeros(&config).unwrap();
                assert_eq!(count_params(&config).total, p.num_params(), "{mode}");
            }
        }
    }

    #[test]
    fn single_pixel_layer() {
        assert_eq!(layer_param_count(1, 1, 1, LAConvMode::ALL[0]), 1);
    }

    #[test]
    fn ablation_ordering() {
        let totals = |base: ModelConfig| -> Vec<usize> {
            LAConvMode::ALL
                .into_iter()
                .map(|mode| count_params(&ModelConfig { mode, ..base }).total)
                .collect()
        };
        for base in [ModelConfig::toy(), ModelConfig::pansharpening()] {
            let t = totals(base);
            // SC+NB < SC+CB < SC+DYB < LAC+NB < LAC+CB < LAC+DYB
            assert!(t.windows(2).all(|w| w[0] < w[1]), "{t:?}");
        }
        // at 64 channels the C² dense layer of the bias generator outweighs the
        // k²-sized weight generator, so only the nested chains stay ordered
        let t = totals(ModelConfig::hisr());
        assert!(t[0] < t[1] && t[1] < t[3] && t[3] < t[4] && t[4] < t[5]);
        assert!(t[2] > t[3]);
    }
}
