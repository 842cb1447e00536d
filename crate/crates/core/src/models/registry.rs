use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataio::N_FEATURES;
use crate::error::{Error, Result};
use crate::featsel::{SelectorKind, DEFAULT_K};
use crate::neural::{LayerSpec, NetworkSpec, TrainConfig};
use crate::numkernel::Activation;
use crate::splits::DEFAULT_WINDOW;

/// Registry identifier `M0` through `M13`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelId(u8);

impl ModelId {
    pub const COUNT: u8 = 14;

    pub fn new(n: u8) -> Result<Self> {
        if n < Self::COUNT {
            Ok(ModelId(n))
        } else {
            Err(Error::Registry(format!("M{n}")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ModelId> {
        (0..Self::COUNT).map(ModelId)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('M')
            .or_else(|| s.strip_prefix('m'))
            .ok_or_else(|| Error::Registry(s.to_string()))?;
        let n: u8 = digits.parse().map_err(|_| Error::Registry(s.to_string()))?;
        ModelId::new(n).map_err(|_| Error::Registry(s.to_string()))
    }
}

impl Serialize for ModelId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `M0,M4`, `M0..M13` or a mix of both.
pub fn parse_model_list(text: &str) -> Result<Vec<ModelId>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (ModelId, ModelId) = (a.parse()?, b.parse()?);
            if a > b {
                return Err(Error::config(format!("empty model range {part}")));
            }
            out.extend((a.0..=b.0).map(ModelId));
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::config("no model ids given"));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Narmax,
    TwoStep,
    EncoderDecoder,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    None,
    Lstm,
    Cnn,
    #[serde(rename = "convlstm")]
    ConvLstm,
}

/// Layer widths shared by the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchSizes {
    pub window: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub pool: usize,
    pub convlstm_filters: usize,
    pub convlstm_kernel: usize,
}

impl Default for ArchSizes {
    fn default() -> Self {
        ArchSizes {
            window: DEFAULT_WINDOW,
            lstm_units: 300,
            dense_units: 100,
            conv_filters: 96,
            conv_kernel: 3,
            pool: 2,
            convlstm_filters: 64,
            convlstm_kernel: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: ModelId,
    pub architecture: Architecture,
    pub selector: SelectorKind,
    pub encoder: EncoderKind,
    /// `None` for NARMAX.
    pub network: Option<NetworkSpec>,
    pub train: TrainConfig,
}

impl ModelSpec {
    /// Human-readable name in the style of the registry table.
    pub fn name(&self) -> String {
        let sel = match self.selector {
            SelectorKind::All => "",
            SelectorKind::Pc => "PC-",
            SelectorKind::PsoElm => "PSO-ELM-",
            SelectorKind::GaElm => "GA-ELM-",
            SelectorKind::RfeSvr => "RFE-SVR-",
            SelectorKind::Lasso => "LASSO-",
        };
        match (self.architecture, self.encoder) {
            (Architecture::Narmax, _) => "NARMAX".into(),
            (Architecture::TwoStep, _) => format!("{sel}LSTM"),
            (_, EncoderKind::Cnn) => "CNN-LSTM encoder-decoder".into(),
            (_, EncoderKind::ConvLstm) => "ConvLSTM encoder-decoder".into(),
            _ => format!("{sel}LSTM-LSTM encoder-decoder"),
        }
    }

    /// Layers after the encoder; empty for models without one.
    pub fn decoder(&self) -> &[LayerSpec] {
        let Some(net) = &self.network else { return &[] };
        match net.layers.iter().position(|l| matches!(l, LayerSpec::Repeat { .. })) {
            Some(i) if self.encoder != EncoderKind::None => &net.layers[i..],
            _ => &[],
        }
    }
}

fn decoder(sizes: &ArchSizes) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Repeat { steps: 1 },
        LayerSpec::lstm(sizes.lstm_units),
        LayerSpec::dense(sizes.dense_units, Activation::Relu),
        LayerSpec::dense(1, Activation::Linear),
    ]
}

fn encoder(kind: EncoderKind, sizes: &ArchSizes) -> Vec<LayerSpec> {
    match kind {
        EncoderKind::None => Vec::new(),
        EncoderKind::Lstm => vec![LayerSpec::lstm(sizes.lstm_units)],
        EncoderKind::Cnn => vec![
            LayerSpec::Conv1d {
                filters: sizes.conv_filters,
                kernel: sizes.conv_kernel,
                activation: Activation::Relu,
            },
            LayerSpec::Conv1d {
                filters: sizes.conv_filters,
                kernel: sizes.conv_kernel,
                activation: Activation::Relu,
            },
            LayerSpec::MaxPool { width: sizes.pool },
            LayerSpec::Flatten,
        ],
        EncoderKind::ConvLstm => vec![LayerSpec::ConvLstm {
            filters: sizes.convlstm_filters,
            kernel: sizes.convlstm_kernel,
            channels: 1,
        }],
    }
}

/// Registry entry with the default layer sizes, training setup and `k = 30`.
pub fn build(id: ModelId) -> Result<ModelSpec> {
    build_with(id, &ArchSizes::default(), &TrainConfig::default(), DEFAULT_K)
}

/// Looks `id` up by name, e.g. `"M4"`.
pub fn build_named(id: &str) -> Result<ModelSpec> {
    build(id.parse()?)
}

pub fn build_with(id: ModelId, sizes: &ArchSizes, train: &TrainConfig, k: usize) -> Result<ModelSpec> {
    let n = id.number();
    let (architecture, selector, enc) = match n {
        0 => (Architecture::Narmax, SelectorKind::All, EncoderKind::None),
        1..=5 => (
            Architecture::TwoStep,
            SelectorKind::METHODS[n as usize - 1],
            EncoderKind::None,
        ),
        6 => (Architecture::EncoderDecoder, SelectorKind::All, EncoderKind::Lstm),
        7 => (Architecture::EncoderDecoder, SelectorKind::All, EncoderKind::Cnn),
        8 => (Architecture::EncoderDecoder, SelectorKind::All, EncoderKind::ConvLstm),
        _ => (
            Architecture::TwoStage,
            SelectorKind::METHODS[n as usize - 9],
            EncoderKind::Lstm,
        ),
    };
    let features = if selector == SelectorKind::All { N_FEATURES } else { k };
    let network = match architecture {
        Architecture::Narmax => None,
        Architecture::TwoStep => Some(vec![
            LayerSpec::lstm(sizes.lstm_units),
            LayerSpec::dense(sizes.dense_units, Activation::Relu),
            LayerSpec::dense(1, Activation::Linear),
        ]),
        _ => Some([encoder(enc, sizes), decoder(sizes)].concat()),
    }
    .map(|layers| NetworkSpec::new(layers, sizes.window, features));
    if let Some(net) = &network {
        net.shapes().map_err(|e| e.in_model(id.to_string()))?;
    }
    Ok(ModelSpec {
        id,
        architecture,
        selector,
        encoder: enc,
        network,
        train: train.clone(),
    })
}

/// All fourteen entries with default sizes.
pub fn registry() -> Vec<ModelSpec> {
    ModelId::all()
        .map(|id| build(id).expect("registry entries are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m4_is_rfe_two_step() {
        let m = build_named("M4").unwrap();
        assert_eq!(m.selector, SelectorKind::RfeSvr);
        assert_eq!(m.architecture, Architecture::TwoStep);
        let net = m.network.unwrap();
        assert_eq!(net.features, 30);
        assert_eq!(
            net.layers,
            vec![
                LayerSpec::lstm(300),
                LayerSpec::dense(100, Activation::Relu),
                LayerSpec::dense(1, Activation::Linear)
            ]
        );
    }

    #[test]
    fn m13_is_lasso_two_stage() {
        let m = build_named("M13").unwrap();
        assert_eq!(
            (m.selector, m.architecture, m.encoder),
            (SelectorKind::Lasso, Architecture::TwoStage, EncoderKind::Lstm)
        );
    }

    #[test]
    fn unknown_ids() {
        assert!(matches!(build_named("M99"), Err(Error::Registry(_))));
        assert!(matches!(build_named("X1"), Err(Error::Registry(_))));
        assert!(ModelId::new(14).is_err());
    }

    #[test]
    fn registry_rows() {
        let r = registry();
        assert_eq!(r.len(), 14);
        let tags: Vec<(&str, &str)> = r
            .iter()
            .map(|m| {
                let enc = match m.encoder {
                    EncoderKind::None => "none",
                    EncoderKind::Lstm => "lstm",
                    EncoderKind::Cnn => "cnn",
                    EncoderKind::ConvLstm => "convlstm",
                };
                (m.selector.tag(), enc)
            })
            .collect();
        let expect = [
            ("none", "none"),
            ("pc", "none"),
            ("pso-elm", "none"),
            ("ga-elm", "none"),
            ("rfe-svr", "none"),
            ("lasso", "none"),
            ("none", "lstm"),
            ("none", "cnn"),
            ("none", "convlstm"),
            ("pc", "lstm"),
            ("pso-elm", "lstm"),
            ("ga-elm", "lstm"),
            ("rfe-svr", "lstm"),
            ("lasso", "lstm"),
        ];
        assert_eq!(tags, expect);
        assert!(r[0].network.is_none());
        for m in &r[1..] {
            assert_eq!(m.network.as_ref().unwrap().window, 14);
        }
    }

    #[test]
    fn encoder_decoders_share_decoder() {
        let d6 = build_named("M6").unwrap();
        let d7 = build_named("M7").unwrap();
        let d8 = build_named("M8").unwrap();
        assert_eq!(d6.decoder().len(), 4);
        assert_eq!(d6.decoder(), d7.decoder());
        assert_eq!(d6.decoder(), d8.decoder());
        assert_eq!(d6.decoder(), build_named("M11").unwrap().decoder());
        assert!(build_named("M1").unwrap().decoder().is_empty());
    }

    #[test]
    fn model_lists() {
        let all = parse_model_list("M0..M13").unwrap();
        assert_eq!(all.len(), 14);
        assert_eq!(parse_model_list("M4, M1,M4").unwrap(), vec![ModelId(1), ModelId(4)]);
        assert!(parse_model_list("M3..M1").is_err());
        assert!(parse_model_list("M0..M20").is_err());
    }

    #[test]
    fn id_serde() {
        let id: ModelId = serde_json::from_str("\"M7\"").unwrap();
        assert_eq!(id.number(), 7);
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"M7\"");
        assert_eq!(build_named("M10").unwrap().name(), "PSO-ELM-LSTM-LSTM encoder-decoder");
    }
}
