//! Versioned JSON checkpoints.
//!
//! ```json
//! {"version": 1, "in_dim": 11,
//!  "layers": [{"W": [[..], ..], "b": [..]}, ..],
//!  "batchnorms": [{"gamma": [..], "beta": [..], "running_mean": [..], "running_var": [..]}, ..],
//!  "config": {"in_dim": 11, "epsilon": 1e-5, "momentum": 0.1},
//!  "optimizer": null}
//! ```

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::model::{BatchNorm, Dense, MlpModel, ModelConfig, HIDDEN};
use super::MlpError;
use crate::relation::NUM_RELATIONS;
use crate::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerDoc<T> {
    #[serde(rename = "W")]
    w: Vec<Vec<T>>,
    b: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct NormDoc<T> {
    gamma: Vec<T>,
    beta: Vec<T>,
    running_mean: Vec<T>,
    running_var: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc<T> {
    version: u32,
    in_dim: usize,
    layers: Vec<LayerDoc<T>>,
    batchnorms: Vec<NormDoc<T>>,
    config: ModelConfig,
    #[serde(default)]
    optimizer: Option<AdamState<T>>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

fn layer_doc<T: Scalar>(d: &Dense<T>) -> LayerDoc<T> {
    LayerDoc { w: d.weight.chunks(d.in_dim).map(<[T]>::to_vec).collect(), b: d.bias.clone() }
}

fn norm_doc<T: Scalar>(n: &BatchNorm<T>) -> NormDoc<T> {
    NormDoc {
        gamma: n.gamma.clone(),
        beta: n.beta.clone(),
        running_mean: n.running_mean.clone(),
        running_var: n.running_var.clone(),
    }
}

/// Serializes the model, and optionally the optimizer state, to JSON.
pub fn save_checkpoint<T: Scalar>(model: &MlpModel<T>, optimizer: Option<&AdamState<T>>) -> Vec<u8> {
    let doc = CheckpointDoc {
        version: CHECKPOINT_VERSION,
        in_dim: model.in_dim(),
        layers: vec![layer_doc(&model.layer1), layer_doc(&model.layer2), layer_doc(&model.layer3)],
        batchnorms: vec![norm_doc(&model.bn1), norm_doc(&model.bn2)],
        config: model.config,
        optimizer: optimizer.cloned(),
    };
    serde_json::to_vec_pretty(&doc).expect("checkpoint serialization cannot fail")
}

pub fn load_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<(MlpModel<T>, Option<AdamState<T>>), MlpError> {
    let malformed = |e: serde_json::Error| MlpError::Checkpoint(e.to_string());
    let probe: VersionProbe = serde_json::from_slice(bytes).map_err(malformed)?;
    if probe.version != CHECKPOINT_VERSION {
        return Err(MlpError::CheckpointVersion { found: probe.version, expected: CHECKPOINT_VERSION });
    }
    let doc: CheckpointDoc<T> = serde_json::from_slice(bytes).map_err(malformed)?;
    if doc.in_dim != doc.config.in_dim {
        return Err(MlpError::Checkpoint("in_dim disagrees with config.in_dim".into()));
    }
    if doc.layers.len() != 3 || doc.batchnorms.len() != 2 {
        return Err(MlpError::Checkpoint("expected 3 layers and 2 batchnorms".into()));
    }
    let widths = [doc.in_dim, HIDDEN[0], HIDDEN[1], NUM_RELATIONS];
    let mut model = MlpModel::zeros(doc.config)?;

    let mut dense = Vec::with_capacity(3);
    for (k, layer) in doc.layers.into_iter().enumerate() {
        let (inp, out) = (widths[k], widths[k + 1]);
        if layer.w.len() != out || layer.w.iter().any(|r| r.len() != inp) || layer.b.len() != out {
            return Err(MlpError::Checkpoint(format!("layer {} must be {out}x{inp}", k + 1)));
        }
        dense.push(Dense { in_dim: inp, out_dim: out, weight: layer.w.concat(), bias: layer.b });
    }
    let mut norms = Vec::with_capacity(2);
    for (k, n) in doc.batchnorms.into_iter().enumerate() {
        let w = HIDDEN[k];
        if [&n.gamma, &n.beta, &n.running_mean, &n.running_var].iter().any(|v| v.len() != w) {
            return Err(MlpError::Checkpoint(format!("batchnorm {} must have width {w}", k + 1)));
        }
        if n.running_var.iter().any(|&v| v <= T::zero()) {
            return Err(MlpError::Checkpoint(format!("batchnorm {} has non-positive running_var", k + 1)));
        }
        norms.push(BatchNorm {
            gamma: n.gamma,
            beta: n.beta,
            running_mean: n.running_mean,
            running_var: n.running_var,
        });
    }
    let mut dense = dense.into_iter();
    let mut norms = norms.into_iter();
    model.layer1 = dense.next().expect("three layers");
    model.layer2 = dense.next().expect("three layers");
    model.layer3 = dense.next().expect("three layers");
    model.bn1 = norms.next().expect("two norms");
    model.bn2 = norms.next().expect("two norms");
    if model.params().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(MlpError::Checkpoint("non-finite parameter".into()));
    }
    Ok((model, doc.optimizer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeatureVector;
    use crate::mlp::{gradcheck::random_case, predict, MlpError};

    #[test]
    fn round_trip_predicts_bitwise_identically() {
        let (mut m, batch, _) = random_case(5);
        m.bn1.running_mean = (0..16).map(|i| (i as f64).sin() / 7.0).collect();
        m.bn2.running_var = (0..32).map(|i| 1.0 + (i as f64).cos() / 3.0).collect();
        let bytes = save_checkpoint(&m, None);
        let (loaded, opt) = load_checkpoint::<f64>(&bytes).unwrap();
        assert!(opt.is_none());
        assert_eq!(loaded, m);
        for f in &batch {
            let a = predict(&m, f).unwrap();
            let b = predict(&loaded, f).unwrap();
            assert!(a.probs().iter().zip(b.probs()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn optimizer_state_survives() {
        let (m, _, _) = random_case(6);
        let mut st = AdamState::new(&m, 1e-3);
        st.step = 17;
        st.m[0][0] = 0.123_456_789_012_345_68;
        let (_, opt) = load_checkpoint::<f64>(&save_checkpoint(&m, Some(&st))).unwrap();
        assert_eq!(opt, Some(st));
    }

    #[test]
    fn truncated_and_wrong_version() {
        let (m, _, _) = random_case(7);
        let bytes = save_checkpoint(&m, None);
        assert!(matches!(
            load_checkpoint::<f64>(&bytes[..bytes.len() / 2]),
            Err(MlpError::Checkpoint(_))
        ));
        let text = String::from_utf8(bytes).unwrap().replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            load_checkpoint::<f64>(text.as_bytes()),
            Err(MlpError::CheckpointVersion { found: 2, .. })
        ));
    }

    #[test]
    fn geo_checkpoint_rejects_base_features() {
        let (m, _, _) = random_case(8);
        let (loaded, _) = load_checkpoint::<f64>(&save_checkpoint(&m, None)).unwrap();
        let err = predict(&loaded, &FeatureVector::new(vec![0.2; 8]).unwrap()).unwrap_err();
        assert!(matches!(err, MlpError::Dimension { expected: 11, actual: 8 }));
    }

    #[test]
    fn loads_into_single_precision() {
        let (m, batch, _) = random_case(9);
        let (m32, _) = load_checkpoint::<f32>(&save_checkpoint(&m, None)).unwrap();
        let f: Vec<f32> = batch[0].as_slice().iter().map(|&v| v as f32).collect();
        let p32 = predict(&m32, &FeatureVector::new(f).unwrap()).unwrap();
        let p64 = predict(&m, &batch[0]).unwrap();
        for (a, b) in p32.probs().iter().zip(p64.probs()) {
            assert!((*a as f64 - b).abs() < 1e-4);
        }
    }
}
