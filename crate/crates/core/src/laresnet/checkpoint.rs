//! Checkpoint directories: one `.ten` file per parameter tensor plus a
//! plain-text `manifest.txt`.
//!
//! The manifest starts with `config.<key>=<value>` lines echoing the
//! [`ModelConfig`], followed by one line per tensor:
//!
//! ```text
//! tensor layer=3 name=block1.conv2 group=wg_fc1.weight dims=9x9x1x1 file=03_block1.conv2.wg_fc1.weight.ten conv=local_adaptive bias=dynamic
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ModelConfig;
use super::network::LAResNetParams;
use crate::error::{Error, Result};
use crate::laconv::{BiasKind, ConvKind, LAConvMode};
use crate::params::ParamSet;
use crate::tenfile::{read_ten, write_ten};
use crate::tensor::Tensor4;

pub const MANIFEST: &str = "manifest.txt";

fn conv_flag(mode: LAConvMode) -> &'static str {
    match mode.conv {
        ConvKind::Standard => "standard",
        ConvKind::LocalAdaptive => "local_adaptive",
    }
}

fn bias_flag(mode: LAConvMode) -> &'static str {
    match mode.bias {
        BiasKind::None => "none",
        BiasKind::Static => "static",
        BiasKind::Dynamic => "dynamic",
    }
}

pub fn config_lines(config: &ModelConfig) -> Vec<String> {
    vec![
        format!("config.blocks={}", config.blocks),
        format!("config.channels={}", config.channels),
        format!("config.kernel={}", config.kernel),
        format!("config.c_lr={}", config.c_lr),
        format!("config.c_hr={}", config.c_hr),
        format!("config.mode={}", config.mode),
        format!("config.upsample_factor={}", config.upsample_factor),
        format!("config.pad={}", config.pad),
    ]
}

fn parse_config(values: &HashMap<String, String>, path: &Path) -> Result<ModelConfig> {
    let get = |key: &str| -> Result<&str> {
        values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format(path, format!("missing config.{key}")))
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::format(path, format!("config.{key} is not an integer")))
    };
    let config = ModelConfig {
        blocks: num("blocks")?,
        channels: num("channels")?,
        kernel: num("kernel")?,
        c_lr: num("c_lr")?,
        c_hr: num("c_hr")?,
        mode: get("mode")?.parse()?,
        upsample_factor: num("upsample_factor")?,
        pad: get("pad")?.parse()?,
    };
    config.validate()?;
    Ok(config)
}

fn file_stem(name: &str) -> String {
    name.replace('/', ".")
}

/// Writes the checkpoint into a temporary sibling directory and renames it
/// over `dir`.
pub fn save_checkpoint(dir: &Path, config: &ModelConfig, params: &LAResNetParams) -> Result<()> {
    let parent = dir
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let leaf = dir
        .file_name()
        .ok_or_else(|| Error::Config(format!("checkpoint path {} has no final component", dir.display())))?;
    let tmp: PathBuf = parent.join(format!(".{}.tmp-{}", leaf.to_string_lossy(), std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;

    let mut manifest = vec!["# LAResNet checkpoint".to_string()];
    manifest.extend(config_lines(config));
    for (index, (layer, p)) in params.layers().into_iter().enumerate() {
        let mut failure = None;
        p.visit(&mut |group, dims, values| {
            if failure.is_some() {
                return;
            }
            let file = format!("{index:02}_{}.{}.ten", file_stem(&layer), file_stem(group));
            let tensor = Tensor4::from_vec(dims, values.to_vec()).expect("visit dims match data");
            if let Err(e) = write_ten(&tmp.join(&file), &tensor) {
                failure = Some(e);
                return;
            }
            manifest.push(format!(
                "tensor layer={index} name={layer} group={group} dims={} file={file} conv={} bias={}",
                dims.map(|d| d.to_string()).join("x"),
                conv_flag(config.mode),
                bias_flag(config.mode)
            ));
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    let manifest_path = tmp.join(MANIFEST);
    fs::write(&manifest_path, manifest.join("\n") + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))
}

struct TensorEntry {
    dims: [usize; 4],
    file: String,
}

pub fn load_checkpoint(dir: &Path) -> Result<(ModelConfig, LAResNetParams)> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut config_values = HashMap::new();
    let mut entries: HashMap<String, TensorEntry> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("tensor ") {
            let fields: HashMap<&str, &str> = rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
            let field = |k: &str| {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::format(&manifest_path, format!("line {}: missing `{k}`", lineno + 1)))
            };
            let dims_vec: Vec<usize> = field("dims")?
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(&manifest_path, format!("line {}: bad dims", lineno + 1)))?;
            let dims: [usize; 4] = dims_vec
                .try_into()
                .map_err(|_| Error::format(&manifest_path, format!("line {}: dims must have 4 entries", lineno + 1)))?;
            entries.insert(
                format!("{}/{}", field("name")?, field("group")?),
                TensorEntry {
                    dims,
                    file: field("file")?.to_string(),
                },
            );
        } else if let Some((k, v)) = line.split_once('=') {
            if let Some(key) = k.trim().strip_prefix("config.") {
                config_values.insert(key.to_string(), v.trim().to_string());
            }
        } else {
            return Err(Error::format(
                &manifest_path,
                format!("line {}: unrecognised `{line}`", lineno + 1),
            ));
        }
    }

    let config = parse_config(&config_values, &manifest_path)?;
    let mut params = LAResNetParams::zeros(&config)?;
    let mut expected = Vec::new();
    params.visit(&mut |name, dims, _| expected.push((name.to_string(), dims)));
    let mut loaded = Vec::with_capacity(expected.len());
    for (name, dims) in &expected {
        let entry = entries
            .get(name)
            .ok_or_else(|| Error::format(&manifest_path, format!("no tensor for `{name}`")))?;
        if entry.dims != *dims {
            return Err(Error::format(
                &manifest_path,
                format!("`{name}` listed as {:?}, model needs {dims:?}", entry.dims),
            ));
        }
        let t = read_ten(&dir.join(&entry.file))?;
        if t.dims() != *dims {
            return Err(Error::format(
                dir.join(&entry.file),
                format!("dims {:?}, expected {dims:?}", t.dims()),
            ));
        }
        loaded.push(t);
    }
    let mut it = loaded.into_iter();
    params.visit_mut(&mut |_, v| v.copy_from_slice(it.next().expect("one tensor per group").data()));
    Ok((config, params))
}
