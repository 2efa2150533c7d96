//! Problem bundles: a directory with a JSON descriptor naming the matrix
//! files, the block partition, and the generation metadata.

use anyhow::{bail, Context, Result};
use bsbl_core::experiments::GenSpec;
use bsbl_core::{BlockPartition, Problem};
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::manifest::RunManifest;
use crate::matio;

pub const DESCRIPTOR: &str = "problem.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct BundleDescriptor {
    pub m: usize,
    pub n: usize,
    pub phi: String,
    pub y: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_gen: Option<String>,
    pub partition: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen: Option<GenSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub manifest: RunManifest,
}

pub struct Bundle {
    pub problem: Problem,
    pub partition: BlockPartition,
    pub x_gen: Option<Array1<f64>>,
    pub lambda_true: Option<f64>,
    pub snr_db: Option<f64>,
}

pub struct BundleContents<'a> {
    pub problem: &'a Problem,
    pub partition: &'a BlockPartition,
    pub x_gen: Option<&'a Array1<f64>>,
    pub gen: Option<&'a GenSpec>,
    pub lambda_true: Option<f64>,
    pub snr_db: Option<f64>,
}

pub fn write_bundle(dir: &Path, contents: &BundleContents, manifest: RunManifest) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating bundle directory {}", dir.display()))?;
    matio::write_matrix(&dir.join("phi.csv"), contents.problem.phi())?;
    matio::write_vector(&dir.join("y.csv"), contents.problem.y())?;
    if let Some(x) = contents.x_gen {
        matio::write_vector(&dir.join("x_gen.csv"), x)?;
    }
    let descriptor = BundleDescriptor {
        m: contents.problem.m(),
        n: contents.problem.n(),
        phi: "phi.csv".into(),
        y: "y.csv".into(),
        x_gen: contents.x_gen.map(|_| "x_gen.csv".into()),
        partition: contents.partition.sizes().to_vec(),
        gen: contents.gen.cloned(),
        lambda_true: contents.lambda_true,
        snr_db: contents.snr_db,
        manifest,
    };
    let json = serde_json::to_string_pretty(&descriptor)?;
    std::fs::write(dir.join(DESCRIPTOR), json)
        .with_context(|| format!("writing {}", dir.join(DESCRIPTOR).display()))?;
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let descriptor_path = dir.join(DESCRIPTOR);
    let text = std::fs::read_to_string(&descriptor_path)
        .with_context(|| format!("reading {}", descriptor_path.display()))?;
    let descriptor: BundleDescriptor =
        serde_json::from_str(&text).context("parsing bundle descriptor")?;
    let phi = matio::read_matrix(&dir.join(&descriptor.phi))?;
    let y = matio::read_vector(&dir.join(&descriptor.y))?;
    if phi.nrows() != descriptor.m || phi.ncols() != descriptor.n {
        bail!(
            "descriptor says {}x{} but phi.csv is {}x{}",
            descriptor.m,
            descriptor.n,
            phi.nrows(),
            phi.ncols()
        );
    }
    let x_gen = descriptor
        .x_gen
        .as_ref()
        .map(|name| matio::read_vector(&dir.join(name)))
        .transpose()?;
    let problem = Problem::new(y, phi).map_err(|e| anyhow::anyhow!("invalid problem: {e}"))?;
    let partition = BlockPartition::new(descriptor.partition.clone())
        .map_err(|e| anyhow::anyhow!("invalid partition: {e}"))?;
    partition
        .check_against(problem.n())
        .map_err(|e| anyhow::anyhow!("partition does not cover the signal: {e}"))?;
    Ok(Bundle {
        problem,
        partition,
        x_gen,
        lambda_true: descriptor.lambda_true,
        snr_db: descriptor.snr_db,
    })
}
