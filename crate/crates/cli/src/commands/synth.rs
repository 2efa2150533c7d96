//! `bsbl synth`: generate a problem bundle.

use anyhow::{bail, Context, Result};
use bsbl_core::experiments::{synthesize, GenSpec, IntraCorr};
use bsbl_core::BlockPartition;

use crate::args::SynthArgs;
use crate::bundle::{write_bundle, BundleContents};
use crate::manifest::RunManifest;

pub fn run(args: &SynthArgs, command_line: Vec<String>) -> Result<()> {
    let m = args.m.context("--m is required")?;
    let n = args.n.context("--n is required")?;
    let out = args.out.as_ref().context("--out is required")?;

    let partition = match (&args.sizes, args.block_size) {
        (Some(sizes), _) => BlockPartition::new(sizes.clone())
            .map_err(|e| anyhow::anyhow!("invalid --sizes: {e}"))?,
        (None, block_size) => {
            let d = block_size.unwrap_or(4);
            if d == 0 || n % d != 0 {
                bail!("--block-size {d} does not divide n = {n}");
            }
            BlockPartition::uniform(n / d, d).map_err(|e| anyhow::anyhow!("{e}"))?
        }
    };

    let intra_corr = match (&args.corr_range, args.corr) {
        (Some(range), Some(_)) if range.len() == 2 => {
            bail!("--corr and --corr-range are mutually exclusive")
        }
        (Some(range), None) => {
            if range.len() != 2 {
                bail!("--corr-range needs exactly two values lo,hi");
            }
            IntraCorr::UniformRange(range[0], range[1])
        }
        (None, corr) => IntraCorr::Fixed(corr.unwrap_or(0.0)),
        (Some(_), Some(_)) => unreachable!(),
    };

    let spec = GenSpec {
        m,
        n,
        partition,
        k_active: args.k_active.unwrap_or(1),
        intra_corr,
        normalize_blocks: args.normalize_blocks.unwrap_or(false),
        snr_db: args.snr_db,
        seed: args.seed.unwrap_or(0),
    };
    let synth = synthesize(&spec).map_err(|e| anyhow::anyhow!("generation failed: {e}"))?;

    let manifest = RunManifest::new(
        command_line,
        Some(spec.seed),
        serde_json::to_value(&spec)?,
    );
    write_bundle(
        out,
        &BundleContents {
            problem: &synth.problem,
            partition: &synth.partition,
            x_gen: Some(&synth.x_gen),
            gen: Some(&spec),
            lambda_true: synth.lambda_true,
            snr_db: spec.snr_db,
        },
        manifest,
    )?;
    println!(
        "wrote bundle to {} ({}x{}, {} blocks, {} active)",
        out.display(),
        m,
        n,
        spec.partition.g(),
        spec.k_active
    );
    Ok(())
}
