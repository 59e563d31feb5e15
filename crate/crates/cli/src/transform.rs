use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use auon_core::rng::seeded;
use auon_core::run::parse_coeffs;
use auon_core::{DenseMatrix, NsCoeffs, TransformKind};

use crate::output::{announce, write_json, write_matrix};
use crate::{ensure_dir, parse_shape, OutputArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Identity,
    Polar,
    NewtonSchulz,
    CoshRms,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Matrix shape `RxC`; sampled from N(0,1) when --matrix is absent.
    #[arg(long)]
    pub shape: Option<String>,
    /// Literal matrix, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Newton-Schulz steps [default: 5 for newton-schulz, 1 for hybrid]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Quintic coefficients `a,b,c` [default: Muon set for newton-schulz,
    /// stable set for hybrid]
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_matrix(s: &str) -> Result<DenseMatrix> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad matrix entry '{v}'")))
                .collect()
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(DenseMatrix::from_rows(&refs)?)
}

fn build_kind(args: &TransformArgs) -> Result<TransformKind> {
    let coeffs = args.coeffs.as_deref().map(parse_coeffs).transpose()?;
    let ns_only = |what: &str| -> Result<()> {
        bail!("--{what} only applies to newton-schulz and hybrid")
    };
    Ok(match args.kind {
        KindArg::Identity | KindArg::Polar | KindArg::CoshRms => {
            if args.steps.is_some() {
                ns_only("steps")?;
            }
            if coeffs.is_some() {
                ns_only("coeffs")?;
            }
            match args.kind {
                KindArg::Identity => TransformKind::Identity,
                KindArg::Polar => TransformKind::ExactPolar,
                _ => TransformKind::CoshRms,
            }
        }
        KindArg::NewtonSchulz => TransformKind::NewtonSchulz {
            steps: args.steps.unwrap_or(5),
            coeffs: coeffs.unwrap_or(NsCoeffs::MUON),
        },
        KindArg::Hybrid => TransformKind::HybridCoshRms {
            steps: args.steps.unwrap_or(1),
            coeffs: coeffs.unwrap_or(NsCoeffs::HYBRID),
        },
    })
}

fn input_matrix(args: &TransformArgs) -> Result<DenseMatrix> {
    let shape = args.shape.as_deref().map(parse_shape).transpose()?;
    match (&args.matrix, shape) {
        (Some(text), shape) => {
            let m = parse_matrix(text)?;
            if let Some(s) = shape {
                if s != m.shape() {
                    bail!("--shape {}x{} does not match the {}x{} literal matrix", s.0, s.1, m.rows(), m.cols());
                }
            }
            Ok(m)
        }
        (None, Some((r, c))) => Ok(DenseMatrix::random_gaussian(r, c, &mut seeded(args.seed))),
        (None, None) => bail!("give --matrix or --shape"),
    }
}

pub fn run(args: &TransformArgs) -> Result<ExitCode> {
    let kind = build_kind(args)?;
    let g = input_matrix(args)?;
    let (out, report) = kind.apply_with_report(&g)?;

    println!("transform: {}", kind.name());
    println!("shape: {}x{}", g.rows(), g.cols());
    println!("input_frobenius: {:.8}", report.input_frobenius);
    println!("rms_statistic: {:.8}", report.rms_statistic);
    println!("output_spectral_norm: {:.8}", report.output_spectral_norm);
    println!("output_frobenius: {:.8}", report.output_frobenius);

    let dir = args.out.resolve();
    ensure_dir(&dir)?;
    write_matrix(&dir.join("transform_output.csv"), &out)?;
    write_json(&dir.join("transform_report.json"), &report)?;
    announce(dir.join("transform_output.csv"));
    Ok(ExitCode::SUCCESS)
}
