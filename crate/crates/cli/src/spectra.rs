use std::process::ExitCode;

use anyhow::Result;
use clap::Args;

use auon_core::diagnostics::singular_trajectory;
use auon_core::rng::seeded;
use auon_core::run::parse_coeffs;
use auon_core::{DenseMatrix, NsCoeffs};

use crate::output::{announce, write_csv, GRAM_HEADER, SPECTRA_HEADER};
use crate::{ensure_dir, parse_shape, OutputArgs};

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[arg(long, default_value = "64x64")]
    pub shape: String,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Quintic coefficients `a,b,c` [default: Muon set]
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn run(args: &SpectraArgs) -> Result<ExitCode> {
    let (rows, cols) = parse_shape(&args.shape)?;
    let coeffs = match &args.coeffs {
        Some(s) => parse_coeffs(s)?,
        None => NsCoeffs::MUON,
    };
    let g = DenseMatrix::random_gaussian(rows, cols, &mut seeded(args.seed));
    let traj = singular_trajectory(&g, args.steps, coeffs)?;

    for (step, (sigma, gram)) in traj.spectra.iter().zip(&traj.gram_distance).enumerate() {
        let lo = sigma.last().copied().unwrap_or(0.0);
        println!("step {step}: sigma in [{lo:.4}, {:.4}], gram distance {gram:.4}", sigma[0]);
    }

    let dir = args.out.resolve();
    ensure_dir(&dir)?;
    let spectra_path = dir.join("spectra.csv");
    write_csv(
        &spectra_path,
        &SPECTRA_HEADER,
        traj.spectra
            .iter()
            .enumerate()
            .flat_map(|(step, s)| s.iter().enumerate().map(move |(i, &v)| (step, i, v))),
    )?;
    let gram_path = dir.join("gram.csv");
    write_csv(&gram_path, &GRAM_HEADER, traj.gram_distance.iter().copied().enumerate())?;
    announce(spectra_path);
    announce(gram_path);
    Ok(ExitCode::SUCCESS)
}
