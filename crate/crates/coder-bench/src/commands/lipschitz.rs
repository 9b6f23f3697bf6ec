//! `lipschitz`: random-design constant sweeps (per-run rows plus medians)
//! and the closed-form two-block worked example.

use std::path::Path;

use coder::linalg::BlockPartition;
use coder::lipschitz::{self, lipschitz_constants_linear};

use crate::config::{LipschitzMode, RunConfig};
use crate::CliError;

pub fn run(config_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let section = &config.lipschitz;
    match section.mode {
        LipschitzMode::Sweep => {
            if section.n_list.is_empty() || section.d_list.is_empty() {
                return Err(CliError::Config(
                    "lipschitz sweep needs n_list and d_list".into(),
                ));
            }
            let table = lipschitz::figure_sweep(
                &section.n_list,
                &section.d_list,
                section.repeats,
                section.seed,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let out = out.unwrap_or_else(|| Path::new("lipschitz_sweep.csv"));
            let mut file = std::fs::File::create(out)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
            lipschitz::write_sweep_csv(&mut file, &table)
                .map_err(|e| CliError::Io(e.to_string()))?;
            let medians_path = out.with_extension("medians.csv");
            let mut file = std::fs::File::create(&medians_path).map_err(|e| {
                CliError::Io(format!("cannot create {}: {e}", medians_path.display()))
            })?;
            lipschitz::write_sweep_medians_csv(&mut file, &table)
                .map_err(|e| CliError::Io(e.to_string()))?;
            println!(
                "sweep: {} rows, {} medians -> {}, {}",
                table.rows.len(),
                table.medians.len(),
                out.display(),
                medians_path.display()
            );
            Ok(())
        }
        LipschitzMode::WorkedExample => {
            let mut csv = String::from("t,L,M,M_sq_closed_form,L_sq_trace_bound\n");
            for &t in &section.t_values {
                if t < 1.0 {
                    return Err(CliError::Config(format!(
                        "worked example is defined for t >= 1, got {t}"
                    )));
                }
                let b = lipschitz::worked_example_matrix(t);
                let report = lipschitz_constants_linear(&b, &BlockPartition::unit(2), None)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let m_sq = t * t + 1.0 / (t * t);
                let l_sq_bound = 1.0 + 1.0 / (t * t) + 1.0 / (t * t * t * t);
                println!(
                    "t={t}: L={:.9} M={:.9} (closed-form M^2={m_sq:.9}, trace bound on L^2={l_sq_bound:.9})",
                    report.l, report.m
                );
                csv.push_str(&format!(
                    "{t},{:.17e},{:.17e},{m_sq:.17e},{l_sq_bound:.17e}\n",
                    report.l, report.m
                ));
            }
            if let Some(out) = out {
                std::fs::write(out, csv)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
            }
            Ok(())
        }
    }
}
