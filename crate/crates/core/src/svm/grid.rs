use log::info;
use rayon::prelude::*;

use super::multiclass::train_one_vs_one;
use super::trainer::TrainConfig;
use crate::data::{split, Dataset, SplitSpec};
use crate::error::{CvmError, Result};
use crate::eval::accuracy;
use crate::kernel::KernelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub c_param: f64,
    pub sigma: f64,
    /// `Err` holds the training failure message.
    pub accuracy: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_c: f64,
    pub best_sigma: f64,
    pub best_accuracy: f64,
    /// Row-major over `(C, σ)` in the order the grids were given.
    pub table: Vec<GridCell>,
}

/// Validation-accuracy grid search over `(C, σ)`.
///
/// Trains on the training part of `split(ds, spec)` and scores on the
/// validation part. Ties go to the smaller `C`, then the smaller `σ`.
pub fn grid_search(
    ds: &Dataset,
    c_grid: &[f64],
    sigma_grid: &[f64],
    spec: &SplitSpec,
    template: &TrainConfig,
) -> Result<GridResult> {
    if c_grid.is_empty() || sigma_grid.is_empty() {
        return Err(CvmError::invalid("grid search needs nonempty C and sigma grids"));
    }
    let (train_part, val_part) = split(ds, spec)?;
    let cells: Vec<(f64, f64)> = c_grid
        .iter()
        .flat_map(|&c| sigma_grid.iter().map(move |&s| (c, s)))
        .collect();
    let table: Vec<GridCell> = cells
        .par_iter()
        .map(|&(c, s)| {
            let acc = KernelParams::new(s)
                .and_then(|kernel| {
                    let cfg = TrainConfig {
                        c_param: c,
                        kernel,
                        ..template.clone()
                    };
                    let model = train_one_vs_one(&train_part, &cfg)?;
                    accuracy(&model, &val_part)
                })
                .map_err(|e| e.to_string());
            GridCell {
                c_param: c,
                sigma: s,
                accuracy: acc,
            }
        })
        .collect();
    for cell in &table {
        match &cell.accuracy {
            Ok(a) => info!("grid C={} sigma={} accuracy={a:.4}", cell.c_param, cell.sigma),
            Err(e) => info!("grid C={} sigma={} failed: {e}", cell.c_param, cell.sigma),
        }
    }

    let mut best: Option<&GridCell> = None;
    for cell in &table {
        let Ok(acc) = cell.accuracy else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let bacc = *b.accuracy.as_ref().unwrap();
                acc > bacc
                    || (acc == bacc
                        && (cell.c_param < b.c_param
                            || (cell.c_param == b.c_param && cell.sigma < b.sigma)))
            }
        };
        if better {
            best = Some(cell);
        }
    }
    let best = best.ok_or_else(|| CvmError::Numerical("every grid cell failed to train".into()))?;
    Ok(GridResult {
        best_c: best.c_param,
        best_sigma: best.sigma,
        best_accuracy: *best.accuracy.as_ref().unwrap(),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_circle_synthetic;

    fn template() -> TrainConfig {
        TrainConfig::new(1.0, KernelParams::new(1.0).unwrap())
    }

    #[test]
    fn single_cell() {
        let ds = generate_circle_synthetic(100, 1).unwrap();
        let spec = SplitSpec::new(0.2, 0).unwrap();
        let r = grid_search(&ds, &[3.0], &[0.7], &spec, &template()).unwrap();
        assert_eq!((r.best_c, r.best_sigma), (3.0, 0.7));
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn picks_table_argmax_deterministically() {
        let ds = generate_circle_synthetic(200, 5).unwrap();
        let spec = SplitSpec::new(0.2, 3).unwrap();
        let cs = [0.1, 10.0, 1.0];
        let ss = [5.0, 0.5, 0.05];
        let r = grid_search(&ds, &cs, &ss, &spec, &template()).unwrap();
        assert_eq!(r.table.len(), 9);
        let max = r
            .table
            .iter()
            .filter_map(|c| c.accuracy.as_ref().ok())
            .fold(0.0f64, |m, &a| m.max(a));
        assert!(r.best_accuracy >= max - 0.005);
        // Among tied cells, the smallest C then smallest sigma wins.
        let tied: Vec<&GridCell> = r.table.iter().filter(|c| c.accuracy == Ok(max)).collect();
        let min_c = tied.iter().map(|c| c.c_param).fold(f64::INFINITY, f64::min);
        let min_s = tied
            .iter()
            .filter(|c| c.c_param == min_c)
            .map(|c| c.sigma)
            .fold(f64::INFINITY, f64::min);
        assert_eq!((r.best_c, r.best_sigma), (min_c, min_s));
        let again = grid_search(&ds, &cs, &ss, &spec, &template()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn failed_cells_are_excluded() {
        let ds = generate_circle_synthetic(100, 1).unwrap();
        let spec = SplitSpec::new(0.2, 0).unwrap();
        // sigma = -1 cannot build a kernel.
        let r = grid_search(&ds, &[1.0], &[-1.0, 1.0], &spec, &template()).unwrap();
        assert!(r.table[0].accuracy.is_err());
        assert_eq!(r.best_sigma, 1.0);
        assert!(grid_search(&ds, &[1.0], &[-1.0], &spec, &template()).is_err());
        assert!(grid_search(&ds, &[], &[1.0], &spec, &template()).is_err());
    }
}
