//! Parameter grids used by the tuning and selection commands.

use crate::rankers::{Model, ParameterSetting};

/// The 7 × 4 × 4 × 4 × 4 = 1,792 SetRank settings searched without labels:
/// λ_E, δ_title, δ_abs, μ_title, μ_abs.
pub fn autoselect_grid() -> Vec<ParameterSetting> {
    let mut grid = Vec::with_capacity(1792);
    for lambda_e in [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
        for delta_title in [5.0, 10.0, 15.0, 20.0] {
            for delta_abs in [1.0, 3.0, 5.0, 10.0] {
                for mu_title in [500.0, 1000.0, 1500.0, 2000.0] {
                    for mu_abs in [500.0, 1000.0, 1500.0, 2000.0] {
                        grid.push(ParameterSetting {
                            delta_title,
                            delta_abs,
                            mu_title,
                            mu_abs,
                            lambda_e,
                            jm_lambda: None,
                        });
                    }
                }
            }
        }
    }
    grid
}

const FIELD_WEIGHTS: [f64; 6] = [1.0, 5.0, 10.0, 15.0, 20.0, 50.0];
const MUS: [f64; 6] = [500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0];

/// Supervised search grid for `model`. Field weights come from
/// {1, 5, 10, 15, 20, 50}; one μ from {500, ..., 3000} is shared by both
/// fields; SetRank also searches λ_E over {0, 0.1, ..., 1} and LM-JM its
/// λ over {0.1, ..., 0.9}. Baselines use words only (λ_E = 0).
pub fn cv_grid(model: &Model) -> Vec<ParameterSetting> {
    let mut grid = Vec::new();
    let tenths = |range: std::ops::RangeInclusive<u32>| range.map(|i| f64::from(i) / 10.0).collect::<Vec<_>>();
    for delta_title in FIELD_WEIGHTS {
        for delta_abs in FIELD_WEIGHTS {
            let base = ParameterSetting {
                delta_title,
                delta_abs,
                lambda_e: 0.0,
                ..ParameterSetting::default()
            };
            match model {
                Model::SetRank { .. } => {
                    for mu in MUS {
                        for lambda_e in tenths(0..=10) {
                            grid.push(ParameterSetting {
                                mu_title: mu,
                                mu_abs: mu,
                                lambda_e,
                                ..base.clone()
                            });
                        }
                    }
                }
                Model::LmDir => {
                    for mu in MUS {
                        grid.push(ParameterSetting {
                            mu_title: mu,
                            mu_abs: mu,
                            ..base.clone()
                        });
                    }
                }
                Model::LmJm => {
                    for l in tenths(1..=9) {
                        grid.push(ParameterSetting {
                            jm_lambda: Some(l),
                            ..base.clone()
                        });
                    }
                }
                Model::Bm25 { .. } => grid.push(base),
            }
        }
    }
    grid
}
