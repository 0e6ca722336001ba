//! Partial least squares regression built around the Improved Kernel PLS
//! algorithms, with cross-validation that reuses one pass of cross-product
//! accumulation across all folds.
//!
//! ```
//! use fastpls::{fit_ikpls1, Dataset, DenseMatrix, PreprocessSpec};
//!
//! let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
//! let y = DenseMatrix::column_vector(&[1.0, 1.0, 2.0]).unwrap();
//! let data = Dataset::new(x, y, None).unwrap();
//! let model = fit_ikpls1(&data, &PreprocessSpec::NONE, 2).unwrap();
//! let b = model.coefficients(2).unwrap();
//! assert!((b.get(0, 0) - 1.0).abs() < 1e-12);
//! ```

pub mod crossval;
pub mod cvmatrix;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod pls;
pub mod preprocess;
pub mod stats;
pub mod synthetic;

pub use crossval::{cross_validate, cross_validate_with, CvOutcome, CvReport, CvTiming, Engine, Metric};
pub use cvmatrix::{naive_training_products, precompute, recomputed_training_products, stream, training_products, CvProducts, GlobalProducts, RawSums};
pub use data::{make_folds, Dataset, FoldSpec, PreprocessSpec, ZeroVariancePolicy};
pub use error::{Error, ErrorCategory, Result};
pub use matrix::DenseMatrix;
pub use metrics::{CalibrationLine, CalibrationSource};
pub use pls::{
    classes_from_responses, decode_classes, fit_ikpls1, fit_ikpls1_with_scores, fit_ikpls2, fit_ikpls2_dataset,
    fit_nipals, ClassCoding, PlsModel,
};
pub use preprocess::{EdgePolicy, Pipeline, SavGolSpec};
pub use stats::{class_weights, column_stats, ClassWeightTable, ColumnStats};

/// Library version, echoed in reports and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
