//! File formats, parallel drivers and the `biarch` command line for the
//! `biarch-core` solvers.

pub mod cli;
pub mod error;
pub mod io;
pub mod model_doc;
pub mod parallel;

pub use error::{IoError, Result};
pub use io::{read_csv, write_matrix_file, CsvData, HeaderMode};
pub use model_doc::{read_model, write_model, FitMode, ModelDocument, Standardization};
