use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{CurveRow, Importance};
use crate::train::TrainReport;

use super::write_atomic;

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e.into() }
}

fn finish(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| Error::Io { path: path.to_path_buf(), source: e.into_error() })?;
    write_atomic(path, &bytes)
}

/// Columns `snr_db, windows, method, pd, pd_stderr, pfa2_achieved, n_runs`.
pub fn write_curves_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["snr_db", "windows", "method", "pd", "pd_stderr", "pfa2_achieved", "n_runs"]).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.snr_db.to_string(),
            r.windows.to_string(),
            r.method.clone(),
            r.pd.to_string(),
            r.pd_stderr.to_string(),
            r.pfa2_achieved.map(|p| p.to_string()).unwrap_or_default(),
            r.n_runs.to_string(),
        ])
        .map_err(&err)?;
    }
    finish(path, w)
}

/// Columns `feature, class_context, q1, median, q3, lo_whisker, hi_whisker`
/// followed by one column per outlier.
pub fn write_boxplot_csv(path: &Path, rows: &[Importance]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["feature", "class_context", "q1", "median", "q3", "lo_whisker", "hi_whisker", "outliers"])
        .map_err(&err)?;
    for r in rows {
        let ctx = match r.class_context {
            Some(0) => "FF",
            Some(1) => "TF",
            Some(2) => "TT",
            _ => "ALL",
        };
        let s = &r.stats;
        let mut rec = vec![
            r.feature.tag().to_string(),
            ctx.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.lo_whisker.to_string(),
            s.hi_whisker.to_string(),
        ];
        rec.extend(s.outliers.iter().map(f64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    finish(path, w)
}

/// Columns `epoch, train_loss, val_loss`.
pub fn write_loss_csv(path: &Path, report: &TrainReport) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "train_loss", "val_loss"]).map_err(&err)?;
    for (e, l) in report.train_loss.iter().enumerate() {
        let v = report.val_loss.get(e).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([e.to_string(), l.to_string(), v]).map_err(&err)?;
    }
    finish(path, w)
}
