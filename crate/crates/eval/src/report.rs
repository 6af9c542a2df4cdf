//! CSV tables and confusion heatmaps.

use std::path::{Path, PathBuf};

use seminpaint_core::io::write_rgb_png;
use seminpaint_core::ClassTaxonomy;

use crate::dataset::{validate_method, EvalResult};
use crate::error::{csv_err, io_err, Error, Result};

pub const ACCURACY_CSV: &str = "accuracy.csv";
const FIXED_COLUMNS: [&str; 6] = ["method", "mean", "pooled", "n", "excluded", "failed"];
/// Side of one heatmap cell in pixels.
pub const HEATMAP_CELL: usize = 16;

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

pub fn accuracy_header(class_names: &[String]) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(class_names.iter().cloned())
        .collect()
}

/// One row per method: per-image mean, pooled accuracy, scored/excluded/failed
/// counts and per-class accuracy (blank for classes absent from the truth).
pub fn write_accuracy_csv(path: &Path, results: &[EvalResult]) -> Result<()> {
    let first = results.first().ok_or(Error::NoResults)?;
    if results.iter().any(|r| r.class_names != first.class_names) {
        return Err(Error::TaxonomyMismatch);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(accuracy_header(&first.class_names))
        .map_err(csv_err(path))?;
    for r in results {
        let mut row = vec![
            r.method.clone(),
            fmt(r.mean),
            fmt(r.pooled()),
            r.samples().to_string(),
            r.excluded.len().to_string(),
            r.failures.len().to_string(),
        ];
        row.extend(
            r.confusion
                .class_accuracy()
                .into_iter()
                .map(|a| a.map(fmt).unwrap_or_default()),
        );
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Long-form confusion table: `true,predicted,count,support,rate`, where
/// `rate` is the row-normalized value and `support` 0 flags an empty row.
pub fn write_confusion_csv(path: &Path, result: &EvalResult) -> Result<()> {
    let cm = &result.confusion;
    let norm = cm.normalized();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["true", "predicted", "count", "support", "rate"])
        .map_err(csv_err(path))?;
    for (t, rates) in norm.iter().enumerate() {
        let support = cm.row_sum(t).to_string();
        for (p, &rate) in rates.iter().enumerate() {
            w.write_record([
                result.class_names[t].as_str(),
                result.class_names[p].as_str(),
                &cm.count(t, p).to_string(),
                &support,
                &fmt(rate),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Heatmap of the row-normalized matrix: true classes run down, predicted
/// classes across, each cell gray level `255 * rate`. A strip of palette
/// colors labels the rows (left) and columns (top).
pub fn heatmap_rgb(result: &EvalResult, tax: &ClassTaxonomy) -> (usize, usize, Vec<u8>) {
    let cm = &result.confusion;
    let s = cm.size();
    let side = (s + 1) * HEATMAP_CELL;
    let norm = cm.normalized();
    let mut rgb = vec![0u8; side * side * 3];
    for y in 0..side {
        for x in 0..side {
            let (cx, cy) = (x / HEATMAP_CELL, y / HEATMAP_CELL);
            let color = match (cx, cy) {
                (0, 0) => [0, 0, 0],
                (0, r) => tax.color(cm.static_ids()[r - 1]),
                (c, 0) => tax.color(cm.static_ids()[c - 1]),
                (c, r) => {
                    let v = (norm[r - 1][c - 1] * 255.0).round() as u8;
                    [v, v, v]
                }
            };
            rgb[(y * side + x) * 3..(y * side + x) * 3 + 3].copy_from_slice(&color);
        }
    }
    (side, side, rgb)
}

/// Writes `accuracy.csv` plus `confusion_<method>.csv` and
/// `confusion_<method>.png` for every result. Returns the written paths.
pub fn render_report(results: &[EvalResult], tax: &ClassTaxonomy, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    for r in results {
        validate_method(&r.method)?;
        if r.confusion.static_ids() != tax.static_ids() {
            return Err(Error::TaxonomyMismatch);
        }
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let acc = out_dir.join(ACCURACY_CSV);
    write_accuracy_csv(&acc, results)?;
    written.push(acc);
    for r in results {
        let csv_path = out_dir.join(format!("confusion_{}.csv", r.method));
        write_confusion_csv(&csv_path, r)?;
        written.push(csv_path);
        let png_path = out_dir.join(format!("confusion_{}.png", r.method));
        let (w, h, rgb) = heatmap_rgb(r, tax);
        write_rgb_png(&png_path, w, h, &rgb)?;
        written.push(png_path);
    }
    Ok(written)
}

/// Concatenates the rows of several `accuracy.csv` files with the same
/// columns into one comparison table.
pub fn combine_accuracy_csvs(inputs: &[PathBuf], out: &Path) -> Result<usize> {
    let mut header: Option<(PathBuf, Vec<String>)> = None;
    let mut rows = Vec::new();
    for path in inputs {
        let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
        let found: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
        if !found.starts_with(&FIXED_COLUMNS.map(String::from)) {
            return Err(Error::HeaderMismatch {
                path: path.clone(),
                expected: FIXED_COLUMNS.map(String::from).to_vec(),
                found,
            });
        }
        match &header {
            Some((_, expected)) if *expected != found => {
                return Err(Error::HeaderMismatch {
                    path: path.clone(),
                    expected: expected.clone(),
                    found,
                })
            }
            Some(_) => {}
            None => header = Some((path.clone(), found)),
        }
        for rec in r.records() {
            rows.push(rec.map_err(csv_err(path))?);
        }
    }
    let (_, header) = header.ok_or(Error::NoResults)?;
    let mut w = csv::Writer::from_path(out).map_err(csv_err(out))?;
    w.write_record(&header).map_err(csv_err(out))?;
    for row in &rows {
        w.write_record(row).map_err(csv_err(out))?;
    }
    w.flush().map_err(io_err(out))?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Evaluator;
    use seminpaint_core::{InpaintMask, LabelMap};

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    fn identity_result(tax: &ClassTaxonomy, method: &str) -> EvalResult {
        let ids = tax.static_ids();
        let truth = LabelMap::from_fn(7, 7, |x, _| ids[x % ids.len()]);
        let mask = InpaintMask::from_fn(7, 7, |_, y| y > 0);
        let mut ev = Evaluator::new(method, tax).unwrap();
        ev.score("0", &truth, &truth, &mask);
        ev.finish().unwrap()
    }

    #[test]
    fn identity_heatmap_has_bright_diagonal() {
        let tax = carla();
        let r = identity_result(&tax, "gt");
        let (w, _, rgb) = heatmap_rgb(&r, &tax);
        let px = |cx: usize, cy: usize| {
            let (x, y) = (
                cx * HEATMAP_CELL + HEATMAP_CELL / 2,
                cy * HEATMAP_CELL + HEATMAP_CELL / 2,
            );
            rgb[(y * w + x) * 3]
        };
        for k in 1..=r.confusion.size() {
            assert_eq!(px(k, k), 255);
            assert_eq!(px(k % r.confusion.size() + 1, k), 0);
        }
    }

    #[test]
    fn one_sample_report_is_deterministic() {
        let tax = carla();
        let r = identity_result(&tax, "nn");
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let files = render_report(std::slice::from_ref(&r), &tax, &a).unwrap();
        render_report(&[r], &tax, &b).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            let name = f.file_name().unwrap();
            assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.join(name)).unwrap());
        }
        let text = std::fs::read_to_string(a.join(ACCURACY_CSV)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("method,mean,pooled,n,excluded,failed,"));
        assert!(lines[1].starts_with("nn,1.000000,1.000000,1,0,0,"));
    }

    #[test]
    fn combining_tables() {
        let tax = carla();
        let dir = tempfile::tempdir().unwrap();
        let mut inputs = Vec::new();
        for m in ["nn", "ns"] {
            let d = dir.path().join(m);
            render_report(&[identity_result(&tax, m)], &tax, &d).unwrap();
            inputs.push(d.join(ACCURACY_CSV));
        }
        let out = dir.path().join("table.csv");
        assert_eq!(combine_accuracy_csvs(&inputs, &out).unwrap(), 2);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 3);
        let other = ClassTaxonomy::builtin("cityscapes12").unwrap();
        let d = dir.path().join("city");
        render_report(&[identity_result(&other, "pm")], &other, &d).unwrap();
        inputs.push(d.join(ACCURACY_CSV));
        assert!(matches!(
            combine_accuracy_csvs(&inputs, &out),
            Err(Error::HeaderMismatch { .. })
        ));
        assert!(matches!(combine_accuracy_csvs(&[], &out), Err(Error::NoResults)));
    }

    #[test]
    fn mismatched_taxonomy_is_rejected() {
        let tax = carla();
        let other = ClassTaxonomy::builtin("cityscapes12").unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            render_report(&[identity_result(&other, "x")], &tax, dir.path()),
            Err(Error::TaxonomyMismatch)
        ));
        assert!(matches!(render_report(&[], &tax, dir.path()), Err(Error::NoResults)));
    }
}
