use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Per-epoch training and validation loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    /// CSV with header `epoch,train_loss,val_loss`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != ["epoch", "train_loss", "val_loss"] {
            return Err(Error::Schema(format!("unexpected loss history header {header:?}")));
        }
        let records = r.deserialize().collect::<std::result::Result<Vec<EpochRecord>, _>>()?;
        Ok(History { records })
    }

    /// Line chart of both loss curves.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 50.0;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(
            s,
            r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#,
            H - M,
            W - M
        );
        let values = self.records.iter().flat_map(|r| [r.train_loss, r.val_loss]);
        let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.fold(f64::INFINITY, f64::min).min(0.0);
        if let (Some(first), Some(last)) = (self.records.first(), self.records.last()) {
            let span_x = (last.epoch - first.epoch).max(1) as f64;
            let span_y = if hi > lo { hi - lo } else { 1.0 };
            let px = |e: usize| M + (e - first.epoch) as f64 / span_x * (W - 2.0 * M);
            let py = |v: f64| H - M - (v - lo) / span_y * (H - 2.0 * M);
            for (name, colour, pick) in [
                ("train", "#1f77b4", (|r: &EpochRecord| r.train_loss) as fn(&EpochRecord) -> f64),
                ("validation", "#d62728", |r: &EpochRecord| r.val_loss),
            ] {
                let points: Vec<String> =
                    self.records.iter().map(|r| format!("{:.2},{:.2}", px(r.epoch), py(pick(r)))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"><title>{name}</title></polyline>"#,
                    points.join(" ")
                );
            }
            let _ = writeln!(s, r#"<text x="{M}" y="{}" font-family="sans-serif" font-size="12">{:.4}</text>"#, M - 6.0, hi);
            let _ = writeln!(s, r#"<text x="{M}" y="{}" font-family="sans-serif" font-size="12">epoch {}</text>"#, H - M + 18.0, first.epoch);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">epoch {}</text>"#,
                W - M,
                H - M + 18.0,
                last.epoch
            );
        }
        let _ = writeln!(s, r##"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="#1f77b4">train loss</text>"##, W - M - 120.0, M + 14.0);
        let _ = writeln!(s, r##"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="#d62728">validation loss</text>"##, W - M - 120.0, M + 30.0);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history() -> History {
        History {
            records: (1..=3)
                .map(|e| EpochRecord { epoch: e, train_loss: 1.0 / e as f64, val_loss: 1.5 / e as f64 })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let h = history();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("epoch,train_loss,val_loss\n1,1.0,1.5\n"), "{text}");
        assert_eq!(History::read_csv(buf.as_slice()).unwrap(), h);
    }

    #[test]
    fn svg_has_both_curves() {
        let svg = history().to_svg("MLP <dataset1>");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("MLP &lt;dataset1&gt;"));
        assert!(History::default().to_svg("empty").ends_with("</svg>\n"));
    }
}
