//! CSV and JSON rendering.
//!
//! Every document starts with the artifact version and the digest of the
//! effective config. CSV carries them on a leading `#` comment line above a
//! single header row; JSON carries them as top-level fields.

use anyhow::Result;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A float with 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    // Negative zero prints as plain zero.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// CSV text with the provenance line, `header`, and `rows`.
pub fn csv_table(digest: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = format!("# conebr {VERSION} config_digest={digest}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config_digest: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with `version` and `config_digest` prepended.
pub fn json_report<T: Serialize>(digest: &str, body: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Envelope { version: VERSION, config_digest: digest, body })?;
    out.push(b'\n');
    Ok(out)
}
