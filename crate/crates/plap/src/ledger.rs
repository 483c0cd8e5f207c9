//! Streaming CSV ledger.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plap_core::{LedgerRow, LedgerSink};

/// Writes one CSV line per ledger row. Values use shortest round-trip formatting.
///
/// IO errors are held until [`CsvLedger::finish`], since sinks cannot fail mid-run.
pub struct CsvLedger<W: Write> {
    out: W,
    rows: usize,
    error: Option<std::io::Error>,
}

impl CsvLedger<BufWriter<File>> {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> CsvLedger<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{}", LedgerRow::HEADER.join(","))?;
        Ok(CsvLedger {
            out,
            rows: 0,
            error: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn format_row(row: &LedgerRow) -> String {
    row.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl<W: Write> LedgerSink for CsvLedger<W> {
    fn record(&mut self, row: &LedgerRow) {
        if self.error.is_some() {
            return;
        }
        self.rows += 1;
        if let Err(e) = writeln!(self.out, "{}", format_row(row)) {
            self.error = Some(e);
        }
    }
}
