//! Walsh-Hadamard DS-OCDMA with a DC offset for unipolar intensity
//! modulation.
//!
//! Row 0 of the codebook (all ones) is never given to an AP: it is the only
//! row that does not sum to zero, so it cannot reject the DC offset.

use crate::error::{Error, Result};

/// Sylvester-constructed Walsh-Hadamard codebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    sf: usize,
    rows: Vec<Vec<i8>>,
}

impl Codebook {
    pub fn spreading_factor(&self) -> usize {
        self.sf
    }

    pub fn row(&self, index: usize) -> Option<&[i8]> {
        self.rows.get(index).map(Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Number of rows usable by APs (row 0 excluded).
    pub fn capacity(&self) -> usize {
        self.sf - 1
    }
}

/// `H_SF` by the Sylvester recursion `H_2k = [[H, H], [H, −H]]`.
pub fn hadamard_codebook(sf: usize) -> Result<Codebook> {
    if sf < 2 || !sf.is_power_of_two() {
        return Err(Error::Domain(format!(
            "spreading factor must be a power of two >= 2, got {sf}"
        )));
    }
    let mut rows: Vec<Vec<i8>> = vec![vec![1]];
    while rows.len() < sf {
        let n = rows.len();
        let mut next = Vec::with_capacity(2 * n);
        for r in &rows {
            next.push(r.iter().chain(r.iter()).copied().collect());
        }
        for r in &rows {
            next.push(r.iter().copied().chain(r.iter().map(|&c| -c)).collect());
        }
        rows = next;
    }
    Ok(Codebook { sf, rows })
}

/// Smallest power of two strictly greater than `ap_count`, so that
/// `ap_count` zero-sum rows are available.
pub fn spreading_factor_for(ap_count: usize) -> usize {
    (ap_count + 1).next_power_of_two().max(2)
}

/// Nonnegative chip sequence ready to drive an LED.
#[derive(Debug, Clone, PartialEq)]
pub struct UnipolarFrame {
    pub chips: Vec<f64>,
    pub dc_offset: f64,
}

/// Maps bit `b` to the bipolar symbol `2b − 1`, spreads it with `code` and
/// adds `dc_offset` to every chip.
pub fn spread(bits: &[bool], code: &[i8], dc_offset: f64) -> Result<UnipolarFrame> {
    if !(dc_offset >= 1.0) {
        return Err(Error::Domain(format!(
            "DC offset {dc_offset} < 1 would produce negative chips"
        )));
    }
    let chips = bits
        .iter()
        .flat_map(|&b| {
            let symbol = if b { 1.0 } else { -1.0 };
            code.iter().map(move |&c| symbol * f64::from(c) + dc_offset)
        })
        .collect();
    Ok(UnipolarFrame { chips, dc_offset })
}

/// Per-bit correlation of a (possibly superposed) chip sequence with `code`.
pub fn despread(signal: &[f64], code: &[i8]) -> Result<Vec<f64>> {
    let sf = code.len();
    if sf == 0 || !signal.len().is_multiple_of(sf) {
        return Err(Error::Framing {
            len: signal.len(),
            sf,
        });
    }
    Ok(signal
        .chunks_exact(sf)
        .map(|slot| slot.iter().zip(code).map(|(s, &c)| s * f64::from(c)).sum())
        .collect())
}

/// Amplitude estimate `|correlation| / SF` for every code row, averaged over
/// the bit slots. Entry `k` corresponds to codebook row `k`; row 0 reports
/// the DC level and should be ignored by callers.
pub fn estimate_ap_powers(received: &[f64], codebook: &Codebook) -> Result<Vec<f64>> {
    let sf = codebook.spreading_factor() as f64;
    codebook
        .rows()
        .map(|code| {
            let corr = despread(received, code)?;
            if corr.is_empty() {
                return Ok(0.0);
            }
            Ok(corr.iter().map(|c| c.abs() / sf).sum::<f64>() / corr.len() as f64)
        })
        .collect()
}
