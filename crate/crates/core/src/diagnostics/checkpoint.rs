use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::WaveState;
use crate::spectral::{read_snapshot, write_snapshot};
use crate::strip::StripField;

const PSI_MARK: &str = "%% psi\n";
const WARM_MARK: &str = "%% warm\n";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    t: f64,
    /// Exact bit pattern of `t`.
    t_bits: String,
    config_hash: String,
    #[serde(default)]
    data_size: Option<f64>,
}

/// Contents of a checkpoint file.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: WaveState,
    pub config_hash: String,
    /// Measured data size of the run that wrote it.
    pub data_size: Option<f64>,
}

/// JSON header line, the `eta` snapshot, then `psi` and (when present) the
/// warm-start strip potential, each after a `%%` marker line. Reading it back
/// and resuming reproduces the uninterrupted run bit for bit.
pub fn write_checkpoint(state: &WaveState, config_hash: &str, data_size: Option<f64>) -> String {
    let header = Header {
        t: state.t,
        t_bits: format!("{:016x}", state.t.to_bits()),
        config_hash: config_hash.into(),
        data_size,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str(&write_snapshot(&state.eta));
    out.push_str(PSI_MARK);
    out.push_str(&write_snapshot(&state.psi));
    if let Some(w) = state.warm_start() {
        out.push_str(WARM_MARK);
        out.push_str(&w.write_snapshot());
    }
    out
}

fn parse_err(line: usize, e: impl ToString) -> Error {
    Error::Parse { line, reason: e.to_string() }
}

pub fn read_checkpoint(text: &str) -> Result<Checkpoint> {
    let (first, rest) = text.split_once('\n').ok_or(parse_err(1, "missing header"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| parse_err(1, e))?;
    let bits = u64::from_str_radix(&header.t_bits, 16).map_err(|e| parse_err(1, e))?;
    let (eta_txt, rest) = rest.split_once(PSI_MARK).ok_or(parse_err(2, "missing psi section"))?;
    let (psi_txt, warm_txt) = match rest.split_once(WARM_MARK) {
        Some((p, w)) => (p, Some(w)),
        None => (rest, None),
    };
    let eta = read_snapshot(eta_txt)?;
    let psi = read_snapshot(psi_txt)?;
    let mut state = WaveState::new(f64::from_bits(bits), eta, psi)?;
    if let Some(w) = warm_txt {
        let w = StripField::read_snapshot(w)?;
        if w.lattice() != state.lattice() {
            return Err(Error::LatticeMismatch);
        }
        state.set_warm_start(Some(w));
    }
    Ok(Checkpoint { state, config_hash: header.config_hash, data_size: header.data_size })
}
