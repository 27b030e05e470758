//! State specifications: `mix:<eta>`, `diosi:<n_max>`, `fock:<w0,w1,...>`.

use std::fmt;

use serde::{Serialize, Serializer};
use vogellab::FockDiagonalState;

#[derive(Clone, Debug)]
pub struct StateSpec {
    pub text: String,
    pub state: FockDiagonalState,
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for StateSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("{what} '{s}' is not a number"))
}

pub fn parse_state(text: &str) -> Result<StateSpec, String> {
    let (kind, body) = text
        .split_once(':')
        .ok_or_else(|| format!("'{text}': expected mix:<eta>, diosi:<n_max> or fock:<w0,w1,...>"))?;
    let state = match kind.trim() {
        "mix" => FockDiagonalState::photon_vacuum_mixture(number(body, "eta")?),
        "diosi" => FockDiagonalState::diosi(number(body, "n_max")?),
        "fock" => {
            let weights = body.split(',').map(|w| number(w, "weight")).collect::<Result<Vec<f64>, _>>()?;
            FockDiagonalState::new(weights)
        }
        other => return Err(format!("unknown state kind '{other}' (use mix, diosi or fock)")),
    }
    .map_err(|e| e.to_string())?;
    Ok(StateSpec { text: text.to_string(), state })
}
