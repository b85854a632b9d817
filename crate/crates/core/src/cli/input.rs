//! Input states: named examples, amplitude lists and density-matrix files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::parse_number;
use crate::error::{Error, Result};
use crate::linalg::{eigh, HermitianOperator, PureState, C64};
use crate::states::{example_state, max_coherent, ExampleState};

/// Eigenvalue above which a loaded density is treated as pure.
const PURE_TOL: f64 = 1e-10;

/// On-disk density matrix: row-major entries as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl DensityFile {
    pub fn from_operator(h: &HermitianOperator) -> Self {
        let d = h.dim();
        let entries = (0..d * d)
            .map(|k| {
                let z = h.get(k / d, k % d);
                [z.re, z.im]
            })
            .collect();
        Self { dim: d, entries }
    }

    /// Checks shape, Hermiticity, positivity and unit trace.
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Parse("density file has dim 0".into()));
        }
        if self.entries.len() != d * d {
            return Err(Error::Parse(format!(
                "density file has {} entries, dim {d} needs {}",
                self.entries.len(),
                d * d
            )));
        }
        let mat = DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.entries[i * d + j];
            C64::new(re, im)
        });
        let h = HermitianOperator::new(mat)?;
        h.check_density()?;
        Ok(h)
    }
}

pub fn load_density(path: &Path) -> Result<HermitianOperator> {
    let text = std::fs::read_to_string(path)?;
    let file: DensityFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.to_operator()
}

/// `psi:K` or one of the named example states.
pub fn named_state(name: &str) -> Result<PureState> {
    if let Some(k) = name.strip_prefix("psi:") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Parse(format!("'{name}': expected psi:<dimension>")))?;
        return max_coherent(k);
    }
    let known = ExampleState::ALL.map(|p| p.name()).join(", ");
    let p: ExampleState = name
        .parse()
        .map_err(|_| Error::Parse(format!("unknown state '{name}' (psi:K, {known})")))?;
    Ok(example_state(p))
}

/// Comma-separated real amplitudes, normalized.
pub fn amplitude_state(list: &str) -> Result<PureState> {
    let amps = list
        .split(',')
        .map(parse_number)
        .collect::<Result<Vec<_>>>()?;
    PureState::from_real(&amps)
}

/// The input as given, plus its state vector when it is pure.
#[derive(Clone, Debug)]
pub struct InputState {
    pub rho: HermitianOperator,
    pub pure: Option<PureState>,
}

impl InputState {
    pub fn from_pure(psi: PureState) -> Self {
        Self {
            rho: psi.density(),
            pure: Some(psi),
        }
    }

    pub fn from_density(rho: HermitianOperator) -> Self {
        let e = eigh(&rho);
        let top = e.values.len() - 1;
        let pure = (e.values[top] >= 1.0 - PURE_TOL)
            .then(|| {
                let v: DVector<C64> = e.vectors.column(top).into_owned();
                PureState::normalized(v).ok()
            })
            .flatten();
        Self { rho, pure }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_file_round_trip() {
        let rho = crate::states::random_density(3, 2, 5).unwrap();
        let f = DensityFile::from_operator(&rho);
        let json = serde_json::to_string(&f).unwrap();
        let back: DensityFile = serde_json::from_str(&json).unwrap();
        assert!(back.to_operator().unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn bad_density_files() {
        let short = DensityFile {
            dim: 2,
            entries: vec![[1.0, 0.0]; 3],
        };
        assert!(short.to_operator().is_err());
        let not_herm = DensityFile {
            dim: 2,
            entries: vec![[0.5, 0.0], [0.1, 0.2], [0.1, 0.2], [0.5, 0.0]],
        };
        assert!(matches!(
            not_herm.to_operator(),
            Err(Error::NotHermitian(_))
        ));
        let not_psd = DensityFile {
            dim: 2,
            entries: vec![[1.5, 0.0], [0.0, 0.0], [0.0, 0.0], [-0.5, 0.0]],
        };
        assert!(matches!(not_psd.to_operator(), Err(Error::NotPsd(_))));
    }

    #[test]
    fn state_sources() {
        assert_eq!(named_state("psi:3").unwrap().dim(), 3);
        assert_eq!(named_state("main_example").unwrap().dim(), 2);
        assert!(named_state("psi:x").is_err());
        assert!(named_state("nope").is_err());
        let s = amplitude_state("1,3").unwrap();
        assert!((s.amplitudes()[1].re - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!(amplitude_state("0,0").is_err());
        let mixed = InputState::from_density(HermitianOperator::identity(2).scale(0.5));
        assert!(mixed.pure.is_none());
        let pure = InputState::from_density(s.density());
        assert!((pure.pure.unwrap().overlap(&s.density()) - 1.0).abs() < 1e-12);
    }
}
