use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use super::ControlSystem;
use crate::algebra::{eig_hermitian, ComplexMatrix, EigenPair};
use crate::encoding::LevelScheme;
use crate::error::{Error, Result};

/// Which controls are switched on in one nesting segment, and with what sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignPattern {
    pub signs: Vec<i8>,
}

impl SignPattern {
    pub fn off(k: usize) -> Self {
        SignPattern { signs: vec![0; k] }
    }

    pub fn is_off(&self) -> bool {
        self.signs.iter().all(|&s| s == 0)
    }

    /// Indices of the active controls.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.signs.iter().enumerate().filter(|(_, &s)| s != 0).map(|(k, _)| k)
    }

    /// Generator of this segment for a train with the given amplitudes and levels.
    ///
    /// Three-level: `H_0 + Σ s_k ξ_k H_k`. Two-level: active controls sit at
    /// `ξ_k`, inactive ones at their low level.
    pub fn generator(&self, amplitudes: &[f64], levels: &LevelScheme) -> GeneratorKey {
        let coeffs: Vec<f64> = match levels {
            LevelScheme::ThreeLevel => self.signs.iter().zip(amplitudes).map(|(&s, &xi)| f64::from(s) * xi).collect(),
            LevelScheme::TwoLevel { low } => {
                self.signs.iter().zip(amplitudes).zip(low).map(|((&s, &xi), &lo)| if s != 0 { xi } else { lo }).collect()
            }
        };
        GeneratorKey::new(true, &coeffs)
    }
}

/// Exact identity of a cached Hamiltonian `[H_0] + Σ c_k H_k`.
///
/// Coefficients are compared bitwise (with `-0.0` folded into `0.0`), so two
/// keys match only when they describe the same floating-point matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneratorKey {
    drift: bool,
    coeffs: Vec<u64>,
}

impl GeneratorKey {
    pub fn new(drift: bool, coeffs: &[f64]) -> Self {
        let coeffs = coeffs.iter().map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() }).collect();
        GeneratorKey { drift, coeffs }
    }

    pub fn drift(&self) -> bool {
        self.drift
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.coeffs.iter().map(|&b| f64::from_bits(b)).collect()
    }
}

#[derive(Default)]
struct Inner {
    index: HashMap<GeneratorKey, usize>,
    entries: Vec<(GeneratorKey, Arc<EigenPair>)>,
    // P_a† P_b, keyed by (a, b)
    overlaps: HashMap<(usize, usize), Arc<ComplexMatrix>>,
}

/// Append-only store of eigendecompositions for one [`ControlSystem`].
///
/// Lookups take a shared lock; a miss diagonalizes outside the lock and then
/// inserts, keeping whichever entry landed first. Safe to share across threads.
pub struct EigenCache {
    system_id: u64,
    inner: RwLock<Inner>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl std::fmt::Debug for EigenCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenCache")
            .field("entries", &self.len())
            .field("hits", &self.hits())
            .field("misses", &self.misses())
            .finish()
    }
}

impl EigenCache {
    pub fn new(system: &ControlSystem) -> Self {
        EigenCache {
            system_id: system.id(),
            inner: RwLock::new(Inner::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub(crate) fn check(&self, system: &ControlSystem) -> Result<()> {
        if system.id() != self.system_id {
            return Err(Error::InvalidInput("eigen cache belongs to a different system".into()));
        }
        Ok(())
    }

    /// Entry id and eigendecomposition of `key`, diagonalizing on a miss.
    pub fn lookup(&self, system: &ControlSystem, key: &GeneratorKey) -> Result<(usize, Arc<EigenPair>)> {
        self.check(system)?;
        {
            let inner = self.read();
            if let Some(&id) = inner.index.get(key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok((id, inner.entries[id].1.clone()));
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let pair = Arc::new(eig_hermitian(&system.hamiltonian(key.drift, &key.coefficients()))?);
        let mut inner = self.inner.write().unwrap_or_else(|e| e.into_inner());
        if let Some(&id) = inner.index.get(key) {
            return Ok((id, inner.entries[id].1.clone()));
        }
        let id = inner.entries.len();
        inner.entries.push((key.clone(), pair.clone()));
        inner.index.insert(key.clone(), id);
        Ok((id, pair))
    }

    /// Diagonalizes the given generators now, so later propagation only hits.
    pub fn warm(&self, system: &ControlSystem, keys: &[GeneratorKey]) -> Result<()> {
        for key in keys {
            self.lookup(system, key)?;
        }
        Ok(())
    }

    /// `P_a† P_b` for entry ids `a` and `b`.
    pub(crate) fn overlap(&self, a: usize, b: usize) -> Arc<ComplexMatrix> {
        if let Some(o) = self.read().overlaps.get(&(a, b)) {
            return o.clone();
        }
        let (pa, pb) = {
            let inner = self.read();
            (inner.entries[a].1.clone(), inner.entries[b].1.clone())
        };
        let o = Arc::new(pa.basis.ad_mul(&pb.basis));
        let mut inner = self.inner.write().unwrap_or_else(|e| e.into_inner());
        inner.overlaps.entry((a, b)).or_insert(o).clone()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn len(&self) -> usize {
        self.read().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Keys in insertion order.
    pub fn keys(&self) -> Vec<GeneratorKey> {
        self.read().entries.iter().map(|(k, _)| k.clone()).collect()
    }

    /// Largest entrywise error of any entry's reconstruction `P Λ P†` against
    /// the Hamiltonian its key names.
    pub fn verify(&self, system: &ControlSystem) -> Result<f64> {
        self.check(system)?;
        let inner = self.read();
        let worst = inner
            .entries
            .iter()
            .map(|(key, pair)| {
                let diff = pair.reconstruct() - system.hamiltonian(key.drift, &key.coefficients());
                diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Ok(worst)
    }
}
