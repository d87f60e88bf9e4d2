use std::hash::Hasher;

use fnv::FnvHasher;

use super::{ChemError, Molecule};

pub const FINGERPRINT_BITS: usize = 2048;

/// Fixed-length bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    len: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(len: usize) -> Self {
        Fingerprint { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.len, "bit {bit} out of range");
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.len && self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&b| self.get(b)).collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Unigram and adjacent-bigram (`a|b`) features hashed with 64-bit FNV-1a
/// into 2048 bits.
pub fn fingerprint(molecule: &Molecule) -> Fingerprint {
    let mut fp = Fingerprint::zeros(FINGERPRINT_BITS);
    let toks: Vec<&str> = molecule.tokens().collect();
    for t in &toks {
        fp.set((fnv1a(t.as_bytes()) % FINGERPRINT_BITS as u64) as usize);
    }
    for pair in toks.windows(2) {
        let feature = format!("{}|{}", pair[0], pair[1]);
        fp.set((fnv1a(feature.as_bytes()) % FINGERPRINT_BITS as u64) as usize);
    }
    fp
}

pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, ChemError> {
    if a.len != b.len {
        return Err(ChemError::LengthMismatch { left: a.len, right: b.len });
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}
