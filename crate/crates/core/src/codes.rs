//! Binary linear block codes: random linear codes and CRC codes.
//!
//! Both kinds are held in systematic form. A code-word is the `k` message bits
//! followed by `n - k` parity bits, and the parity-check matrix is `[A | I]`.
//! Each parity-check column is packed into a `u64` whose bit `t` is row `t`,
//! so the syndrome of a word is the XOR of the columns at its one bits.
//!
//! # CRC polynomials in Koopman notation
//!
//! A Koopman hex value lists the polynomial coefficients from `x^r` down to
//! `x^1`; the `x^0` term is implicit and always one. `0x5` with `r = 3` is
//! `101` followed by the implicit `1`, i.e. `x^3 + x + 1`. Word bit `j` is the
//! coefficient of `x^(n-1-j)`, so message bits come first at the highest
//! degrees. Encoding the message `1000` (`x^3`) with `x^3 + x + 1`: `x^3 * x^3
//! = x^6`, and `x^6 mod (x^3 + x + 1) = x^2 + 1`, giving the code-word
//! `1000 101`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{Error, Result};

/// Largest supported number of parity bits.
pub const MAX_REDUNDANCY: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeKind {
    Rlc,
    Crc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    n: usize,
    k: usize,
    kind: CodeKind,
    /// Generator rows `[I_k | A^T]`.
    generator: Vec<BitBlock>,
    /// Parity-check columns, bit `t` = row `t`.
    columns: Vec<u64>,
    /// Full CRC polynomial including the implicit `x^0` term.
    crc_poly: Option<u64>,
    seed: Option<u64>,
}

fn check_dims(n: usize, k: usize) -> Result<()> {
    let bad = |reason: &str| Error::InvalidDimensions {
        n,
        k,
        reason: reason.to_string(),
    };
    if k == 0 {
        return Err(bad("k must be positive"));
    }
    if k >= n {
        return Err(bad("k must be smaller than n"));
    }
    if n - k > MAX_REDUNDANCY {
        return Err(bad("at most 63 parity bits are supported"));
    }
    Ok(())
}

impl LinearCode {
    /// Random linear code with a Bernoulli(1/2) parity part.
    ///
    /// The `(n-k) x k` block `A` is drawn column by column in ascending order;
    /// a column is redrawn while it is zero, a unit vector (which would repeat
    /// an identity column) or equal to an earlier column. If the finished `A`
    /// has an all-zero row it is redrawn in full from the same stream.
    pub fn rlc(n: usize, k: usize, seed: u64) -> Result<Self> {
        check_dims(n, k)?;
        let r = n - k;
        if r < 2 {
            return Err(Error::InvalidDimensions {
                n,
                k,
                reason: "random linear codes need at least 2 parity bits".into(),
            });
        }
        if (n as u128) > (1u128 << r) - 1 {
            return Err(Error::InvalidDimensions {
                n,
                k,
                reason: format!(
                    "n exceeds 2^{r}-1, distinct nonzero parity columns are impossible"
                ),
            });
        }
        let mask = (1u64 << r) - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::HashSet::with_capacity(n);
        let mut a_cols = Vec::with_capacity(k);
        loop {
            seen.clear();
            a_cols.clear();
            for _ in 0..k {
                let col = loop {
                    let c = rng.random::<u64>() & mask;
                    if c != 0 && !c.is_power_of_two() && !seen.contains(&c) {
                        break c;
                    }
                };
                seen.insert(col);
                a_cols.push(col);
            }
            let rows_covered = a_cols.iter().fold(0u64, |acc, c| acc | c);
            if rows_covered == mask {
                break;
            }
        }
        let mut code = Self::from_parity_columns(n, k, CodeKind::Rlc, &a_cols);
        code.seed = Some(seed);
        Ok(code)
    }

    /// CRC code for a Koopman-notation polynomial with `n - k` parity bits.
    pub fn crc(n: usize, k: usize, poly_koopman: u64) -> Result<Self> {
        check_dims(n, k)?;
        let r = n - k;
        let bad = |reason: &str| Error::InvalidPolynomial {
            poly: poly_koopman,
            redundancy: r,
            reason: reason.to_string(),
        };
        if poly_koopman == 0 {
            return Err(bad("zero polynomial"));
        }
        if poly_koopman >> (r - 1) != 1 {
            return Err(bad("degree does not match the number of parity bits"));
        }
        let full = (poly_koopman << 1) | 1;
        let mask = (1u64 << r) - 1;
        // x^i mod g for i = 0..n, as r-bit values with bit d = coefficient of x^d.
        let mut residues = Vec::with_capacity(n);
        let mut cur = 1u64;
        for _ in 0..n {
            residues.push(cur);
            cur <<= 1;
            if cur >> r & 1 == 1 {
                cur ^= full;
            }
            cur &= mask;
        }
        // Column j holds x^(n-1-j) mod g; syndrome bit t is the x^(r-1-t) coefficient.
        let to_syndrome =
            |res: u64| -> u64 { (0..r).fold(0u64, |acc, t| acc | ((res >> (r - 1 - t)) & 1) << t) };
        let a_cols: Vec<u64> = (0..k).map(|j| to_syndrome(residues[n - 1 - j])).collect();
        let mut code = Self::from_parity_columns(n, k, CodeKind::Crc, &a_cols);
        code.crc_poly = Some(full);
        Ok(code)
    }

    fn from_parity_columns(n: usize, k: usize, kind: CodeKind, a_cols: &[u64]) -> Self {
        let r = n - k;
        let mut columns = a_cols.to_vec();
        columns.extend((0..r).map(|t| 1u64 << t));
        let generator = (0..k)
            .map(|i| {
                let mut row = BitBlock::zeros(n);
                row.set(i, true);
                for t in 0..r {
                    if a_cols[i] >> t & 1 == 1 {
                        row.set(k + t, true);
                    }
                }
                row
            })
            .collect();
        LinearCode {
            n,
            k,
            kind,
            generator,
            columns,
            crc_poly: None,
            seed: None,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Koopman form of the CRC polynomial, if this is a CRC code.
    pub fn crc_poly_koopman(&self) -> Option<u64> {
        self.crc_poly.map(|p| p >> 1)
    }

    pub fn generator(&self) -> &[BitBlock] {
        &self.generator
    }

    /// Packed parity-check columns; bit `t` of entry `j` is `H[t][j]`.
    #[inline]
    pub fn parity_columns(&self) -> &[u64] {
        &self.columns
    }

    /// Parity-check matrix as `n - k` rows of length `n`.
    pub fn parity_check_rows(&self) -> Vec<BitBlock> {
        (0..self.redundancy())
            .map(|t| BitBlock::from_bools(self.columns.iter().map(|c| c >> t & 1 == 1)))
            .collect()
    }

    fn check_len(&self, word: &BitBlock, expected: usize) -> Result<()> {
        if word.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: word.len(),
            });
        }
        Ok(())
    }

    /// `message * G` over GF(2).
    pub fn encode(&self, message: &BitBlock) -> Result<BitBlock> {
        self.check_len(message, self.k)?;
        let mut word = BitBlock::zeros(self.n);
        for i in message.ones() {
            word ^= &self.generator[i];
        }
        Ok(word)
    }

    /// `H * word^T` packed as a `u64`.
    pub fn syndrome(&self, word: &BitBlock) -> Result<u64> {
        self.check_len(word, self.n)?;
        Ok(word.ones().fold(0u64, |acc, j| acc ^ self.columns[j]))
    }

    pub fn is_codeword(&self, word: &BitBlock) -> Result<bool> {
        Ok(self.syndrome(word)? == 0)
    }

    /// Remainder of the word polynomial divided by the CRC polynomial, by
    /// long division. `None` for non-CRC codes.
    pub fn crc_remainder(&self, word: &BitBlock) -> Result<Option<u64>> {
        self.check_len(word, self.n)?;
        let Some(full) = self.crc_poly else {
            return Ok(None);
        };
        let r = self.redundancy();
        let mut reg = 0u64;
        for bit in word.iter() {
            reg = (reg << 1) | u64::from(bit);
            if reg >> r & 1 == 1 {
                reg ^= full;
            }
        }
        Ok(Some(reg))
    }

    /// Hex dump of the parity-check rows, one row per line.
    pub fn parity_check_hex(&self) -> Vec<String> {
        self.parity_check_rows()
            .iter()
            .map(BitBlock::to_hex)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn all_words(n: usize) -> impl Iterator<Item = BitBlock> {
        (0..1u64 << n).map(move |v| BitBlock::from_u64(v, n))
    }

    fn gh_orthogonal(code: &LinearCode) -> bool {
        code.generator().iter().all(|g| {
            code.parity_check_rows()
                .iter()
                .all(|h| (g.ones().filter(|&j| h.get(j)).count() % 2) == 0)
        })
    }

    #[test]
    fn rlc_8_4_is_orthogonal_and_exhaustively_valid() {
        let code = LinearCode::rlc(8, 4, 11).unwrap();
        assert!(gh_orthogonal(&code));
        let words: Vec<_> = all_words(4).map(|m| code.encode(&m).unwrap()).collect();
        let distinct: std::collections::HashSet<_> = words.iter().cloned().collect();
        assert_eq!(distinct.len(), 16);
        assert!(words.iter().all(|w| code.is_codeword(w).unwrap()));
    }

    #[test]
    fn rlc_is_deterministic_in_seed() {
        let a = LinearCode::rlc(8, 4, 5).unwrap();
        let b = LinearCode::rlc(8, 4, 5).unwrap();
        assert_eq!(a, b);
        let c = LinearCode::rlc(128, 116, 5).unwrap();
        assert_eq!(c.redundancy(), 12);
        assert_ne!(c, LinearCode::rlc(128, 116, 6).unwrap());
    }

    #[test]
    fn rlc_columns_distinct_and_rows_nonzero() {
        for seed in 0..20 {
            for &(n, k) in &[(8, 4), (7, 4), (15, 11), (128, 116), (64, 52)] {
                let code = LinearCode::rlc(n, k, seed).unwrap();
                let cols = code.parity_columns();
                let set: std::collections::HashSet<_> = cols.iter().collect();
                assert_eq!(set.len(), n);
                assert!(!cols.contains(&0));
                let a_rows = cols[..k].iter().fold(0, |acc, c| acc | c);
                assert_eq!(a_rows, (1 << (n - k)) - 1);
            }
        }
    }

    #[test]
    fn rlc_rejects_bad_dimensions() {
        assert!(LinearCode::rlc(8, 8, 0).is_err());
        assert!(LinearCode::rlc(8, 0, 0).is_err());
        assert!(LinearCode::rlc(8, 7, 0).is_err());
        // 2^3 - 1 = 7 < 8
        assert!(LinearCode::rlc(8, 5, 0).is_err());
        assert!(LinearCode::rlc(7, 4, 0).is_ok());
    }

    #[test]
    fn codebook_cardinality_small_codes() {
        for &(n, k) in &[(8, 4), (10, 5), (12, 8), (6, 3)] {
            let code = LinearCode::rlc(n, k, 3).unwrap();
            let count = all_words(n)
                .filter(|w| code.is_codeword(w).unwrap())
                .count();
            assert_eq!(count, 1 << k, "[{n},{k}]");
        }
        let crc = LinearCode::crc(12, 9, 0x5).unwrap();
        let count = all_words(12)
            .filter(|w| crc.is_codeword(w).unwrap())
            .count();
        assert_eq!(count, 1 << 9);
    }

    #[test]
    fn single_flip_is_detected() {
        let code = LinearCode::rlc(128, 116, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let m = BitBlock::from_bools((0..116).map(|_| rng.random::<bool>()));
            let mut w = code.encode(&m).unwrap();
            assert!(code.is_codeword(&w).unwrap());
            w.flip(rng.random_range(0..128));
            assert!(!code.is_codeword(&w).unwrap());
        }
    }

    #[test]
    fn crc_worked_example() {
        // x^3 + x + 1, message x^3 -> parity x^2 + 1.
        let code = LinearCode::crc(7, 4, 0x5).unwrap();
        let w = code.encode(&BitBlock::from_bits(&[1, 0, 0, 0])).unwrap();
        assert_eq!(w.to_bits(), vec![1, 0, 0, 0, 1, 0, 1]);
        assert_eq!(code.crc_remainder(&w).unwrap(), Some(0));
    }

    #[test]
    fn reference_crc_codes_construct() {
        let c32 = LinearCode::crc(32, 29, 0x5).unwrap();
        let c64 = LinearCode::crc(64, 52, 0xbae).unwrap();
        let c128 = LinearCode::crc(128, 116, 0x8f3).unwrap();
        for code in [&c32, &c64, &c128] {
            assert!(gh_orthogonal(code));
            let zero = code.encode(&BitBlock::zeros(code.k())).unwrap();
            assert!(zero.is_zero());
            assert!(code.is_codeword(&zero).unwrap());
        }
        assert_eq!(c64.crc_poly_koopman(), Some(0xbae));
    }

    #[test]
    fn crc_matrix_membership_matches_division() {
        let code = LinearCode::crc(64, 52, 0xbae).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut members = 0;
        for i in 0..10_000 {
            // Mix random words with code-words so both branches are exercised.
            let w = if i % 2 == 0 {
                BitBlock::from_bools((0..64).map(|_| rng.random::<bool>()))
            } else {
                let m = BitBlock::from_bools((0..52).map(|_| rng.random::<bool>()));
                code.encode(&m).unwrap()
            };
            let by_matrix = code.is_codeword(&w).unwrap();
            let by_division = code.crc_remainder(&w).unwrap() == Some(0);
            assert_eq!(by_matrix, by_division);
            members += usize::from(by_matrix);
        }
        assert!(members >= 5_000);
    }

    #[test]
    fn crc_rejects_bad_polynomials() {
        assert!(matches!(
            LinearCode::crc(64, 52, 0),
            Err(Error::InvalidPolynomial { .. })
        ));
        assert!(matches!(
            LinearCode::crc(64, 52, 0x5),
            Err(Error::InvalidPolynomial { .. })
        ));
        assert!(matches!(
            LinearCode::crc(64, 51, 0xbae),
            Err(Error::InvalidPolynomial { .. })
        ));
    }

    #[test]
    fn encode_is_linear_and_systematic() {
        let code = LinearCode::rlc(64, 52, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m1 = BitBlock::from_bools((0..52).map(|_| rng.random::<bool>()));
            let m2 = BitBlock::from_bools((0..52).map(|_| rng.random::<bool>()));
            let c1 = code.encode(&m1).unwrap();
            let c2 = code.encode(&m2).unwrap();
            assert_eq!(&c1 ^ &c2, code.encode(&(&m1 ^ &m2)).unwrap());
            assert_eq!(c1.slice(0, 52), m1);
        }
    }

    #[test]
    fn length_mismatch_errors() {
        let code = LinearCode::rlc(8, 4, 0).unwrap();
        assert!(matches!(
            code.encode(&BitBlock::zeros(5)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            code.is_codeword(&BitBlock::zeros(7)),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
