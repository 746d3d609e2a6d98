use super::word::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform i.i.d. digits in `{0, …, b−1}` drawn from a seeded ChaCha stream.
///
/// Several digits are unpacked from each 64-bit draw; draws above the
/// largest multiple of `b^k` are rejected so the digits stay exactly uniform.
#[derive(Clone, Debug)]
pub struct DigitSource {
    rng: ChaCha8Rng,
    b: u64,
    per_draw: u32,
    limit: u64,
    buf: u64,
    left: u32,
}

impl DigitSource {
    pub fn new(b: u32, seed: u64) -> Self {
        Self::from_rng(b, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_rng(b: u32, rng: ChaCha8Rng) -> Self {
        assert!(b >= 2, "base must be at least 2");
        let b = b as u64;
        let mut per_draw = 0u32;
        let mut block: u64 = 1;
        while let Some(next) = block.checked_mul(b) {
            block = next;
            per_draw += 1;
        }
        // largest multiple of b^per_draw that fits; for b = 2 it is 2^64 (no rejection)
        let limit = if b.is_power_of_two() { 0 } else { (u64::MAX / block) * block };
        Self { rng, b, per_draw, limit, buf: 0, left: 0 }
    }

    #[inline]
    pub fn next_digit(&mut self) -> u8 {
        if self.left == 0 {
            self.refill();
        }
        let d = self.buf % self.b;
        self.buf /= self.b;
        self.left -= 1;
        d as u8
    }

    fn refill(&mut self) {
        loop {
            let v: u64 = self.rng.random();
            if self.limit == 0 || v < self.limit {
                self.buf = v;
                self.left = self.per_draw;
                return;
            }
        }
    }

    pub fn word(&mut self, len: usize) -> Word {
        Word::new((0..len).map(|_| self.next_digit()).collect())
    }
}

/// `count` i.i.d. uniform words of the given length, reproducible under `seed`.
pub fn sample_words(b: u32, length: usize, count: usize, seed: u64) -> impl Iterator<Item = Word> {
    let mut src = DigitSource::new(b, seed);
    (0..count).map(move |_| src.word(length))
}
