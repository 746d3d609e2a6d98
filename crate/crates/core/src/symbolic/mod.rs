//! Words over `{0, …, b−1}`, the fiber series `S(x, w)` with certified
//! truncation, the scale map `n̂`, and orbit sampling of the skew product.

mod digits;
mod orbit;
mod params;
mod word;

pub use digits::{sample_words, DigitSource};
pub use orbit::{iterate_t, iterate_t_with, Orbit, OrbitSample, ReseedPolicy};
pub use params::{level_shift, nhat, SeriesValue, SystemParams, Tail};
pub use word::{word_point, Word};
