//! The shared "cheaper in the same category" ranking used for retail
//! alternatives and menu recommendations.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// Something that can be offered as a lower-carbon substitute.
pub trait Rankable {
    /// Tie-break key; also the identity used to keep an item out of its own
    /// alternatives.
    type Key: Ord + ?Sized;

    fn category(&self) -> &str;
    fn footprint_kg(&self) -> f64;
    fn tie_key(&self) -> &Self::Key;
}

/// Ascending footprint, then ascending tie key.
pub fn rank_order<T: Rankable + ?Sized>(a: &T, b: &T) -> Ordering {
    a.footprint_kg()
        .total_cmp(&b.footprint_kg())
        .then_with(|| a.tie_key().cmp(b.tie_key()))
}

/// Items from `pool` in `item`'s category whose footprint is strictly lower,
/// sorted by [`rank_order`] and cut to `limit`. Equal footprints never
/// qualify and `item` itself is never returned.
pub fn cheaper_alternatives<'a, T, I>(pool: I, item: &T, limit: usize) -> Vec<&'a T>
where
    T: Rankable + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut picked: Vec<&T> = pool
        .into_iter()
        .filter(|c| {
            c.category() == item.category()
                && c.footprint_kg() < item.footprint_kg()
                && c.tie_key() != item.tie_key()
        })
        .collect();
    picked.sort_by(|a, b| rank_order(*a, *b));
    picked.truncate(limit);
    picked
}
