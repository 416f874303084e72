/// Fixed-length bitset, packed least-significant-bit first within each byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    len: usize,
    bytes: Vec<u8>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    /// Wraps packed bytes. Returns `None` if the byte count does not match or
    /// padding bits are set.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let tail = len % 8;
        if tail != 0 && bytes[bytes.len() - 1] >> tail != 0 {
            return None;
        }
        Some(Self { len, bytes })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.bytes[i >> 3] >> (i & 7) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.bytes[i >> 3] |= 1 << (i & 7);
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Number of set bits in `start..start + len`.
    pub fn count_range(&self, start: usize, len: usize) -> usize {
        (start..start + len).filter(|&i| self.get(i)).count()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bytes
            .iter()
            .enumerate()
            .flat_map(|(bi, &b)| (0..8).filter(move |k| b >> k & 1 == 1).map(move |k| bi * 8 + k))
    }

    pub fn and_count(&self, other: &Self) -> usize {
        self.bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn or_count(&self, other: &Self) -> usize {
        self.bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Whether every bit of `self` is also set in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.bytes.iter().zip(&other.bytes).all(|(a, b)| a & !b == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lsb_first_layout() {
        let mut b = BitSet::new(10);
        b.set(0);
        b.set(3);
        b.set(9);
        assert_eq!(b.as_bytes(), &[0b0000_1001, 0b0000_0010]);
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 3, 9]);
    }

    #[test]
    fn rejects_dirty_padding() {
        assert!(BitSet::from_bytes(10, vec![0, 0b100]).is_none());
        assert!(BitSet::from_bytes(10, vec![0]).is_none());
        assert!(BitSet::from_bytes(10, vec![0xff, 0b11]).is_some());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(len in 1usize..200, picks in prop::collection::vec(any::<prop::sample::Index>(), 0..50)) {
            let mut b = BitSet::new(len);
            for p in &picks {
                b.set(p.index(len));
            }
            let back = BitSet::from_bytes(len, b.as_bytes().to_vec()).unwrap();
            prop_assert_eq!(&back, &b);
            let mut ones: Vec<_> = picks.iter().map(|p| p.index(len)).collect();
            ones.sort();
            ones.dedup();
            prop_assert_eq!(back.iter_ones().collect::<Vec<_>>(), ones);
        }
    }
}
