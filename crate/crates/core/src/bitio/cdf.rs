//! Adaptive cumulative distribution functions for the range coder.

/// Total probability mass of every [`Cdf`].
pub const CDF_TOTAL: u16 = 1 << CDF_PRECISION;
/// Probability precision in bits.
pub const CDF_PRECISION: u32 = 15;
/// Largest supported alphabet.
pub const MAX_SYMBOLS: usize = 16;

/// Extra fractional bits kept by the adaptation state.
const FRACTION_BITS: u32 = 8;
const STATE_TOTAL: u32 = (CDF_TOTAL as u32) << FRACTION_BITS;
/// One unit of coded probability in state units.
const STATE_UNIT: u32 = 1 << FRACTION_BITS;
const MIN_RATE: u32 = 4;
const MAX_RATE: u32 = 10;
/// The rate grows by one each time the count doubles past this value.
const RATE_STEP_COUNT: u16 = 16;
const COUNT_SATURATION: u16 = RATE_STEP_COUNT << (MAX_RATE - MIN_RATE);

/// Cumulative frequency table over an alphabet of at most 16 symbols.
///
/// `value(i)` is the probability mass (out of 32768) of all symbols `<= i`,
/// so the last entry is always 32768 and entries are strictly increasing.
/// The table adapts in a finer state whose top 15 bits are the coded values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cdf {
    state: [u32; MAX_SYMBOLS],
    len: u8,
    count: u16,
}

impl Cdf {
    fn from_values(values: &[u16]) -> Self {
        let mut state = [0u32; MAX_SYMBOLS];
        for (s, &v) in state.iter_mut().zip(values) {
            *s = (v as u32) << FRACTION_BITS;
        }
        Cdf { state, len: values.len() as u8, count: 0 }
    }

    /// Equiprobable distribution over `n` symbols. When the total does not
    /// divide evenly, the lowest symbols get the extra unit.
    pub fn uniform(n: usize) -> Self {
        assert!((2..=MAX_SYMBOLS).contains(&n), "alphabet size {n} out of range");
        let values: Vec<u16> =
            (1..=n).map(|i| (i as u32 * CDF_TOTAL as u32).div_ceil(n as u32) as u16).collect();
        Self::from_values(&values)
    }

    /// Symbol 0 with mass `p0`, the others equiprobable.
    pub fn skewed(n: usize, p0: f64) -> Self {
        assert!((2..=MAX_SYMBOLS).contains(&n), "alphabet size {n} out of range");
        let total = CDF_TOTAL as f64;
        let first = (p0 * total).round().clamp(1.0, total - (n - 1) as f64);
        let values: Vec<u16> =
            (0..n).map(|i| (first + (total - first) * i as f64 / (n - 1) as f64).round() as u16).collect();
        Self::from_values(&values)
    }

    /// Builds a table from explicit cumulative values. Returns `None` unless
    /// the values are strictly increasing and end at 32768.
    pub fn from_cumulative(values: &[u16]) -> Option<Self> {
        let n = values.len();
        if !(2..=MAX_SYMBOLS).contains(&n) || values[n - 1] != CDF_TOTAL || values[0] == 0 {
            return None;
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        Some(Self::from_values(values))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coded cumulative value of symbol `i`.
    #[inline]
    fn value(&self, i: usize) -> u32 {
        self.state[i] >> FRACTION_BITS
    }

    /// Cumulative values, one per symbol.
    pub fn values(&self) -> Vec<u16> {
        (0..self.len()).map(|i| self.value(i) as u16).collect()
    }

    /// Number of adaptations applied so far (saturating).
    pub fn count(&self) -> u16 {
        self.count
    }

    /// `[low, high)` interval of `symbol` in units of 1/32768.
    #[inline]
    pub fn interval(&self, symbol: usize) -> (u32, u32) {
        let lo = if symbol == 0 { 0 } else { self.value(symbol - 1) };
        (lo, self.value(symbol))
    }

    /// Probability of `symbol` in units of 1/32768.
    #[inline]
    pub fn freq(&self, symbol: usize) -> u32 {
        let (lo, hi) = self.interval(symbol);
        hi - lo
    }

    /// Ideal code length of `symbol` in bits under the current model.
    #[inline]
    pub fn cost(&self, symbol: usize) -> f32 {
        CDF_PRECISION as f32 - (self.freq(symbol) as f32).log2()
    }

    /// Adaptation shift used by the next [`Cdf::update`].
    ///
    /// Starts fast and slows down by one step each time the count doubles.
    #[inline]
    pub fn rate(&self) -> u32 {
        let steps = (self.count / RATE_STEP_COUNT).checked_ilog2().map_or(0, |l| l + 1);
        (MIN_RATE + steps).min(MAX_RATE)
    }

    /// Moves probability mass toward `symbol` using the scheduled rate.
    #[inline]
    pub fn update(&mut self, symbol: usize) {
        let rate = self.rate();
        self.update_with_rate(symbol, rate);
        if self.count < COUNT_SATURATION {
            self.count += 1;
        }
    }

    /// Moves every cumulative entry toward its target (0 below `symbol`,
    /// the total at or above it) by `(target - value) >> rate`, then restores
    /// the one-unit floor per symbol.
    pub fn update_with_rate(&mut self, symbol: usize, rate: u32) {
        let n = self.len as usize;
        debug_assert!(symbol < n);
        for (i, s) in self.state[..n - 1].iter_mut().enumerate() {
            *s = if i >= symbol { *s + ((STATE_TOTAL - *s) >> rate) } else { *s - (*s >> rate) };
        }
        // Every symbol keeps at least one coded unit of mass.
        let mut prev = 0;
        for s in self.state[..n - 1].iter_mut() {
            *s = (*s).max(prev + STATE_UNIT);
            prev = *s;
        }
        let mut next = STATE_TOTAL;
        for s in self.state[..n - 1].iter_mut().rev() {
            *s = (*s).min(next - STATE_UNIT);
            next = *s;
        }
    }

    /// True if the table satisfies the structural invariants.
    pub fn is_valid(&self) -> bool {
        let v = self.values();
        v.len() >= 2
            && v[0] > 0
            && *v.last().unwrap() == CDF_TOTAL
            && v.windows(2).all(|w| w[0] < w[1])
    }

    /// Symbol whose interval contains `target` (a value in `[0, 32768)`).
    #[inline]
    pub(crate) fn find(&self, target: u32) -> usize {
        let n = self.len as usize;
        (0..n - 1).find(|&i| target < self.value(i)).unwrap_or(n - 1)
    }
}
