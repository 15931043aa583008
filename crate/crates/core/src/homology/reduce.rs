//! Rank of cubical boundary matrices over prime fields.
//!
//! Columns are sparse sorted row lists. Dimensions are reduced from the top
//! down so that rows which became pivots of `∂_{d+1}` can be skipped as
//! columns of `∂_d` (they are boundaries of reduced columns, hence cycles).

use fixedbitset::FixedBitSet;

use super::complex::PeriodicCubicalComplex;

const NO_PIVOT: u32 = u32::MAX;

/// Field of coefficients for homology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Field {
    p: u32,
}

impl Field {
    pub const GF2: Field = Field { p: 2 };
    pub const GF3: Field = Field { p: 3 };

    /// Prime field `GF(p)`; `p` must be a prime below 2^15.
    pub fn prime(p: u32) -> Option<Self> {
        let is_prime = p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
        (is_prime && p < (1 << 15)).then_some(Self { p })
    }

    pub fn characteristic(self) -> u32 {
        self.p
    }

    fn inverse(self, a: u32) -> u32 {
        // Fermat: a^(p-2)
        let (mut base, mut exp, mut acc) = (a as u64, self.p as u64 - 2, 1u64);
        let p = self.p as u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            exp >>= 1;
        }
        acc as u32
    }
}

impl Default for Field {
    fn default() -> Self {
        Self::GF2
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        let digits = t
            .strip_prefix("gf(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("gf"))
            .unwrap_or(&t);
        digits
            .parse::<u32>()
            .ok()
            .and_then(Field::prime)
            .ok_or_else(|| format!("unknown field {s:?}; use gf2, gf3 or another small prime"))
    }
}

impl From<Field> for String {
    fn from(f: Field) -> String {
        format!("gf{}", f.p)
    }
}

impl TryFrom<String> for Field {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Ranks of `∂_1 … ∂_n` restricted to the complex (index `d` holds `rank ∂_d`,
/// index 0 is zero).
pub fn boundary_ranks(complex: &PeriodicCubicalComplex, field: Field) -> Vec<usize> {
    let n = complex.dim();
    let mut ranks = vec![0; n + 1];
    let mut cleared = FixedBitSet::with_capacity(0);
    for d in (1..=n).rev() {
        let (rank, pivots) = if field.p == 2 {
            reduce_gf2(complex, d, &cleared)
        } else {
            reduce_gfp(complex, d, &cleared, field)
        };
        ranks[d] = rank;
        cleared = pivots;
    }
    ranks
}

fn reduce_gf2(c: &PeriodicCubicalComplex, d: usize, cleared: &FixedBitSet) -> (usize, FixedBitSet) {
    let rows = c.capacity(d - 1);
    let mut pivot_of = vec![NO_PIVOT; rows];
    let mut stored: Vec<Vec<u32>> = Vec::new();
    let mut pivots = FixedBitSet::with_capacity(rows);
    let mut col: Vec<u32> = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();
    for id in c.occupancy(d).ones() {
        if cleared.contains(id) {
            continue;
        }
        col.clear();
        col.extend(c.boundary(d, id).into_iter().map(|(f, _)| f as u32));
        col.sort_unstable();
        while let Some(&low) = col.last() {
            let k = pivot_of[low as usize];
            if k == NO_PIVOT {
                break;
            }
            xor_into(&col, &stored[k as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&low) = col.last() {
            pivot_of[low as usize] = stored.len() as u32;
            pivots.insert(low as usize);
            stored.push(col.clone());
        }
    }
    (stored.len(), pivots)
}

fn xor_into(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

fn reduce_gfp(
    c: &PeriodicCubicalComplex,
    d: usize,
    cleared: &FixedBitSet,
    field: Field,
) -> (usize, FixedBitSet) {
    let p = field.p;
    let rows = c.capacity(d - 1);
    let mut pivot_of = vec![NO_PIVOT; rows];
    let mut stored: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut pivots = FixedBitSet::with_capacity(rows);
    let mut col: Vec<(u32, u32)> = Vec::new();
    let mut scratch: Vec<(u32, u32)> = Vec::new();
    for id in c.occupancy(d).ones() {
        if cleared.contains(id) {
            continue;
        }
        col.clear();
        col.extend(c.boundary(d, id).into_iter().map(|(f, s)| {
            let v = if s > 0 { 1 } else { p - 1 };
            (f as u32, v)
        }));
        col.sort_unstable_by_key(|e| e.0);
        while let Some(&(low, a)) = col.last() {
            let k = pivot_of[low as usize];
            if k == NO_PIVOT {
                break;
            }
            let other = &stored[k as usize];
            let b = other.last().expect("stored columns are non-empty").1;
            // col ← col − (a/b)·other
            let factor = (a as u64 * field.inverse(b) as u64 % p as u64) as u32;
            axpy(&col, other, p - factor, p, &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&(low, _)) = col.last() {
            pivot_of[low as usize] = stored.len() as u32;
            pivots.insert(low as usize);
            stored.push(col.clone());
        }
    }
    (stored.len(), pivots)
}

/// `out = a + s·b` over GF(p), dropping zeros.
fn axpy(a: &[(u32, u32)], b: &[(u32, u32)], s: u32, p: u32, out: &mut Vec<(u32, u32)>) {
    out.clear();
    let scale = |v: u32| (v as u64 * s as u64 % p as u64) as u32;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((b[j].0, scale(b[j].1)));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let v = (a[i].1 + scale(b[j].1)) % p;
                if v != 0 {
                    out.push((a[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend(b[j..].iter().map(|&(r, v)| (r, scale(v))));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_parsing() {
        assert_eq!("gf2".parse::<Field>().unwrap(), Field::GF2);
        assert_eq!("GF(3)".parse::<Field>().unwrap(), Field::GF3);
        assert_eq!("7".parse::<Field>().unwrap().characteristic(), 7);
        assert!("gf4".parse::<Field>().is_err());
        assert!("gf1".parse::<Field>().is_err());
    }

    #[test]
    fn inverses_in_gf7() {
        let f = Field::prime(7).unwrap();
        for a in 1..7 {
            assert_eq!(a * f.inverse(a) % 7, 1);
        }
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let c = PeriodicCubicalComplex::full(&[8, 8, 8]).unwrap();
        for d in 2..=3 {
            for id in c.occupancy(d).ones().step_by(7) {
                let mut acc = std::collections::BTreeMap::<usize, i64>::new();
                for (f, s) in c.boundary(d, id) {
                    for (g, t) in c.boundary(d - 1, f) {
                        *acc.entry(g).or_default() += (s * t) as i64;
                    }
                }
                assert!(acc.values().all(|&v| v == 0), "d={d} id={id}");
            }
        }
    }
}
