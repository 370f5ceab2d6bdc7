//! The `.crom` stream: a fixed 49-byte little-endian header followed by one
//! fixed-width colex rank per message, packed MSB-first without padding
//! between messages. Any byte prefix that covers the header decodes to the
//! messages it fully contains.
//!
//! | offset | size | field       |
//! |-------:|-----:|-------------|
//! | 0      | 4    | `b"CROM"`   |
//! | 4      | 1    | version = 1 |
//! | 5      | 4    | n (u32)     |
//! | 9      | 2    | k (u16)     |
//! | 11     | 4    | L (u32)     |
//! | 15     | 1    | scheme id   |
//! | 16     | 8    | seed (u64)  |
//! | 24     | 8    | sigma2 (f64)|
//! | 32     | 1    | schedule id |
//! | 33     | 8    | gamma (f64) |
//! | 41     | 8    | rate (f64)  |

use crate::crom::{CromEncoding, CromParams, Schedule};
use crate::error::{Error, Result};
use crate::topk::IndexMessage;
use crate::transform::{SchemeKind, TransformScheme};

pub const MAGIC: [u8; 4] = *b"CROM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 49;
pub const HEADER_BITS: usize = HEADER_LEN * 8;

/// `C(n, k)` if it fits in 128 bits.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // r = C(n, i); C(n, i + 1) = r (n − i) / (i + 1), split to stay exact without overflow
        let (num, den) = ((n - i) as u128, (i + 1) as u128);
        let (q, s) = (r / den, r % den);
        r = q.checked_mul(num)?.checked_add(s * num / den)?;
    }
    Some(r)
}

/// `⌈log2 C(n, k)⌉`, the bits per message.
pub fn rank_width(n: usize, k: usize) -> Result<u32> {
    let c = binomial(n, k).ok_or_else(|| {
        Error::Config(format!("C({n}, {k}) does not fit in 128 bits; ranks cannot be packed"))
    })?;
    if c == 0 {
        return Err(Error::Config(format!("no {k}-subsets of {n} elements")));
    }
    Ok(128 - (c - 1).leading_zeros())
}

/// A colex rank in `[0, C(n, k))` with the width used to store it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsetRank {
    pub rank: u128,
    pub width: u32,
}

/// `Σ_j C(m_j, j + 1)` over the sorted indices.
pub fn subset_rank(m: &IndexMessage) -> Result<SubsetRank> {
    let width = rank_width(m.n(), m.k())?;
    let mut rank: u128 = 0;
    for (j, &idx) in m.indices().iter().enumerate() {
        // every term is below C(n, k), which fits
        rank += binomial(idx, j + 1).expect("term below C(n, k)");
    }
    Ok(SubsetRank { rank, width })
}

pub fn subset_unrank(r: SubsetRank, n: usize, k: usize) -> Result<IndexMessage> {
    let total = binomial(n, k)
        .ok_or_else(|| Error::Config(format!("C({n}, {k}) does not fit in 128 bits")))?;
    if r.rank >= total {
        return Err(Error::Corrupt(format!("rank {} is not below C({n}, {k}) = {total}", r.rank)));
    }
    let mut rest = r.rank;
    let mut indices = vec![0; k];
    let mut upper = n;
    for j in (1..=k).rev() {
        // largest c < upper with C(c, j) <= rest
        let (mut lo, mut hi) = (j - 1, upper - 1);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if binomial(mid, j).is_some_and(|b| b <= rest) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        rest -= binomial(lo, j).expect("bounded by rank");
        indices[j - 1] = lo;
        upper = lo;
    }
    IndexMessage::new(n, indices)
}

/// MSB-first bit packer.
#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn push(&mut self, value: u128, width: u32) {
        for b in (0..width).rev() {
            if self.used % 8 == 0 {
                self.bytes.push(0);
            }
            if value >> b & 1 == 1 {
                *self.bytes.last_mut().unwrap() |= 0x80 >> (self.used % 8);
            }
            self.used = (self.used + 1) % 8;
        }
    }
}

fn read_bits(bytes: &[u8], start: usize, width: u32) -> u128 {
    let mut v: u128 = 0;
    for b in start..start + width as usize {
        v = v << 1 | u128::from(bytes[b / 8] >> (7 - b % 8) & 1);
    }
    v
}

pub fn write_header(p: &CromParams) -> Result<[u8; HEADER_LEN]> {
    let n = u32::try_from(p.n()).map_err(|_| Error::Config(format!("n = {} exceeds 32 bits", p.n())))?;
    let k = u16::try_from(p.k()).map_err(|_| Error::Config(format!("k = {} exceeds 16 bits", p.k())))?;
    let l = u32::try_from(p.iterations())
        .map_err(|_| Error::Config(format!("L = {} exceeds 32 bits", p.iterations())))?;
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&MAGIC);
    h[4] = VERSION;
    h[5..9].copy_from_slice(&n.to_le_bytes());
    h[9..11].copy_from_slice(&k.to_le_bytes());
    h[11..15].copy_from_slice(&l.to_le_bytes());
    h[15] = p.scheme().kind.id();
    h[16..24].copy_from_slice(&p.scheme().seed.to_le_bytes());
    h[24..32].copy_from_slice(&p.sigma2().to_le_bytes());
    h[32] = p.schedule().id();
    h[33..41].copy_from_slice(&p.gamma().to_le_bytes());
    h[41..49].copy_from_slice(&p.rate().to_le_bytes());
    Ok(h)
}

pub fn read_header(bytes: &[u8]) -> Result<CromParams> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "stream of {} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not a CROM stream".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported stream version {}", bytes[4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_bits(u64_at(o));
    let n = u32_at(5) as usize;
    let k = u16::from_le_bytes([bytes[9], bytes[10]]) as usize;
    let l = u32_at(11) as usize;
    let kind = SchemeKind::from_id(bytes[15])
        .ok_or_else(|| Error::Format(format!("unknown scheme id {}", bytes[15])))?;
    let schedule = Schedule::from_id(bytes[32])
        .ok_or_else(|| Error::Format(format!("unknown schedule id {}", bytes[32])))?;
    let corrupt = |e: Error| Error::Corrupt(format!("header parameters are inconsistent: {e}"));
    let scheme = TransformScheme::new(kind, u64_at(16), n).map_err(corrupt)?;
    let params = CromParams::from_parts(n, k, f64_at(41), f64_at(24), f64_at(33), schedule, scheme)
        .map_err(corrupt)?;
    if params.iterations() != l {
        return Err(Error::Corrupt(format!(
            "header declares L = {l} but its rate implies L = {}",
            params.iterations()
        )));
    }
    rank_width(n, k).map_err(corrupt)?;
    Ok(params)
}

pub fn write_stream(enc: &CromEncoding) -> Result<Vec<u8>> {
    let p = &enc.params;
    if enc.messages.len() != p.iterations() {
        return Err(Error::Usage(format!(
            "encoding holds {} messages, parameters say L = {}",
            enc.messages.len(),
            p.iterations()
        )));
    }
    let mut out = write_header(p)?.to_vec();
    let mut body = BitWriter::default();
    for m in &enc.messages {
        let r = subset_rank(m)?;
        body.push(r.rank, r.width);
    }
    out.extend_from_slice(&body.bytes);
    Ok(out)
}

/// Result of [`read_stream`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedStream {
    pub params: CromParams,
    pub messages: Vec<IndexMessage>,
    /// Fewer than `L` messages were available.
    pub truncated: bool,
    /// The input ended inside a message, whose bits were dropped.
    pub partial_discarded: bool,
}

/// Reads the header and every complete message, at most `max_messages` of them.
pub fn read_stream(bytes: &[u8], max_messages: Option<usize>) -> Result<DecodedStream> {
    let params = read_header(bytes)?;
    let width = rank_width(params.n(), params.k())? as usize;
    let body = &bytes[HEADER_LEN..];
    let body_bits = body.len() * 8;
    let complete = (body_bits / width).min(params.iterations());
    let count = max_messages.map_or(complete, |m| m.min(complete));
    let mut messages = Vec::with_capacity(count);
    for i in 0..count {
        let rank = read_bits(body, i * width, width as u32);
        messages.push(subset_unrank(SubsetRank { rank, width: width as u32 }, params.n(), params.k())?);
    }
    let truncated = complete < params.iterations();
    // any bits past the last complete message belong to the next, incomplete one
    let partial_discarded = truncated && body_bits > complete * width;
    Ok(DecodedStream { params, messages, truncated, partial_discarded })
}

/// Bytes needed to carry the header and the first `i` messages.
pub fn prefix_len_bytes(p: &CromParams, i: usize) -> Result<usize> {
    Ok(HEADER_LEN + (rank_width(p.n(), p.k())? as usize * i).div_ceil(8))
}

/// Total stream size in bits, final-byte padding included.
pub fn stream_bits(p: &CromParams) -> Result<usize> {
    Ok(prefix_len_bytes(p, p.iterations())? * 8)
}

/// Stream bits beyond the ideal `nR / ln 2`.
pub fn overhead_bits(p: &CromParams) -> Result<f64> {
    Ok(stream_bits(p)? as f64 - p.n() as f64 * p.rate() / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crom::crom_encode;
    use proptest::prelude::*;

    fn msg(n: usize, idx: &[usize]) -> IndexMessage {
        IndexMessage::new(n, idx.to_vec()).unwrap()
    }

    fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|j| m >> j & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(130, 0), Some(1));
        assert_eq!(binomial(128, 1), Some(128));
        assert_eq!(binomial(1 << 16, 8).map(|c| c > 1u128 << 100), Some(true));
        assert_eq!(binomial(1 << 20, 8), None);
        // C(130, 65) exceeds 2^127 but fits; Pascal check on a large row
        let c = binomial(130, 65).unwrap();
        assert_eq!(c, binomial(129, 64).unwrap() + binomial(129, 65).unwrap());
    }

    #[test]
    fn widths() {
        assert_eq!(rank_width(4, 1).unwrap(), 2);
        assert_eq!(rank_width(5, 1).unwrap(), 3);
        assert_eq!(rank_width(1024, 1).unwrap(), 10);
        assert_eq!(rank_width(2, 1).unwrap(), 1);
        assert!(rank_width(1 << 20, 8).is_err());
    }

    #[test]
    fn rank_examples() {
        for i in 0..4 {
            assert_eq!(subset_rank(&msg(4, &[i])).unwrap().rank, i as u128);
        }
        assert_eq!(subset_rank(&msg(5, &[0, 1])).unwrap().rank, 0);
        assert_eq!(subset_rank(&msg(5, &[3, 4])).unwrap().rank, 9);
    }

    #[test]
    fn exhaustive_rank_roundtrip() {
        for n in 2..=12 {
            for k in 1..=(n / 2).min(n - 1) {
                let width = rank_width(n, k).unwrap();
                let mut seen = vec![false; binomial(n, k).unwrap() as usize];
                for s in all_subsets(n, k) {
                    let r = subset_rank(&msg(n, &s)).unwrap();
                    assert!(!seen[r.rank as usize]);
                    seen[r.rank as usize] = true;
                    assert_eq!(subset_unrank(r, n, k).unwrap().indices(), s.as_slice());
                }
                assert!(seen.iter().all(|&b| b));
                let bad = SubsetRank { rank: seen.len() as u128, width };
                assert!(matches!(subset_unrank(bad, n, k), Err(Error::Corrupt(_))));
            }
        }
    }

    #[test]
    fn colex_order() {
        let n = 7;
        let mut subsets = all_subsets(n, 3);
        subsets.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        for (i, s) in subsets.iter().enumerate() {
            assert_eq!(subset_rank(&msg(n, s)).unwrap().rank, i as u128);
        }
    }

    #[test]
    fn hand_packed_body() {
        let mut w = BitWriter::default();
        w.push(1, 2);
        w.push(3, 2);
        assert_eq!(w.bytes, vec![0b0111_0000]);
    }

    fn small_params(n: usize, k: usize, rate: f64, seed: u64) -> CromParams {
        CromParams::new(n, k, rate, TransformScheme::new(SchemeKind::SparseGivens, seed, n).unwrap()).unwrap()
    }

    #[test]
    fn header_roundtrip_is_exact() {
        let p = small_params(64, 2, 1.3, 0xDEAD_BEEF_1234)
            .with_sigma2(0.731)
            .unwrap()
            .with_theorem_schedule(0.0123)
            .unwrap();
        let h = write_header(&p).unwrap();
        assert_eq!(h.len(), HEADER_LEN);
        assert_eq!(read_header(&h).unwrap(), p);
        assert_eq!(read_header(&h).unwrap().sigma2().to_bits(), 0.731f64.to_bits());
    }

    #[test]
    fn header_errors() {
        let p = small_params(16, 1, 1.0, 1);
        let h = write_header(&p).unwrap();
        assert!(matches!(read_header(&h[..HEADER_LEN - 1]), Err(Error::Format(_))));
        let mut bad = h;
        bad[0] = b'X';
        assert!(matches!(read_header(&bad), Err(Error::Format(_))));
        let mut bad = h;
        bad[4] = 2;
        assert!(matches!(read_header(&bad), Err(Error::Format(_))));
        let mut bad = h;
        bad[11] ^= 1;
        assert!(matches!(read_header(&bad), Err(Error::Corrupt(_))));
    }

    #[test]
    fn stream_layout() {
        let p = small_params(4, 1, 2.0 * 4f64.ln() / 4.0, 0);
        assert_eq!(p.iterations(), 2);
        let enc = CromEncoding {
            params: p,
            messages: vec![msg(4, &[1]), msg(4, &[3])],
            residual_norms: vec![],
            correlations: vec![],
        };
        let bytes = write_stream(&enc).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 1);
        assert_eq!(bytes[HEADER_LEN], 0b0111_0000);
        let back = read_stream(&bytes, None).unwrap();
        assert_eq!(back.messages, enc.messages);
        assert!(!back.truncated && !back.partial_discarded);
    }

    #[test]
    fn size_and_overhead() {
        let p = small_params(1024, 1, 1.0, 0);
        let bytes = write_stream(&crom_encode(&vec![0.5; 1024], &p).unwrap()).unwrap();
        assert_eq!(bytes.len() * 8, stream_bits(&p).unwrap());
        assert_eq!(stream_bits(&p).unwrap(), HEADER_BITS + (147 * 10usize).div_ceil(8) * 8);
        let over = overhead_bits(&p).unwrap();
        assert!(over <= p.iterations() as f64 + 400.0, "{over}");
    }

    #[test]
    fn max_messages_limits_output() {
        let p = small_params(32, 2, 1.0, 2);
        let x: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let bytes = write_stream(&crom_encode(&x, &p).unwrap()).unwrap();
        let d = read_stream(&bytes, Some(3)).unwrap();
        assert_eq!(d.messages.len(), 3);
        assert!(!d.truncated);
    }

    proptest! {
        #[test]
        fn every_boundary_prefix_is_readable(n in 4usize..200, k in 1usize..4, l in 1usize..40, seed in any::<u64>()) {
            use rand::{seq::index::sample, SeedableRng};
            let k = k.min(n - 1);
            let rate = l as f64 * crate::stats::ln_binomial(n, k) / n as f64;
            let p = CromParams::new(n, k, rate, TransformScheme::new(SchemeKind::UniformHaar, seed, n).unwrap()).unwrap();
            let l = p.iterations();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let messages: Vec<IndexMessage> = (0..l)
                .map(|_| {
                    let mut s = sample(&mut rng, n, k).into_vec();
                    s.sort();
                    IndexMessage::new(n, s).unwrap()
                })
                .collect();
            let enc = CromEncoding { params: p, messages: messages.clone(), residual_norms: vec![], correlations: vec![] };
            let bytes = write_stream(&enc).unwrap();
            let width = rank_width(n, k).unwrap() as usize;
            for i in 0..=l {
                let cut = prefix_len_bytes(&p, i).unwrap();
                let d = read_stream(&bytes[..cut], None).unwrap();
                // short ranks share bytes, so the cut may also complete later messages
                let fit = l.min(8 * (cut - HEADER_LEN) / width);
                prop_assert!(fit >= i);
                prop_assert_eq!(d.messages.len(), fit);
                prop_assert_eq!(&d.messages[..], &messages[..fit]);
                prop_assert_eq!(d.truncated, fit < l);
                prop_assert_eq!(d.partial_discarded, fit < l && 8 * (cut - HEADER_LEN) > fit * width);
                let capped = read_stream(&bytes[..cut], Some(i)).unwrap();
                prop_assert_eq!(&capped.messages[..], &messages[..i]);
            }
        }
    }
}
