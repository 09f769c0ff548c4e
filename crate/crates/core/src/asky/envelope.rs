//! Key envelopes: one AEAD encryption of the file access key per reader,
//! optionally tagged with salted labels and sorted for binary search.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::wire::{put_u32, Reader};

const ENVELOPE_MAGIC: &[u8; 5] = b"ASKE1";
pub const NONCE_BYTES: usize = 16;
pub const LABEL_BYTES: usize = 28;
pub const IV_BYTES: usize = 12;
pub const KEY_CT_BYTES: usize = 32;
pub const TAG_BYTES: usize = 16;
pub const STANDARD_FRAGMENT_BYTES: usize = IV_BYTES + KEY_CT_BYTES + TAG_BYTES;
pub const INDEXED_FRAGMENT_BYTES: usize = LABEL_BYTES + STANDARD_FRAGMENT_BYTES;

pub type Label = [u8; LABEL_BYTES];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Standard,
    Indexed,
}

impl Variant {
    fn code(self) -> u8 {
        match self {
            Variant::Standard => 0,
            Variant::Indexed => 1,
        }
    }

    pub fn fragment_bytes(self) -> usize {
        match self {
            Variant::Standard => STANDARD_FRAGMENT_BYTES,
            Variant::Indexed => INDEXED_FRAGMENT_BYTES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub label: Option<Label>,
    pub iv: [u8; IV_BYTES],
    pub key_ct: [u8; KEY_CT_BYTES],
    pub tag: [u8; TAG_BYTES],
}

impl Fragment {
    pub(crate) fn sealed(&self) -> Vec<u8> {
        let mut ct = Vec::with_capacity(KEY_CT_BYTES + TAG_BYTES);
        ct.extend_from_slice(&self.key_ct);
        ct.extend_from_slice(&self.tag);
        ct
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AskyEnvelope {
    pub variant: Variant,
    /// Label salt, present exactly for indexed envelopes.
    pub nonce: Option<[u8; NONCE_BYTES]>,
    pub fragments: Vec<Fragment>,
}

impl AskyEnvelope {
    pub fn reader_count(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Bytes taken by the fragments, plus the nonce for indexed envelopes.
    pub fn fragments_len(&self) -> usize {
        self.nonce.map_or(0, |n| n.len()) + self.fragments.len() * self.variant.fragment_bytes()
    }

    pub fn encoded_len(&self) -> usize {
        ENVELOPE_MAGIC.len() + 1 + 4 + self.fragments_len()
    }

    /// `"ASKE1" || variant || [nonce] || count || fragments`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write(&mut out);
        out
    }

    pub(crate) fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(ENVELOPE_MAGIC);
        out.push(self.variant.code());
        if let Some(nonce) = &self.nonce {
            out.extend_from_slice(nonce);
        }
        put_u32(out, self.fragments.len());
        for f in &self.fragments {
            if let Some(label) = &f.label {
                out.extend_from_slice(label);
            }
            out.extend_from_slice(&f.iv);
            out.extend_from_slice(&f.key_ct);
            out.extend_from_slice(&f.tag);
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "envelope");
        let env = Self::read(&mut r)?;
        r.finish()?;
        Ok(env)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.magic(ENVELOPE_MAGIC)?;
        let variant = match r.u8()? {
            0 => Variant::Standard,
            1 => Variant::Indexed,
            v => return Err(Error::Encoding(format!("envelope: unknown variant {v}"))),
        };
        let nonce = match variant {
            Variant::Indexed => Some(r.array()?),
            Variant::Standard => None,
        };
        let count = r.u32()? as usize;
        let mut fragments = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let label = match variant {
                Variant::Indexed => Some(r.array()?),
                Variant::Standard => None,
            };
            fragments.push(Fragment {
                label,
                iv: r.array()?,
                key_ct: r.array()?,
                tag: r.array()?,
            });
        }
        let env = AskyEnvelope { variant, nonce, fragments };
        if !env.labels_sorted() {
            return Err(Error::Encoding("envelope: labels out of order".into()));
        }
        Ok(env)
    }

    fn labels_sorted(&self) -> bool {
        self.fragments
            .windows(2)
            .all(|w| w[0].label <= w[1].label)
    }

    /// Index of the last fragment whose label is `<= target`, found by
    /// halving, together with the number of ordering comparisons made.
    /// `None` when every label is greater than `target` or the envelope is
    /// empty.
    pub fn search_label(&self, target: &Label) -> (Option<usize>, u32) {
        let label = |i: usize| self.fragments[i].label.as_ref().expect("indexed fragment");
        let mut comparisons = 0;
        let mut lo = 0;
        let mut len = self.fragments.len();
        if len == 0 {
            return (None, 0);
        }
        while len > 1 {
            let half = len / 2;
            comparisons += 1;
            if label(lo + half).cmp(target) != Ordering::Greater {
                lo += half;
            }
            len -= half;
        }
        if lo == 0 && label(0) > target {
            return (None, comparisons);
        }
        (Some(lo), comparisons)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frag(label: Option<u8>) -> Fragment {
        Fragment {
            label: label.map(|l| [l; LABEL_BYTES]),
            iv: [1; IV_BYTES],
            key_ct: [2; KEY_CT_BYTES],
            tag: [3; TAG_BYTES],
        }
    }

    fn indexed(labels: &[u8]) -> AskyEnvelope {
        AskyEnvelope {
            variant: Variant::Indexed,
            nonce: Some([9; NONCE_BYTES]),
            fragments: labels.iter().map(|l| frag(Some(*l))).collect(),
        }
    }

    #[test]
    fn fragment_sizes() {
        assert_eq!(STANDARD_FRAGMENT_BYTES, 60);
        assert_eq!(INDEXED_FRAGMENT_BYTES, 88);
    }

    #[test]
    fn wire_round_trip() {
        let std_env = AskyEnvelope {
            variant: Variant::Standard,
            nonce: None,
            fragments: vec![frag(None), frag(None)],
        };
        let bytes = std_env.to_bytes();
        assert_eq!(&bytes[..6], b"ASKE1\0");
        assert_eq!(bytes.len(), 10 + 120);
        assert_eq!(AskyEnvelope::from_bytes(&bytes).unwrap(), std_env);

        let idx = indexed(&[1, 5, 7]);
        let bytes = idx.to_bytes();
        assert_eq!(bytes[5], 1);
        assert_eq!(bytes.len(), 10 + 16 + 3 * 88);
        assert_eq!(AskyEnvelope::from_bytes(&bytes).unwrap(), idx);
    }

    #[test]
    fn rejects_unsorted_and_truncated() {
        let bytes = indexed(&[5, 1]).to_bytes();
        assert!(AskyEnvelope::from_bytes(&bytes).is_err());
        let bytes = indexed(&[1, 5]).to_bytes();
        assert!(AskyEnvelope::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[5] = 7;
        assert!(AskyEnvelope::from_bytes(&bad).is_err());
    }

    #[test]
    fn search_uses_ceil_log2_comparisons() {
        let env = indexed(&[10, 20, 30, 40, 50, 60, 70, 80]);
        for (i, l) in [10u8, 20, 30, 40, 50, 60, 70, 80].iter().enumerate() {
            let (found, cmps) = env.search_label(&[*l; LABEL_BYTES]);
            assert_eq!(found, Some(i));
            assert_eq!(cmps, 3);
        }
        assert_eq!(env.search_label(&[5; LABEL_BYTES]).0, None);
        assert_eq!(env.search_label(&[55; LABEL_BYTES]).0, Some(4));
        assert_eq!(env.search_label(&[99; LABEL_BYTES]).0, Some(7));
        assert_eq!(indexed(&[]).search_label(&[1; LABEL_BYTES]), (None, 0));
        assert_eq!(indexed(&[4]).search_label(&[4; LABEL_BYTES]), (Some(0), 0));
    }

    #[test]
    fn search_agrees_with_linear_scan() {
        let labels: Vec<u8> = (0..37).map(|i| i * 3).collect();
        let env = indexed(&labels);
        for t in 0..=120u8 {
            let expected = labels.iter().rposition(|l| *l <= t);
            let (found, cmps) = env.search_label(&[t; LABEL_BYTES]);
            assert_eq!(found, expected, "target {t}");
            assert!(cmps <= 6);
        }
    }
}
