//! Property suites over the exchange-fabric primitives and the metric
//! and dataset invariants.

use proptest::prelude::*;

use splitchain_core::dataset::{
    split_train_test, synthesize_dataset, vertical_partition, PartitionSpec,
};
use splitchain_core::envelope::{self, SealedEnvelope};
use splitchain_core::metrics::classification_report;
use splitchain_core::payload::RepresentationFile;
use splitchain_core::store::{BlobStore, MemStore};

proptest! {
    #[test]
    fn store_get_put_identity(payload in proptest::collection::vec(any::<u8>(), 1..2000)) {
        let store = MemStore::new();
        let hash = store.put(&payload).unwrap();
        prop_assert_eq!(store.get(&hash).unwrap(), payload);
    }

    #[test]
    fn envelope_open_seal_identity(payload in proptest::collection::vec(any::<u8>(), 1..1500)) {
        let keys = envelope::keygen("host", 11);
        let sealed = envelope::seal(&payload, keys.public()).unwrap();
        let reparsed = SealedEnvelope::from_bytes(&sealed.to_bytes()).unwrap();
        prop_assert_eq!(envelope::open(&reparsed, keys.private()).unwrap(), payload);
    }

    #[test]
    fn envelope_rejects_any_single_bit_flip(
        payload in proptest::collection::vec(any::<u8>(), 1..800),
        bit_pick in any::<u64>(),
    ) {
        let keys = envelope::keygen("host", 12);
        let bytes = envelope::seal(&payload, keys.public()).unwrap().to_bytes();
        let bit = (bit_pick % (bytes.len() as u64 * 8)) as usize;
        let mut tampered = bytes;
        tampered[bit / 8] ^= 1 << (bit % 8);
        let survived = SealedEnvelope::from_bytes(&tampered)
            .ok()
            .and_then(|e| envelope::open(&e, keys.private()).ok());
        prop_assert!(survived.is_none());
    }

    #[test]
    fn accuracy_is_support_weighted_recall(
        vectors in (1..150usize).prop_flat_map(|n| (
            proptest::collection::vec(0u8..2, n),
            proptest::collection::vec(0u8..2, n),
        ))
    ) {
        let (y_true, y_pred) = vectors;
        let report = classification_report::<f64>(&y_true, &y_pred).unwrap();
        prop_assert!((report.accuracy - report.weighted_avg.recall).abs() < 1e-12);
        prop_assert_eq!(report.class0.support + report.class1.support, y_true.len());
    }

    #[test]
    fn split_is_a_disjoint_cover(n in 10..200usize, ratio in 0.05..0.95f64, seed in any::<u64>()) {
        let table = synthesize_dataset::<f64>(n, 0.3, seed).unwrap();
        let (train, test) = split_train_test(&table, ratio, seed).unwrap();
        prop_assert_eq!(train.n_rows() + test.n_rows(), n);
        let train_ids: std::collections::HashSet<u64> = train.ids().iter().copied().collect();
        prop_assert!(test.ids().iter().all(|id| !train_ids.contains(id)));
        let expected = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
        prop_assert_eq!(train.n_rows(), expected);
    }

    #[test]
    fn partition_rows_reconstruct_the_original(n in 10..120usize, seed in any::<u64>()) {
        let table = synthesize_dataset::<f64>(n, 0.3, seed).unwrap();
        let (personal, bank) = vertical_partition(&table, &PartitionSpec::synthetic()).unwrap();
        prop_assert_eq!(personal.ids(), table.ids());
        prop_assert_eq!(bank.ids(), table.ids());
        for row in 0..n {
            let mut joined = personal.row(row);
            joined.extend(bank.row(row));
            prop_assert_eq!(joined, table.row(row));
        }
    }

    #[test]
    fn representation_csv_round_trips_bit_exactly(
        data in (1..6usize).prop_flat_map(|width| proptest::collection::vec(
            proptest::collection::vec(0.0f64..1e9, width),
            1..40,
        ))
    ) {
        let width = data[0].len();
        let entries: Vec<(u64, Vec<f64>)> = data
            .into_iter()
            .enumerate()
            .map(|(i, row)| (i as u64 + 1, row))
            .collect();
        let file = RepresentationFile::new("node1", width, entries).unwrap();
        let back = RepresentationFile::<f64>::from_csv_bytes("node1", &file.to_csv_bytes()).unwrap();
        prop_assert_eq!(back, file);
    }
}

/// The envelope contract covers large payloads; 64 MiB round-trips.
#[test]
fn envelope_round_trips_64_mib() {
    let keys = envelope::keygen("host", 64);
    let mut payload = vec![0u8; 64 << 20];
    let mut rng = splitchain_core::rng::seeded(64);
    rand::RngCore::fill_bytes(&mut rng, &mut payload[..4096]);
    let sealed = envelope::seal(&payload, keys.public()).unwrap();
    let opened = envelope::open(&sealed, keys.private()).unwrap();
    assert_eq!(opened, payload);
}

/// Test-local SHA-256 (straight from the FIPS 180-4 spec), kept fully
/// independent of the crate's hashing path so content addresses are
/// cross-checked between two implementations.
mod sha256_oracle {
    const K: [u32; 64] = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2,
    ];

    pub fn digest(message: &[u8]) -> [u8; 32] {
        let mut state: [u32; 8] = [
            0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
            0x5be0cd19,
        ];
        let mut data = message.to_vec();
        let bit_len = (message.len() as u64).wrapping_mul(8);
        data.push(0x80);
        while data.len() % 64 != 56 {
            data.push(0);
        }
        data.extend_from_slice(&bit_len.to_be_bytes());

        for chunk in data.chunks_exact(64) {
            let mut w = [0u32; 64];
            for (i, word) in chunk.chunks_exact(4).enumerate() {
                w[i] = u32::from_be_bytes(word.try_into().unwrap());
            }
            for i in 16..64 {
                let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
                let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
                w[i] = w[i - 16]
                    .wrapping_add(s0)
                    .wrapping_add(w[i - 7])
                    .wrapping_add(s1);
            }
            let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut h] = state;
            for i in 0..64 {
                let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
                let ch = (e & f) ^ (!e & g);
                let t1 = h
                    .wrapping_add(s1)
                    .wrapping_add(ch)
                    .wrapping_add(K[i])
                    .wrapping_add(w[i]);
                let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
                let maj = (a & b) ^ (a & c) ^ (b & c);
                let t2 = s0.wrapping_add(maj);
                h = g;
                g = f;
                f = e;
                e = d.wrapping_add(t1);
                d = c;
                c = b;
                b = a;
                a = t1.wrapping_add(t2);
            }
            for (slot, v) in state.iter_mut().zip([a, b, c, d, e, f, g, h]) {
                *slot = slot.wrapping_add(v);
            }
        }
        let mut out = [0u8; 32];
        for (i, v) in state.iter().enumerate() {
            out[4 * i..4 * i + 4].copy_from_slice(&v.to_be_bytes());
        }
        out
    }
}

#[test]
fn oracle_sha256_matches_published_vectors() {
    assert_eq!(
        hex::encode(sha256_oracle::digest(b"abc")),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    assert_eq!(
        hex::encode(sha256_oracle::digest(b"")),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}

proptest! {
    #[test]
    fn content_hashes_agree_with_the_independent_implementation(
        payload in proptest::collection::vec(any::<u8>(), 1..400)
    ) {
        let via_store = splitchain_core::store::ContentHash::of(&payload);
        let via_oracle = sha256_oracle::digest(&payload);
        prop_assert_eq!(via_store.as_bytes(), &via_oracle);
    }
}
