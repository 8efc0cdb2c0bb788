//! Sealed-envelope encryption for participant-to-participant payloads.
//!
//! Hybrid construction: an ephemeral X25519 key agreement feeds
//! HKDF-SHA256, and the derived key drives ChaCha20-Poly1305 over the
//! payload with the envelope header as associated data. Only the intended
//! recipient's private key opens an envelope; any bit flip fails
//! authentication.
//!
//! Wire framing (version 1, all lengths fixed except the payload):
//!
//! ```text
//! version(1) | recipient fingerprint(16) | ephemeral public(32)
//!           | nonce(12) | payload length(8, LE) | ciphertext | tag(16)
//! ```
//!
//! The payload length counts ciphertext plus tag; the tag occupies the
//! final 16 bytes.

use std::fmt;

use chacha20poly1305::aead::rand_core::RngCore;
use chacha20poly1305::aead::{Aead, KeyInit, OsRng, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use sha2::{Digest, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey as XPublicKey, StaticSecret};

const VERSION: u8 = 1;
const FINGERPRINT_LEN: usize = 16;
const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;
const HEADER_LEN: usize = 1 + FINGERPRINT_LEN + 32 + NONCE_LEN + 8;
const KDF_CONTEXT: &[u8] = b"splitchain-envelope-v1";

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("refusing to seal an empty plaintext")]
    EmptyPlaintext,
    #[error("malformed public key: {0}")]
    MalformedKey(String),
    #[error("envelope authentication failed (wrong key or tampered bytes)")]
    Authentication,
    #[error("malformed envelope: {0}")]
    Parse(String),
}

/// X25519 public key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicKey([u8; 32]);

impl PublicKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        PublicKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let digest = Sha256::digest(self.0);
        let mut prefix = [0u8; FINGERPRINT_LEN];
        prefix.copy_from_slice(&digest[..FINGERPRINT_LEN]);
        Fingerprint(prefix)
    }
}

/// X25519 private key. Never serialized; `Debug` redacts the material.
#[derive(Clone)]
pub struct PrivateKey([u8; 32]);

impl PrivateKey {
    /// Raw key bytes, named to make call sites conspicuous (the leak-scan
    /// tests use this to search stored artifacts for key material).
    pub fn expose_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(<redacted>)")
    }
}

/// Truncated SHA-256 of a public key, used to bind an envelope to its
/// recipient without naming them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fingerprint([u8; FINGERPRINT_LEN]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// A participant's key material.
#[derive(Debug, Clone)]
pub struct KeyPair {
    owner: String,
    public: PublicKey,
    private: PrivateKey,
}

impl KeyPair {
    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn private(&self) -> &PrivateKey {
        &self.private
    }
}

/// Deterministically generates a key pair from a seed.
pub fn keygen(owner: &str, seed: u64) -> KeyPair {
    let mut rng = crate::rng::seeded(seed);
    let mut secret_bytes = [0u8; 32];
    rand::RngCore::fill_bytes(&mut rng, &mut secret_bytes);
    let secret = StaticSecret::from(secret_bytes);
    let public = XPublicKey::from(&secret);
    KeyPair {
        owner: owner.to_string(),
        public: PublicKey(*public.as_bytes()),
        private: PrivateKey(secret_bytes),
    }
}

/// Recipient-bound ciphertext wrapping a serialized payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedEnvelope {
    pub recipient_fingerprint: Fingerprint,
    pub ephemeral_public: [u8; 32],
    pub nonce: [u8; NONCE_LEN],
    /// Ciphertext with the 16-byte authentication tag appended.
    pub ciphertext: Vec<u8>,
}

impl SealedEnvelope {
    pub fn auth_tag(&self) -> &[u8] {
        &self.ciphertext[self.ciphertext.len() - TAG_LEN..]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.ciphertext.len());
        out.push(VERSION);
        out.extend_from_slice(&self.recipient_fingerprint.0);
        out.extend_from_slice(&self.ephemeral_public);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&(self.ciphertext.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        if bytes.len() < HEADER_LEN {
            return Err(EnvelopeError::Parse(format!(
                "truncated header: {} bytes, need at least {HEADER_LEN}",
                bytes.len()
            )));
        }
        if bytes[0] != VERSION {
            return Err(EnvelopeError::Parse(format!(
                "unsupported version {}",
                bytes[0]
            )));
        }
        let mut offset = 1;
        let mut take = |n: usize| {
            let slice = &bytes[offset..offset + n];
            offset += n;
            slice
        };
        let fingerprint = Fingerprint(take(FINGERPRINT_LEN).try_into().expect("fixed width"));
        let ephemeral_public: [u8; 32] = take(32).try_into().expect("fixed width");
        let nonce: [u8; NONCE_LEN] = take(NONCE_LEN).try_into().expect("fixed width");
        let declared = u64::from_le_bytes(take(8).try_into().expect("fixed width")) as usize;
        let body = &bytes[offset..];
        if body.len() != declared {
            return Err(EnvelopeError::Parse(format!(
                "payload length mismatch: header says {declared}, found {}",
                body.len()
            )));
        }
        if declared < TAG_LEN {
            return Err(EnvelopeError::Parse(
                "payload shorter than the authentication tag".to_string(),
            ));
        }
        Ok(SealedEnvelope {
            recipient_fingerprint: fingerprint,
            ephemeral_public,
            nonce,
            ciphertext: body.to_vec(),
        })
    }

    fn associated_data(&self) -> Vec<u8> {
        let mut aad = Vec::with_capacity(1 + FINGERPRINT_LEN + 32 + NONCE_LEN);
        aad.push(VERSION);
        aad.extend_from_slice(&self.recipient_fingerprint.0);
        aad.extend_from_slice(&self.ephemeral_public);
        aad.extend_from_slice(&self.nonce);
        aad
    }
}

fn derive_key(
    shared: &x25519_dalek::SharedSecret,
    ephemeral_public: &[u8; 32],
    recipient_public: &PublicKey,
) -> Key {
    let mut info = Vec::with_capacity(KDF_CONTEXT.len() + 64);
    info.extend_from_slice(KDF_CONTEXT);
    info.extend_from_slice(ephemeral_public);
    info.extend_from_slice(recipient_public.as_bytes());
    let hk = Hkdf::<Sha256>::new(None, shared.as_bytes());
    let mut okm = [0u8; 32];
    hk.expand(&info, &mut okm).expect("32 bytes is a valid HKDF length");
    *Key::from_slice(&okm)
}

/// Seals a payload so only the holder of the matching private key can
/// read it. Fresh randomness per call: sealing the same plaintext twice
/// yields different envelopes.
pub fn seal(plaintext: &[u8], recipient: &PublicKey) -> Result<SealedEnvelope, EnvelopeError> {
    if plaintext.is_empty() {
        return Err(EnvelopeError::EmptyPlaintext);
    }
    let mut ephemeral_bytes = [0u8; 32];
    OsRng.fill_bytes(&mut ephemeral_bytes);
    let mut nonce = [0u8; NONCE_LEN];
    OsRng.fill_bytes(&mut nonce);

    let ephemeral = StaticSecret::from(ephemeral_bytes);
    let ephemeral_public = *XPublicKey::from(&ephemeral).as_bytes();
    let shared = ephemeral.diffie_hellman(&XPublicKey::from(*recipient.as_bytes()));
    if !shared.was_contributory() {
        return Err(EnvelopeError::MalformedKey(
            "recipient public key is a low-order point".to_string(),
        ));
    }

    let mut envelope = SealedEnvelope {
        recipient_fingerprint: recipient.fingerprint(),
        ephemeral_public,
        nonce,
        ciphertext: Vec::new(),
    };
    let key = derive_key(&shared, &ephemeral_public, recipient);
    let cipher = ChaCha20Poly1305::new(&key);
    envelope.ciphertext = cipher
        .encrypt(
            Nonce::from_slice(&envelope.nonce),
            Payload {
                msg: plaintext,
                aad: &envelope.associated_data(),
            },
        )
        .map_err(|_| EnvelopeError::Authentication)?;
    Ok(envelope)
}

/// Opens an envelope with the recipient's private key, verifying
/// authentication before returning the plaintext. Wrong key and tampered
/// bytes are deliberately indistinguishable.
pub fn open(envelope: &SealedEnvelope, private: &PrivateKey) -> Result<Vec<u8>, EnvelopeError> {
    let secret = StaticSecret::from(*private.expose_bytes());
    let own_public = PublicKey(*XPublicKey::from(&secret).as_bytes());
    if own_public.fingerprint() != envelope.recipient_fingerprint {
        return Err(EnvelopeError::Authentication);
    }
    let shared = secret.diffie_hellman(&XPublicKey::from(envelope.ephemeral_public));
    if !shared.was_contributory() {
        return Err(EnvelopeError::Authentication);
    }
    let key = derive_key(&shared, &envelope.ephemeral_public, &own_public);
    let cipher = ChaCha20Poly1305::new(&key);
    cipher
        .decrypt(
            Nonce::from_slice(&envelope.nonce),
            Payload {
                msg: &envelope.ciphertext,
                aad: &envelope.associated_data(),
            },
        )
        .map_err(|_| EnvelopeError::Authentication)
}
