//! Passwords and bearer tokens. Only salted hashes are stored.
//!
//! A token reads `<id>.<secret>`: 16 hex digits naming the record, then 64
//! hex digits of secret.

use std::collections::BTreeMap;

use pbkdf2::pbkdf2_hmac;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use footprint_core::Timestamp;

pub const MIN_PASSWORD_LEN: usize = 8;
const PASSWORD_ROUNDS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("missing or malformed bearer token")]
    MalformedToken,
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("password must be at least {MIN_PASSWORD_LEN} characters")]
    WeakPassword,
    #[error("user {0:?} already exists")]
    UserExists(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaltedHash {
    pub salt: String,
    pub hash: String,
}

impl SaltedHash {
    fn password(password: &str) -> Self {
        let salt: [u8; 16] = rand::random();
        SaltedHash {
            salt: hex::encode(salt),
            hash: hex::encode(password_digest(password, &salt)),
        }
    }

    fn token_secret(secret: &str) -> Self {
        let salt: [u8; 16] = rand::random();
        SaltedHash {
            salt: hex::encode(salt),
            hash: hex::encode(token_digest(secret, &salt)),
        }
    }

    fn matches(&self, computed: &[u8]) -> bool {
        match hex::decode(&self.hash) {
            Ok(stored) => stored.ct_eq(computed).into(),
            Err(_) => false,
        }
    }

    fn salt_bytes(&self) -> Vec<u8> {
        hex::decode(&self.salt).unwrap_or_default()
    }
}

fn password_digest(password: &str, salt: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, PASSWORD_ROUNDS, &mut out);
    out
}

fn token_digest(secret: &str, salt: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(secret.as_bytes());
    h.finalize().into()
}

/// What the users log stores about credentials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub token_id: String,
    pub user_id: String,
    pub secret: SaltedHash,
    pub issued_at: Timestamp,
}

/// An issued token. The plaintext exists only in the response.
#[derive(Clone, Debug)]
pub struct Issued {
    pub token: String,
    pub record: TokenRecord,
}

#[derive(Clone, Debug, Default)]
pub struct AuthStore {
    passwords: BTreeMap<String, SaltedHash>,
    tokens: BTreeMap<String, TokenRecord>,
}

impl AuthStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_user(&self, user_id: &str) -> bool {
        self.passwords.contains_key(user_id)
    }

    /// Hashes a new user's password. Does not register it; see [`Self::restore_user`].
    pub fn hash_new_password(
        &self,
        user_id: &str,
        password: &str,
    ) -> Result<SaltedHash, AuthError> {
        if self.has_user(user_id) {
            return Err(AuthError::UserExists(user_id.to_string()));
        }
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(AuthError::WeakPassword);
        }
        Ok(SaltedHash::password(password))
    }

    pub fn restore_user(&mut self, user_id: &str, password: SaltedHash) {
        self.passwords.insert(user_id.to_string(), password);
    }

    pub fn restore_token(&mut self, record: TokenRecord) {
        self.tokens.insert(record.token_id.clone(), record);
    }

    pub fn check_password(&self, user_id: &str, password: &str) -> Result<(), AuthError> {
        let stored = self
            .passwords
            .get(user_id)
            .ok_or(AuthError::InvalidCredentials)?;
        if stored.matches(&password_digest(password, &stored.salt_bytes())) {
            Ok(())
        } else {
            Err(AuthError::InvalidCredentials)
        }
    }

    /// Mints a token for `user_id`. Does not register it; see [`Self::restore_token`].
    pub fn issue(&self, user_id: &str, now: Timestamp) -> Issued {
        let id: [u8; 8] = rand::random();
        let secret: [u8; 32] = rand::random();
        let (token_id, secret) = (hex::encode(id), hex::encode(secret));
        Issued {
            token: format!("{token_id}.{secret}"),
            record: TokenRecord {
                token_id,
                user_id: user_id.to_string(),
                secret: SaltedHash::token_secret(&secret),
                issued_at: now,
            },
        }
    }

    /// The user a bearer token belongs to.
    pub fn verify(&self, token: &str) -> Result<&str, AuthError> {
        let (id, secret) = token.split_once('.').ok_or(AuthError::MalformedToken)?;
        if id.len() != 16 || secret.len() != 64 {
            return Err(AuthError::MalformedToken);
        }
        let record = self.tokens.get(id).ok_or(AuthError::InvalidCredentials)?;
        if record
            .secret
            .matches(&token_digest(secret, &record.secret.salt_bytes()))
        {
            Ok(&record.user_id)
        } else {
            Err(AuthError::InvalidCredentials)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn now() -> Timestamp {
        Timestamp::from_unix(1_700_000_000).unwrap()
    }

    #[test]
    fn password_round_trip() {
        let mut store = AuthStore::new();
        let h = store.hash_new_password("ana", "correct horse").unwrap();
        assert_ne!(h.hash, hex::encode("correct horse"));
        store.restore_user("ana", h);
        assert!(store.check_password("ana", "correct horse").is_ok());
        assert_eq!(
            store.check_password("ana", "wrong horse!"),
            Err(AuthError::InvalidCredentials)
        );
        assert_eq!(
            store.check_password("bo", "correct horse"),
            Err(AuthError::InvalidCredentials)
        );
        assert_eq!(
            store.hash_new_password("ana", "whatever123"),
            Err(AuthError::UserExists("ana".into()))
        );
        assert_eq!(
            store.hash_new_password("bo", "short"),
            Err(AuthError::WeakPassword)
        );
    }

    #[test]
    fn tokens() {
        let mut store = AuthStore::new();
        let issued = store.issue("ana", now());
        assert!(issued.token.len() >= 32);
        assert!(!serde_json::to_string(&issued.record)
            .unwrap()
            .contains(issued.token.split('.').nth(1).unwrap()));
        store.restore_token(issued.record.clone());
        assert_eq!(store.verify(&issued.token), Ok("ana"));

        let mut tampered = issued.token.clone();
        let last = tampered.pop().unwrap();
        tampered.push(if last == '0' { '1' } else { '0' });
        assert_eq!(store.verify(&tampered), Err(AuthError::InvalidCredentials));
        assert_eq!(store.verify("nope"), Err(AuthError::MalformedToken));
        assert_eq!(store.verify(""), Err(AuthError::MalformedToken));
        let other = store.issue("ana", now());
        assert_eq!(
            store.verify(&other.token),
            Err(AuthError::InvalidCredentials)
        );
    }
}
