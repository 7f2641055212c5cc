//! Accounts, bearer tokens and chat sessions in an embedded transactional
//! key-value store. Tensor data never lives here.

use std::path::Path;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use crossmodal_core::center::ChatSession;
use rand::Rng;
use redb::{Database, ReadableDatabase, ReadableTable, TableDefinition};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const ACCOUNTS: TableDefinition<&str, &str> = TableDefinition::new("accounts");
const USERNAMES: TableDefinition<&str, &str> = TableDefinition::new("usernames");
const TOKENS: TableDefinition<&str, &str> = TableDefinition::new("tokens");
const SESSIONS: TableDefinition<&str, &str> = TableDefinition::new("sessions");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("username is already registered")]
    UsernameTaken,
    #[error("unknown username or wrong password")]
    InvalidCredentials,
    #[error("{0}")]
    Invalid(String),
    #[error("metadata store: {0}")]
    Db(String),
}

fn db(e: impl std::fmt::Display) -> MetaError {
    MetaError::Db(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: String,
    pub username: String,
    pub display_name: String,
    pub album_gallery_id: String,
    /// Salted argon2 hash in PHC string form.
    pub password_hash: String,
    /// SHA-256 of the current bearer token, hex encoded.
    pub auth_token_hash: Option<String>,
}

/// A chat session together with the account that owns it, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredSession {
    pub owner: Option<String>,
    pub session: ChatSession,
}

pub fn token_hash(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn new_token() -> String {
    hex::encode(rand::rng().random::<[u8; 32]>())
}

pub fn validate_username(username: &str) -> Result<(), MetaError> {
    let ok = (1..=64).contains(&username.len())
        && username
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(MetaError::Invalid(
            "username must be 1 to 64 characters of letters, digits, '_', '-' or '.'".into(),
        ))
    }
}

pub const MIN_PASSWORD_LEN: usize = 8;

pub struct MetaStore {
    db: Database,
}

impl MetaStore {
    pub fn open(path: &Path) -> Result<Self, MetaError> {
        let database = Database::create(path).map_err(db)?;
        let tx = database.begin_write().map_err(db)?;
        for table in [ACCOUNTS, USERNAMES, TOKENS, SESSIONS] {
            tx.open_table(table).map_err(db)?;
        }
        tx.commit().map_err(db)?;
        Ok(Self { db: database })
    }

    fn get(&self, table: TableDefinition<&str, &str>, key: &str) -> Result<Option<String>, MetaError> {
        let tx = self.db.begin_read().map_err(db)?;
        let t = tx.open_table(table).map_err(db)?;
        Ok(t.get(key).map_err(db)?.map(|v| v.value().to_string()))
    }

    fn account_by_id(&self, id: &str) -> Result<Option<Account>, MetaError> {
        self.get(ACCOUNTS, id)?
            .map(|json| serde_json::from_str(&json).map_err(db))
            .transpose()
    }

    /// Create an account. Hashing is slow by design; call off the async runtime.
    pub fn register(
        &self,
        username: &str,
        password: &str,
        display_name: Option<&str>,
    ) -> Result<Account, MetaError> {
        validate_username(username)?;
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(MetaError::Invalid(format!(
                "password must be at least {MIN_PASSWORD_LEN} characters"
            )));
        }
        let salt = SaltString::encode_b64(&rand::rng().random::<[u8; 16]>()).map_err(db)?;
        let password_hash = Argon2::default()
            .hash_password(password.as_bytes(), &salt)
            .map_err(db)?
            .to_string();
        let account_id = uuid::Uuid::new_v4().simple().to_string();
        let account = Account {
            album_gallery_id: format!("album-{account_id}"),
            account_id,
            username: username.to_string(),
            display_name: display_name.unwrap_or(username).to_string(),
            password_hash,
            auth_token_hash: None,
        };
        let tx = self.db.begin_write().map_err(db)?;
        {
            let mut names = tx.open_table(USERNAMES).map_err(db)?;
            if names.get(username).map_err(db)?.is_some() {
                return Err(MetaError::UsernameTaken);
            }
            names.insert(username, account.account_id.as_str()).map_err(db)?;
            let json = serde_json::to_string(&account).map_err(db)?;
            let mut accounts = tx.open_table(ACCOUNTS).map_err(db)?;
            accounts.insert(account.account_id.as_str(), json.as_str()).map_err(db)?;
        }
        tx.commit().map_err(db)?;
        Ok(account)
    }

    /// Check the password and issue a fresh token, revoking the previous one.
    pub fn login(&self, username: &str, password: &str) -> Result<(Account, String), MetaError> {
        let id = self
            .get(USERNAMES, username)?
            .ok_or(MetaError::InvalidCredentials)?;
        let mut account = self.account_by_id(&id)?.ok_or(MetaError::InvalidCredentials)?;
        let parsed = PasswordHash::new(&account.password_hash).map_err(db)?;
        Argon2::default()
            .verify_password(password.as_bytes(), &parsed)
            .map_err(|_| MetaError::InvalidCredentials)?;

        let token = new_token();
        let hash = token_hash(&token);
        let tx = self.db.begin_write().map_err(db)?;
        {
            let mut tokens = tx.open_table(TOKENS).map_err(db)?;
            if let Some(old) = &account.auth_token_hash {
                tokens.remove(old.as_str()).map_err(db)?;
            }
            tokens.insert(hash.as_str(), account.account_id.as_str()).map_err(db)?;
            account.auth_token_hash = Some(hash);
            let json = serde_json::to_string(&account).map_err(db)?;
            let mut accounts = tx.open_table(ACCOUNTS).map_err(db)?;
            accounts.insert(account.account_id.as_str(), json.as_str()).map_err(db)?;
        }
        tx.commit().map_err(db)?;
        Ok((account, token))
    }

    /// Account holding `token`, if it is current.
    pub fn authenticate(&self, token: &str) -> Result<Option<Account>, MetaError> {
        match self.get(TOKENS, &token_hash(token))? {
            Some(id) => self.account_by_id(&id),
            None => Ok(None),
        }
    }

    pub fn load_session(&self, session_id: &str) -> Result<Option<StoredSession>, MetaError> {
        self.get(SESSIONS, session_id)?
            .map(|json| serde_json::from_str(&json).map_err(db))
            .transpose()
    }

    pub fn save_session(&self, stored: &StoredSession) -> Result<(), MetaError> {
        let json = serde_json::to_string(stored).map_err(db)?;
        let tx = self.db.begin_write().map_err(db)?;
        {
            let mut t = tx.open_table(SESSIONS).map_err(db)?;
            t.insert(stored.session.session_id.as_str(), json.as_str()).map_err(db)?;
        }
        tx.commit().map_err(db)
    }
}
