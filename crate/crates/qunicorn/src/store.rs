// SPDX-License-Identifier: Apache-2.0

//! Embedded persistence: jobs, results and device provenance history,
//! each a redb table of JSON documents.

use std::path::Path;

use redb::backends::InMemoryBackend;
use redb::{Database, ReadableTable, TableDefinition};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

const JOBS: TableDefinition<&str, &str> = TableDefinition::new("jobs");
const RESULTS: TableDefinition<&str, &str> = TableDefinition::new("results");
const PROVENANCE: TableDefinition<&str, &str> = TableDefinition::new("provenance");
const META: TableDefinition<&str, &str> = TableDefinition::new("meta");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Jobs,
    Results,
    Provenance,
}

impl Table {
    fn def(self) -> TableDefinition<'static, &'static str, &'static str> {
        match self {
            Table::Jobs => JOBS,
            Table::Results => RESULTS,
            Table::Provenance => PROVENANCE,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage: {0}")]
    Db(Box<redb::Error>),
    #[error("corrupt record {key}: {source}")]
    Corrupt { key: String, source: serde_json::Error },
    #[error("store schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Version { found: String },
}

macro_rules! db_err {
    ($($t:ty),*) => {$(
        impl From<$t> for StoreError {
            fn from(e: $t) -> Self {
                StoreError::Db(Box::new(e.into()))
            }
        }
    )*};
}
db_err!(
    redb::Error,
    redb::DatabaseError,
    redb::TransactionError,
    redb::TableError,
    redb::StorageError,
    redb::CommitError
);

/// A pending write of several records, committed atomically.
#[derive(Default)]
pub struct WriteBatch {
    puts: Vec<(Table, String, String)>,
}

impl WriteBatch {
    pub fn put<T: Serialize>(&mut self, table: Table, key: &str, value: &T) -> &mut Self {
        let json = serde_json::to_string(value).expect("records serialize");
        self.puts.push((table, key.to_string(), json));
        self
    }
}

pub struct Store {
    db: Database,
}

impl Store {
    pub fn open(path: &Path) -> Result<Store, StoreError> {
        Store::init(Database::create(path)?)
    }

    pub fn in_memory() -> Result<Store, StoreError> {
        Store::init(Database::builder().create_with_backend(InMemoryBackend::new())?)
    }

    fn init(db: Database) -> Result<Store, StoreError> {
        let txn = db.begin_write()?;
        {
            for def in [JOBS, RESULTS, PROVENANCE] {
                txn.open_table(def)?;
            }
            let mut meta = txn.open_table(META)?;
            let found = meta.get("schema_version")?.map(|v| v.value().to_string());
            match found {
                None => {
                    meta.insert("schema_version", SCHEMA_VERSION.to_string().as_str())?;
                }
                Some(v) if v == SCHEMA_VERSION.to_string() => {}
                Some(found) => return Err(StoreError::Version { found }),
            }
        }
        txn.commit()?;
        Ok(Store { db })
    }

    pub fn commit(&self, batch: WriteBatch) -> Result<(), StoreError> {
        let txn = self.db.begin_write()?;
        for (table, key, value) in &batch.puts {
            txn.open_table(table.def())?.insert(key.as_str(), value.as_str())?;
        }
        txn.commit()?;
        Ok(())
    }

    pub fn put<T: Serialize>(&self, table: Table, key: &str, value: &T) -> Result<(), StoreError> {
        let mut batch = WriteBatch::default();
        batch.put(table, key, value);
        self.commit(batch)
    }

    pub fn get<T: DeserializeOwned>(&self, table: Table, key: &str) -> Result<Option<T>, StoreError> {
        let txn = self.db.begin_read()?;
        let t = txn.open_table(table.def())?;
        let raw = t.get(key)?;
        raw.map(|v| decode(key, v.value())).transpose()
    }

    /// Every record of `table` in key order.
    pub fn scan<T: DeserializeOwned>(&self, table: Table) -> Result<Vec<(String, T)>, StoreError> {
        self.range(table, "", None)
    }

    /// Records with `from <= key < to` (unbounded above when `to` is `None`).
    pub fn range<T: DeserializeOwned>(
        &self,
        table: Table,
        from: &str,
        to: Option<&str>,
    ) -> Result<Vec<(String, T)>, StoreError> {
        let txn = self.db.begin_read()?;
        let t = txn.open_table(table.def())?;
        let iter = match to {
            Some(to) => t.range(from..to)?,
            None => t.range(from..)?,
        };
        let mut out = Vec::new();
        for entry in iter {
            let (k, v) = entry?;
            out.push((k.value().to_string(), decode(k.value(), v.value())?));
        }
        Ok(out)
    }
}

fn decode<T: DeserializeOwned>(key: &str, json: &str) -> Result<T, StoreError> {
    serde_json::from_str(json).map_err(|source| StoreError::Corrupt { key: key.to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_commits_atomically_and_ranges_are_ordered() {
        let store = Store::in_memory().unwrap();
        let mut batch = WriteBatch::default();
        batch.put(Table::Jobs, "j1", &1u32).put(Table::Results, "j1", &vec![1, 2]);
        store.commit(batch).unwrap();
        assert_eq!(store.get::<u32>(Table::Jobs, "j1").unwrap(), Some(1));
        assert_eq!(store.get::<Vec<u32>>(Table::Results, "j1").unwrap(), Some(vec![1, 2]));
        assert_eq!(store.get::<u32>(Table::Jobs, "missing").unwrap(), None);
        for k in ["d/3", "d/1", "e/0", "d/2"] {
            store.put(Table::Provenance, k, &k).unwrap();
        }
        let keys: Vec<String> =
            store.range::<String>(Table::Provenance, "d/", Some("d/~")).unwrap().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, ["d/1", "d/2", "d/3"]);
    }

    #[test]
    fn reopening_keeps_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.redb");
        Store::open(&path).unwrap().put(Table::Jobs, "a", &"x").unwrap();
        let store = Store::open(&path).unwrap();
        assert_eq!(store.scan::<String>(Table::Jobs).unwrap(), [("a".to_string(), "x".to_string())]);
    }

    #[test]
    fn corrupt_records_are_reported() {
        let store = Store::in_memory().unwrap();
        store.put(Table::Jobs, "a", &"text").unwrap();
        assert!(matches!(store.get::<u32>(Table::Jobs, "a"), Err(StoreError::Corrupt { .. })));
    }
}
