//! TTL-bounded record-set cache.
//!
//! Entries are whole record-set snapshots keyed by `(root id, owner
//! domain)` and are served strictly before their expiry instant. That a
//! cached set keeps being served after the registry has changed is the
//! intended behaviour: updates propagate at the speed of cache expiry,
//! not in real time.
//!
//! Readers may share a cache across threads; an entry is replaced
//! atomically as a whole, never observed torn.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::clock::Timestamp;
use crate::naptr::RecordSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub value: RecordSet,
    pub expires_at: Timestamp,
}

#[derive(Debug, Default)]
pub struct ResolverCache {
    entries: RwLock<HashMap<(u32, String), CacheEntry>>,
}

impl ResolverCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the cached snapshot if `now` is strictly before the
    /// entry's expiry.
    pub fn get(&self, root_id: u32, domain: &str, now: Timestamp) -> Option<RecordSet> {
        let entries = self.entries.read().expect("cache lock poisoned");
        let entry = entries.get(&(root_id, domain.to_ascii_lowercase()))?;
        (now < entry.expires_at).then(|| entry.value.clone())
    }

    /// Stores a snapshot; it expires `value.ttl_seconds()` after `now`.
    /// A zero TTL therefore caches nothing observable.
    pub fn put(&self, root_id: u32, domain: &str, value: RecordSet, now: Timestamp) {
        let expires_at = now.plus_seconds(value.ttl_seconds() as i64);
        let mut entries = self.entries.write().expect("cache lock poisoned");
        entries.insert(
            (root_id, domain.to_ascii_lowercase()),
            CacheEntry { value, expires_at },
        );
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e164::{to_domain, E164Number};
    use crate::naptr::ere::PlusMode;
    use crate::naptr::{NaptrRecord, RewriteRule};

    fn set(ttl: u64, uri: &str) -> RecordSet {
        let n = E164Number::new("15551230000").unwrap();
        let rule = RewriteRule::new('!', "^.*$", uri, PlusMode::Lenient).unwrap();
        RecordSet::new(
            to_domain(&n, "e164.test"),
            ttl,
            vec![NaptrRecord::new(10, 10, "u", "sip+E2U", rule, ".").unwrap()],
        )
    }

    fn t(secs: i64) -> Timestamp {
        Timestamp::from_unix(secs)
    }

    #[test]
    fn served_strictly_before_expiry() {
        let cache = ResolverCache::new();
        cache.put(1, "0.0.0.0.3.2.1.5.5.5.1.e164.test", set(300, "sip:old@x"), t(-10));
        // Filled at -10 with ttl 300: expires at 290.
        assert!(cache.get(1, "0.0.0.0.3.2.1.5.5.5.1.e164.test", t(289)).is_some());
        assert!(cache.get(1, "0.0.0.0.3.2.1.5.5.5.1.e164.test", t(290)).is_none());
    }

    #[test]
    fn zero_ttl_never_served() {
        let cache = ResolverCache::new();
        cache.put(1, "d", set(0, "sip:x@y"), t(5));
        assert!(cache.get(1, "d", t(5)).is_none());
    }

    #[test]
    fn keys_are_root_scoped_and_case_insensitive() {
        let cache = ResolverCache::new();
        cache.put(36, "D.e164.TEST", set(60, "sip:a@b"), t(0));
        assert!(cache.get(36, "d.e164.test", t(1)).is_some());
        assert!(cache.get(46, "d.e164.test", t(1)).is_none());
    }

    #[test]
    fn whole_entry_replacement() {
        let cache = ResolverCache::new();
        cache.put(1, "d", set(300, "sip:old@x"), t(0));
        cache.put(1, "d", set(300, "sip:new@x"), t(10));
        let got = cache.get(1, "d", t(20)).unwrap();
        assert_eq!(got.records()[0].rule().substitution(), "sip:new@x");
    }
}
