//! enumkit: an E.164-to-DNS toolkit.
//!
//! The crate turns dialed telephone-style strings into reverse-digit
//! domain names, parses and applies NAPTR rewrite records, simulates the
//! three-tier delegated registry that would administer such a namespace
//! (country-code authorization, number delegation, registrant
//! authentication, lifecycle events, disputes, audit log), resolves
//! numbers against one or many roots with TTL-bounded caching, speaks
//! just enough of the DNS wire format to query real NAPTR zones over UDP,
//! and scripts the classic record-tampering attacks against the whole
//! stack.
//!
//! All time is injected ([`clock::Timestamp`]); nothing in the library
//! reads the system clock. With the default `parallel` feature, batch
//! resolution fans out over rayon; without it the same APIs run
//! sequentially.

pub mod clock;
pub mod e164;
pub mod naptr;
pub mod registry;
pub mod resolver;
pub mod seed;
pub mod state;
pub mod threat;
pub mod wire;

pub use clock::Timestamp;
pub use e164::{DialString, E164Number, EnumDomain, NumberClass};
pub use naptr::{ContactUri, NaptrRecord, RecordSet, RewriteRule};
pub use registry::EnumTree;
pub use resolver::{ResolutionResult, ResolveError};
