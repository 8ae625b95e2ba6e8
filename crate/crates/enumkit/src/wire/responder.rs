//! A loopback NAPTR responder.
//!
//! Serves record sets over UDP so the stub-resolver path (and the `dig`
//! command) can be exercised end to end without external infrastructure.
//! One thread, one socket; answers authoritatively for the zones it was
//! given and NXDOMAIN for everything else.

use std::collections::BTreeMap;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::{decode_message, encode_response, Question, WireNaptr, RCODE_NXDOMAIN};
use crate::naptr::NaptrRecord;
use crate::registry::EnumTree;

/// Zone data: owner domain (lowercase) to TTL and records.
pub type ZoneMap = BTreeMap<String, (u32, Vec<NaptrRecord>)>;

pub struct NaptrResponder {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl NaptrResponder {
    pub fn spawn(zones: ZoneMap) -> std::io::Result<Self> {
        let socket = UdpSocket::bind("127.0.0.1:0")?;
        socket.set_read_timeout(Some(Duration::from_millis(50)))?;
        let addr = socket.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let stop = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || serve(socket, zones, stop));
        Ok(NaptrResponder {
            addr,
            shutdown,
            handle: Some(handle),
        })
    }

    /// Serves every live registration of a tree.
    pub fn from_tree(tree: &EnumTree) -> std::io::Result<Self> {
        let mut zones = ZoneMap::new();
        for zone in tree.tier2_zones() {
            for (_, registration) in zone.registrations() {
                if registration.quarantined_until.is_some() {
                    continue;
                }
                let set = &registration.record_set;
                zones.insert(
                    set.owner().to_string(),
                    (set.ttl_seconds() as u32, set.records().to_vec()),
                );
            }
        }
        Self::spawn(zones)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        self.addr.to_string()
    }
}

impl Drop for NaptrResponder {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(socket: UdpSocket, zones: ZoneMap, shutdown: Arc<AtomicBool>) {
    let mut buf = [0u8; super::MAX_UDP_RECV];
    while !shutdown.load(Ordering::SeqCst) {
        let (len, peer) = match socket.recv_from(&mut buf) {
            Ok(received) => received,
            Err(err)
                if matches!(
                    err.kind(),
                    std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                ) =>
            {
                continue;
            }
            Err(_) => break,
        };
        let Ok(query) = decode_message(&buf[..len]) else {
            continue; // garbage in, nothing out
        };
        let Some(question) = query.question else {
            continue;
        };
        let response = answer(&question, query.id, &zones);
        if let Ok(bytes) = response {
            let _ = socket.send_to(&bytes, peer);
        }
    }
}

fn answer(
    question: &Question,
    id: u16,
    zones: &ZoneMap,
) -> Result<Vec<u8>, super::WireError> {
    let key = question.qname.trim_end_matches('.').to_ascii_lowercase();
    match zones.get(&key) {
        Some((ttl, records)) => {
            let answers: Vec<(String, u32, WireNaptr)> = records
                .iter()
                .map(|r| (question.qname.clone(), *ttl, WireNaptr::from_record(r)))
                .collect();
            encode_response(id, question, 0, &answers)
        }
        None => encode_response(id, question, RCODE_NXDOMAIN, &[]),
    }
}
