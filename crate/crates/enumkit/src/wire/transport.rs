//! UDP exchange with id filtering and retries.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::{Duration, Instant};

use super::{WireError, MAX_UDP_RECV, MAX_UDP_SEND};

/// Sends a query and waits for a response whose id matches. Datagrams
/// with the wrong id are discarded and the wait continues; each of the
/// `retries + 1` attempts re-sends and waits up to `timeout`.
pub fn udp_exchange(
    endpoint: &str,
    query: &[u8],
    timeout: Duration,
    retries: u32,
) -> Result<Vec<u8>, WireError> {
    if query.len() > MAX_UDP_SEND {
        return Err(WireError::MessageTooLarge { limit: MAX_UDP_SEND });
    }
    if query.len() < 12 {
        return Err(WireError::TruncatedMessage(
            "query shorter than a DNS header".into(),
        ));
    }
    let want_id = u16::from_be_bytes([query[0], query[1]]);
    let target: SocketAddr = endpoint
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| WireError::Io(std::io::Error::other(format!("cannot resolve {endpoint}"))))?;
    let bind_addr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" };
    let socket = UdpSocket::bind(bind_addr)?;
    socket.connect(target)?;

    let attempts = retries + 1;
    let mut saw_mismatch = false;
    let mut buf = vec![0u8; MAX_UDP_RECV];
    for _ in 0..attempts {
        socket.send(query)?;
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                break;
            }
            socket.set_read_timeout(Some(remaining))?;
            match socket.recv(&mut buf) {
                Ok(len) => {
                    if len >= 2 && u16::from_be_bytes([buf[0], buf[1]]) == want_id {
                        return Ok(buf[..len].to_vec());
                    }
                    saw_mismatch = true;
                }
                Err(err)
                    if matches!(
                        err.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    break;
                }
                Err(err) => return Err(WireError::Io(err)),
            }
        }
    }
    if saw_mismatch {
        Err(WireError::IdMismatchExhausted {
            endpoint: endpoint.to_string(),
        })
    } else {
        Err(WireError::Timeout {
            endpoint: endpoint.to_string(),
            attempts,
        })
    }
}
