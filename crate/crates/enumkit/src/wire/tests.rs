use super::*;
use crate::naptr::parse_record_line;
use proptest::prelude::*;
use std::net::UdpSocket;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

/// Golden bytes assembled by hand from the wire format definition:
/// 12-byte header (id 0, RD set, QDCOUNT 1), then the label sequence
/// [1]"1" [4]"e164" [4]"arpa" [0], qtype 35, qclass 1.
const QUERY_1_E164_ARPA: &[u8] = &[
    0x00, 0x00, // id
    0x01, 0x00, // flags: RD
    0x00, 0x01, // QDCOUNT
    0x00, 0x00, // ANCOUNT
    0x00, 0x00, // NSCOUNT
    0x00, 0x00, // ARCOUNT
    0x01, b'1', 0x04, b'e', b'1', b'6', b'4', 0x04, b'a', b'r', b'p', b'a', 0x00,
    0x00, 0x23, // qtype 35 (NAPTR)
    0x00, 0x01, // qclass IN
];

#[test]
fn query_bytes_match_hand_assembled_packet() {
    let bytes = encode_query("1.e164.arpa", 0).unwrap();
    assert_eq!(bytes, QUERY_1_E164_ARPA);
}

#[test]
fn query_rejects_degenerate_names() {
    assert!(matches!(encode_query("", 1), Err(WireError::NameTooLong(_))));
    assert!(matches!(encode_query(".", 1), Err(WireError::NameTooLong(_))));
    let long_label = format!("{}.e164.arpa", "x".repeat(64));
    assert!(matches!(
        encode_query(&long_label, 1),
        Err(WireError::NameTooLong(_))
    ));
    let ok_label = format!("{}.e164.arpa", "x".repeat(63));
    assert!(encode_query(&ok_label, 1).is_ok());
    // 128 single-digit labels push the wire form past 255 bytes.
    let too_many = vec!["1"; 128].join(".");
    assert!(matches!(
        encode_query(&too_many, 1),
        Err(WireError::NameTooLong(_))
    ));
}

#[test]
fn decodes_nxdomain_response() {
    // Hand-built response: id 0x1234 echoed, QR+RD+RA, RCODE 3, the
    // question repeated, no answers — the shape a recursive resolver
    // returns for a missing name.
    let mut bytes = vec![
        0x12, 0x34, // id
        0x81, 0x83, // QR|RD, RA|RCODE=3
        0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    ];
    encode_name("9.9.9.e164.arpa", &mut bytes).unwrap();
    bytes.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
    bytes.extend_from_slice(&QCLASS_IN.to_be_bytes());

    let message = decode_message(&bytes).unwrap();
    assert_eq!(message.id, 0x1234);
    assert!(message.flags.qr);
    assert_eq!(message.flags.rcode, RCODE_NXDOMAIN);
    assert!(message.answers.is_empty());
    assert_eq!(message.question.unwrap().qname, "9.9.9.e164.arpa");
}

#[test]
fn decoded_naptr_matches_master_file_parse() {
    let record =
        parse_record_line(r#"IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" ."#).unwrap();
    let question = Question {
        qname: "2.1.2.1.5.5.5.2.0.2.1.1.e164.foo".into(),
        qtype: QTYPE_NAPTR,
        qclass: QCLASS_IN,
    };
    let bytes = encode_response(
        7,
        &question,
        0,
        &[(question.qname.clone(), 3600, WireNaptr::from_record(&record))],
    )
    .unwrap();

    let message = decode_message(&bytes).unwrap();
    assert_eq!(message.answers.len(), 1);
    let decoded = message.answers[0].naptr.as_ref().unwrap();
    assert_eq!(
        decoded.to_record(crate::naptr::ere::PlusMode::Lenient).unwrap(),
        record
    );
    assert_eq!(decoded.order, 102);
    assert_eq!(decoded.replacement, "");
}

#[test]
fn pointer_cycle_is_an_error() {
    // An answer name that is a pointer to itself.
    let mut bytes = vec![
        0x00, 0x01, 0x80, 0x00, // id, flags QR
        0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, // one answer
    ];
    let pointer_pos = bytes.len() as u16;
    bytes.extend_from_slice(&(0xc000u16 | pointer_pos).to_be_bytes());
    bytes.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
    bytes.extend_from_slice(&QCLASS_IN.to_be_bytes());
    bytes.extend_from_slice(&0u32.to_be_bytes());
    bytes.extend_from_slice(&0u16.to_be_bytes());
    assert!(matches!(
        decode_message(&bytes),
        Err(WireError::CompressionLoop)
    ));
}

#[test]
fn decoder_follows_legitimate_compression() {
    // Question at offset 12; answer name is a pointer back to it.
    let question = Question {
        qname: "1.e164.arpa".into(),
        qtype: QTYPE_NAPTR,
        qclass: QCLASS_IN,
    };
    let mut bytes = vec![
        0x00, 0x02, 0x80, 0x00, // id, QR
        0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,
    ];
    encode_name(&question.qname, &mut bytes).unwrap();
    bytes.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
    bytes.extend_from_slice(&QCLASS_IN.to_be_bytes());
    bytes.extend_from_slice(&0xc00cu16.to_be_bytes()); // pointer to offset 12
    bytes.extend_from_slice(&QTYPE_NAPTR.to_be_bytes());
    bytes.extend_from_slice(&QCLASS_IN.to_be_bytes());
    bytes.extend_from_slice(&60u32.to_be_bytes());
    let record = parse_record_line(r#"IN NAPTR 10 10 "u" "sip+E2U" "!^.*$!sip:a@b!" ."#).unwrap();
    let mut rdata = Vec::new();
    WireNaptr::from_record(&record).encode_rdata(&mut rdata).unwrap();
    bytes.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
    bytes.extend_from_slice(&rdata);

    let message = decode_message(&bytes).unwrap();
    assert_eq!(message.answers[0].name, "1.e164.arpa");
    assert_eq!(
        message.answers[0].naptr.as_ref().unwrap().regexp,
        "!^.*$!sip:a@b!"
    );
}

#[test]
fn tc_bit_surfaces_as_truncation() {
    let mut bytes = encode_query("1.e164.arpa", 9).unwrap();
    bytes[2] |= 0x02; // set TC
    assert!(matches!(
        decode_message(&bytes),
        Err(WireError::TruncatedMessage(_))
    ));
}

#[test]
fn short_messages_error() {
    assert!(matches!(
        decode_message(&[0, 1, 2]),
        Err(WireError::TruncatedMessage(_))
    ));
}

#[test]
fn udp_exchange_against_loopback_responder() {
    let record =
        parse_record_line(r#"IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" ."#).unwrap();
    let mut zones = responder::ZoneMap::new();
    zones.insert(
        "2.1.2.1.5.5.5.2.0.2.1.1.e164.foo".into(),
        (3600, vec![record.clone()]),
    );
    let responder = responder::NaptrResponder::spawn(zones).unwrap();

    let query = encode_query("2.1.2.1.5.5.5.2.0.2.1.1.e164.foo", 0x0042).unwrap();
    let response =
        udp_exchange(&responder.endpoint(), &query, Duration::from_millis(1000), 1).unwrap();
    let message = decode_message(&response).unwrap();
    assert_eq!(message.id, 0x0042);
    assert_eq!(message.flags.rcode, 0);
    assert_eq!(
        message.answers[0]
            .naptr
            .as_ref()
            .unwrap()
            .to_record(crate::naptr::ere::PlusMode::Lenient)
            .unwrap(),
        record
    );

    let missing = encode_query("1.e164.foo", 0x0043).unwrap();
    let response =
        udp_exchange(&responder.endpoint(), &missing, Duration::from_millis(1000), 1).unwrap();
    assert_eq!(decode_message(&response).unwrap().flags.rcode, RCODE_NXDOMAIN);
}

/// A socket that counts datagrams and never answers.
fn silent_counter() -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    socket
        .set_read_timeout(Some(Duration::from_millis(20)))
        .unwrap();
    let endpoint = socket.local_addr().unwrap().to_string();
    let count = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&count);
    let handle = std::thread::spawn(move || {
        let mut buf = [0u8; 512];
        let deadline = std::time::Instant::now() + Duration::from_millis(1500);
        while std::time::Instant::now() < deadline {
            if socket.recv_from(&mut buf).is_ok() {
                counter.fetch_add(1, Ordering::SeqCst);
            }
        }
    });
    (endpoint, count, handle)
}

#[test]
fn timeout_after_bounded_sends() {
    let (endpoint, count, handle) = silent_counter();
    let query = encode_query("1.e164.arpa", 7).unwrap();
    let err = udp_exchange(&endpoint, &query, Duration::from_millis(100), 2).unwrap_err();
    assert!(matches!(err, WireError::Timeout { attempts: 3, .. }), "{err:?}");
    handle.join().unwrap();
    let sends = count.load(Ordering::SeqCst);
    assert!(sends <= 3, "retries 2 must mean at most 3 sends, saw {sends}");
    assert!(sends >= 1);
}

#[test]
fn wrong_id_datagram_is_discarded() {
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let endpoint = socket.local_addr().unwrap().to_string();
    let handle = std::thread::spawn(move || {
        let mut buf = [0u8; 512];
        let (len, peer) = socket.recv_from(&mut buf).unwrap();
        // First a response with a mangled id, then the real one.
        let mut wrong = buf[..len].to_vec();
        wrong[0] ^= 0xff;
        wrong[2] |= 0x80; // QR
        socket.send_to(&wrong, peer).unwrap();
        let mut right = buf[..len].to_vec();
        right[2] |= 0x80;
        socket.send_to(&right, peer).unwrap();
    });
    let query = encode_query("1.e164.arpa", 0x0909).unwrap();
    let response = udp_exchange(&endpoint, &query, Duration::from_millis(1000), 0).unwrap();
    assert_eq!(u16::from_be_bytes([response[0], response[1]]), 0x0909);
    handle.join().unwrap();
}

#[test]
fn only_mismatched_ids_is_its_own_error() {
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let endpoint = socket.local_addr().unwrap().to_string();
    let handle = std::thread::spawn(move || {
        let mut buf = [0u8; 512];
        // Answer every datagram with a wrong-id response.
        socket
            .set_read_timeout(Some(Duration::from_millis(50)))
            .unwrap();
        let deadline = std::time::Instant::now() + Duration::from_millis(800);
        while std::time::Instant::now() < deadline {
            if let Ok((len, peer)) = socket.recv_from(&mut buf) {
                let mut wrong = buf[..len].to_vec();
                wrong[0] ^= 0xff;
                wrong[2] |= 0x80;
                let _ = socket.send_to(&wrong, peer);
            }
        }
    });
    let query = encode_query("1.e164.arpa", 0x0a0a).unwrap();
    let err = udp_exchange(&endpoint, &query, Duration::from_millis(150), 1).unwrap_err();
    assert!(matches!(err, WireError::IdMismatchExhausted { .. }), "{err:?}");
    handle.join().unwrap();
}

fn naptr_strategy() -> impl Strategy<Value = WireNaptr> {
    (
        any::<u16>(),
        any::<u16>(),
        prop_oneof![Just("u".to_string()), Just("U".to_string()), Just(String::new())],
        "[a-z]{1,6}",
        "[a-z0-9]{0,8}",
        "[a-z]{2,5}:[a-z0-9@.+]{1,16}",
        prop_oneof![Just(String::new()), Just("x.e164.arpa".to_string())],
    )
        .prop_map(|(order, preference, flags, app, pattern, subst, replacement)| WireNaptr {
            order,
            preference,
            flags,
            service: format!("{app}+E2U"),
            regexp: format!("!{pattern}!{subst}!"),
            replacement,
        })
}

proptest! {
    #[test]
    fn response_round_trip(
        id in any::<u16>(),
        rcode in 0u8..5,
        answers in proptest::collection::vec(naptr_strategy(), 0..5),
        labels in proptest::collection::vec("[a-z0-9]{1,12}", 1..5),
    ) {
        let qname = labels.join(".");
        let question = Question { qname: qname.clone(), qtype: QTYPE_NAPTR, qclass: QCLASS_IN };
        let wire_answers: Vec<(String, u32, WireNaptr)> = answers
            .iter()
            .map(|a| (qname.clone(), 3600, a.clone()))
            .collect();
        let bytes = encode_response(id, &question, rcode, &wire_answers).unwrap();
        let message = decode_message(&bytes).unwrap();
        prop_assert_eq!(message.id, id);
        prop_assert_eq!(message.flags.rcode, rcode);
        prop_assert_eq!(message.question.unwrap().qname, qname);
        prop_assert_eq!(message.answers.len(), answers.len());
        for (decoded, original) in message.answers.iter().zip(&answers) {
            prop_assert_eq!(decoded.naptr.as_ref().unwrap(), original);
        }
    }

    #[test]
    fn decoder_never_panics_on_mutations(
        seed in proptest::collection::vec(any::<u8>(), 0..64),
        flips in proptest::collection::vec((0usize..96, any::<u8>()), 0..8),
        truncate_to in 0usize..96,
    ) {
        // Start from a valid message, then damage it.
        let record = parse_record_line(r#"IN NAPTR 10 10 "u" "sip+E2U" "!^.*$!sip:a@b!" ."#).unwrap();
        let question = Question { qname: "1.e164.arpa".into(), qtype: QTYPE_NAPTR, qclass: QCLASS_IN };
        let mut bytes = encode_response(1, &question, 0, &[("1.e164.arpa".into(), 60, WireNaptr::from_record(&record))]).unwrap();
        for (pos, value) in flips {
            if pos < bytes.len() {
                bytes[pos] ^= value;
            }
        }
        bytes.truncate(truncate_to.min(bytes.len()));
        bytes.extend_from_slice(&seed);
        let _ = decode_message(&bytes); // must return, never panic
    }
}
