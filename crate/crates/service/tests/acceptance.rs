//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qrscript::bitstream::{decode_ext_uint, encode_ext_uint, BitReader, BitWriter, F16};
use qrscript::codec::{decode_payload, encode_program, measure, DialectId, Payload};
use qrscript::compile_source;
use qrscript::fuzz::{random_program, random_source_ast, render_source, FuzzConfig};
use qrscript::ir::{format_tac, Constant, Operand, Program};
use qrscript::qrio::{payload_to_qr, qr_to_payload, EcLevel, QrConfig, QrError, VersionChoice};
use qrscript::samples::NETWORK_SOURCE;
use qrscript::vm::{Session, SessionEvent, SessionState};
use qrscript_service::{router, ServiceConfig, SessionResponse};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const LISTING: &str = r#"
(1)  input "Which kind of technology has communication problems?"
(2)  if "Ethernet" (6)
(3)  if "Wi-Fi" (15)
(4)  if "WSN" (20)
(5)  goto (25)
(6)  input "Is link status active?"
(7)  if "No" (9)
(8)  goto (10)
(9)  printex "Change Ethernet cable"
(10) inputs "What is the speed in Mbps?"
(11) ifc <= 100 (13)
(12) goto (14)
(13) printex "Change Ethernet cable category"
(14) printex ""
"#;

const TRACES: [&[&str]; 4] = [
    &["Ethernet", "No"],
    &["Ethernet", "Other", "90"],
    &["Ethernet", "Other", "120"],
    &["Other"],
];

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn network() -> Program {
    compile_source(NETWORK_SOURCE).expect("sample compiles")
}

fn normalize(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect()
}

fn direct_trace(program: &Program, answers: &[&str]) -> (Vec<SessionEvent>, usize) {
    let mut s = Session::new(program.clone(), None).expect("valid program");
    let mut events = vec![s.advance().expect("running")];
    for a in answers {
        events.push(s.submit_answer(a).expect("awaiting"));
    }
    (events, s.instructions_executed())
}

fn end_to_end_example() -> Outcome {
    let start = Instant::now();
    let program = network();
    let got = normalize(&format_tac(&program));
    let want = normalize(LISTING);
    let elapsed = start.elapsed();
    ensure!(got.len() >= 14, "only {} instructions", got.len());
    for (g, w) in got.iter().zip(&want) {
        ensure!(g == w, "got `{g}`, expected `{w}`");
    }
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "lines (1)-(14) identical, {} instructions total, {elapsed:?}",
        got.len()
    ))
}

fn interaction_traces() -> Outcome {
    let program = network();
    let first = SessionEvent::PromptChoice {
        message: "Which kind of technology has communication problems?".into(),
        options: vec!["Ethernet".into(), "Wi-Fi".into(), "WSN".into()],
        other: true,
    };
    let link = SessionEvent::PromptChoice {
        message: "Is link status active?".into(),
        options: vec!["No".into()],
        other: true,
    };
    let speed = SessionEvent::PromptText {
        message: "What is the speed in Mbps?".into(),
    };
    let expected = [
        vec![
            first.clone(),
            link.clone(),
            SessionEvent::Output {
                message: "Change Ethernet cable".into(),
                terminal: true,
            },
        ],
        vec![
            first.clone(),
            link.clone(),
            speed.clone(),
            SessionEvent::Output {
                message: "Change Ethernet cable category".into(),
                terminal: true,
            },
        ],
        vec![first.clone(), link, speed, SessionEvent::Terminated],
        vec![first, SessionEvent::Terminated],
    ];
    for (answers, want) in TRACES.iter().zip(&expected) {
        let (got, _) = direct_trace(&program, answers);
        ensure!(&got == want, "{answers:?}: got {got:?}");
    }
    // "Other" runs (1), (2)-(4), the chain-closing (5) goto, then (25).
    let (_, executed) = direct_trace(&program, &["Other"]);
    ensure!(
        executed == 6,
        "\"Other\" executed {executed} instructions, expected 6"
    );
    Ok("4 traces exact; \"Other\" leaves through (5) goto (25)".into())
}

fn codec_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let cfg = FuzzConfig::default();
    let mut total_bytes = 0;
    for n in 0..1000 {
        let p = random_program(&mut rng, &cfg);
        let payload = encode_program(&p, DialectId::DECISION_TREE).map_err(|e| e.to_string())?;
        let (dialect, decoded) = decode_payload(&payload).map_err(|e| format!("#{n}: {e}"))?;
        ensure!(
            dialect == DialectId::DECISION_TREE,
            "#{n}: dialect {dialect:?}"
        );
        ensure!(decoded == p, "#{n}: decoded program differs");
        let bits: String = payload
            .as_bytes()
            .iter()
            .map(|b| format!("{b:08b}"))
            .collect();
        ensure!(bits.len().is_multiple_of(8), "#{n}: {} bits", bits.len());
        let used = 3 + audit_bits(&p);
        ensure!(
            bits.len() == used.div_ceil(8) * 8,
            "#{n}: length {} for {used} used bits",
            bits.len()
        );
        let padding = &bits[used..];
        ensure!("1000000".starts_with(padding), "#{n}: padding `{padding}`");
        total_bytes += payload.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "1000 programs, {total_bytes} payload bytes, {elapsed:?}"
    ))
}

fn ext_uint_oracle() -> Outcome {
    for width in [3u32, 4] {
        let max = (1u64 << width) - 1;
        for n in 0..=10_000u64 {
            let mut oracle = "1".repeat((width as u64 * (n / max)) as usize);
            oracle.push_str(&format!("{:0w$b}", n % max, w = width as usize));
            let mut w = BitWriter::new();
            encode_ext_uint(&mut w, n, width);
            let bits = w.to_bit_string();
            ensure!(bits == oracle, "n={n} w={width}: `{bits}`");
            let formula = width as usize * (n / max + 1) as usize;
            ensure!(
                bits.len() == formula,
                "n={n} w={width}: {} bits",
                bits.len()
            );
            let len = w.len();
            let bytes = w.into_bytes();
            let back = decode_ext_uint(&mut BitReader::with_len(&bytes, len), width)
                .map_err(|e| e.to_string())?;
            ensure!(back == n, "n={n} w={width}: decoded {back}");
        }
    }
    Ok("n in [0, 10000] at widths 3 and 4".into())
}

fn half_float() -> Outcome {
    let mut nans = 0;
    for bits in 0..=u16::MAX {
        let h = F16::from_bits(bits);
        let back = F16::from_f64(h.to_f64()).to_bits();
        if half::f16::from_bits(bits).is_nan() {
            nans += 1;
            ensure!(back == F16::NAN.to_bits(), "{bits:#06x} -> {back:#06x}");
        } else {
            ensure!(back == bits, "{bits:#06x} -> {back:#06x}");
        }
    }
    for v in [0.0f32, 1.0, 3.5, -2.0, 65504.0] {
        let ours = F16::from_f32(v).to_bits();
        let reference = half::f16::from_f32(v).to_bits();
        ensure!(ours == reference, "{v}: {ours:#06x} vs {reference:#06x}");
    }
    Ok(format!(
        "65536 patterns, {nans} NaNs collapse to 0x7e00; 5 named values match"
    ))
}

/// Per-field width count, written independently of the encoder.
fn audit_bits(p: &Program) -> usize {
    let ext = |v: usize| 4 * (v / 15 + 1);
    p.iter()
        .map(|(i, q)| {
            let constant = match &q.constant {
                Some(Constant::Text(s)) => 2 + ext(s.len()) + 7 * s.len(),
                Some(Constant::Reference(n)) => 1 + ext(*n as usize),
                None => 0,
            };
            let rel_op = if q.rel_op.is_some() { 3 } else { 0 };
            let operand = match q.operand {
                Some(Operand::Int(v)) if (-32768..=32767).contains(&v) => 18,
                Some(Operand::Int(_)) => 34,
                Some(Operand::Float(_)) => 17,
                None => 0,
            };
            let jump = q.target.map_or(0, |t| ext(t - i - 1));
            3 + constant + rel_op + operand + jump
        })
        .sum()
}

fn size_report() -> Outcome {
    let p = network();
    let report = measure(&p);
    ensure!(report == measure(&network()), "report not deterministic");
    let code: usize = report.instruction_bits.iter().sum();
    ensure!(
        code == audit_bits(&p),
        "measured {code} bits, audit {}",
        audit_bits(&p)
    );
    ensure!(
        report.padded_bytes == (3 + code).div_ceil(8),
        "{} bytes for {code} bits",
        report.padded_bytes
    );
    let payload = encode_program(&p, DialectId::DECISION_TREE).map_err(|e| e.to_string())?;
    ensure!(
        payload.len() == report.padded_bytes,
        "encoder wrote {} bytes",
        payload.len()
    );
    let head = Program::new(p.instructions()[..14].to_vec());
    let head_bits = audit_bits(&head);
    let head_report = measure(&head);
    ensure!(
        head_report.total_bits - 3 == head_bits,
        "lines (1)-(14): measured {} audit {head_bits}",
        head_report.total_bits - 3
    );
    let chars: usize = head
        .instructions()
        .iter()
        .filter_map(|q| match &q.constant {
            Some(Constant::Text(s)) => Some(s.len()),
            _ => None,
        })
        .sum();
    Ok(format!(
        "lines (1)-(14): {head_bits} bits + 3 header = {} bytes padded ({chars} chars alone need {} bits; listed figure 654 bits/82 bytes not reproducible); full 25-instruction program: {} bits, {} bytes",
        head_report.padded_bytes,
        chars * 7,
        report.total_bits,
        report.padded_bytes
    ))
}

fn qr_carrier() -> Outcome {
    let config = QrConfig {
        version: VersionChoice::Fixed(40),
        ec_level: EcLevel::L,
    };
    let mut rng = StdRng::seed_from_u64(40);
    let payloads: Vec<Payload> = (0..100)
        .map(|i| {
            let len = if i == 0 {
                2953
            } else {
                rng.random_range(1..=2953)
            };
            Payload((0..len).map(|_| rng.random()).collect())
        })
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(8);
    let chunk = payloads.len().div_ceil(workers);
    let failures: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> = payloads
            .chunks(chunk)
            .map(|batch| {
                scope.spawn(move || {
                    batch
                        .iter()
                        .filter_map(|p| {
                            let image = match payload_to_qr(p, &config) {
                                Ok(img) => img,
                                Err(e) => return Some(format!("{} bytes: {e}", p.len())),
                            };
                            match qr_to_payload(&image) {
                                Ok(back) if &back == p => None,
                                Ok(_) => Some(format!("{} bytes: content differs", p.len())),
                                Err(e) => Some(format!("{} bytes: {e}", p.len())),
                            }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker"))
            .collect()
    });
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    match payload_to_qr(&Payload(vec![0; 2954]), &config) {
        Err(QrError::Capacity {
            len: 2954,
            limit: 2953,
            ..
        }) => {}
        other => return Err(format!("2954 bytes: {other:?}")),
    }
    Ok("100 payloads (1..=2953 bytes) byte-exact at 40-L; 2954 bytes rejected".into())
}

fn forward_only() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    let cfg = FuzzConfig::default();
    for n in 0..1000 {
        let ast = random_source_ast(&mut rng, &cfg, 4);
        let p = compile_source(&render_source(&ast)).map_err(|e| format!("#{n}: {e}"))?;
        for (i, q) in p.iter() {
            if let Some(t) = q.target {
                ensure!(t > i, "#{n}: ({i}) jumps to ({t})");
            }
        }
    }
    let answers = ["Yes", "No", "Other", "0", "100", "-1.5", "abc", ""];
    let mut worst = 0;
    let cfg = FuzzConfig {
        ref_ratio: 0.0,
        ..FuzzConfig::default()
    };
    for n in 0..1000 {
        let p = random_program(&mut rng, &cfg);
        let mut s = Session::new(p.clone(), None).map_err(|e| e.to_string())?;
        s.advance().map_err(|e| e.to_string())?;
        let mut mark = 0;
        loop {
            let since = s.instructions_executed() - mark;
            ensure!(
                since <= p.len(),
                "#{n}: {since} steps for {} instructions",
                p.len()
            );
            worst = worst.max(since);
            match s.state() {
                SessionState::Running => {
                    s.advance().map_err(|e| e.to_string())?;
                }
                SessionState::AwaitingChoice | SessionState::AwaitingText => {
                    mark = s.instructions_executed();
                    let a = answers[rng.random_range(0..answers.len())];
                    s.submit_answer(a).map_err(|e| e.to_string())?;
                }
                SessionState::Terminated | SessionState::Failed => break,
            }
        }
    }
    Ok(format!(
        "1000 compilations forward-only; 1000 sessions, at most {worst} steps between answers"
    ))
}

async fn http_trace(
    client: &reqwest::Client,
    base: &str,
    payload_hex: &str,
    answers: &[&str],
) -> Result<Vec<SessionEvent>, String> {
    let created: SessionResponse = client
        .post(format!("{base}/sessions"))
        .json(&serde_json::json!({ "payload_hex": payload_hex }))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .error_for_status()
        .map_err(|e| e.to_string())?
        .json()
        .await
        .map_err(|e| e.to_string())?;
    let mut events = vec![created.event];
    for a in answers {
        let next: SessionResponse = client
            .post(format!("{base}/sessions/{}/answer", created.id))
            .json(&serde_json::json!({ "value": a }))
            .send()
            .await
            .map_err(|e| e.to_string())?
            .error_for_status()
            .map_err(|e| e.to_string())?
            .json()
            .await
            .map_err(|e| e.to_string())?;
        events.push(next.event);
    }
    Ok(events)
}

fn service_transparency() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
            .await
            .map_err(|e| e.to_string())?;
        let base = format!(
            "http://{}",
            listener.local_addr().map_err(|e| e.to_string())?
        );
        let app = router(ServiceConfig::default());
        let server = tokio::spawn(async move { axum::serve(listener, app).await });
        let client = reqwest::Client::builder()
            .no_proxy()
            .build()
            .map_err(|e| e.to_string())?;

        let program = network();
        let payload =
            encode_program(&program, DialectId::DECISION_TREE).map_err(|e| e.to_string())?;
        let payload_hex = hex::encode(payload.as_bytes());
        for answers in TRACES {
            let (direct, _) = direct_trace(&program, answers);
            let over_http = http_trace(&client, &base, &payload_hex, answers).await?;
            ensure!(
                direct == over_http,
                "{answers:?}: {over_http:?} != {direct:?}"
            );
        }

        // The same traces, many at once.
        let mut tasks = Vec::new();
        for round in 0..8 {
            for answers in TRACES {
                let (client, base, hex) = (client.clone(), base.clone(), payload_hex.clone());
                tasks.push(tokio::spawn(async move {
                    (
                        round,
                        answers,
                        http_trace(&client, &base, &hex, answers).await,
                    )
                }));
            }
        }
        for task in tasks {
            let (round, answers, got) = task.await.map_err(|e| e.to_string())?;
            let (direct, _) = direct_trace(&program, answers);
            ensure!(
                got? == direct,
                "concurrent round {round} {answers:?} diverged"
            );
        }
        server.abort();
        Ok(
            "4 traces identical over HTTP, and across 32 concurrent sessions; no web UI involved"
                .into(),
        )
    })
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("end-to-end example listing", end_to_end_example),
        ("interaction traces", interaction_traces),
        ("codec round-trip", codec_round_trip),
        ("extensible-integer oracle", ext_uint_oracle),
        ("half-float conversion", half_float),
        ("size report", size_report),
        ("QR carrier", qr_carrier),
        ("forward-only guarantee", forward_only),
        ("service transparency", service_transparency),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.2}s): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.2}s): {reason}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
