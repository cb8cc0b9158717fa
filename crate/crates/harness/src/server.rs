//! TCP transport for the session service: one thread per connection,
//! one JSON message per line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;

use crate::protocol::{codes, types, Envelope, ErrorPayload};
use crate::session::SessionManager;
use crate::HarnessError;

pub fn bind(addr: impl ToSocketAddrs + std::fmt::Display) -> Result<TcpListener, HarnessError> {
    TcpListener::bind(&addr).map_err(|e| HarnessError::Service(format!("cannot bind {addr}: {e}")))
}

/// Accept connections until the listener fails.
pub fn serve(listener: TcpListener, manager: Arc<SessionManager>) -> Result<(), HarnessError> {
    for stream in listener.incoming() {
        let stream = stream.map_err(|e| HarnessError::Service(e.to_string()))?;
        let manager = manager.clone();
        thread::spawn(move || {
            let _ = connection(stream, &manager);
        });
    }
    Ok(())
}

fn connection(stream: TcpStream, manager: &SessionManager) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = catch_unwind(AssertUnwindSafe(|| manager.handle_line(&line)));
        let (messages, close) = match reply {
            Ok(r) => (r.messages, r.close_connection),
            Err(_) => {
                let payload = ErrorPayload { code: codes::ENGINE_ERROR.into(), detail: "internal error".into() };
                (vec![Envelope::new(types::ERROR, None, 0, payload)], true)
            }
        };
        let mut buf = String::new();
        for m in &messages {
            buf.push_str(&m.to_line());
        }
        writer.write_all(buf.as_bytes())?;
        writer.flush()?;
        if close {
            break;
        }
    }
    Ok(())
}
