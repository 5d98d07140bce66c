use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use crate::error::{Error, Result};

use super::protocol::{ScoreRequest, ScoreResponse};
use super::Connection;

/// A child process reading requests on stdin and answering on stdout. Its
/// stderr is inherited so diagnostics reach the terminal.
pub(crate) struct SubprocessConnection {
    name: String,
    timeout: Duration,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl SubprocessConnection {
    pub(crate) fn spawn(name: &str, command_line: &str, timeout: Duration) -> Result<Self> {
        let transport = |message: String| Error::Transport {
            scorer: name.to_string(),
            message,
        };
        let argv = shlex::split(command_line)
            .filter(|argv| !argv.is_empty())
            .ok_or_else(|| transport(format!("cannot parse command line {command_line:?}")))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| transport(format!("cannot start {:?}: {e}", argv[0])))?;

        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        std::thread::Builder::new()
            .name(format!("scorer-{name}-stdout"))
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let failed = line.is_err();
                    if tx.send(line).is_err() || failed {
                        break;
                    }
                }
            })
            .map_err(|e| transport(format!("cannot start reader thread: {e}")))?;

        Ok(SubprocessConnection {
            name: name.to_string(),
            timeout,
            child,
            stdin,
            lines,
        })
    }

    fn transport(&self, message: impl Into<String>) -> Error {
        Error::Transport {
            scorer: self.name.clone(),
            message: message.into(),
        }
    }

    fn exit_description(&mut self) -> String {
        match self.child.try_wait() {
            Ok(Some(status)) => format!("scorer process exited ({status})"),
            _ => "scorer process closed its output".to_string(),
        }
    }
}

impl Connection for SubprocessConnection {
    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        let payload: String = requests.iter().map(ScoreRequest::to_line).collect();
        let written = match self.stdin.as_mut() {
            Some(stdin) => stdin
                .write_all(payload.as_bytes())
                .and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if let Err(e) = written {
            let exit = self.exit_description();
            return Err(self.transport(format!("cannot write requests: {e}; {exit}")));
        }

        let mut responses = Vec::with_capacity(requests.len());
        while responses.len() < requests.len() {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(self.transport(format!("cannot read response: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::Timeout {
                        scorer: self.name.clone(),
                        timeout: self.timeout,
                    })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let exit = self.exit_description();
                    return Err(self.transport(format!(
                        "{exit} after {} of {} responses",
                        responses.len(),
                        requests.len()
                    )));
                }
            };
            let response = ScoreResponse::parse_line(&line).map_err(|message| Error::Protocol {
                scorer: self.name.clone(),
                message: format!("{message} in line {line:?}"),
            })?;
            responses.push(response);
        }
        Ok(responses)
    }
}

impl Drop for SubprocessConnection {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved scorer exit on EOF.
        drop(self.stdin.take());
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
