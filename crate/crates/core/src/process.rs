//! Child-process execution with a wall-clock limit and bounded output capture.

use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub wall_time: Duration,
    /// Bytes kept per output stream; the remainder is drained and dropped.
    pub output_cap: usize,
    /// `RLIMIT_AS` in bytes. Must stay unset for sanitizer builds, which
    /// reserve terabytes of shadow memory.
    pub address_space: Option<u64>,
}

#[derive(Debug)]
pub struct Captured {
    /// `None` when the child was killed for exceeding the wall-time limit.
    pub status: Option<ExitStatus>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub stdout_truncated: bool,
    pub duration: Duration,
}

impl Captured {
    pub fn timed_out(&self) -> bool {
        self.status.is_none()
    }
}

fn read_capped<R: Read>(mut r: R, cap: usize) -> (Vec<u8>, bool) {
    let mut kept = Vec::new();
    let mut buf = [0u8; 8192];
    let mut truncated = false;
    loop {
        match r.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => {
                let room = cap.saturating_sub(kept.len());
                if n > room {
                    truncated = true;
                }
                kept.extend_from_slice(&buf[..n.min(room)]);
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    (kept, truncated)
}

/// Runs `cmd` in its own process group, feeding `stdin` and killing the whole
/// group once `limits.wall_time` elapses.
pub fn run(mut cmd: Command, stdin: &[u8], limits: &Limits) -> io::Result<Captured> {
    let address_space = limits.address_space;
    cmd.stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    // SAFETY: only async-signal-safe libc calls between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            if libc::setpgid(0, 0) != 0 {
                return Err(io::Error::last_os_error());
            }
            let no_core = libc::rlimit {
                rlim_cur: 0,
                rlim_max: 0,
            };
            libc::setrlimit(libc::RLIMIT_CORE, &no_core);
            if let Some(bytes) = address_space {
                let lim = libc::rlimit {
                    rlim_cur: bytes as libc::rlim_t,
                    rlim_max: bytes as libc::rlim_t,
                };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(io::Error::last_os_error());
                }
            }
            Ok(())
        });
    }

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;

    let mut child_stdin = child.stdin.take().expect("stdin piped");
    let input = stdin.to_vec();
    let writer = thread::spawn(move || {
        // the child may exit without reading; a broken pipe is expected then
        let _ = child_stdin.write_all(&input);
    });
    let cap = limits.output_cap;
    let out = child.stdout.take().expect("stdout piped");
    let err = child.stderr.take().expect("stderr piped");
    let out_reader = thread::spawn(move || read_capped(out, cap));
    let err_reader = thread::spawn(move || read_capped(err, cap));

    let status = match child.wait_timeout(limits.wall_time)? {
        Some(status) => Some(status),
        None => {
            // SAFETY: plain syscall on the group we created above
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    // stragglers in the group would otherwise keep the pipes open
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
    let duration = start.elapsed();

    let _ = writer.join();
    let (stdout, stdout_truncated) = out_reader.join().unwrap_or_default();
    let (stderr, _) = err_reader.join().unwrap_or_default();
    Ok(Captured {
        status,
        stdout,
        stderr,
        stdout_truncated,
        duration,
    })
}
