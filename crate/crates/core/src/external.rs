//! Batch protocol for external model executables.
//!
//! One process is spawned per batch. The batch is written to the child's
//! standard input as CSV: a header `x1,...,xN` followed by one row per
//! sample. The child must print one decimal output value per line to its
//! standard output, in input order. A nonzero exit status, malformed line,
//! or count mismatch is an error; an optional per-batch timeout kills the
//! child.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::ModelEvaluator;

pub struct CommandEvaluator {
    argv: Vec<String>,
    /// Samples per spawned process; 0 sends everything to a single process.
    batch_size: usize,
    timeout: Option<Duration>,
}

impl CommandEvaluator {
    pub fn new(argv: Vec<String>, batch_size: usize, timeout_seconds: Option<f64>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::InvalidArgument("external command is empty".into()));
        }
        let timeout = match timeout_seconds {
            None => None,
            Some(s) if s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => {
                return Err(Error::InvalidArgument(format!(
                    "timeout must be positive, got {s}"
                )))
            }
        };
        Ok(CommandEvaluator {
            argv,
            batch_size,
            timeout,
        })
    }

    fn run_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| Error::Spawn {
                command: self.argv.join(" "),
                source,
            })?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");

        let payload = {
            let n = points.ncols();
            let mut text = String::new();
            let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            text.push_str(&header.join(","));
            text.push('\n');
            for l in 0..points.nrows() {
                for d in 0..n {
                    if d > 0 {
                        text.push(',');
                    }
                    text.push_str(&format!("{}", points[(l, d)]));
                }
                text.push('\n');
            }
            text
        };

        // Writer and stderr-drain threads keep the pipes from deadlocking
        // while this thread consumes stdout.
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(payload.as_bytes());
            drop(stdin);
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let timed_out = Arc::new(AtomicBool::new(false));
        let child_slot = Arc::new(Mutex::new(Some(child)));
        let watchdog = self.timeout.map(|timeout| {
            let slot = Arc::clone(&child_slot);
            let flag = Arc::clone(&timed_out);
            std::thread::spawn(move || {
                std::thread::sleep(timeout);
                if let Some(child) = slot.lock().unwrap().as_mut() {
                    flag.store(true, Ordering::SeqCst);
                    let _ = child.kill();
                }
            })
        });

        let mut output = String::new();
        let read_result = stdout.read_to_string(&mut output);
        let status = {
            let mut slot = child_slot.lock().unwrap();
            let mut child: Child = slot.take().expect("child present");
            child.wait()
        };
        // The watchdog holds only the now-empty slot; let it finish on its own.
        drop(watchdog);

        let _ = writer.join();
        let stderr_text = err_reader.join().unwrap_or_default();

        if timed_out.load(Ordering::SeqCst) {
            return Err(Error::ExternalTimeout {
                seconds: self.timeout.expect("timeout configured").as_secs_f64(),
            });
        }
        read_result.map_err(|source| Error::Io {
            path: format!("stdout of {}", self.argv[0]),
            source,
        })?;
        let status = status.map_err(|source| Error::Io {
            path: format!("wait on {}", self.argv[0]),
            source,
        })?;
        if !status.success() {
            return Err(Error::ExternalExit {
                code: status.code(),
                stderr: stderr_text.trim().to_string(),
            });
        }

        let mut values = Vec::with_capacity(points.nrows());
        for (i, line) in output.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let value: f64 = trimmed.parse().map_err(|_| Error::MalformedOutput {
                line: i + 1,
                content: line.to_string(),
            })?;
            values.push(value);
        }
        if values.len() != points.nrows() {
            return Err(Error::CountMismatch {
                expected: points.nrows(),
                actual: values.len(),
            });
        }
        Ok(values)
    }
}

impl ModelEvaluator for CommandEvaluator {
    fn name(&self) -> String {
        format!("command:{}", self.argv.join(" "))
    }

    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        let total = points.nrows();
        let shard = if self.batch_size == 0 {
            total
        } else {
            self.batch_size
        };
        let mut values = Vec::with_capacity(total);
        let mut start = 0;
        while start < total {
            let rows = shard.min(total - start);
            let block = points.rows(start, rows).into_owned();
            values.extend(self.run_batch(&block)?);
            start += rows;
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn python_model(body: &str) -> CommandEvaluator {
        CommandEvaluator::new(
            vec!["python3".into(), "-c".into(), body.into()],
            0,
            Some(30.0),
        )
        .unwrap()
    }

    const ECHO_FIRST_COLUMN: &str = "
import sys
rows = sys.stdin.read().strip().splitlines()[1:]
for row in rows:
    print(row.split(',')[0])
";

    #[test]
    fn echo_command_returns_the_first_column() {
        let model = python_model(ECHO_FIRST_COLUMN);
        let pts = DMatrix::from_row_slice(3, 2, &[1.5, 9.0, -2.25, 8.0, 0.125, 7.0]);
        let got = model.evaluate_batch(&pts).unwrap();
        assert_eq!(got, vec![1.5, -2.25, 0.125]);
    }

    #[test]
    fn sharded_batches_preserve_order() {
        let model = CommandEvaluator::new(
            vec!["python3".into(), "-c".into(), ECHO_FIRST_COLUMN.into()],
            2,
            Some(30.0),
        )
        .unwrap();
        let pts = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let got = model.evaluate_batch(&pts).unwrap();
        assert_eq!(got, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn short_output_is_a_count_mismatch() {
        let model = python_model(
            "
import sys
rows = sys.stdin.read().strip().splitlines()[1:]
for row in rows[:-1]:
    print(row.split(',')[0])
",
        );
        let pts = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        match model.evaluate_batch(&pts).unwrap_err() {
            Error::CountMismatch { expected, actual } => {
                assert_eq!(expected, 4);
                assert_eq!(actual, 3);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn nonzero_exit_carries_code_and_stderr() {
        let model = python_model(
            "
import sys
sys.stderr.write('boom\\n')
sys.exit(3)
",
        );
        let pts = DMatrix::from_column_slice(1, 1, &[1.0]);
        match model.evaluate_batch(&pts).unwrap_err() {
            Error::ExternalExit { code, stderr } => {
                assert_eq!(code, Some(3));
                assert!(stderr.contains("boom"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn garbage_line_reports_its_number() {
        let model = python_model(
            "
import sys
rows = sys.stdin.read().strip().splitlines()[1:]
print(1.0)
print('not-a-number')
",
        );
        let pts = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        match model.evaluate_batch(&pts).unwrap_err() {
            Error::MalformedOutput { line, content } => {
                assert_eq!(line, 2);
                assert!(content.contains("not-a-number"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn timeout_kills_a_hung_model() {
        let model = CommandEvaluator::new(
            vec![
                "python3".into(),
                "-c".into(),
                "import time\ntime.sleep(600)".into(),
            ],
            0,
            Some(0.5),
        )
        .unwrap();
        let pts = DMatrix::from_column_slice(1, 1, &[1.0]);
        match model.evaluate_batch(&pts).unwrap_err() {
            Error::ExternalTimeout { .. } => {}
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_binary_is_a_spawn_error() {
        let model =
            CommandEvaluator::new(vec!["no-such-binary-zzz".into()], 0, None).unwrap();
        let pts = DMatrix::from_column_slice(1, 1, &[1.0]);
        assert!(matches!(
            model.evaluate_batch(&pts).unwrap_err(),
            Error::Spawn { .. }
        ));
    }
}
