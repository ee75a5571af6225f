//! Append-only JSON-lines files. Each record is one line; an append returns
//! only after the line and its newline are flushed to disk.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt record: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("record does not serialize: {0}")]
    Encode(serde_json::Error),
}

#[derive(Debug)]
pub struct JsonLog<T> {
    path: PathBuf,
    file: File,
    len_bytes: u64,
    records: usize,
    _record: PhantomData<fn(T)>,
}

/// The result of opening a log: the handle, every intact record in file
/// order, and how many trailing bytes were cut off.
#[derive(Debug)]
pub struct Opened<T> {
    pub log: JsonLog<T>,
    pub records: Vec<T>,
    pub truncated_bytes: u64,
}

impl<T: Serialize + DeserializeOwned> JsonLog<T> {
    /// Opens or creates the log and replays it. A damaged last line (a torn
    /// write) is cut off with a warning; damage anywhere else is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Opened<T>, LogError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| LogError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;

        let mut records = Vec::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        let mut line_no = 0usize;
        while offset < bytes.len() {
            line_no += 1;
            let (end, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
                Some(i) => (offset + i, true),
                None => (bytes.len(), false),
            };
            let line = &bytes[offset..end];
            let next = if terminated { end + 1 } else { end };
            let is_last = next >= bytes.len();
            if line.iter().all(u8::is_ascii_whitespace) {
                offset = next;
                if terminated {
                    good_len = next;
                }
                continue;
            }
            match serde_json::from_slice::<T>(line) {
                Ok(record) if terminated => {
                    records.push(record);
                    good_len = next;
                }
                // An unterminated line was never acknowledged.
                Ok(_) => break,
                Err(_) if is_last => break,
                Err(source) => {
                    return Err(LogError::Corrupt {
                        path,
                        line: line_no,
                        source,
                    })
                }
            }
            offset = next;
        }

        let truncated_bytes = (bytes.len() - good_len) as u64;
        if truncated_bytes > 0 {
            tracing::warn!(path = %path.display(), truncated_bytes, "dropping incomplete trailing record");
            file.set_len(good_len as u64).map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        let records_len = records.len();
        Ok(Opened {
            log: JsonLog {
                path,
                file,
                len_bytes: good_len as u64,
                records: records_len,
                _record: PhantomData,
            },
            records,
            truncated_bytes,
        })
    }

    /// Writes one record durably. On failure the file is cut back to its
    /// previous length so no partial line stays behind.
    pub fn append(&mut self, record: &T) -> Result<(), LogError> {
        let mut line = serde_json::to_vec(record).map_err(LogError::Encode)?;
        line.push(b'\n');
        let result = self
            .file
            .write_all(&line)
            .and_then(|()| self.file.sync_data());
        if let Err(source) = result {
            let _ = self.file.set_len(self.len_bytes);
            return Err(LogError::Io {
                path: self.path.clone(),
                source,
            });
        }
        self.len_bytes += line.len() as u64;
        self.records += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        n: u32,
    }

    fn tmp() -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        (dir, path)
    }

    #[test]
    fn append_then_reopen() {
        let (_dir, path) = tmp();
        let mut opened = JsonLog::<Rec>::open(&path).unwrap();
        assert!(opened.records.is_empty());
        for n in 0..5 {
            opened.log.append(&Rec { n }).unwrap();
        }
        assert_eq!(opened.log.len(), 5);
        drop(opened);
        let again = JsonLog::<Rec>::open(&path).unwrap();
        assert_eq!(again.records, (0..5).map(|n| Rec { n }).collect::<Vec<_>>());
        assert_eq!(again.truncated_bytes, 0);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 5);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let (_dir, path) = tmp();
        std::fs::write(&path, "{\"n\":1}\n{\"n\":2}\n{\"n\":").unwrap();
        let mut opened = JsonLog::<Rec>::open(&path).unwrap();
        assert_eq!(opened.records, vec![Rec { n: 1 }, Rec { n: 2 }]);
        assert_eq!(opened.truncated_bytes, 5);
        opened.log.append(&Rec { n: 3 }).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "{\"n\":1}\n{\"n\":2}\n{\"n\":3}\n"
        );
    }

    #[test]
    fn unterminated_but_valid_tail_is_dropped() {
        let (_dir, path) = tmp();
        std::fs::write(&path, "{\"n\":1}\n{\"n\":2}").unwrap();
        let opened = JsonLog::<Rec>::open(&path).unwrap();
        assert_eq!(opened.records, vec![Rec { n: 1 }]);
    }

    #[test]
    fn garbage_last_line_is_dropped() {
        let (_dir, path) = tmp();
        std::fs::write(&path, "{\"n\":1}\nnot json\n").unwrap();
        let opened = JsonLog::<Rec>::open(&path).unwrap();
        assert_eq!(opened.records, vec![Rec { n: 1 }]);
        assert_eq!(opened.truncated_bytes, 9);
    }

    #[test]
    fn damage_in_the_middle_is_an_error() {
        let (_dir, path) = tmp();
        std::fs::write(&path, "{\"n\":1}\nnot json\n{\"n\":3}\n").unwrap();
        assert!(matches!(
            JsonLog::<Rec>::open(&path),
            Err(LogError::Corrupt { line: 2, .. })
        ));
    }
}
