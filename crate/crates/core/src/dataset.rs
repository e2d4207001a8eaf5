//! On-disk frame datasets: `frames.jsonl` with one record per line, a
//! `<frame_id>.pgm` depth sidecar per frame, and optionally
//! `ground_truth.jsonl` from the simulator.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::perception::{encode_frame, CodecError, FrameRecord, PerceptionFrame, read_pgm};
use crate::sim::GroundTruth;

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Codec {
        path: PathBuf,
        line: usize,
        #[source]
        source: CodecError,
    },
    #[error("{path} line {line}: {message}")]
    GroundTruth {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes frames (and ground truth where given) into `dir`, creating it.
pub fn write_dataset<I>(dir: &Path, frames: I) -> Result<usize, DatasetError>
where
    I: IntoIterator<Item = (PerceptionFrame, Option<GroundTruth>)>,
{
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let frames_path = dir.join(FRAMES_FILE);
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let mut records = BufWriter::new(File::create(&frames_path).map_err(io_err(&frames_path))?);
    let mut truth: Option<BufWriter<File>> = None;
    let mut count = 0;
    for (frame, gt) in frames {
        let enc = encode_frame(&frame);
        records.write_all(&enc.record).map_err(io_err(&frames_path))?;
        records.write_all(b"\n").map_err(io_err(&frames_path))?;
        let pgm = dir.join(frame.depth_file_name());
        std::fs::write(&pgm, &enc.sidecar).map_err(io_err(&pgm))?;
        if let Some(gt) = gt {
            if truth.is_none() {
                truth = Some(BufWriter::new(File::create(&gt_path).map_err(io_err(&gt_path))?));
            }
            let w = truth.as_mut().expect("just opened");
            let line = serde_json::to_string(&gt).expect("ground truth serializes");
            writeln!(w, "{line}").map_err(io_err(&gt_path))?;
        }
        count += 1;
    }
    records.flush().map_err(io_err(&frames_path))?;
    if let Some(mut w) = truth {
        w.flush().map_err(io_err(&gt_path))?;
    }
    Ok(count)
}

/// Streams frames from a dataset directory in file order. Blank lines are
/// skipped.
pub struct FrameReader {
    dir: PathBuf,
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line: usize,
}

impl FrameReader {
    pub fn open(dir: &Path) -> Result<Self, DatasetError> {
        let path = dir.join(FRAMES_FILE);
        let file = File::open(&path).map_err(io_err(&path))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            path,
            lines: BufReader::new(file).lines(),
            line: 0,
        })
    }

    fn decode(&self, text: &str) -> Result<PerceptionFrame, DatasetError> {
        let codec = |source| DatasetError::Codec {
            path: self.path.clone(),
            line: self.line,
            source,
        };
        let record = FrameRecord::parse(text.as_bytes()).map_err(codec)?;
        // never follow a path out of the dataset directory
        let name = Path::new(&record.depth_file);
        if name.components().count() != 1 {
            return Err(codec(CodecError::Field {
                field: "depth_file".into(),
                message: format!("{:?} is not a plain file name", record.depth_file),
            }));
        }
        let sidecar_path = self.dir.join(name);
        let bytes = std::fs::read(&sidecar_path).map_err(io_err(&sidecar_path))?;
        let depth = read_pgm(&bytes).map_err(codec)?;
        record.into_frame(depth).map_err(codec)
    }
}

impl Iterator for FrameReader {
    type Item = Result<PerceptionFrame, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line += 1;
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(io_err(&self.path)(e))),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(self.decode(&text));
        }
    }
}

pub fn read_ground_truth(dir: &Path) -> Result<Vec<GroundTruth>, DatasetError> {
    let path = dir.join(GROUND_TRUTH_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::GroundTruth {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
