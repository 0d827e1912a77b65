//! The `ADV1` attention dump container.
//!
//! A dump file is a concatenation of self-delimiting example frames:
//!
//! ```text
//! magic      4 bytes   "ADV1"
//! meta_len   u32 LE    byte length of the metadata document
//! meta       UTF-8 JSON (DumpMetadata)
//! prefill    if has_prefill: for i in 1..=P, for l, for h: f32 LE x i
//! generated  for t in 0..G, for l, for h: f32 LE x (P + t)
//! ```
//!
//! Payload sizes follow from the metadata, so every row's offset is computable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::divergence::{AttentionRow, RowKind};
use crate::error::{io_at, Error, Result, RowLocation};

pub const MAGIC: &[u8; 4] = b"ADV1";
pub const SCHEMA_VERSION: u32 = 1;

/// Coarse semantic class of a generated word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordClass {
    Entity,
    Number,
    Stopword,
    Punctuation,
    Other,
}

impl WordClass {
    pub const ALL: [WordClass; 5] = [
        WordClass::Entity,
        WordClass::Number,
        WordClass::Stopword,
        WordClass::Punctuation,
        WordClass::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            WordClass::Entity => "entity",
            WordClass::Number => "number",
            WordClass::Stopword => "stopword",
            WordClass::Punctuation => "punctuation",
            WordClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpMetadata {
    pub schema_version: u32,
    pub model_name: String,
    pub dataset_name: String,
    pub example_id: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub prompt_len: usize,
    pub gen_len: usize,
    pub has_prefill: bool,
    /// 1 = correct answer, 0 = incorrect.
    pub label: Option<u8>,
    pub prompt_char_len: usize,
    pub raw_output_char_len: usize,
    pub ends_with_punctuation: bool,
    pub digit_count: usize,
    /// Word index of each generated token.
    pub word_ids: Option<Vec<u32>>,
    pub word_classes: Option<BTreeMap<u32, WordClass>>,
}

impl DumpMetadata {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.num_layers == 0 || self.num_heads == 0 || self.gen_len == 0 || self.prompt_len == 0 {
            return Err(Error::Validation(format!(
                "example {}: num_layers, num_heads, prompt_len and gen_len must all be >= 1",
                self.example_id
            )));
        }
        if let Some(label) = self.label {
            if label > 1 {
                return Err(Error::Validation(format!(
                    "example {}: label must be 0 or 1, got {label}",
                    self.example_id
                )));
            }
        }
        if let Some(ids) = &self.word_ids {
            if ids.len() != self.gen_len {
                return Err(Error::Validation(format!(
                    "example {}: {} word ids for {} generated tokens",
                    self.example_id,
                    ids.len(),
                    self.gen_len
                )));
            }
            if ids.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Validation(format!(
                    "example {}: word ids must be nondecreasing",
                    self.example_id
                )));
            }
        }
        Ok(())
    }

    fn heads(&self) -> usize {
        self.num_layers * self.num_heads
    }

    /// Number of f32 values in the prefill block.
    pub fn prefill_values(&self) -> usize {
        if self.has_prefill {
            let p = self.prompt_len;
            self.heads() * p * (p + 1) / 2
        } else {
            0
        }
    }

    /// Number of f32 values in the generated block.
    pub fn generated_values(&self) -> usize {
        let (p, g) = (self.prompt_len, self.gen_len);
        self.heads() * (p * g + g * (g.saturating_sub(1)) / 2)
    }
}

/// One example: metadata plus flat row payloads in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpExample {
    pub meta: DumpMetadata,
    pub prefill: Vec<f32>,
    pub generated: Vec<f32>,
}

impl DumpExample {
    pub fn check_shape(&self) -> Result<()> {
        let want_prefill = self.meta.prefill_values();
        let want_generated = self.meta.generated_values();
        if self.prefill.len() != want_prefill || self.generated.len() != want_generated {
            return Err(Error::MalformedDump(format!(
                "example {}: expected {want_prefill} prefill and {want_generated} generated values, found {} and {}",
                self.meta.example_id,
                self.prefill.len(),
                self.generated.len()
            )));
        }
        Ok(())
    }

    /// Prefill row of prompt position `i` (0-based), covering `i + 1` positions.
    pub fn prefill_row(&self, i: usize, layer: usize, head: usize) -> &[f32] {
        let m = &self.meta;
        let len = i + 1;
        let start = m.heads() * (i * (i + 1) / 2) + (layer * m.num_heads + head) * len;
        &self.prefill[start..start + len]
    }

    /// Generated row of step `t` (0-based), covering `P + t` positions.
    pub fn generated_row(&self, t: usize, layer: usize, head: usize) -> &[f32] {
        let m = &self.meta;
        let len = m.prompt_len + t;
        let before = m.prompt_len * t + t * t.saturating_sub(1) / 2;
        let start = m.heads() * before + (layer * m.num_heads + head) * len;
        &self.generated[start..start + len]
    }

    /// Checks every row against the attention-row invariants.
    pub fn validate_rows(&self) -> Result<()> {
        self.check_shape()?;
        let m = &self.meta;
        let check = |kind, row, layer, head, probs: &[f32]| {
            AttentionRow::new(probs).map(|_| ()).map_err(|e| Error::InvalidRow {
                location: RowLocation {
                    kind,
                    row,
                    layer,
                    head,
                },
                reason: e.to_string(),
            })
        };
        if m.has_prefill {
            for i in 0..m.prompt_len {
                for l in 0..m.num_layers {
                    for h in 0..m.num_heads {
                        check(RowKind::Prompt, i, l, h, self.prefill_row(i, l, h))?;
                    }
                }
            }
        }
        for t in 0..m.gen_len {
            for l in 0..m.num_layers {
                for h in 0..m.num_heads {
                    check(RowKind::Generated, t, l, h, self.generated_row(t, l, h))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    /// Reject rows violating the attention-row invariants.
    pub validate_rows: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self {
            validate_rows: true,
        }
    }
}

impl ReadOptions {
    pub fn permissive() -> Self {
        Self {
            validate_rows: false,
        }
    }
}

pub struct DumpWriter<W: Write> {
    inner: W,
    validate_rows: bool,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            validate_rows: true,
        }
    }

    /// A writer that only checks shapes, for building invalid fixtures.
    pub fn permissive(inner: W) -> Self {
        Self {
            inner,
            validate_rows: false,
        }
    }

    pub fn write_example(&mut self, example: &DumpExample) -> Result<()> {
        example.meta.validate()?;
        if self.validate_rows {
            example.validate_rows()?;
        } else {
            example.check_shape()?;
        }
        let meta = serde_json::to_vec(&example.meta)?;
        let meta_len = u32::try_from(meta.len())
            .map_err(|_| Error::Validation("metadata document exceeds 4 GiB".into()))?;
        self.inner.write_all(MAGIC)?;
        self.inner.write_all(&meta_len.to_le_bytes())?;
        self.inner.write_all(&meta)?;
        write_f32s(&mut self.inner, &example.prefill)?;
        write_f32s(&mut self.inner, &example.generated)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Streaming reader yielding one example at a time.
pub struct DumpReader<R: Read> {
    inner: R,
    offset: u64,
    options: ReadOptions,
    done: bool,
}

impl<R: Read> DumpReader<R> {
    pub fn new(inner: R, options: ReadOptions) -> Self {
        Self {
            inner,
            offset: 0,
            options,
            done: false,
        }
    }

    /// Byte offset of the next unread frame.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Reads up to `buf.len()` bytes, returning how many were available.
    fn fill(&mut self, buf: &mut [u8]) -> Result<usize> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(filled)
    }

    fn read_exact_at(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let got = self.fill(buf)?;
        if got < buf.len() {
            return Err(Error::Corruption {
                offset: self.offset + got as u64,
                reason: format!("truncated {what}: expected {} bytes, found {got}", buf.len()),
            });
        }
        self.offset += got as u64;
        Ok(())
    }

    fn read_f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        let mut raw = vec![0u8; count * 4];
        self.read_exact_at(&mut raw, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn read_frame(&mut self) -> Result<Option<DumpExample>> {
        let mut magic = [0u8; 4];
        let got = self.fill(&mut magic)?;
        if got == 0 {
            return Ok(None);
        }
        if got < 4 {
            return Err(Error::Corruption {
                offset: self.offset + got as u64,
                reason: "truncated frame header".into(),
            });
        }
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?} at byte offset {}",
                String::from_utf8_lossy(&magic),
                self.offset
            )));
        }
        self.offset += 4;

        let mut len = [0u8; 4];
        self.read_exact_at(&mut len, "metadata length")?;
        let meta_len = u32::from_le_bytes(len) as usize;
        let meta_offset = self.offset;
        let mut meta_bytes = vec![0u8; meta_len];
        self.read_exact_at(&mut meta_bytes, "metadata")?;
        let meta: DumpMetadata = serde_json::from_slice(&meta_bytes).map_err(|e| {
            Error::Format(format!("unreadable metadata at byte offset {meta_offset}: {e}"))
        })?;
        meta.validate()?;

        let prefill = self.read_f32s(meta.prefill_values(), "prefill block")?;
        let generated = self.read_f32s(meta.generated_values(), "generated block")?;
        let example = DumpExample {
            meta,
            prefill,
            generated,
        };
        if self.options.validate_rows {
            example.validate_rows()?;
        }
        Ok(Some(example))
    }
}

impl<R: Read> Iterator for DumpReader<R> {
    type Item = Result<DumpExample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(ex)) => Some(Ok(ex)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn write_dump<'a>(examples: impl IntoIterator<Item = &'a DumpExample>, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = DumpWriter::new(BufWriter::new(File::create(path.as_ref()).map_err(io_at(path.as_ref()))?));
    for ex in examples {
        writer.write_example(ex)?;
    }
    writer.finish()?;
    Ok(())
}

pub fn open_dump(path: impl AsRef<Path>, options: ReadOptions) -> Result<DumpReader<BufReader<File>>> {
    Ok(DumpReader::new(BufReader::new(File::open(path.as_ref()).map_err(io_at(path.as_ref()))?), options))
}

/// Reads a whole dump with row validation enabled.
pub fn read_dump(path: impl AsRef<Path>) -> Result<Vec<DumpExample>> {
    open_dump(path, ReadOptions::default())?.collect()
}
