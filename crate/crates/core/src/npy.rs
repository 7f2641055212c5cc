//! Minimal NPY v1.0 reader and writer for dense float tensors.
//!
//! Layout: the magic `\x93NUMPY`, two version bytes, a little-endian `u16`
//! header length, then a Python dict literal with the keys `descr`,
//! `fortran_order` and `shape`, padded with spaces and terminated by `\n` so
//! that the payload starts on a 64-byte boundary.

use std::io::{self, Write};

use half::f16;
use thiserror::Error;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NpyError {
    #[error("not an npy file (bad magic)")]
    BadMagic,
    #[error("unsupported npy version {major}.{minor}")]
    UnsupportedVersion { major: u8, minor: u8 },
    #[error("malformed npy header dict: {0}")]
    MalformedHeaderDict(String),
    #[error("npy header truncated")]
    Truncated,
    #[error("npy payload offset {0} is not 64-byte aligned")]
    MisalignedPayload(usize),
    #[error("unsupported npy dtype {0:?}")]
    UnsupportedDtype(String),
    #[error("npy payload is {actual} bytes, header declares {expected}")]
    PayloadLength { expected: usize, actual: usize },
}

/// Element types the store can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementType {
    F16,
    F32,
}

impl ElementType {
    pub fn size(self) -> usize {
        match self {
            Self::F16 => 2,
            Self::F32 => 4,
        }
    }

    pub fn descr(self) -> &'static str {
        match self {
            Self::F16 => "<f2",
            Self::F32 => "<f4",
        }
    }

    /// Resolve a dtype descriptor. Native (`=`) order is accepted on little-endian hosts only.
    pub fn from_descr(descr: &str) -> Option<Self> {
        let native_le = cfg!(target_endian = "little");
        let body = match descr.as_bytes().first()? {
            b'<' => &descr[1..],
            b'=' if native_le => &descr[1..],
            _ => return None,
        };
        match body {
            "f2" => Some(Self::F16),
            "f4" => Some(Self::F32),
            _ => None,
        }
    }
}

/// Parsed NPY header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorFileHeader {
    pub dtype_code: String,
    pub fortran_order: bool,
    pub shape: Vec<usize>,
    pub data_offset: usize,
}

impl TensorFileHeader {
    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn element_type(&self) -> Option<ElementType> {
        ElementType::from_descr(&self.dtype_code)
    }

    /// Payload size in bytes, if the dtype is one we understand.
    pub fn payload_len(&self) -> Option<usize> {
        self.element_type()
            .map(|t| t.size() * self.element_count())
    }
}

/// Parse the header of an NPY buffer that starts at file offset 0.
///
/// Only version 1.0 is accepted.
pub fn parse_npy_header(bytes: &[u8]) -> Result<TensorFileHeader, NpyError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(NpyError::BadMagic);
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(NpyError::Truncated);
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(NpyError::UnsupportedVersion { major, minor });
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_offset = PREAMBLE_LEN + header_len;
    if bytes.len() < data_offset {
        return Err(NpyError::Truncated);
    }
    if data_offset % ALIGN != 0 {
        return Err(NpyError::MisalignedPayload(data_offset));
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE_LEN..data_offset])
        .map_err(|_| NpyError::MalformedHeaderDict("header is not ASCII".into()))?;
    let text = text
        .strip_suffix('\n')
        .ok_or_else(|| NpyError::MalformedHeaderDict("header not newline-terminated".into()))?;

    let dict = dict::parse(text).map_err(NpyError::MalformedHeaderDict)?;
    Ok(TensorFileHeader {
        dtype_code: dict.descr,
        fortran_order: dict.fortran_order,
        shape: dict.shape,
        data_offset,
    })
}

/// Decoded tensor payload.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F16(Vec<f16>),
    F32(Vec<f32>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            Self::F16(v) => v.len(),
            Self::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Widen to `f32`. Lossless for both element types.
    pub fn to_f32(&self) -> Vec<f32> {
        match self {
            Self::F16(v) => v.iter().map(|x| x.to_f32()).collect(),
            Self::F32(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub header: TensorFileHeader,
    /// Elements in file order (C or Fortran, per `header.fortran_order`).
    pub data: TensorData,
}

/// Check that `bytes` holds exactly the payload the header declares and return it.
pub fn payload<'a>(header: &TensorFileHeader, bytes: &'a [u8]) -> Result<&'a [u8], NpyError> {
    let expected = header
        .payload_len()
        .ok_or_else(|| NpyError::UnsupportedDtype(header.dtype_code.clone()))?;
    let actual = bytes.len().saturating_sub(header.data_offset);
    if actual != expected {
        return Err(NpyError::PayloadLength { expected, actual });
    }
    Ok(&bytes[header.data_offset..])
}

/// Parse a whole NPY buffer into owned values.
pub fn read_npy(bytes: &[u8]) -> Result<NpyArray, NpyError> {
    let header = parse_npy_header(bytes)?;
    let raw = payload(&header, bytes)?;
    let data = match header.element_type() {
        Some(ElementType::F32) => TensorData::F32(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        Some(ElementType::F16) => TensorData::F16(
            raw.chunks_exact(2)
                .map(|c| f16::from_bits(u16::from_le_bytes([c[0], c[1]])))
                .collect(),
        ),
        None => return Err(NpyError::UnsupportedDtype(header.dtype_code)),
    };
    Ok(NpyArray { header, data })
}

/// Encode the header block (preamble, dict and padding) for a C-order array.
pub fn encode_header(element: ElementType, shape: &[usize]) -> Vec<u8> {
    let shape_repr = match shape {
        [single] => format!("({single},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        element.descr(),
        shape_repr
    );
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

/// Write a C-order `f32` array.
pub fn write_npy_f32<W: Write>(w: &mut W, shape: &[usize], data: &[f32]) -> io::Result<()> {
    check_len(shape, data.len())?;
    w.write_all(&encode_header(ElementType::F32, shape))?;
    if cfg!(target_endian = "little") {
        w.write_all(bytemuck::cast_slice(data))
    } else {
        data.iter().try_for_each(|v| w.write_all(&v.to_le_bytes()))
    }
}

/// Write a C-order `f16` array.
pub fn write_npy_f16<W: Write>(w: &mut W, shape: &[usize], data: &[f16]) -> io::Result<()> {
    check_len(shape, data.len())?;
    w.write_all(&encode_header(ElementType::F16, shape))?;
    data.iter()
        .try_for_each(|v| w.write_all(&v.to_bits().to_le_bytes()))
}

fn check_len(shape: &[usize], len: usize) -> io::Result<()> {
    let expected: usize = shape.iter().product();
    if expected == len {
        Ok(())
    } else {
        Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("shape {shape:?} needs {expected} elements, got {len}"),
        ))
    }
}

mod dict {
    //! Parser for the Python dict literal inside an NPY header.

    pub(super) struct HeaderDict {
        pub descr: String,
        pub fortran_order: bool,
        pub shape: Vec<usize>,
    }

    enum Value {
        Str(String),
        Bool(bool),
        Tuple(Vec<usize>),
    }

    struct Cursor<'a> {
        s: &'a [u8],
        pos: usize,
    }

    impl Cursor<'_> {
        fn skip_ws(&mut self) {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }

        fn peek(&mut self) -> Option<u8> {
            self.skip_ws();
            self.s.get(self.pos).copied()
        }

        fn expect(&mut self, c: u8) -> Result<(), String> {
            match self.peek() {
                Some(got) if got == c => {
                    self.pos += 1;
                    Ok(())
                }
                got => Err(format!(
                    "expected {:?} at {}, found {:?}",
                    c as char,
                    self.pos,
                    got.map(|g| g as char)
                )),
            }
        }

        fn string(&mut self) -> Result<String, String> {
            let quote = match self.peek() {
                Some(q @ (b'\'' | b'"')) => q,
                _ => return Err(format!("expected string at {}", self.pos)),
            };
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos] != quote {
                self.pos += 1;
            }
            if self.pos == self.s.len() {
                return Err("unterminated string".into());
            }
            let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
            self.pos += 1;
            Ok(out)
        }

        fn ident(&mut self) -> &[u8] {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            &self.s[start..self.pos]
        }

        fn integer(&mut self) -> Result<usize, String> {
            let tok = self.ident();
            let text = std::str::from_utf8(tok).unwrap_or_default();
            let text = text.strip_suffix('L').unwrap_or(text);
            text.parse::<usize>()
                .map_err(|_| format!("bad shape dimension {text:?}"))
        }

        fn tuple(&mut self) -> Result<Vec<usize>, String> {
            self.expect(b'(')?;
            let mut dims = Vec::new();
            loop {
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    return Ok(dims);
                }
                dims.push(self.integer()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {}
                    other => {
                        return Err(format!(
                            "unexpected {:?} in shape tuple",
                            other.map(|c| c as char)
                        ))
                    }
                }
            }
        }

        fn value(&mut self) -> Result<Value, String> {
            match self.peek() {
                Some(b'\'' | b'"') => self.string().map(Value::Str),
                Some(b'(') => self.tuple().map(Value::Tuple),
                Some(_) => match self.ident() {
                    b"True" => Ok(Value::Bool(true)),
                    b"False" => Ok(Value::Bool(false)),
                    other => Err(format!(
                        "unsupported value {:?}",
                        String::from_utf8_lossy(other)
                    )),
                },
                None => Err("unexpected end of header".into()),
            }
        }
    }

    pub(super) fn parse(text: &str) -> Result<HeaderDict, String> {
        let mut c = Cursor {
            s: text.as_bytes(),
            pos: 0,
        };
        let (mut descr, mut fortran, mut shape) = (None, None, None);
        c.expect(b'{')?;
        loop {
            if c.peek() == Some(b'}') {
                c.pos += 1;
                break;
            }
            let key = c.string()?;
            c.expect(b':')?;
            match (key.as_str(), c.value()?) {
                ("descr", Value::Str(s)) => descr = Some(s),
                ("fortran_order", Value::Bool(b)) => fortran = Some(b),
                ("shape", Value::Tuple(t)) => shape = Some(t),
                (k @ ("descr" | "fortran_order" | "shape"), _) => {
                    return Err(format!("wrong value type for key {k:?}"))
                }
                (k, _) => return Err(format!("unexpected key {k:?}")),
            }
            match c.peek() {
                Some(b',') => c.pos += 1,
                Some(b'}') => {}
                other => {
                    return Err(format!(
                        "unexpected {:?} after value",
                        other.map(|ch| ch as char)
                    ))
                }
            }
        }
        if c.peek().is_some() {
            return Err("trailing characters after dict".into());
        }
        Ok(HeaderDict {
            descr: descr.ok_or("missing key 'descr'")?,
            fortran_order: fortran.ok_or("missing key 'fortran_order'")?,
            shape: shape.ok_or("missing key 'shape'")?,
        })
    }
}
