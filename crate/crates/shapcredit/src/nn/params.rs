//! Flat parameter storage with a named-segment index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameter vectors differ in length: {dst} vs {src}")]
    LengthMismatch { dst: usize, src: usize },
    #[error("unknown parameter segment `{0}`")]
    UnknownSegment(String),
    #[error("backward called without a recorded forward pass")]
    NoRecordedForward,
}

/// A contiguous named slice of a [`ParamVector`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Flat vector of real parameters partitioned into named segments.
///
/// The segment index doubles as the checkpoint manifest: offsets partition
/// the vector exactly, and the total length is fixed after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    data: Vec<f64>,
    segments: Vec<Segment>,
}

impl ParamVector {
    /// Builds a zeroed vector from `(name, len)` segment declarations.
    pub fn with_segments(decls: &[(&str, usize)]) -> Self {
        let mut segments = Vec::with_capacity(decls.len());
        let mut offset = 0;
        for (name, len) in decls {
            segments.push(Segment {
                name: (*name).to_string(),
                offset,
                len: *len,
            });
            offset += len;
        }
        ParamVector {
            data: vec![0.0; offset],
            segments,
        }
    }

    /// A zeroed vector with the same segment layout, e.g. for gradients.
    pub fn zeros_like(&self) -> Self {
        ParamVector {
            data: vec![0.0; self.data.len()],
            segments: self.segments.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Result<&[f64], NnError> {
        let seg = self
            .segments
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| NnError::UnknownSegment(name.to_string()))?;
        Ok(&self.data[seg.offset..seg.offset + seg.len])
    }

    pub fn segment_mut(&mut self, name: &str) -> Result<&mut [f64], NnError> {
        let seg = self
            .segments
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .ok_or_else(|| NnError::UnknownSegment(name.to_string()))?;
        Ok(&mut self.data[seg.offset..seg.offset + seg.len])
    }

    /// Value-copies `src` into `self`; afterwards the two are bit-identical.
    pub fn copy_from(&mut self, src: &ParamVector) -> Result<(), NnError> {
        if self.data.len() != src.data.len() {
            return Err(NnError::LengthMismatch {
                dst: self.data.len(),
                src: src.data.len(),
            });
        }
        self.data.copy_from_slice(&src.data);
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    /// Accumulates `other` scaled by `alpha` into `self`.
    pub fn axpy(&mut self, alpha: f64, other: &ParamVector) -> Result<(), NnError> {
        if self.data.len() != other.data.len() {
            return Err(NnError::LengthMismatch {
                dst: self.data.len(),
                src: other.data.len(),
            });
        }
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += alpha * s;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Copies `src` into `dst`; separate function form for symmetry with the
/// optimizer entry points.
pub fn copy_params(src: &ParamVector, dst: &mut ParamVector) -> Result<(), NnError> {
    dst.copy_from(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_partition_the_vector() {
        let p = ParamVector::with_segments(&[("a", 3), ("b", 2), ("c", 4)]);
        assert_eq!(p.len(), 9);
        let segs = p.segments();
        let mut expected_offset = 0;
        for s in segs {
            assert_eq!(s.offset, expected_offset);
            expected_offset += s.len;
        }
        assert_eq!(expected_offset, p.len());
    }

    #[test]
    fn segment_views_address_the_right_slices() {
        let mut p = ParamVector::with_segments(&[("a", 2), ("b", 3)]);
        p.segment_mut("b").unwrap().copy_from_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(p.segment("a").unwrap(), &[0.0, 0.0]);
        assert_eq!(p.segment("b").unwrap(), &[1.0, 2.0, 3.0]);
        assert!(p.segment("missing").is_err());
    }

    #[test]
    fn copy_is_by_value_and_checks_length() {
        let mut src = ParamVector::with_segments(&[("a", 3)]);
        src.as_mut_slice().copy_from_slice(&[1.0, 2.0, 3.0]);
        let mut dst = src.zeros_like();
        copy_params(&src, &mut dst).unwrap();
        assert_eq!(dst.as_slice(), src.as_slice());

        // Mutating the source afterwards leaves the copy untouched.
        src.as_mut_slice()[0] = 9.0;
        assert_eq!(dst.as_slice(), &[1.0, 2.0, 3.0]);

        let mut short = ParamVector::with_segments(&[("a", 2)]);
        assert!(copy_params(&src, &mut short).is_err());
    }

    #[test]
    fn copy_of_zero_vector_is_zero() {
        let src = ParamVector::with_segments(&[("a", 4)]);
        let mut dst = ParamVector::with_segments(&[("a", 4)]);
        dst.fill(5.0);
        copy_params(&src, &mut dst).unwrap();
        assert!(dst.as_slice().iter().all(|&x| x == 0.0));
    }
}
