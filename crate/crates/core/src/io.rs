//! FBIN1 field files: one JSON header line, then little-endian f64 values, component-major.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FormField, ScalarField, TensorField};
use crate::grid::TorusGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub n: usize,
    pub sizes: Vec<usize>,
    pub kind: String,
    pub rank_or_degree: usize,
    pub order: String,
}

/// Any field that can be stored in an FBIN1 file.
#[derive(Debug, Clone)]
pub enum Field {
    Scalar(ScalarField),
    Tensor(TensorField),
    Form(FormField),
}

impl Field {
    fn parts(&self) -> (&TorusGrid, &'static str, usize, &[f64]) {
        match self {
            Field::Scalar(f) => (&f.grid, "scalar", 0, &f.values),
            Field::Tensor(t) => (&t.grid, "tensor", t.rank, &t.data),
            Field::Form(w) => (&w.grid, "form", w.degree, &w.data),
        }
    }

    pub fn header(&self) -> Header {
        let (grid, kind, r, _) = self.parts();
        Header {
            format: "FBIN1".into(),
            n: grid.n(),
            sizes: grid.sizes().to_vec(),
            kind: kind.into(),
            rank_or_degree: r,
            order: "lex".into(),
        }
    }

    pub fn values(&self) -> &[f64] {
        self.parts().3
    }
}

pub fn write_field<W: Write>(mut out: W, field: &Field) -> Result<()> {
    let header = serde_json::to_string(&field.header()).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;
    let bytes: Vec<u8> = field.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(input: R) -> Result<Field> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let h: Header = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if h.format != "FBIN1" || h.order != "lex" {
        return Err(Error::Format(format!("unsupported format {} / order {}", h.format, h.order)));
    }
    if h.sizes.len() != h.n {
        return Err(Error::Format("sizes do not match n".into()));
    }
    let grid = TorusGrid::new(&h.sizes)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format("payload is not a whole number of f64 values".into()));
    }
    let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let expect = |count: usize| {
        if data.len() == count * grid.len() {
            Ok(())
        } else {
            Err(Error::Format(format!("payload has {} values, expected {}", data.len(), count * grid.len())))
        }
    };
    match h.kind.as_str() {
        "scalar" => {
            expect(1)?;
            Ok(Field::Scalar(ScalarField::from_values(&grid, data)?))
        }
        "tensor" => {
            expect(h.n.pow(h.rank_or_degree as u32))?;
            let mut t = TensorField::zeros(&grid, h.rank_or_degree);
            t.data = data;
            Ok(Field::Tensor(t))
        }
        "form" => Ok(Field::Form(FormField::from_data(&grid, h.rank_or_degree, data)?)),
        other => Err(Error::Format(format!("unknown field kind {other}"))),
    }
}

pub fn save(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(f), field)
}

pub fn load(path: impl AsRef<Path>) -> Result<Field> {
    read_field(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_lowfreq_form;

    #[test]
    fn form_round_trip_is_bit_exact() {
        let g = TorusGrid::cube(4, 4).unwrap();
        let w = random_lowfreq_form(&g, 2, 1, 3).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::Form(w.clone())).unwrap();
        let first = buf.iter().position(|&b| b == b'\n').unwrap();
        let h: Header = serde_json::from_slice(&buf[..first]).unwrap();
        assert_eq!(h.kind, "form");
        assert_eq!(h.rank_or_degree, 2);
        match read_field(&buf[..]).unwrap() {
            Field::Form(r) => assert!(r.data.iter().zip(&w.data).all(|(a, b)| a.to_bits() == b.to_bits())),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = TorusGrid::cube(4, 4).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::Scalar(ScalarField::constant(&g, 1.0))).unwrap();
        buf.truncate(buf.len() - 8);
        assert!(read_field(&buf[..]).is_err());
    }
}
