//! Serialization helpers: round-trippable float output and CSV series.

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};

/// Pretty JSON formatter that writes every `f64` with 17 significant digits.
pub struct SigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for SigFormatter<'_> {
    fn default() -> Self {
        SigFormatter { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        // plain f64 fields that are not finite fall back to null, like serde_json
        if !value.is_finite() {
            return w.write_all(b"null");
        }
        write!(w, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Finite floats in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of zero
        if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> crate::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

/// Serde adapter for `f64` fields that may hold `±inf` or `nan`.
///
/// Finite values stay JSON numbers; the rest become the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

/// Same as [`ext_f64`] for `Vec<f64>`.
pub mod ext_f64_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "super::ext_f64")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<W> = v.iter().map(|x| W(*x)).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

/// Write a header and float columns as CSV.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Probe {
        x: f64,
        #[serde(with = "ext_f64")]
        y: f64,
        #[serde(with = "ext_f64_vec")]
        z: Vec<f64>,
    }

    #[test]
    fn floats_round_trip_bitwise() {
        let p = Probe { x: 0.1 + 0.2, y: f64::NEG_INFINITY, z: vec![1.0 / 3.0, f64::INFINITY, 5e-324] };
        let s = to_json_string(&p).unwrap();
        let q: Probe = serde_json::from_str(&s).unwrap();
        assert_eq!(p.x.to_bits(), q.x.to_bits());
        assert_eq!(q.y, f64::NEG_INFINITY);
        assert_eq!(p.z[0].to_bits(), q.z[0].to_bits());
        assert_eq!(q.z[1], f64::INFINITY);
        assert_eq!(q.z[2], 5e-324);
        assert!(s.contains("\"-inf\""));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["n", "v"], &[vec![1.0, 0.5], vec![2.0, 0.25]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("n,v\n"));
    }
}
