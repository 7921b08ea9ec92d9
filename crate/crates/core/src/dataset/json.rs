use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// Compact JSON with every float written with exactly six decimals.
#[derive(Debug, Default, Clone, Copy)]
pub struct FixedFloatFormatter;

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // -0.000000 and 0.000000 must not differ byte-wise
        let v = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{v:.6}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FixedFloatFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization does not fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// [`to_json_string`] followed by `'\n'`.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = to_json_string(value);
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_six_decimals() {
        let v = serde_json::json!({"a": 0.5, "b": [1.0, 0.1234567], "c": -0.0, "n": 3});
        assert_eq!(to_json_string(&v), r#"{"a":0.500000,"b":[1.000000,0.123457],"c":0.000000,"n":3}"#);
    }
}
