//! `<tool_call>` serialization and parsing.
//!
//! Output is canonical: `{"name": ..., "arguments": {...}}` with a space after
//! every `:` and `,`, wrapped in tags on their own lines. Input is parsed
//! leniently: any whitespace, any key order, free text around the span.

use serde_json::{Map, Value};
use thiserror::Error;

use super::action::{Action, Polarity};
use super::coords::NORMALIZED_MAX;

pub const OPEN_TAG: &str = "<tool_call>";
pub const CLOSE_TAG: &str = "</tool_call>";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToolCallError {
    #[error("no <tool_call> span found")]
    MissingSpan,
    #[error("<tool_call> span is not closed")]
    UnterminatedSpan,
    #[error("{0} <tool_call> spans found; exactly one action per turn is allowed")]
    MultipleSpans(usize),
    #[error("tool call is not valid JSON: {0}")]
    MalformedJson(String),
    #[error("tool call must be an object with a string \"name\" and object \"arguments\"")]
    InvalidShape,
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("argument {field} of {tool}: expected {expected} values, got {got}")]
    Arity {
        tool: &'static str,
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("argument {field} of {tool}: {reason}")]
    InvalidArgument {
        tool: &'static str,
        field: &'static str,
        reason: String,
    },
    #[error("coordinate {value} in {field} outside [0, {max}]")]
    OutOfRange {
        field: &'static str,
        value: i64,
        max: u32,
    },
}

/// Inclusive upper bounds accepted for x and y coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordLimits {
    pub max_x: u32,
    pub max_y: u32,
}

impl CoordLimits {
    pub const fn normalized() -> Self {
        Self {
            max_x: NORMALIZED_MAX,
            max_y: NORMALIZED_MAX,
        }
    }

    pub fn pixels(width: usize, height: usize) -> Self {
        Self {
            max_x: width.saturating_sub(1) as u32,
            max_y: height.saturating_sub(1) as u32,
        }
    }
}

impl Default for CoordLimits {
    fn default() -> Self {
        Self::normalized()
    }
}

fn join(values: &[u32]) -> String {
    values
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// The canonical `{"name": ..., "arguments": ...}` object without tags.
pub fn tool_call_json(a: &Action) -> String {
    let args = match a {
        Action::AddBox { bbox } => format!("{{\"bbox_2d\": [{}]}}", join(bbox)),
        Action::AddPoint { point, polarity } => format!(
            "{{\"point_2d\": [{}], \"point_type\": \"{}\"}}",
            join(point),
            polarity.as_str()
        ),
        Action::Stop => "{}".to_owned(),
    };
    format!("{{\"name\": \"{}\", \"arguments\": {}}}", a.tool_name(), args)
}

pub fn serialize_tool_call(a: &Action) -> String {
    format!("{OPEN_TAG}\n{}\n{CLOSE_TAG}", tool_call_json(a))
}

/// Extracts the single tool call in `reply` and validates it.
pub fn parse_tool_call(reply: &str, limits: CoordLimits) -> Result<Action, ToolCallError> {
    let spans = reply.matches(OPEN_TAG).count();
    if spans == 0 {
        return Err(ToolCallError::MissingSpan);
    }
    if spans > 1 {
        return Err(ToolCallError::MultipleSpans(spans));
    }
    let start = reply.find(OPEN_TAG).unwrap() + OPEN_TAG.len();
    let len = reply[start..]
        .find(CLOSE_TAG)
        .ok_or(ToolCallError::UnterminatedSpan)?;
    let body = reply[start..start + len].trim();
    let value: Value =
        serde_json::from_str(body).map_err(|e| ToolCallError::MalformedJson(e.to_string()))?;
    action_from_json(&value, limits)
}

/// Validates an already-decoded `{"name", "arguments"}` object.
pub fn action_from_json(value: &Value, limits: CoordLimits) -> Result<Action, ToolCallError> {
    let obj = value.as_object().ok_or(ToolCallError::InvalidShape)?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or(ToolCallError::InvalidShape)?;
    let empty = Map::new();
    let args = match obj.get("arguments") {
        Some(Value::Object(m)) => m,
        None if name == Action::STOP => &empty,
        _ => return Err(ToolCallError::InvalidShape),
    };
    match name {
        Action::ADD_BBOX => {
            let v = int_array(args, Action::ADD_BBOX, "bbox_2d", 4)?;
            let [x1, y1, x2, y2] = [v[0], v[1], v[2], v[3]];
            Ok(Action::AddBox {
                bbox: [
                    check(x1, limits.max_x, "bbox_2d")?,
                    check(y1, limits.max_y, "bbox_2d")?,
                    check(x2, limits.max_x, "bbox_2d")?,
                    check(y2, limits.max_y, "bbox_2d")?,
                ],
            })
        }
        Action::ADD_POINT => {
            let v = int_array(args, Action::ADD_POINT, "point_2d", 2)?;
            let point = [
                check(v[0], limits.max_x, "point_2d")?,
                check(v[1], limits.max_y, "point_2d")?,
            ];
            let kind = args.get("point_type").ok_or(ToolCallError::InvalidArgument {
                tool: Action::ADD_POINT,
                field: "point_type",
                reason: "missing".into(),
            })?;
            let polarity = kind.as_str().and_then(Polarity::parse).ok_or_else(|| {
                ToolCallError::InvalidArgument {
                    tool: Action::ADD_POINT,
                    field: "point_type",
                    reason: format!("expected \"positive\" or \"negative\", got {kind}"),
                }
            })?;
            Ok(Action::AddPoint { point, polarity })
        }
        Action::STOP => Ok(Action::Stop),
        other => Err(ToolCallError::UnknownTool(other.to_owned())),
    }
}

fn int_array(
    args: &Map<String, Value>,
    tool: &'static str,
    field: &'static str,
    expected: usize,
) -> Result<Vec<i64>, ToolCallError> {
    let invalid = |reason: &str| ToolCallError::InvalidArgument {
        tool,
        field,
        reason: reason.to_owned(),
    };
    let arr = args
        .get(field)
        .ok_or_else(|| invalid("missing"))?
        .as_array()
        .ok_or_else(|| invalid("expected an array"))?;
    if arr.len() != expected {
        return Err(ToolCallError::Arity {
            tool,
            field,
            expected,
            got: arr.len(),
        });
    }
    arr.iter()
        .map(|v| v.as_i64().ok_or_else(|| invalid("expected integer coordinates")))
        .collect()
}

fn check(v: i64, max: u32, field: &'static str) -> Result<u32, ToolCallError> {
    if (0..=i64::from(max)).contains(&v) {
        Ok(v as u32)
    } else {
        Err(ToolCallError::OutOfRange {
            field,
            value: v,
            max,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const N: CoordLimits = CoordLimits::normalized();

    // minimal checker for the subset of JSON Schema the tool listing uses
    fn conforms(value: &Value, schema: &Value) -> bool {
        match schema["type"].as_str() {
            Some("object") => {
                let Some(obj) = value.as_object() else { return false };
                let props = schema["properties"].as_object().unwrap();
                let required = schema["required"].as_array().cloned().unwrap_or_default();
                required.iter().all(|k| obj.contains_key(k.as_str().unwrap()))
                    && obj.iter().all(|(k, v)| props.get(k).is_some_and(|s| conforms(v, s)))
            }
            Some("array") => {
                let Some(items) = value.as_array() else { return false };
                let n = items.len() as u64;
                schema["minItems"].as_u64().map_or(true, |m| n >= m)
                    && schema["maxItems"].as_u64().map_or(true, |m| n <= m)
                    && items.iter().all(|v| conforms(v, &schema["items"]))
            }
            Some("integer") => value.is_i64() || value.is_u64(),
            Some("string") => value.as_str().is_some_and(|s| {
                schema["enum"].as_array().map_or(true, |e| e.iter().any(|x| x == s))
            }),
            _ => false,
        }
    }

    fn tool_schema(name: &str) -> Value {
        let tools: Value = serde_json::from_str(crate::protocol::TOOLS_JSON).unwrap();
        tools
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["function"]["name"] == name)
            .map(|t| t["function"]["parameters"].clone())
            .unwrap()
    }

    #[test]
    fn serialize_examples() {
        assert_eq!(
            serialize_tool_call(&Action::Stop),
            "<tool_call>\n{\"name\": \"stop_action\", \"arguments\": {}}\n</tool_call>"
        );
        let p = Action::AddPoint {
            point: [120, 450],
            polarity: Polarity::Positive,
        };
        assert!(serialize_tool_call(&p)
            .contains(r#""arguments": {"point_2d": [120, 450], "point_type": "positive"}"#));
        let b = Action::AddBox {
            bbox: [1, 2, 30, 40],
        };
        assert_eq!(
            tool_call_json(&b),
            r#"{"name": "add_bbox", "arguments": {"bbox_2d": [1, 2, 30, 40]}}"#
        );
    }

    #[test]
    fn parses_inside_chatter() {
        let reply = "I will box it.\n<tool_call>\n{\"arguments\":{\"bbox_2d\":[10, 20,30,40]},\n \"name\":\"add_bbox\"}</tool_call> done";
        assert_eq!(
            parse_tool_call(reply, N).unwrap(),
            Action::AddBox {
                bbox: [10, 20, 30, 40]
            }
        );
    }

    #[test]
    fn error_paths() {
        let wrap = |s: &str| format!("<tool_call>{s}</tool_call>");
        assert_eq!(parse_tool_call("nothing here", N), Err(ToolCallError::MissingSpan));
        assert_eq!(
            parse_tool_call("<tool_call>{\"name\":\"stop_action\"}", N),
            Err(ToolCallError::UnterminatedSpan)
        );
        assert!(matches!(
            parse_tool_call(&wrap("{not json"), N),
            Err(ToolCallError::MalformedJson(_))
        ));
        assert_eq!(
            parse_tool_call(&wrap(r#"{"name":"add_point","arguments":{"point_2d":[5]}}"#), N),
            Err(ToolCallError::Arity {
                tool: "add_point",
                field: "point_2d",
                expected: 2,
                got: 1
            })
        );
        let two = format!("{}{}", serialize_tool_call(&Action::Stop), serialize_tool_call(&Action::Stop));
        assert_eq!(parse_tool_call(&two, N), Err(ToolCallError::MultipleSpans(2)));
        assert_eq!(
            parse_tool_call(&wrap(r#"{"name":"add_circle","arguments":{}}"#), N),
            Err(ToolCallError::UnknownTool("add_circle".into()))
        );
        assert!(matches!(
            parse_tool_call(&wrap(r#"{"name":"add_bbox","arguments":{"bbox_2d":[0,0,1001,5]}}"#), N),
            Err(ToolCallError::OutOfRange { value: 1001, .. })
        ));
        assert!(matches!(
            parse_tool_call(&wrap(r#"{"name":"add_point","arguments":{"point_2d":[-1,3],"point_type":"positive"}}"#), N),
            Err(ToolCallError::OutOfRange { value: -1, .. })
        ));
        assert!(matches!(
            parse_tool_call(&wrap(r#"{"name":"add_point","arguments":{"point_2d":[1,3],"point_type":"maybe"}}"#), N),
            Err(ToolCallError::InvalidArgument { field: "point_type", .. })
        ));
        assert!(matches!(
            parse_tool_call(&wrap(r#"{"name":"add_point","arguments":{"point_2d":[1.5,3],"point_type":"positive"}}"#), N),
            Err(ToolCallError::InvalidArgument { field: "point_2d", .. })
        ));
        assert_eq!(
            parse_tool_call(&wrap(r#"["add_bbox"]"#), N),
            Err(ToolCallError::InvalidShape)
        );
    }

    #[test]
    fn pixel_limits() {
        let lim = CoordLimits::pixels(64, 32);
        let ok = serialize_tool_call(&Action::AddBox { bbox: [0, 0, 63, 31] });
        assert!(parse_tool_call(&ok, lim).is_ok());
        let bad = serialize_tool_call(&Action::AddBox { bbox: [0, 0, 63, 32] });
        assert!(matches!(
            parse_tool_call(&bad, lim),
            Err(ToolCallError::OutOfRange { value: 32, max: 31, .. })
        ));
    }

    pub(crate) fn arb_action() -> impl Strategy<Value = Action> {
        let c = 0u32..=1000;
        prop_oneof![
            proptest::array::uniform4(c.clone()).prop_map(|bbox| Action::AddBox { bbox }),
            (proptest::array::uniform2(c), any::<bool>()).prop_map(|(point, pos)| Action::AddPoint {
                point,
                polarity: if pos { Polarity::Positive } else { Polarity::Negative },
            }),
            Just(Action::Stop),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(a in arb_action()) {
            prop_assert_eq!(parse_tool_call(&serialize_tool_call(&a), N).unwrap(), a);
        }
    }

    proptest! {
        #[test]
        fn serialized_calls_match_tool_schema(a in arb_action()) {
            let v: Value = serde_json::from_str(&tool_call_json(&a)).unwrap();
            let schema = tool_schema(v["name"].as_str().unwrap());
            prop_assert!(conforms(&v["arguments"], &schema), "{v}");
        }
    }
}
