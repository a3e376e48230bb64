//! Dotted-path overrides applied to the scenario JSON before parsing,
//! e.g. `robot.num_pistons=10` or `source.frequencies.0.share=0.5`.

use crate::CliError;
use serde_json::Value;

/// Parse a `key=value` override. The value is JSON when it parses as
/// JSON, else a bare string.
pub fn parse_override(text: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override '{text}' is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Set `value` at a dotted path inside `root`, creating intermediate
/// objects as needed. Numeric segments index into arrays.
pub fn apply_override(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() {
        return Err(CliError::Usage("empty override path".to_string()));
    }
    let mut cursor = root;
    for (i, segment) in segments.iter().enumerate() {
        let last = i == segments.len() - 1;
        if let Ok(index) = segment.parse::<usize>() {
            let array = cursor.as_array_mut().ok_or_else(|| {
                CliError::Usage(format!(
                    "path '{path}': segment '{segment}' indexes a non-array"
                ))
            })?;
            if index >= array.len() {
                return Err(CliError::Usage(format!(
                    "path '{path}': index {index} out of bounds (len {})",
                    array.len()
                )));
            }
            if last {
                array[index] = value;
                return Ok(());
            }
            cursor = &mut array[index];
        } else {
            if !cursor.is_object() {
                return Err(CliError::Usage(format!(
                    "path '{path}': segment '{segment}' traverses a non-object"
                )));
            }
            let object = cursor.as_object_mut().expect("checked above");
            if last {
                object.insert(segment.to_string(), value);
                return Ok(());
            }
            cursor = object
                .entry(segment.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}
