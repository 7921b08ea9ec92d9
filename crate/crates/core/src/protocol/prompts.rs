//! Prompt templates for the tool-calling dialogue. These strings are part of
//! the wire contract with the policy model and must not be reflowed.

/// Tool signatures embedded between `<tools>` tags in the system prompt.
pub const TOOLS_JSON: &str = r#"[
  {
    "type": "function",
    "function": {
      "name": "add_bbox",
      "description": "Add a bounding box to initialize or refine the segmentation.",
      "parameters": {
        "type": "object",
        "properties": {
          "bbox_2d": { "type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4, "description": "2D bounding box in [x1, y1, x2, y2] format" }
        },
        "required": ["bbox_2d"]
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "add_point",
      "description": "Add a point to refine the mask (positive to include areas, negative to exclude areas).",
      "parameters": {
        "type": "object",
        "properties": {
          "point_2d": { "type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2, "description": "2D coordinate point in [x, y] format" },
          "point_type": { "type": "string", "enum": ["positive", "negative"] }
        },
        "required": ["point_2d", "point_type"]
      }
    }
  },
  {
    "type": "function",
    "function": {
      "name": "stop_action",
      "description": "Stop the refinement process when the mask accurately covers the target object.",
      "parameters": { "type": "object", "properties": {} }
    }
  }
]"#;

pub const IMAGE_TOKEN: &str = "<image>";

const SYSTEM_HEAD: &str = "You are a professional segmentation annotator specializing in mask creation and refinement. Your core task is to segment the USER-SPECIFIED TARGET REGION from the provided image. No preliminary mask is available\u{2014}you must first create an initial mask using the tool, then iteratively refine it to achieve pixel-level accuracy. The mask will be displayed as a semi-transparent green overlay; your goal is to ensure it exactly covers the entire target region and excludes all non-target areas (e.g., background, adjacent objects).

# Tools

You must call one function to assist with the user query. You are provided with function signatures within <tools></tools> XML tags:
<tools>
";

const SYSTEM_TAIL: &str = "
</tools>

For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>
{\"name\": <function-name>, \"arguments\": <args-json-object>}
</tool_call>

Only use the provided functions to complete your task. Do not invent or assume any other functions. Carefully consider the current mask state before each action.";

pub fn render_system_prompt() -> String {
    let mut s = String::with_capacity(SYSTEM_HEAD.len() + TOOLS_JSON.len() + SYSTEM_TAIL.len());
    s.push_str(SYSTEM_HEAD);
    s.push_str(TOOLS_JSON);
    s.push_str(SYSTEM_TAIL);
    s
}

pub fn render_initial_turn(target: &str) -> String {
    format!(
        "{IMAGE_TOKEN} The target to be segmented is: {target}.\nNow, please analyze the original image, then decide your first action."
    )
}

pub fn render_followup_turn() -> String {
    format!(
        "{IMAGE_TOKEN} Here is the updated mask after your previous action. Based on this, what is your next action? If the mask is now accurate, you can call 'stop_action' to finish."
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tools_json_is_valid() {
        let v: serde_json::Value = serde_json::from_str(TOOLS_JSON).unwrap();
        let names: Vec<_> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t["function"]["name"].as_str().unwrap())
            .collect();
        assert_eq!(names, ["add_bbox", "add_point", "stop_action"]);
    }

    #[test]
    fn templates_contain_anchor_phrases() {
        assert!(render_initial_turn("left kidney")
            .contains("The target to be segmented is: left kidney."));
        assert!(render_followup_turn().contains("you can call 'stop_action' to finish"));
        let sys = render_system_prompt();
        assert!(sys.contains("<tool_call></tool_call> XML tags"));
        assert!(sys.contains(&format!("<tools>\n{TOOLS_JSON}\n</tools>")));
    }
}
