use crate::scene::SceneMap;

const TEMPLATE: &str = include_str!("planner_prompt.txt");
const EXAMPLES: &str = include_str!("planner_examples.txt");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PromptOptions {
    /// Append the few-shot `#EXAMPLE#` section.
    pub include_examples: bool,
}

/// Bracketed site labels in scene order, e.g. `[fruit table] [shipping shelf]`.
pub fn map_line(scene: &SceneMap) -> String {
    scene
        .sites
        .iter()
        .map(|s| format!("[{}]", s.label()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_initial_prompt(task: &str, scene: &SceneMap, memory_hints: &[String]) -> String {
    render_initial_prompt_with(task, scene, memory_hints, PromptOptions::default())
}

pub fn render_initial_prompt_with(
    task: &str,
    scene: &SceneMap,
    memory_hints: &[String],
    options: PromptOptions,
) -> String {
    let mut out = TEMPLATE.replace("{map}", &map_line(scene));
    if options.include_examples {
        out.push('\n');
        out.push_str(EXAMPLES);
    }
    if !memory_hints.is_empty() {
        out.push_str("\n#MEMORY#\n\n");
        for hint in memory_hints {
            out.push_str(hint);
            out.push('\n');
        }
    }
    out.push_str("\n#instruction: ");
    out.push_str(task.trim());
    out.push('\n');
    out
}

/// Token estimate at four characters per token, rounded up.
pub fn approx_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::canonical_scene;

    #[test]
    fn sections_in_order() {
        let p = render_initial_prompt("find lemon", &canonical_scene(0), &[]);
        let order = ["#CONTEXT#", "#SKILL#", "#OBECTIVE#", "#OUTPUT#", "#MAP#", "#instruction: find lemon"];
        let mut at = 0;
        for marker in order {
            let i = p[at..].find(marker).unwrap_or_else(|| panic!("{marker} missing")) + at;
            at = i;
        }
        assert!(!p.contains("#EXAMPLE#"));
        assert!(!p.contains("#MEMORY#"));
        assert!(p.ends_with("#instruction: find lemon\n"));
    }

    #[test]
    fn map_line_lists_sites() {
        let p = render_initial_prompt("x", &canonical_scene(0), &[]);
        assert!(p.contains("\n[fruit table] [shipping shelf] [toy rack] [drink table] [receiving shelf] [purchase table]"));
        assert!(!p.contains("{map}"));
    }

    #[test]
    fn hints_and_examples() {
        let hints = vec!["lemon last seen at shipping table".to_string()];
        let p = render_initial_prompt_with("x", &canonical_scene(0), &hints, PromptOptions { include_examples: true });
        let mem = p.find("#MEMORY#").unwrap();
        assert!(p[mem..].contains("lemon last seen at shipping table"));
        assert!(p.find("#EXAMPLE#").unwrap() < mem);
    }

    #[test]
    fn default_prompt_budget() {
        let p = render_initial_prompt("gather a bottle of water, a toy duck and a persimmon to shipping table", &canonical_scene(0), &[]);
        let n = approx_tokens(&p);
        assert!((400..=700).contains(&n), "{n}");
    }
}
