//! Prompt files: reading/writing the NDJSON prompt format and converting the
//! BOLD release layout into it.
//!
//! BOLD ships one `<domain>_prompt.json` per domain, each shaped as
//! `{subgroup: {entity: [prompt, ...]}}`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde_json::Value;

use super::{Domain, EvalError, EvalPrompt};

const BOLD_FILES: [(&str, Domain); 5] = [
    ("gender_prompt.json", Domain::Gender),
    ("race_prompt.json", Domain::Race),
    ("religious_ideology_prompt.json", Domain::ReligiousIdeologies),
    ("political_ideology_prompt.json", Domain::PoliticalIdeologies),
    ("profession_prompt.json", Domain::Professions),
];

/// Human-readable subgroup label for a BOLD grouping key.
pub fn subgroup_label(key: &str) -> String {
    match key {
        "American_actors" => "Male".into(),
        "American_actresses" => "Female".into(),
        "African_Americans" => "Black".into(),
        "Asian_Americans" => "Asian".into(),
        "European_Americans" => "European".into(),
        "Hispanic_and_Latino_Americans" => "Hispanic and Latino".into(),
        other => {
            let spaced = other.replace('_', " ");
            let mut chars = spaced.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => spaced,
            }
        }
    }
}

/// Converts every BOLD domain file present in `dir`. Domains follow a fixed
/// order; subgroups, entities and prompts follow key order then file order.
pub fn import_bold(dir: &Path) -> Result<Vec<EvalPrompt>, EvalError> {
    let mut prompts = Vec::new();
    let mut found = 0;
    for (name, domain) in BOLD_FILES {
        let path = dir.join(name);
        if !path.is_file() {
            continue;
        }
        found += 1;
        let text = std::fs::read_to_string(&path).map_err(|e| EvalError::Import(format!("{}: {e}", path.display())))?;
        let root: Value =
            serde_json::from_str(&text).map_err(|e| EvalError::Import(format!("{}: {e}", path.display())))?;
        let shape_err = || EvalError::Import(format!("{}: expected {{subgroup: {{entity: [prompt]}}}}", path.display()));
        for (subgroup, entities) in root.as_object().ok_or_else(shape_err)? {
            for prompt_list in entities.as_object().ok_or_else(shape_err)?.values() {
                for prompt in prompt_list.as_array().ok_or_else(shape_err)? {
                    let text = prompt.as_str().ok_or_else(shape_err)?.trim();
                    if text.is_empty() {
                        continue;
                    }
                    prompts.push(EvalPrompt {
                        domain,
                        subgroup: subgroup_label(subgroup),
                        prompt_text: text.to_string(),
                    });
                }
            }
        }
    }
    if found == 0 {
        return Err(EvalError::Import(format!("no *_prompt.json files in {}", dir.display())));
    }
    Ok(prompts)
}

pub fn read_prompts(path: &Path) -> Result<Vec<EvalPrompt>, EvalError> {
    let file = File::open(path).map_err(|e| EvalError::Import(format!("{}: {e}", path.display())))?;
    let mut prompts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Import(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let prompt: EvalPrompt = serde_json::from_str(&line)
            .map_err(|e| EvalError::Import(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if prompt.subgroup.trim().is_empty() {
            return Err(EvalError::Import(format!("{}:{}: empty subgroup", path.display(), i + 1)));
        }
        prompts.push(prompt);
    }
    Ok(prompts)
}

pub fn write_prompts<W: Write>(prompts: &[EvalPrompt], mut out: W) -> std::io::Result<()> {
    for p in prompts {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
