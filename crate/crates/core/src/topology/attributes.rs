//! Attribute vocabulary and the grouping that decides which attributes
//! share upper layers.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

/// The 40 attribute names in canonical dataset column order.
pub const CELEBA_ATTRIBUTES: [&str; 40] = [
    "5_o_Clock_Shadow",
    "Arched_Eyebrows",
    "Attractive",
    "Bags_Under_Eyes",
    "Bald",
    "Bangs",
    "Big_Lips",
    "Big_Nose",
    "Black_Hair",
    "Blond_Hair",
    "Blurry",
    "Brown_Hair",
    "Bushy_Eyebrows",
    "Chubby",
    "Double_Chin",
    "Eyeglasses",
    "Goatee",
    "Gray_Hair",
    "Heavy_Makeup",
    "High_Cheekbones",
    "Male",
    "Mouth_Slightly_Open",
    "Mustache",
    "Narrow_Eyes",
    "No_Beard",
    "Oval_Face",
    "Pale_Skin",
    "Pointy_Nose",
    "Receding_Hairline",
    "Rosy_Cheeks",
    "Sideburns",
    "Smiling",
    "Straight_Hair",
    "Wavy_Hair",
    "Wearing_Earrings",
    "Wearing_Hat",
    "Wearing_Lipstick",
    "Wearing_Necklace",
    "Wearing_Necktie",
    "Young",
];

/// Default grouping, shipped as config data so alternative groupings can be
/// swapped in from a file without touching code.
pub const DEFAULT_GROUPS: &str = include_str!("../../data/default_groups.cfg");

/// Ordered attribute names with a reverse index.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVocab {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl AttributeVocab {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("attribute vocabulary is empty".into()));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Config("empty attribute name".into()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate attribute `{}`", name)));
            }
        }
        Ok(AttributeVocab { names, index })
    }

    /// The standard 40-attribute vocabulary.
    pub fn celeba() -> Self {
        Self::new(CELEBA_ATTRIBUTES.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// Number of groups that get their own third conv block; any further groups
/// share one extra block.
pub const OWN_BRANCH_GROUPS: usize = 5;

/// A partition of the vocabulary into named groups, plus the derived
/// mapping of groups onto third-conv branches: the first
/// [`OWN_BRANCH_GROUPS`] groups in file order each own a branch, the
/// remaining groups share one.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    names: Vec<String>,
    members: Vec<Vec<usize>>,
}

impl GroupSpec {
    /// Parses the grouping file format: one `GroupName: attr1, attr2, ...`
    /// line per group, `#` comments and blank lines allowed. The groups must
    /// partition the vocabulary exactly.
    pub fn parse(text: &str, vocab: &AttributeVocab) -> Result<Self> {
        let mut names = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut seen = vec![false; vocab.len()];
        let mut duplicated = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (group, rest) = line.split_once(':').ok_or(Error::Parse {
                line: lineno + 1,
                msg: "expected `GroupName: attr1, attr2, ...`".into(),
            })?;
            let group = group.trim();
            if group.is_empty() || names.iter().any(|n| n == group) {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad or duplicate group name `{}`", group),
                });
            }
            let mut idxs = Vec::new();
            for attr in rest.split(',') {
                let attr = attr.trim();
                if attr.is_empty() {
                    continue;
                }
                let idx = vocab.index(attr).ok_or_else(|| {
                    Error::Config(format!("group `{}` names unknown attribute `{}`", group, attr))
                })?;
                if seen[idx] {
                    duplicated.push(attr.to_string());
                }
                seen[idx] = true;
                idxs.push(idx);
            }
            if idxs.is_empty() {
                return Err(Error::Config(format!("group `{}` is empty", group)));
            }
            names.push(group.to_string());
            members.push(idxs);
        }
        let missing: Vec<&str> = seen
            .iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(i, _)| vocab.name(i))
            .collect();
        if !missing.is_empty() || !duplicated.is_empty() {
            return Err(Error::Config(format!(
                "groups must partition the vocabulary; missing: [{}], duplicated: [{}]",
                missing.join(", "),
                duplicated.join(", ")
            )));
        }
        if names.is_empty() {
            return Err(Error::Config("no groups defined".into()));
        }
        Ok(GroupSpec { names, members })
    }

    /// The built-in default grouping over the standard vocabulary.
    pub fn default_for(vocab: &AttributeVocab) -> Result<Self> {
        Self::parse(DEFAULT_GROUPS, vocab)
    }

    /// A single pseudo-group holding one attribute (independent networks).
    pub fn solo(vocab: &AttributeVocab, attribute: &str) -> Result<Self> {
        let idx = vocab
            .index(attribute)
            .ok_or_else(|| Error::Config(format!("unknown attribute `{}`", attribute)))?;
        Ok(GroupSpec {
            names: vec![attribute.to_string()],
            members: vec![vec![idx]],
        })
    }

    pub fn group_count(&self) -> usize {
        self.names.len()
    }

    pub fn group_name(&self, g: usize) -> &str {
        &self.names[g]
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    /// Third-conv branch label for group `g`: its own name for the first
    /// [`OWN_BRANCH_GROUPS`] groups, `rest` for the shared branch.
    pub fn branch_of(&self, g: usize) -> String {
        if g < OWN_BRANCH_GROUPS || self.group_count() <= OWN_BRANCH_GROUPS {
            sanitize(&self.names[g])
        } else {
            "rest".to_string()
        }
    }

    /// Distinct branch labels in order.
    pub fn branches(&self) -> Vec<String> {
        let mut out = Vec::new();
        for g in 0..self.group_count() {
            let b = self.branch_of(g);
            if !out.contains(&b) {
                out.push(b);
            }
        }
        out
    }

    /// Serializes back to the grouping file format.
    pub fn to_text(&self, vocab: &AttributeVocab) -> String {
        let mut s = String::new();
        for (name, members) in self.names.iter().zip(&self.members) {
            let attrs: Vec<&str> = members.iter().map(|&i| vocab.name(i)).collect();
            writeln!(s, "{}: {}", name, attrs.join(", ")).unwrap();
        }
        s
    }
}

/// Lowercased identifier-safe name for use inside node names.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn celeba_vocab_has_40_unique_names() {
        let v = AttributeVocab::celeba();
        assert_eq!(v.len(), 40);
        assert_eq!(v.index("Male"), Some(20));
        assert_eq!(v.name(39), "Young");
    }

    #[test]
    fn default_groups_partition_the_vocabulary() {
        let v = AttributeVocab::celeba();
        let g = GroupSpec::default_for(&v).unwrap();
        assert_eq!(g.group_count(), 9);
        let total: usize = (0..9).map(|i| g.members(i).len()).sum();
        assert_eq!(total, 40);
        // exactly six branches: five own plus the shared one
        assert_eq!(g.branches().len(), 6);
        assert_eq!(g.branch_of(0), "gender");
        assert_eq!(g.branch_of(5), "rest");
        assert_eq!(g.branch_of(8), "rest");
    }

    #[test]
    fn group_parse_reports_missing_and_duplicated() {
        let v = AttributeVocab::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
        let err = GroupSpec::parse("G1: A, B\nG2: B\n", &v).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing: [C]"), "{}", msg);
        assert!(msg.contains("duplicated: [B]"), "{}", msg);
    }

    #[test]
    fn group_parse_rejects_unknown_attribute() {
        let v = AttributeVocab::new(vec!["A".into()]).unwrap();
        assert!(matches!(
            GroupSpec::parse("G: A, Nope\n", &v),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn group_text_round_trip() {
        let v = AttributeVocab::celeba();
        let g = GroupSpec::default_for(&v).unwrap();
        let text = g.to_text(&v);
        let reparsed = GroupSpec::parse(&text, &v).unwrap();
        assert_eq!(g, reparsed);
    }
}
