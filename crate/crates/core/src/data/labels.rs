//! Attribute label and partition file parsing (the public CelebA list
//! format, bit-exact).

use crate::error::{Error, Result};
use crate::topology::AttributeVocab;
use std::path::Path;

use super::Split;

/// Label file layout: line 1 is the record count, line 2 the 40 attribute
/// names, and each following line an image id plus 40 values in {-1, 1},
/// mapped to {0, 1}.
pub fn parse_label_text(text: &str) -> Result<(AttributeVocab, Vec<(String, Vec<u8>)>)> {
    let mut lines = text.lines().enumerate();
    let (_, count_line) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty label file".into() })?;
    let expected: usize = count_line.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("record count expected, got `{}`", count_line.trim()),
    })?;
    let (_, names_line) = lines
        .next()
        .ok_or(Error::Parse { line: 2, msg: "missing attribute name line".into() })?;
    let names: Vec<String> = names_line.split_whitespace().map(str::to_string).collect();
    if names.len() != 40 {
        return Err(Error::Parse {
            line: 2,
            msg: format!("expected 40 attribute names, got {}", names.len()),
        });
    }
    let vocab = AttributeVocab::new(names).map_err(|e| Error::Parse {
        line: 2,
        msg: e.to_string(),
    })?;

    let mut records = Vec::with_capacity(expected);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap().to_string();
        let mut labels = Vec::with_capacity(40);
        for field in fields {
            match field {
                "1" => labels.push(1u8),
                "-1" => labels.push(0u8),
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("label value must be -1 or 1, got `{}`", other),
                    })
                }
            }
        }
        if labels.len() != 40 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 40 label columns, got {}", labels.len()),
            });
        }
        records.push((id, labels));
    }
    if records.len() != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header says {} records, file has {}",
                expected,
                records.len()
            ),
        });
    }
    Ok((vocab, records))
}

pub fn parse_label_file(path: &Path) -> Result<(AttributeVocab, Vec<(String, Vec<u8>)>)> {
    parse_label_text(&std::fs::read_to_string(path)?)
}

/// Partition file: `image_id split_digit` per line, 0/1/2 for
/// train/val/test.
pub fn parse_partition_text(text: &str) -> Result<Vec<(String, Split)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap().to_string();
        let digit = fields.next().ok_or(Error::Parse {
            line: lineno,
            msg: "missing split digit".into(),
        })?;
        let split = match digit {
            "0" => Split::Train,
            "1" => Split::Val,
            "2" => Split::Test,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("split digit must be 0, 1 or 2, got `{}`", other),
                })
            }
        };
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "trailing fields after split digit".into(),
            });
        }
        out.push((id, split));
    }
    Ok(out)
}

pub fn parse_partition_file(path: &Path) -> Result<Vec<(String, Split)>> {
    parse_partition_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: &str = "5_o_Clock_Shadow Arched_Eyebrows Attractive Bags_Under_Eyes Bald Bangs \
Big_Lips Big_Nose Black_Hair Blond_Hair Blurry Brown_Hair Bushy_Eyebrows Chubby Double_Chin \
Eyeglasses Goatee Gray_Hair Heavy_Makeup High_Cheekbones Male Mouth_Slightly_Open Mustache \
Narrow_Eyes No_Beard Oval_Face Pale_Skin Pointy_Nose Receding_Hairline Rosy_Cheeks Sideburns \
Smiling Straight_Hair Wavy_Hair Wearing_Earrings Wearing_Hat Wearing_Lipstick Wearing_Necklace \
Wearing_Necktie Young";

    fn toy_file() -> String {
        let plus: Vec<&str> = std::iter::repeat("1").take(39).collect();
        format!(
            "2\n{}\nimg_a.ppm -1 {}\nimg_b.ppm 1 {}\n",
            NAMES,
            plus.join(" "),
            std::iter::repeat("-1").take(39).collect::<Vec<_>>().join(" ")
        )
    }

    #[test]
    fn toy_label_file_parses_exactly() {
        let (vocab, records) = parse_label_text(&toy_file()).unwrap();
        assert_eq!(vocab.len(), 40);
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].0, "img_a.ppm");
        assert_eq!(records[0].1[0], 0);
        assert!(records[0].1[1..].iter().all(|&v| v == 1));
        assert_eq!(records[1].1[0], 1);
        assert!(records[1].1[1..].iter().all(|&v| v == 0));
    }

    #[test]
    fn zero_label_value_errors_with_line_number() {
        let text = toy_file().replace("img_b.ppm 1", "img_b.ppm 0");
        let err = parse_label_text(&text).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains('0'), "{}", msg);
            }
            other => panic!("wrong error: {}", other),
        }
    }

    #[test]
    fn record_count_mismatch_is_an_error() {
        let text = toy_file().replacen('2', "3", 1);
        assert!(matches!(
            parse_label_text(&text),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn wrong_column_count_is_an_error() {
        let mut text = toy_file();
        text.push_str("img_c.ppm 1 -1\n");
        let err = parse_label_text(&text.replacen('2', "3", 1)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{}", err);
    }

    #[test]
    fn partition_parse() {
        let parts = parse_partition_text("a.ppm 0\nb.ppm 1\nc.ppm 2\n").unwrap();
        assert_eq!(
            parts,
            vec![
                ("a.ppm".into(), Split::Train),
                ("b.ppm".into(), Split::Val),
                ("c.ppm".into(), Split::Test)
            ]
        );
        assert!(parse_partition_text("a.ppm 3\n").is_err());
    }
}
