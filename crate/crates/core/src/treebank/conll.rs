use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ParseTree, Sentence, Token, TreebankError};

/// Reads a CoNLL-X or CoNLL-U file.
///
/// Comment lines, multiword-token ranges (`3-4`) and empty nodes (`5.1`) are
/// skipped. Annotated trees must be acyclic and have exactly one root token.
pub fn read_conll(path: impl AsRef<Path>) -> Result<Vec<Sentence>, TreebankError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TreebankError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_conll_from(BufReader::new(file), path)
}

/// Like [`read_conll`], with `path` used only for diagnostics.
pub fn read_conll_from<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Sentence>, TreebankError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut start_line = 1;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| TreebankError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(finish(std::mem::take(&mut tokens), path, start_line)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if tokens.is_empty() {
            start_line = lineno;
        }
        if let Some(token) = parse_line(line, tokens.len() + 1, path, lineno)? {
            tokens.push(token);
        }
    }
    if !tokens.is_empty() {
        sentences.push(finish(tokens, path, start_line)?);
    }
    Ok(sentences)
}

fn parse_line(line: &str, expected_id: usize, path: &Path, lineno: usize) -> Result<Option<Token>, TreebankError> {
    let malformed = |message: String| TreebankError::Malformed {
        path: path.to_path_buf(),
        line: lineno,
        message,
    };
    let cols: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    };
    if cols.len() != 10 {
        return Err(malformed(format!("expected 10 columns, found {}", cols.len())));
    }
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let id: usize = cols[0]
        .parse()
        .map_err(|_| malformed(format!("invalid token id '{}'", cols[0])))?;
    if id != expected_id {
        return Err(malformed(format!("token id {} where {} was expected", id, expected_id)));
    }
    let head = match cols[6] {
        "_" => None,
        h => Some(
            h.parse::<usize>()
                .map_err(|_| malformed(format!("invalid head '{}'", h)))?,
        ),
    };
    let label = match cols[7] {
        "_" => None,
        l => Some(l.to_string()),
    };
    Ok(Some(Token {
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: cols[5].to_string(),
        head,
        label,
        deps: cols[8].to_string(),
        misc: cols[9].to_string(),
    }))
}

fn finish(tokens: Vec<Token>, path: &Path, line: usize) -> Result<Sentence, TreebankError> {
    let rejected = |message: String| TreebankError::InvalidSentence {
        path: path.to_path_buf(),
        line,
        message,
    };
    let heads: Vec<Option<usize>> = tokens.iter().map(|t| t.head).collect();
    if heads.iter().any(Option::is_some) {
        let heads: Vec<usize> = heads
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| rejected("some tokens lack a head".into()))?;
        ParseTree::unlabeled(heads.clone()).map_err(|e| rejected(e.to_string()))?;
        let roots = heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(rejected(format!("{} root tokens", roots)));
        }
    }
    Ok(Sentence::new(tokens))
}

/// Writes sentences in 10-column CoNLL format. When `trees` is given, its
/// heads and labels replace columns 7 and 8.
pub fn write_conll(
    path: impl AsRef<Path>,
    sentences: &[Sentence],
    trees: Option<&[ParseTree]>,
) -> Result<(), TreebankError> {
    let path = path.as_ref();
    let io_err = |source| TreebankError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    write_conll_to(&mut writer, sentences, trees)?;
    writer.flush().map_err(io_err)
}

pub fn write_conll_to<W: Write>(
    writer: &mut W,
    sentences: &[Sentence],
    trees: Option<&[ParseTree]>,
) -> Result<(), TreebankError> {
    if let Some(trees) = trees {
        if trees.len() != sentences.len() {
            return Err(TreebankError::Mismatch {
                index: trees.len().min(sentences.len()),
                message: format!("{} sentences but {} trees", sentences.len(), trees.len()),
            });
        }
    }
    let io_err = |source| TreebankError::Io {
        path: "<output>".into(),
        source,
    };
    for (i, sentence) in sentences.iter().enumerate() {
        let tree = trees.map(|t| &t[i]);
        if let Some(tree) = tree {
            if tree.len() != sentence.len() {
                return Err(TreebankError::Mismatch {
                    index: i,
                    message: format!("{} tokens but tree over {}", sentence.len(), tree.len()),
                });
            }
        }
        for (k, token) in sentence.tokens().iter().enumerate() {
            let (head, label) = match tree {
                Some(tree) => (Some(tree.head(k + 1)), tree.label(k + 1)),
                None => (token.head, token.label.as_deref()),
            };
            let head = head.map_or_else(|| "_".to_string(), |h| h.to_string());
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                k + 1,
                token.form,
                token.lemma,
                token.upos,
                token.xpos,
                token.feats,
                head,
                label.unwrap_or("_"),
                token.deps,
                token.misc
            )
            .map_err(io_err)?;
        }
        writeln!(writer).map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_str(s: &str) -> Result<Vec<Sentence>, TreebankError> {
        read_conll_from(s.as_bytes(), Path::new("test.conll"))
    }

    const TWO: &str = "1\tthe\t_\tDT\tDT\t_\t2\tdet\t_\t_\n2\tcat\t_\tNN\tNN\t_\t0\troot\t_\t_\n";

    #[test]
    fn direct_field_mapping() {
        let sents = read_str(TWO).unwrap();
        assert_eq!(sents.len(), 1);
        let tree = sents[0].gold_tree().unwrap();
        assert_eq!(tree.heads(), &[2, 0]);
        assert_eq!(tree.label(1), Some("det"));
        assert_eq!(sents[0].token(2).pos(), "NN");
    }

    #[test]
    fn comments_and_multiword_lines_skipped() {
        let text = format!(
            "# sent_id = 1\n1-2\tthecat\t_\t_\t_\t_\t_\t_\t_\t_\n{}1.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n\n",
            TWO
        );
        let sents = read_str(&text).unwrap();
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].len(), 2);
    }

    #[test]
    fn bad_head_names_line() {
        let text = "1\tthe\t_\tDT\tDT\t_\tx\tdet\t_\t_\n";
        let err = read_str(text).unwrap_err();
        assert!(matches!(err, TreebankError::Malformed { line: 1, .. }), "{}", err);
        assert!(err.to_string().contains("test.conll:1"));
    }

    #[test]
    fn wrong_column_count() {
        let err = read_str("1\tthe\tDT\n").unwrap_err();
        assert!(matches!(err, TreebankError::Malformed { line: 1, .. }));
    }

    #[test]
    fn cyclic_and_multi_root_rejected() {
        let cyclic = "1\ta\t_\tX\t_\t_\t2\tx\t_\t_\n2\tb\t_\tX\t_\t_\t1\tx\t_\t_\n";
        assert!(matches!(read_str(cyclic), Err(TreebankError::InvalidSentence { .. })));
        let two_roots = "1\ta\t_\tX\t_\t_\t0\tx\t_\t_\n2\tb\t_\tX\t_\t_\t0\tx\t_\t_\n";
        assert!(matches!(
            read_str(two_roots),
            Err(TreebankError::InvalidSentence { .. })
        ));
    }

    #[test]
    fn round_trip_and_tree_columns() {
        let sents = read_str(&format!("{}\n{}", TWO, TWO)).unwrap();
        let mut buf = Vec::new();
        write_conll_to(&mut buf, &sents, None).unwrap();
        let again = read_conll_from(buf.as_slice(), Path::new("x")).unwrap();
        assert_eq!(sents, again);

        let tree = ParseTree::new(vec![2, 0], vec![Some("a".into()), Some("b".into())]).unwrap();
        let mut buf = Vec::new();
        write_conll_to(&mut buf, &sents[..1], Some(&[tree])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let heads: Vec<&str> = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| l.split('\t').nth(6).unwrap())
            .collect();
        assert_eq!(heads, ["2", "0"]);
    }

    #[test]
    fn empty_list_writes_empty_file() {
        let mut buf = Vec::new();
        write_conll_to(&mut buf, &[], None).unwrap();
        assert!(buf.is_empty());
    }
}
