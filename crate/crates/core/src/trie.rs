//! Token-level trie over sentence-start sequences.
//!
//! Every sentence contributes its first `min(len, max_depth)` tokens. Each
//! node records the sentences whose prefix passes through it, so a node
//! with exactly one matched sentence pins down a unique document position.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::document::TokenizedView;
use crate::oracle::TokenId;

pub const DEFAULT_MAX_DEPTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("cannot index an empty tokenized view")]
    EmptyView,
    #[error("max_depth must be at least 1")]
    InvalidDepth,
    #[error("path {0:?} does not exist in the trie")]
    InvalidPath(Vec<TokenId>),
}

#[derive(Debug, Clone)]
struct Node {
    children: BTreeMap<TokenId, usize>,
    matched: Vec<usize>,
    ending: Vec<usize>,
}

impl Node {
    fn new() -> Self {
        Self {
            children: BTreeMap::new(),
            matched: Vec::new(),
            ending: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrefixTrie {
    nodes: Vec<Node>,
    max_depth: usize,
    sentence_count: usize,
}

/// A walk from the root. `nodes[0]` is always the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriePath {
    tokens: Vec<TokenId>,
    nodes: Vec<usize>,
}

impl TriePath {
    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn depth(&self) -> usize {
        self.tokens.len()
    }

    fn node(&self) -> usize {
        *self.nodes.last().expect("path has a root")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Unique(usize),
    Ambiguous(Vec<usize>),
}

pub fn build_trie(view: &TokenizedView, max_depth: usize) -> Result<PrefixTrie, IndexError> {
    if view.is_empty() {
        return Err(IndexError::EmptyView);
    }
    if max_depth == 0 {
        return Err(IndexError::InvalidDepth);
    }
    let mut nodes = vec![Node::new()];
    for s in &view.sentences {
        let idx = s.sentence_index;
        let mut cur = 0;
        nodes[cur].matched.push(idx);
        let take = s.token_ids.len().min(max_depth);
        for &t in &s.token_ids[..take] {
            let next = match nodes[cur].children.get(&t) {
                Some(&n) => n,
                None => {
                    nodes.push(Node::new());
                    let n = nodes.len() - 1;
                    nodes[cur].children.insert(t, n);
                    n
                }
            };
            cur = next;
            nodes[cur].matched.push(idx);
        }
        if take == s.token_ids.len() {
            nodes[cur].ending.push(idx);
        }
    }
    Ok(PrefixTrie {
        nodes,
        max_depth,
        sentence_count: view.len(),
    })
}

impl PrefixTrie {
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> TriePath {
        TriePath {
            tokens: Vec::new(),
            nodes: vec![0],
        }
    }

    fn check(&self, path: &TriePath) -> Result<usize, IndexError> {
        let valid =
            path.nodes.len() == path.tokens.len() + 1
                && path.nodes[0] == 0
                && path.tokens.iter().zip(path.nodes.windows(2)).all(|(t, w)| {
                    self.nodes.get(w[0]).and_then(|n| n.children.get(t)) == Some(&w[1])
                });
        if valid {
            Ok(path.node())
        } else {
            Err(IndexError::InvalidPath(path.tokens.clone()))
        }
    }

    pub fn walk(&self, tokens: &[TokenId]) -> Result<TriePath, IndexError> {
        let mut path = self.root();
        for &t in tokens {
            path = self
                .step(&path, t)
                .map_err(|_| IndexError::InvalidPath(tokens.to_vec()))?;
        }
        Ok(path)
    }

    pub fn step(&self, path: &TriePath, token: TokenId) -> Result<TriePath, IndexError> {
        let node = self.check(path)?;
        let &child = self.nodes[node].children.get(&token).ok_or_else(|| {
            let mut t = path.tokens.clone();
            t.push(token);
            IndexError::InvalidPath(t)
        })?;
        let mut next = path.clone();
        next.tokens.push(token);
        next.nodes.push(child);
        Ok(next)
    }

    /// Valid next tokens after `path`, ascending.
    pub fn allowed_tokens(&self, path: &TriePath) -> Result<Vec<TokenId>, IndexError> {
        let node = self.check(path)?;
        Ok(self.nodes[node].children.keys().copied().collect())
    }

    /// Sentences whose prefix passes through `path`, ascending.
    pub fn matched(&self, path: &TriePath) -> Result<&[usize], IndexError> {
        Ok(&self.nodes[self.check(path)?].matched)
    }

    /// Sentences whose complete token sequence ends exactly at `path`.
    pub fn ending(&self, path: &TriePath) -> Result<&[usize], IndexError> {
        Ok(&self.nodes[self.check(path)?].ending)
    }

    pub fn is_exhausted(&self, path: &TriePath) -> Result<bool, IndexError> {
        Ok(!self.ending(path)?.is_empty())
    }

    pub fn is_leaf(&self, path: &TriePath) -> Result<bool, IndexError> {
        Ok(self.nodes[self.check(path)?].children.is_empty())
    }

    pub fn resolve_unique(&self, path: &TriePath) -> Result<Resolution, IndexError> {
        let matched = self.matched(path)?;
        Ok(if matched.len() == 1 {
            Resolution::Unique(matched[0])
        } else {
            Resolution::Ambiguous(matched.to_vec())
        })
    }

    /// JSON adjacency dump for inspection.
    pub fn dump(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct DumpNode<'a> {
            id: usize,
            children: &'a BTreeMap<TokenId, usize>,
            matched: &'a [usize],
            ending: &'a [usize],
        }
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| DumpNode {
                id,
                children: &n.children,
                matched: &n.matched,
                ending: &n.ending,
            })
            .collect();
        serde_json::json!({ "max_depth": self.max_depth, "nodes": nodes })
    }
}
