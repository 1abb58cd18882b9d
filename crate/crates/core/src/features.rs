//! Fitted featurizer joining the enabled blocks in the fixed order
//! bag-of-words, bag-of-characters, tweet embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Tweet};
use crate::embeddings::{common_component, project_out, sif_embed, EmbeddingTable, SifConfig, UnigramModel};
use crate::error::{Error, Result};
use crate::preprocess::{basic_tokens, semantic_preprocess, surfaces, PreprocessConfig, Token};
use crate::vectorize::{
    concat_features, extract_char_ngrams, extract_word_ngrams, Block, NgramConfig, SparseVector, Vocabulary,
};

/// A tweet ready for featurization: raw text for character n-grams and the
/// basic-preprocessed tokens for everything else.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub raw: String,
    pub basic: Vec<Token>,
    pub label: Option<Label>,
}

impl Instance {
    pub fn from_tweet(tweet: &Tweet, config: &PreprocessConfig) -> Self {
        Instance {
            id: tweet.id.clone(),
            raw: tweet.text.clone(),
            basic: basic_tokens(&tweet.text, config),
            label: tweet.label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Bow,
    Boc,
    Embedding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub kind: BlockKind,
    pub dim: usize,
}

/// Feature blocks and their dimensions at fit time.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub blocks: Vec<BlockLayout>,
}

impl FeatureLayout {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn block_dim(&self, kind: BlockKind) -> Option<usize> {
        self.blocks.iter().find(|b| b.kind == kind).map(|b| b.dim)
    }

    pub fn check(&self, other: &FeatureLayout) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch {
                expected: self.to_string(),
                actual: other.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for FeatureLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{}:{}", serde_json::to_value(b.kind).unwrap().as_str().unwrap(), b.dim))
            .collect();
        f.write_str(&parts.join("+"))
    }
}

/// Word vectors, unigram statistics and the SIF settings.
#[derive(Clone, Debug)]
pub struct EmbeddingFeatures {
    pub table: Arc<EmbeddingTable>,
    pub unigram: Arc<UnigramModel>,
    pub sif: SifConfig,
}

/// Which blocks to fit.
#[derive(Clone, Debug, Default)]
pub struct FeatureSpec {
    pub bow: Option<NgramConfig>,
    pub boc: Option<NgramConfig>,
    pub embedding: Option<EmbeddingFeatures>,
}

#[derive(Clone, Debug)]
pub struct FeaturePipeline {
    pub preprocess: PreprocessConfig,
    pub bow: Option<Vocabulary>,
    pub boc: Option<Vocabulary>,
    pub embedding: Option<EmbeddingFeatures>,
    /// Fitted common component, present only when removal is enabled.
    pub common_component: Option<Vec<f64>>,
    layout: FeatureLayout,
}

impl FeaturePipeline {
    pub fn fit(instances: &[Instance], spec: FeatureSpec, preprocess: PreprocessConfig) -> Result<Self> {
        if spec.bow.is_none() && spec.boc.is_none() && spec.embedding.is_none() {
            return Err(Error::Config("at least one feature block must be enabled".into()));
        }
        let semantic: Vec<Vec<String>> = instances
            .par_iter()
            .map(|i| surfaces(&semantic_preprocess(&i.basic, &preprocess)))
            .collect();
        let bow = spec
            .bow
            .map(|cfg| {
                let docs: Vec<_> = semantic.par_iter().map(|t| extract_word_ngrams(t, cfg.n_max)).collect();
                Vocabulary::fit(&docs, cfg)
            })
            .transpose()?;
        let boc = spec
            .boc
            .map(|cfg| {
                let docs: Vec<_> = instances
                    .par_iter()
                    .map(|i| extract_char_ngrams(&i.raw, cfg.n_max))
                    .collect();
                Vocabulary::fit(&docs, cfg)
            })
            .transpose()?;
        let mut common = None;
        if let Some(emb) = &spec.embedding {
            emb.sif.validate()?;
            if emb.sif.remove_common_component {
                let rows: Vec<Vec<f64>> = semantic
                    .par_iter()
                    .map(|t| sif_embed(t, &emb.table, &emb.unigram, &emb.sif))
                    .collect();
                common = common_component(&rows)?;
            }
        }
        let mut layout = FeatureLayout::default();
        if let Some(v) = &bow {
            layout.blocks.push(BlockLayout {
                kind: BlockKind::Bow,
                dim: v.len(),
            });
        }
        if let Some(v) = &boc {
            layout.blocks.push(BlockLayout {
                kind: BlockKind::Boc,
                dim: v.len(),
            });
        }
        if let Some(e) = &spec.embedding {
            layout.blocks.push(BlockLayout {
                kind: BlockKind::Embedding,
                dim: e.table.dim(),
            });
        }
        Ok(FeaturePipeline {
            preprocess,
            bow,
            boc,
            embedding: spec.embedding,
            common_component: common,
            layout,
        })
    }

    /// Reassembles a pipeline from persisted parts, checking the layout.
    pub fn from_parts(
        preprocess: PreprocessConfig,
        bow: Option<Vocabulary>,
        boc: Option<Vocabulary>,
        embedding: Option<EmbeddingFeatures>,
        common_component: Option<Vec<f64>>,
        layout: FeatureLayout,
    ) -> Result<Self> {
        let mut actual = FeatureLayout::default();
        for (kind, dim) in [
            (BlockKind::Bow, bow.as_ref().map(Vocabulary::len)),
            (BlockKind::Boc, boc.as_ref().map(Vocabulary::len)),
            (BlockKind::Embedding, embedding.as_ref().map(|e| e.table.dim())),
        ] {
            if let Some(dim) = dim {
                actual.blocks.push(BlockLayout { kind, dim });
            }
        }
        layout.check(&actual)?;
        Ok(FeaturePipeline {
            preprocess,
            bow,
            boc,
            embedding,
            common_component,
            layout,
        })
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn featurize(&self, instance: &Instance) -> SparseVector {
        let semantic = surfaces(&semantic_preprocess(&instance.basic, &self.preprocess));
        let bow = self
            .bow
            .as_ref()
            .map(|v| v.transform(&extract_word_ngrams(&semantic, v.config().n_max)));
        let boc = self
            .boc
            .as_ref()
            .map(|v| v.transform(&extract_char_ngrams(&instance.raw, v.config().n_max)));
        let emb = self.embedding.as_ref().map(|e| {
            let mut rows = vec![sif_embed(&semantic, &e.table, &e.unigram, &e.sif)];
            if let Some(u) = &self.common_component {
                project_out(&mut rows, u);
            }
            rows.pop().unwrap()
        });
        let mut blocks = Vec::with_capacity(3);
        blocks.extend(bow.as_ref().map(Block::Sparse));
        blocks.extend(boc.as_ref().map(Block::Sparse));
        blocks.extend(emb.as_deref().map(Block::Dense));
        let dims: Vec<usize> = self.layout.blocks.iter().map(|b| b.dim).collect();
        concat_features(&blocks, Some(&dims)).expect("blocks follow the fitted layout")
    }

    pub fn featurize_all(&self, instances: &[Instance]) -> Vec<SparseVector> {
        instances.par_iter().map(|i| self.featurize(i)).collect()
    }

    /// Serializable description of everything but the vocabularies and
    /// the embedding files themselves.
    pub fn manifest(&self, embedding_paths: Option<EmbeddingPaths>) -> PipelineManifest {
        PipelineManifest {
            format_version: MANIFEST_VERSION,
            layout: self.layout.clone(),
            preprocess: PreprocessManifest::from(&self.preprocess),
            bow: self.bow.as_ref().map(Vocabulary::config),
            boc: self.boc.as_ref().map(Vocabulary::config),
            embedding: self.embedding.as_ref().map(|e| EmbeddingManifest {
                sif: e.sif,
                paths: embedding_paths.clone(),
                common_component: self.common_component.clone(),
            }),
        }
    }
}

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPaths {
    pub vectors: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subwords: Option<PathBuf>,
    pub unigrams: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub sif: SifConfig,
    pub paths: Option<EmbeddingPaths>,
    pub common_component: Option<Vec<f64>>,
}

/// Preprocessing settings with deterministic ordering for persistence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessManifest {
    pub negation_words: BTreeSet<String>,
    pub negation_scope: usize,
    pub stopwords: BTreeSet<String>,
    pub lemma_table: BTreeMap<String, String>,
    pub repeat_cap: usize,
}

impl From<&PreprocessConfig> for PreprocessManifest {
    fn from(c: &PreprocessConfig) -> Self {
        PreprocessManifest {
            negation_words: c.negation_words.iter().cloned().collect(),
            negation_scope: c.negation_scope,
            stopwords: c.stopwords.iter().cloned().collect(),
            lemma_table: c.lemma_table.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            repeat_cap: c.repeat_cap,
        }
    }
}

impl From<PreprocessManifest> for PreprocessConfig {
    fn from(m: PreprocessManifest) -> Self {
        PreprocessConfig {
            negation_words: m.negation_words.into_iter().collect(),
            negation_scope: m.negation_scope,
            stopwords: m.stopwords.into_iter().collect(),
            lemma_table: m.lemma_table.into_iter().collect(),
            repeat_cap: m.repeat_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub format_version: u32,
    pub layout: FeatureLayout,
    pub preprocess: PreprocessManifest,
    pub bow: Option<NgramConfig>,
    pub boc: Option<NgramConfig>,
    pub embedding: Option<EmbeddingManifest>,
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn instances(texts: &[&str]) -> Vec<Instance> {
        let cfg = PreprocessConfig::spanish_default();
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Instance::from_tweet(&Tweet::new(i.to_string(), *t, Some(Label::P)), &cfg))
            .collect()
    }

    fn embedding(dim: usize) -> EmbeddingFeatures {
        let words: HashMap<String, Vec<f64>> = [("genial", 1.0), ("feo", -1.0)]
            .iter()
            .map(|(w, s)| (w.to_string(), (0..dim).map(|k| s * (k + 1) as f64).collect()))
            .collect();
        EmbeddingFeatures {
            table: Arc::new(EmbeddingTable::new(dim, words, None).unwrap()),
            unigram: Arc::new(UnigramModel::default()),
            sif: SifConfig::default(),
        }
    }

    #[test]
    fn layout_follows_enabled_blocks() {
        let data = instances(&["fue genial", "muy feo", "no es genial"]);
        let spec = FeatureSpec {
            bow: Some(NgramConfig::WORD_DEFAULT),
            boc: Some(NgramConfig::CHAR_DEFAULT),
            embedding: Some(embedding(50)),
        };
        let p = FeaturePipeline::fit(&data, spec, PreprocessConfig::spanish_default()).unwrap();
        let dims: Vec<_> = p.layout().blocks.iter().map(|b| b.kind).collect();
        assert_eq!(dims, vec![BlockKind::Bow, BlockKind::Boc, BlockKind::Embedding]);
        let v1 = p.bow.as_ref().unwrap().len();
        let v2 = p.boc.as_ref().unwrap().len();
        assert_eq!(p.dim(), v1 + v2 + 50);
        let x = p.featurize(&data[0]);
        assert_eq!(x.dim(), p.dim());
        // "genial" contributes to the embedding block
        assert!(x.indices().iter().any(|&i| i >= v1 + v2));

        let no_emb = FeatureSpec {
            bow: Some(NgramConfig::WORD_DEFAULT),
            boc: Some(NgramConfig::CHAR_DEFAULT),
            embedding: None,
        };
        let q = FeaturePipeline::fit(&data, no_emb, PreprocessConfig::spanish_default()).unwrap();
        assert_eq!(p.dim() - q.dim(), 50);
    }

    #[test]
    fn rejects_empty_spec_and_bad_layout() {
        let data = instances(&["a"]);
        assert!(FeaturePipeline::fit(&data, FeatureSpec::default(), PreprocessConfig::spanish_default()).is_err());
        let wrong = FeatureLayout {
            blocks: vec![BlockLayout {
                kind: BlockKind::Embedding,
                dim: 3,
            }],
        };
        let r = FeaturePipeline::from_parts(
            PreprocessConfig::spanish_default(),
            None,
            None,
            Some(embedding(2)),
            None,
            wrong,
        );
        assert!(matches!(r, Err(Error::LayoutMismatch { .. })));
    }
}
