// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Turns manifest records into model-ready dialogues: resolves each source
// (WAV audio, patches container or embeddings container), runs the frontend
// and embedder as needed, and maps speaker ids to dense roster indices in
// first-appearance order.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "convoaffect/encoder.hpp"
#include "convoaffect/manifest.hpp"
#include "convoaffect/model.hpp"
#include "convoaffect/wav.hpp"

namespace convoaffect {

template <class Scalar>
struct UtteranceFeatures {
  VecX<Scalar> pooled;      // u_t; set unless the embedder is linear
  MatX<Scalar> patch_cols;  // flat_dim x L; set for the linear embedder
  bool has_patches() const { return patch_cols.size() > 0; }
};

template <class Scalar>
struct EncodedUtterance {
  int turn = 0;
  std::string speaker;
  int party = 0;  // dense index into the dialogue roster
  int label = 0;
  UtteranceFeatures<Scalar> features;
};

template <class Scalar>
struct EncodedDialogue {
  std::string id;
  std::vector<std::string> roster;  // parties in first-appearance order
  std::vector<EncodedUtterance<Scalar>> utts;
};

template <class Scalar>
using Dataset = std::vector<EncodedDialogue<Scalar>>;

namespace detail {

template <class Scalar>
MatX<Scalar> patches_to_columns(const std::vector<SegmentPatch>& patches) {
  const Index flat = patches.front().rows() * patches.front().cols();
  MatX<Scalar> cols(flat, static_cast<Index>(patches.size()));
  for (std::size_t l = 0; l < patches.size(); ++l) {
    const Eigen::VectorXd v = flatten_patch(patches[l]);
    cols.col(static_cast<Index>(l)) = v.cast<Scalar>();
  }
  return cols;
}

}  // namespace detail

// Loads one utterance's features from its resolved source path.
template <class Scalar>
UtteranceFeatures<Scalar> load_utterance_features(
    const std::string& path, const FrontendConfig& fcfg,
    const EmbedderConfig& ecfg) {
  UtteranceFeatures<Scalar> out;

  std::vector<SegmentPatch> patches;
  if (is_container_file(path)) {
    const PayloadKind kind = sniff_container_kind(path);
    if (kind == PayloadKind::embeddings) {
      if (ecfg.kind != EmbedderKind::precomputed) {
        throw ModeMismatch("embedder \"" + to_string(ecfg.kind) +
                           "\" cannot consume the embeddings container " +
                           path + "; use --embedder precomputed");
      }
      const auto embs =
          embeddings_from_file(read_embedding_file(path), ecfg.dim);
      if (embs.empty()) {
        throw EmptyUtterance("embeddings container is empty: " + path);
      }
      std::vector<VecX<Scalar>> cast;
      cast.reserve(embs.size());
      for (const auto& e : embs) {
        cast.push_back(e.cast<Scalar>());
      }
      out.pooled = statistical_unit(cast);
      return out;
    }
    if (kind == PayloadKind::patches) {
      patches = patches_from_file(read_patch_file(path));
    } else {
      throw ModeMismatch("checkpoint container cannot be a feature source: " +
                         path);
    }
  } else {
    patches = patches_from_waveform(read_wav(path), fcfg);
  }

  switch (ecfg.kind) {
    case EmbedderKind::precomputed:
      throw ModeMismatch(
          "precomputed embedder needs embeddings containers, got patches "
          "from " +
          path);
    case EmbedderKind::linear:
      out.patch_cols = detail::patches_to_columns<Scalar>(patches);
      return out;
    case EmbedderKind::stub: {
      const auto embs = embed_segments(patches, ecfg);
      std::vector<VecX<Scalar>> cast;
      cast.reserve(embs.size());
      for (const auto& e : embs) {
        cast.push_back(e.cast<Scalar>());
      }
      out.pooled = statistical_unit(cast);
      return out;
    }
  }
  throw ConfigError("unreachable embedder kind");
}

template <class Scalar>
Dataset<Scalar> load_dataset(const std::vector<DialogueRecords>& manifest,
                             const FrontendConfig& fcfg,
                             const EmbedderConfig& ecfg,
                             const std::string& data_root = "") {
  ecfg.validate();
  Dataset<Scalar> out;
  out.reserve(manifest.size());
  for (const auto& d : manifest) {
    EncodedDialogue<Scalar> enc;
    enc.id = d.id;
    for (const auto& rec : d.utts) {
      EncodedUtterance<Scalar> u;
      u.turn = rec.turn;
      u.speaker = rec.speaker;
      u.label = rec.label;
      int party = -1;
      for (std::size_t i = 0; i < enc.roster.size(); ++i) {
        if (enc.roster[i] == rec.speaker) {
          party = static_cast<int>(i);
          break;
        }
      }
      if (party < 0) {
        party = static_cast<int>(enc.roster.size());
        enc.roster.push_back(rec.speaker);
      }
      u.party = party;
      u.features = load_utterance_features<Scalar>(
          resolve_source(rec.source, data_root), fcfg, ecfg);
      enc.utts.push_back(std::move(u));
    }
    out.push_back(std::move(enc));
  }
  return out;
}

// Mounts a dialogue's utterance vectors on the tape. With a linear
// embedder the patches are embedded and pooled on-tape, so gradients reach
// the projection.
template <class Scalar>
std::vector<UtteranceInput<Scalar>> mount_utterances(
    Tape<Scalar>& tape, const EncodedDialogue<Scalar>& dialogue,
    const std::optional<LinearEmbedderVars<Scalar>>& embedder) {
  std::vector<UtteranceInput<Scalar>> inputs;
  inputs.reserve(dialogue.utts.size());
  for (const auto& utt : dialogue.utts) {
    UtteranceInput<Scalar> in;
    in.party = utt.party;
    if (utt.features.has_patches()) {
      if (!embedder) {
        throw ModeMismatch("dialogue \"" + dialogue.id +
                           "\" carries raw patches but no linear embedder "
                           "is mounted");
      }
      in.u = statistical_unit(
          embed_patches(tape, *embedder, utt.features.patch_cols));
    } else {
      in.u = tape.leaf(utt.features.pooled);
    }
    inputs.push_back(in);
  }
  return inputs;
}

}  // namespace convoaffect
