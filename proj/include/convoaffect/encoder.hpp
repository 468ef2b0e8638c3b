// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Segment embeddings and the statistical pooling unit.
//
// The embedder is pluggable: "precomputed" consumes embedding containers
// written by an external model, "stub" is a seeded random projection with
// tanh (reproducible without any pretrained asset), "linear" is a trainable
// affine projection of the flattened patch that participates in autodiff.
// Pooling concatenates the coordinate-wise average, maximum and minimum
// over a variable-length embedding sequence into one utterance vector.

#pragma once

#include <string>
#include <vector>

#include "convoaffect/autodiff.hpp"
#include "convoaffect/container.hpp"
#include "convoaffect/frontend.hpp"
#include "convoaffect/rng.hpp"

namespace convoaffect {

enum class EmbedderKind { precomputed, stub, linear };

inline std::string to_string(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::precomputed:
      return "precomputed";
    case EmbedderKind::stub:
      return "stub";
    case EmbedderKind::linear:
      return "linear";
  }
  return "?";
}

inline EmbedderKind embedder_kind_from_string(const std::string& s) {
  if (s == "precomputed") return EmbedderKind::precomputed;
  if (s == "stub") return EmbedderKind::stub;
  if (s == "linear") return EmbedderKind::linear;
  throw ConfigError("unknown embedder kind \"" + s +
                    "\", want precomputed|stub|linear");
}

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::stub;
  std::uint64_t seed = 0;
  int dim = 128;  // embedding dimension per segment

  void validate() const {
    if (dim <= 0) {
      throw ConfigError("embedder dim must be positive");
    }
  }
};

// ---- statistical unit ------------------------------------------------------

// avg + max + min over the sequence, concatenated in that order; for every
// coordinate the min block <= avg block <= max block.
template <class Scalar>
VecX<Scalar> statistical_unit(const std::vector<VecX<Scalar>>& embeddings) {
  if (embeddings.empty()) {
    throw EmptyUtterance("statistical_unit: no segment embeddings");
  }
  const Index dim = embeddings.front().rows();
  VecX<Scalar> avg = VecX<Scalar>::Zero(dim);
  VecX<Scalar> max = embeddings.front();
  VecX<Scalar> min = embeddings.front();
  for (const auto& e : embeddings) {
    if (e.rows() != dim) {
      throw DimError("statistical_unit: embedding dim " +
                     std::to_string(e.rows()) + " vs " + std::to_string(dim));
    }
    avg += e;
    max = max.cwiseMax(e);
    min = min.cwiseMin(e);
  }
  avg /= static_cast<Scalar>(embeddings.size());
  VecX<Scalar> out(3 * dim);
  out << avg, max, min;
  return out;
}

// Tape-side pooling over an embeddings-as-columns matrix (dim x L):
// concat_rows(mean, max, min). Max/min gradients route to the first
// achieving segment on ties.
template <class Scalar>
Var<Scalar> statistical_unit(const Var<Scalar>& embedding_cols) {
  return concat_rows({rowwise_mean(embedding_cols),
                      rowwise_max(embedding_cols),
                      rowwise_min(embedding_cols)});
}

// ---- stub embedder ---------------------------------------------------------

// Patches flatten row-major: entry (r, c) lands at r * cols + c.
inline Eigen::VectorXd flatten_patch(const SegmentPatch& patch) {
  Eigen::VectorXd flat(patch.rows() * patch.cols());
  for (Index r = 0; r < patch.rows(); ++r) {
    for (Index c = 0; c < patch.cols(); ++c) {
      flat[r * patch.cols() + c] = patch(r, c);
    }
  }
  return flat;
}

// dim x (rows*cols) projection with entries ~ N(0, sd = 1/sqrt(rows*cols)),
// drawn row-major from the seed.
inline Eigen::MatrixXd stub_projection(int dim, Index patch_rows,
                                       Index patch_cols, std::uint64_t seed) {
  const double sd =
      1.0 / std::sqrt(static_cast<double>(patch_rows * patch_cols));
  Rng rng(seed);
  Eigen::MatrixXd proj(dim, patch_rows * patch_cols);
  for (Index r = 0; r < proj.rows(); ++r) {
    for (Index c = 0; c < proj.cols(); ++c) {
      proj(r, c) = sd * normal01(rng);
    }
  }
  return proj;
}

// ---- linear (trainable) embedder -------------------------------------------

template <class Scalar>
struct LinearEmbedderParams {
  MatX<Scalar> w;  // dim x (patch_rows*patch_cols)
  MatX<Scalar> b;  // dim x 1

  Index dim() const { return w.rows(); }
  Index flat_dim() const { return w.cols(); }
};

template <class P, class Fn>
void visit_linear_embedder(P& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w", p.w);
  fn(prefix + ".b", p.b);
}

// Weights ~ uniform(-k, k) with k = 1/sqrt(flat_dim), bias zero; the
// fan-in scaling keeps projections of 96x64 patches at unit order.
template <class Scalar>
LinearEmbedderParams<Scalar> init_linear_embedder(int dim, Index flat_dim,
                                                  Rng& rng) {
  LinearEmbedderParams<Scalar> p;
  const double k = 1.0 / std::sqrt(static_cast<double>(flat_dim));
  p.w = detail::uniform_matrix<Scalar>(dim, flat_dim, k, rng);
  p.b = MatX<Scalar>::Zero(dim, 1);
  return p;
}

template <class Scalar>
struct LinearEmbedderVars {
  Var<Scalar> w, b;
};

template <class Scalar>
LinearEmbedderVars<Scalar> mount(Tape<Scalar>& tape,
                                 const LinearEmbedderParams<Scalar>& p,
                                 bool requires_grad) {
  return {tape.leaf(p.w, requires_grad), tape.leaf(p.b, requires_grad)};
}

// Embeds flattened patch columns (flat_dim x L) and returns the dim x L
// embedding matrix on the tape.
template <class Scalar>
Var<Scalar> embed_patches(Tape<Scalar>& tape,
                          const LinearEmbedderVars<Scalar>& emb,
                          const MatX<Scalar>& patch_cols) {
  if (patch_cols.cols() < 1) {
    throw EmptyUtterance("embed_patches: no segments");
  }
  std::vector<Var<Scalar>> cols;
  cols.reserve(static_cast<std::size_t>(patch_cols.cols()));
  for (Index l = 0; l < patch_cols.cols(); ++l) {
    Var<Scalar> col = tape.leaf(patch_cols.col(l));
    cols.push_back(emb.w * col + emb.b);
  }
  return concat_cols<Scalar>(cols);
}

// ---- plain embedding paths --------------------------------------------------

// Stub mode: tanh(P * flat(patch)) per segment. Precomputed mode rejects
// patches (embeddings bypass this op); linear mode needs its parameters,
// use the overload below.
std::vector<Eigen::VectorXd> embed_segments(
    const std::vector<SegmentPatch>& patches, const EmbedderConfig& cfg);

std::vector<Eigen::VectorXd> embed_segments(
    const std::vector<SegmentPatch>& patches,
    const LinearEmbedderParams<double>& params);

// Embedding container round-trips; dim is checked against the run config
// on read.
EmbeddingFile embeddings_to_file(const std::vector<Eigen::VectorXd>& embs);
std::vector<Eigen::VectorXd> embeddings_from_file(const EmbeddingFile& file,
                                                  int expect_dim);

}  // namespace convoaffect
