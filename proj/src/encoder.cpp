// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/encoder.hpp"

namespace convoaffect {

std::vector<Eigen::VectorXd> embed_segments(
    const std::vector<SegmentPatch>& patches, const EmbedderConfig& cfg) {
  cfg.validate();
  if (patches.empty()) {
    throw EmptyUtterance("embed_segments: no patches");
  }
  switch (cfg.kind) {
    case EmbedderKind::precomputed:
      throw ModeMismatch(
          "precomputed embedder cannot consume patches; point the manifest "
          "at an embeddings container instead");
    case EmbedderKind::linear:
      throw ModeMismatch(
          "linear embedder needs its trainable parameters; use the overload "
          "taking LinearEmbedderParams");
    case EmbedderKind::stub:
      break;
  }
  const Eigen::MatrixXd proj = stub_projection(
      cfg.dim, patches.front().rows(), patches.front().cols(), cfg.seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(patches.size());
  for (const auto& patch : patches) {
    if (patch.rows() != patches.front().rows() ||
        patch.cols() != patches.front().cols()) {
      throw DimError("embed_segments: inconsistent patch shapes");
    }
    out.push_back((proj * flatten_patch(patch)).array().tanh().matrix());
  }
  return out;
}

std::vector<Eigen::VectorXd> embed_segments(
    const std::vector<SegmentPatch>& patches,
    const LinearEmbedderParams<double>& params) {
  if (patches.empty()) {
    throw EmptyUtterance("embed_segments: no patches");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(patches.size());
  for (const auto& patch : patches) {
    const Eigen::VectorXd flat = flatten_patch(patch);
    if (flat.rows() != params.flat_dim()) {
      throw DimError("embed_segments: patch has " + std::to_string(flat.rows()) +
                     " values, embedder expects " +
                     std::to_string(params.flat_dim()));
    }
    out.push_back(params.w * flat + params.b.col(0));
  }
  return out;
}

EmbeddingFile embeddings_to_file(const std::vector<Eigen::VectorXd>& embs) {
  if (embs.empty()) {
    throw EmptyUtterance("no embeddings to serialize");
  }
  EmbeddingFile file;
  file.count = static_cast<std::uint32_t>(embs.size());
  file.dim = static_cast<std::uint32_t>(embs.front().rows());
  file.data.reserve(static_cast<std::size_t>(file.count) * file.dim);
  for (const auto& e : embs) {
    if (e.rows() != static_cast<Index>(file.dim)) {
      throw DimError("inconsistent embedding dims in sequence");
    }
    for (Index i = 0; i < e.rows(); ++i) {
      file.data.push_back(static_cast<float>(e[i]));
    }
  }
  return file;
}

std::vector<Eigen::VectorXd> embeddings_from_file(const EmbeddingFile& file,
                                                  int expect_dim) {
  if (static_cast<int>(file.dim) != expect_dim) {
    throw DimError("embedding container declares dim " +
                   std::to_string(file.dim) + ", run expects " +
                   std::to_string(expect_dim));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(file.count);
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < file.count; ++i) {
    Eigen::VectorXd e(file.dim);
    for (std::uint32_t d = 0; d < file.dim; ++d) {
      e[d] = static_cast<double>(file.data[pos++]);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace convoaffect
