// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Checkpoint persistence on the "CAFE" framing (kind = 3): a length-prefixed
// JSON header with configs, training metadata and the tensor manifest,
// followed by float32 payloads in the fixed visit order. Round-trips are
// bit-exact for float-scalar parameter sets.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convoaffect/container.hpp"
#include "convoaffect/encoder.hpp"
#include "convoaffect/model.hpp"

namespace convoaffect {

inline constexpr int kCheckpointFormatVersion = 1;

// Everything the trainer updates: the dialogue model and, when the
// embedder is trainable, its projection.
template <class Scalar>
struct ParamSet {
  ModelParams<Scalar> model;
  std::optional<LinearEmbedderParams<Scalar>> embedder;
};

template <class P, class Fn>
void visit_param_set(P& p, Fn&& fn) {
  visit_model(p.model, fn);
  if (p.embedder) {
    visit_linear_embedder(*p.embedder, "embedder", fn);
  }
}

template <class Scalar>
struct Checkpoint {
  ModelConfig model_cfg;
  EmbedderConfig embedder_cfg;
  int patch_flat_dim = 0;  // 0 unless the embedder is linear
  int epoch = 0;
  double metric = -1.0;  // best validation weighted F1, -1 when no val split
  ParamSet<Scalar> params;
};

// ---- config <-> json -------------------------------------------------------

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"d_u", cfg.d_u},
          {"h_c", cfg.h_c},
          {"h_s", cfg.h_s},
          {"h_i", cfg.h_i},
          {"h_e", cfg.h_e},
          {"h_a", cfg.h_a},
          {"n_classes", cfg.n_classes},
          {"bidirectional", cfg.bidirectional},
          {"no_attention_context", cfg.no_attention_context},
          {"no_self_state", cfg.no_self_state},
          {"no_intra_state", cfg.no_intra_state},
          {"emotion_uses_intra", cfg.emotion_uses_intra},
          {"state_seed", cfg.state_seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.d_u = j.at("d_u").get<int>();
  cfg.h_c = j.at("h_c").get<int>();
  cfg.h_s = j.at("h_s").get<int>();
  cfg.h_i = j.at("h_i").get<int>();
  cfg.h_e = j.at("h_e").get<int>();
  cfg.h_a = j.at("h_a").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.bidirectional = j.at("bidirectional").get<bool>();
  cfg.no_attention_context = j.at("no_attention_context").get<bool>();
  cfg.no_self_state = j.at("no_self_state").get<bool>();
  cfg.no_intra_state = j.at("no_intra_state").get<bool>();
  cfg.emotion_uses_intra = j.at("emotion_uses_intra").get<bool>();
  cfg.state_seed = j.at("state_seed").get<std::uint64_t>();
  return cfg;
}

inline nlohmann::json embedder_config_to_json(const EmbedderConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},
          {"seed", cfg.seed},
          {"dim", cfg.dim}};
}

inline EmbedderConfig embedder_config_from_json(const nlohmann::json& j) {
  EmbedderConfig cfg;
  cfg.kind = embedder_kind_from_string(j.at("kind").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.dim = j.at("dim").get<int>();
  return cfg;
}

// ---- save / load -----------------------------------------------------------

template <class Scalar>
void save_checkpoint(const std::string& path, const Checkpoint<Scalar>& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<const MatX<Scalar>*> payload;
  visit_param_set(const_cast<ParamSet<Scalar>&>(ckpt.params),
                  [&](const std::string& name, const MatX<Scalar>& m) {
                    tensors.push_back({{"name", name},
                                       {"rows", m.rows()},
                                       {"cols", m.cols()}});
                    payload.push_back(&m);
                  });

  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["model"] = model_config_to_json(ckpt.model_cfg);
  header["embedder"] = embedder_config_to_json(ckpt.embedder_cfg);
  header["patch_flat_dim"] = ckpt.patch_flat_dim;
  header["training"] = {{"epoch", ckpt.epoch}, {"metric", ckpt.metric}};
  header["tensors"] = tensors;
  const std::string header_str = header.dump();

  detail::ByteWriter w;
  detail::write_container_prefix(w, PayloadKind::checkpoint);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u32(static_cast<std::uint32_t>(header_str.size()));
  w.raw(header_str.data(), header_str.size());
  for (const auto* m : payload) {
    for (Index r = 0; r < m->rows(); ++r) {
      for (Index c = 0; c < m->cols(); ++c) {
        w.f32(static_cast<float>((*m)(r, c)));
      }
    }
  }
  detail::write_file_bytes(path, w.bytes);
}

template <class Scalar>
Checkpoint<Scalar> load_checkpoint(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size()};
  if (detail::read_container_prefix(r) != PayloadKind::checkpoint) {
    throw FormatError("not a checkpoint container: " + path);
  }
  const std::uint32_t tensor_count = r.u32();
  const std::uint32_t header_len = r.u32();
  r.require(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(
        std::string(reinterpret_cast<const char*>(bytes.data()) + r.pos,
                    header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt checkpoint header in " + path + ": " +
                      e.what());
  }
  r.pos += header_len;

  const int version = header.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       ", this build reads " +
                       std::to_string(kCheckpointFormatVersion));
  }

  Checkpoint<Scalar> ckpt;
  try {
    ckpt.model_cfg = model_config_from_json(header.at("model"));
    ckpt.embedder_cfg = embedder_config_from_json(header.at("embedder"));
    ckpt.patch_flat_dim = header.at("patch_flat_dim").get<int>();
    ckpt.epoch = header.at("training").at("epoch").get<int>();
    ckpt.metric = header.at("training").at("metric").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("incomplete checkpoint header in " + path + ": " +
                      e.what());
  }

  ckpt.params.model = zero_model_params<Scalar>(ckpt.model_cfg);
  if (ckpt.embedder_cfg.kind == EmbedderKind::linear) {
    if (ckpt.patch_flat_dim <= 0) {
      throw FormatError("linear embedder checkpoint lacks patch_flat_dim");
    }
    LinearEmbedderParams<Scalar> emb;
    emb.w = MatX<Scalar>::Zero(ckpt.embedder_cfg.dim, ckpt.patch_flat_dim);
    emb.b = MatX<Scalar>::Zero(ckpt.embedder_cfg.dim, 1);
    ckpt.params.embedder = std::move(emb);
  }

  const auto& tensors = header.at("tensors");
  if (tensors.size() != tensor_count) {
    throw FormatError("tensor count mismatch between header and manifest in " +
                      path);
  }
  std::size_t i = 0;
  visit_param_set(ckpt.params, [&](const std::string& name, MatX<Scalar>& m) {
    if (i >= tensors.size()) {
      throw FormatError("checkpoint is missing tensor \"" + name + "\"");
    }
    const auto& meta = tensors.at(i);
    if (meta.at("name").get<std::string>() != name ||
        meta.at("rows").get<Index>() != m.rows() ||
        meta.at("cols").get<Index>() != m.cols()) {
      throw FormatError("checkpoint tensor " + std::to_string(i) +
                        " does not match expected \"" + name + "\" " +
                        shape_str(m.rows(), m.cols()));
    }
    for (Index row = 0; row < m.rows(); ++row) {
      for (Index col = 0; col < m.cols(); ++col) {
        m(row, col) = static_cast<Scalar>(r.f32());
      }
    }
    ++i;
  });
  if (i != tensors.size()) {
    throw FormatError("checkpoint has " + std::to_string(tensors.size()) +
                      " tensors, expected " + std::to_string(i));
  }
  if (r.pos != r.size) {
    throw FormatError("trailing bytes after checkpoint payload: " + path);
  }
  return ckpt;
}

}  // namespace convoaffect
