// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// One INI-style key-value file configures the whole pipeline. Sections:
// [frontend], [embedder], [model], [train]. Keys may also be written
// flat as "section.key = value". Unknown sections or keys are rejected;
// `config --dump` prints every key with its current value.

#pragma once

#include <string>
#include <vector>

#include "convoaffect/encoder.hpp"
#include "convoaffect/frontend.hpp"
#include "convoaffect/model.hpp"
#include "convoaffect/train.hpp"

namespace convoaffect {

struct RunConfig {
  FrontendConfig frontend;
  EmbedderConfig embedder;
  ModelConfig model;
  TrainConfig train;

  RunConfig() { sync_derived(); }

  // d_u follows the embedder dim; it is derived, not a config key.
  void sync_derived() { model.d_u = 3 * embedder.dim; }

  void validate() const {
    frontend.validate();
    embedder.validate();
    model.validate();
    train.validate();
  }
};

// Parses a config file into `base` (defaults stay where the file is
// silent). Throws ConfigError on unknown keys or malformed values.
RunConfig parse_config_file(const std::string& path, RunConfig base = {});

// Applies "section.key=value" overrides, e.g. from repeated --set flags.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Full dump in file syntax; parsing the dump reproduces the config.
std::string dump_config(const RunConfig& cfg);

}  // namespace convoaffect
