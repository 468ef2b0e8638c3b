// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Deterministic synthetic corpus for tests and demos. Labels are the
// argmax of seven fixed linear probes of the pooled utterance vector, so
// the mapping is learnable from u_t alone.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convoaffect/manifest.hpp"

namespace convoaffect {

struct SynthSpec {
  std::uint64_t seed = 0;
  int dialogues = 8;
  int utterances = 6;  // per dialogue
  int d_emb = 8;
  int parties = 2;   // speakers rotate round-robin
  bool patches = false;  // emit patch containers instead of embeddings
};

// Writes one container per utterance plus manifest.jsonl into out_dir;
// returns the dialogues it wrote (sources relative to out_dir).
std::vector<DialogueRecords> make_synthetic_corpus(const SynthSpec& spec,
                                                   const std::string& out_dir);

}  // namespace convoaffect
