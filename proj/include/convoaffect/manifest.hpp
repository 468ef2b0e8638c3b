// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// JSONL dataset manifests. One record per line:
//   {"dialogue_id": "d1", "turn": 0, "speaker": "Ross",
//    "label": "neutral", "source": "audio/d1_0.wav"}
//
// label may be a name from the fixed table or an integer 0-6; source points
// at a WAV file or a "CAFE" container (embeddings or patches). Turns within
// a dialogue must be dense 0..n-1 with no duplicates; line order is
// irrelevant, dialogues come back sorted by id.

#pragma once

#include <string>
#include <vector>

#include "convoaffect/common.hpp"

namespace convoaffect {

struct UtteranceRecord {
  std::string dialogue_id;
  int turn = 0;
  std::string speaker;
  int label = 0;  // 0..6
  std::string source;
};

struct DialogueRecords {
  std::string id;
  std::vector<UtteranceRecord> utts;  // sorted by turn
};

std::vector<DialogueRecords> load_manifest(const std::string& path);

void save_manifest(const std::string& path,
                   const std::vector<DialogueRecords>& dialogues);

// Prefixes relative sources with data_root (or $CONVO_AFFECT_DATA_ROOT when
// data_root is empty); absolute paths pass through.
std::string resolve_source(const std::string& source,
                           const std::string& data_root);

}  // namespace convoaffect
