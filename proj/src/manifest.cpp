// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/manifest.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "convoaffect/metrics.hpp"

namespace convoaffect {

namespace {

using nlohmann::json;

int parse_label(const json& v, const std::string& where) {
  if (v.is_string()) {
    return emotion_id_from_name(v.get<std::string>());
  }
  if (v.is_number_integer()) {
    const int id = v.get<int>();
    if (id < 0 || id >= static_cast<int>(emotion_names().size())) {
      throw DataError("label id " + std::to_string(id) + " out of range " +
                      where);
    }
    return id;
  }
  throw DataError("label must be a name or an integer " + where);
}

}  // namespace

std::vector<DialogueRecords> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw DataError("cannot open manifest: " + path);
  }
  std::map<std::string, std::vector<UtteranceRecord>> by_dialogue;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where =
        "(" + path + ":" + std::to_string(line_no) + ")";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("manifest line is not valid JSON " + where + ": " +
                      e.what());
    }
    for (const char* key : {"dialogue_id", "turn", "speaker", "label",
                            "source"}) {
      if (!rec.contains(key)) {
        throw DataError(std::string("missing field \"") + key + "\" " + where);
      }
    }
    UtteranceRecord u;
    u.dialogue_id = rec.at("dialogue_id").get<std::string>();
    u.turn = rec.at("turn").get<int>();
    u.speaker = rec.at("speaker").get<std::string>();
    u.label = parse_label(rec.at("label"), where);
    u.source = rec.at("source").get<std::string>();
    if (u.dialogue_id.empty()) {
      throw DataError("empty dialogue_id " + where);
    }
    if (u.turn < 0) {
      throw DataError("negative turn " + where);
    }
    if (u.speaker.empty()) {
      throw DataError("empty speaker id " + where);
    }
    if (u.source.empty()) {
      throw DataError("empty source " + where);
    }
    if (!seen.insert({u.dialogue_id, u.turn}).second) {
      throw DataError("duplicate turn " + std::to_string(u.turn) +
                      " in dialogue \"" + u.dialogue_id + "\" " + where);
    }
    by_dialogue[u.dialogue_id].push_back(std::move(u));
  }

  std::vector<DialogueRecords> out;
  out.reserve(by_dialogue.size());
  for (auto& [id, utts] : by_dialogue) {
    std::sort(utts.begin(), utts.end(),
              [](const UtteranceRecord& a, const UtteranceRecord& b) {
                return a.turn < b.turn;
              });
    for (std::size_t i = 0; i < utts.size(); ++i) {
      if (utts[i].turn != static_cast<int>(i)) {
        throw DataError("dialogue \"" + id + "\" has a gap: expected turn " +
                        std::to_string(i) + ", found " +
                        std::to_string(utts[i].turn));
      }
    }
    out.push_back({id, std::move(utts)});
  }
  return out;
}

void save_manifest(const std::string& path,
                   const std::vector<DialogueRecords>& dialogues) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw DataError("cannot open manifest for writing: " + path);
  }
  for (const auto& d : dialogues) {
    for (const auto& u : d.utts) {
      json rec;
      rec["dialogue_id"] = u.dialogue_id;
      rec["turn"] = u.turn;
      rec["speaker"] = u.speaker;
      rec["label"] = emotion_names()[static_cast<std::size_t>(u.label)];
      rec["source"] = u.source;
      os << rec.dump() << "\n";
    }
  }
}

std::string resolve_source(const std::string& source,
                           const std::string& data_root) {
  std::filesystem::path p(source);
  if (p.is_absolute()) {
    return source;
  }
  std::string root = data_root;
  if (root.empty()) {
    if (const char* env = std::getenv("CONVO_AFFECT_DATA_ROOT")) {
      root = env;
    }
  }
  if (root.empty()) {
    return source;
  }
  return (std::filesystem::path(root) / p).string();
}

}  // namespace convoaffect
