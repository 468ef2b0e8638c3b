// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace convoaffect {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) {
      throw std::invalid_argument(v);
    }
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": cannot parse number \"" + v + "\"");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key \"" + key + "\": cannot parse integer \"" + v + "\"");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key \"" + key + "\": cannot parse unsigned \"" + v +
                      "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key \"" + key + "\": cannot parse bool \"" + v + "\"");
}

// Key table mapping "section.key" to a setter and a printer; one place
// defines the whole surface.
struct KeyEntry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::map<std::string, KeyEntry>& key_table() {
  static const std::map<std::string, KeyEntry> table = {
      {"frontend.target_rate",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.target_rate =
              static_cast<int>(parse_int("frontend.target_rate", v));
        },
        [](const RunConfig& c) { return std::to_string(c.frontend.target_rate); }}},
      {"frontend.window_ms",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.window_ms = parse_double("frontend.window_ms", v);
        },
        [](const RunConfig& c) { return fmt_double(c.frontend.window_ms); }}},
      {"frontend.hop_ms",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.hop_ms = parse_double("frontend.hop_ms", v);
        },
        [](const RunConfig& c) { return fmt_double(c.frontend.hop_ms); }}},
      {"frontend.n_mels",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.n_mels = static_cast<int>(parse_int("frontend.n_mels", v));
        },
        [](const RunConfig& c) { return std::to_string(c.frontend.n_mels); }}},
      {"frontend.f_min",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.f_min = parse_double("frontend.f_min", v);
        },
        [](const RunConfig& c) { return fmt_double(c.frontend.f_min); }}},
      {"frontend.f_max",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.f_max = parse_double("frontend.f_max", v);
        },
        [](const RunConfig& c) { return fmt_double(c.frontend.f_max); }}},
      {"frontend.segment_frames",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.segment_frames =
              static_cast<int>(parse_int("frontend.segment_frames", v));
        },
        [](const RunConfig& c) {
          return std::to_string(c.frontend.segment_frames);
        }}},
      {"frontend.log_offset",
       {[](RunConfig& c, const std::string& v) {
          c.frontend.log_offset = parse_double("frontend.log_offset", v);
        },
        [](const RunConfig& c) { return fmt_double(c.frontend.log_offset); }}},

      {"embedder.kind",
       {[](RunConfig& c, const std::string& v) {
          c.embedder.kind = embedder_kind_from_string(v);
        },
        [](const RunConfig& c) { return to_string(c.embedder.kind); }}},
      {"embedder.seed",
       {[](RunConfig& c, const std::string& v) {
          c.embedder.seed = parse_u64("embedder.seed", v);
        },
        [](const RunConfig& c) { return std::to_string(c.embedder.seed); }}},
      {"embedder.dim",
       {[](RunConfig& c, const std::string& v) {
          c.embedder.dim = static_cast<int>(parse_int("embedder.dim", v));
          c.sync_derived();
        },
        [](const RunConfig& c) { return std::to_string(c.embedder.dim); }}},

      {"model.h_c",
       {[](RunConfig& c, const std::string& v) {
          c.model.h_c = static_cast<int>(parse_int("model.h_c", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.h_c); }}},
      {"model.h_s",
       {[](RunConfig& c, const std::string& v) {
          c.model.h_s = static_cast<int>(parse_int("model.h_s", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.h_s); }}},
      {"model.h_i",
       {[](RunConfig& c, const std::string& v) {
          c.model.h_i = static_cast<int>(parse_int("model.h_i", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.h_i); }}},
      {"model.h_e",
       {[](RunConfig& c, const std::string& v) {
          c.model.h_e = static_cast<int>(parse_int("model.h_e", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.h_e); }}},
      {"model.h_a",
       {[](RunConfig& c, const std::string& v) {
          c.model.h_a = static_cast<int>(parse_int("model.h_a", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.h_a); }}},
      {"model.n_classes",
       {[](RunConfig& c, const std::string& v) {
          c.model.n_classes = static_cast<int>(parse_int("model.n_classes", v));
        },
        [](const RunConfig& c) { return std::to_string(c.model.n_classes); }}},
      {"model.direction",
       {[](RunConfig& c, const std::string& v) {
          if (v == "forward") {
            c.model.bidirectional = false;
          } else if (v == "bidirectional") {
            c.model.bidirectional = true;
          } else {
            throw ConfigError(
                "model.direction must be forward or bidirectional, got \"" +
                v + "\"");
          }
        },
        [](const RunConfig& c) {
          return c.model.bidirectional ? std::string("bidirectional")
                                       : std::string("forward");
        }}},
      {"model.no_attention_context",
       {[](RunConfig& c, const std::string& v) {
          c.model.no_attention_context =
              parse_bool("model.no_attention_context", v);
        },
        [](const RunConfig& c) {
          return c.model.no_attention_context ? "true" : "false";
        }}},
      {"model.no_self_state",
       {[](RunConfig& c, const std::string& v) {
          c.model.no_self_state = parse_bool("model.no_self_state", v);
        },
        [](const RunConfig& c) {
          return c.model.no_self_state ? "true" : "false";
        }}},
      {"model.no_intra_state",
       {[](RunConfig& c, const std::string& v) {
          c.model.no_intra_state = parse_bool("model.no_intra_state", v);
        },
        [](const RunConfig& c) {
          return c.model.no_intra_state ? "true" : "false";
        }}},
      {"model.emotion_uses_intra",
       {[](RunConfig& c, const std::string& v) {
          c.model.emotion_uses_intra =
              parse_bool("model.emotion_uses_intra", v);
        },
        [](const RunConfig& c) {
          return c.model.emotion_uses_intra ? "true" : "false";
        }}},
      {"model.state_seed",
       {[](RunConfig& c, const std::string& v) {
          c.model.state_seed = parse_u64("model.state_seed", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.state_seed); }}},

      {"train.lr",
       {[](RunConfig& c, const std::string& v) {
          c.train.lr = parse_double("train.lr", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.lr); }}},
      {"train.batch_dialogues",
       {[](RunConfig& c, const std::string& v) {
          c.train.batch_dialogues =
              static_cast<int>(parse_int("train.batch_dialogues", v));
        },
        [](const RunConfig& c) {
          return std::to_string(c.train.batch_dialogues);
        }}},
      {"train.l2_weight",
       {[](RunConfig& c, const std::string& v) {
          c.train.l2_weight = parse_double("train.l2_weight", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.l2_weight); }}},
      {"train.max_epochs",
       {[](RunConfig& c, const std::string& v) {
          c.train.max_epochs =
              static_cast<int>(parse_int("train.max_epochs", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.max_epochs); }}},
      {"train.patience",
       {[](RunConfig& c, const std::string& v) {
          c.train.patience = static_cast<int>(parse_int("train.patience", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.patience); }}},
      {"train.seed",
       {[](RunConfig& c, const std::string& v) {
          c.train.seed = parse_u64("train.seed", v);
        },
        [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      {"train.shuffle",
       {[](RunConfig& c, const std::string& v) {
          c.train.shuffle = parse_bool("train.shuffle", v);
        },
        [](const RunConfig& c) { return c.train.shuffle ? "true" : "false"; }}},
      {"train.clip_norm",
       {[](RunConfig& c, const std::string& v) {
          c.train.clip_norm = parse_double("train.clip_norm", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.clip_norm); }}},
      {"train.beta1",
       {[](RunConfig& c, const std::string& v) {
          c.train.beta1 = parse_double("train.beta1", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.beta1); }}},
      {"train.beta2",
       {[](RunConfig& c, const std::string& v) {
          c.train.beta2 = parse_double("train.beta2", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.beta2); }}},
      {"train.epsilon",
       {[](RunConfig& c, const std::string& v) {
          c.train.epsilon = parse_double("train.epsilon", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.epsilon); }}},
  };
  return table;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value,
             const std::string& where) {
  const auto& table = key_table();
  const auto it = table.find(key);
  if (it == table.end()) {
    throw ConfigError("unknown config key \"" + key + "\"" + where);
  }
  it->second.set(cfg, value);
}

}  // namespace

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where =
        " (" + path + ":" + std::to_string(line_no) + ")";
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') {
      continue;
    }
    if (s.front() == '[') {
      if (s.back() != ']') {
        throw ConfigError("malformed section header" + where);
      }
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value" + where);
    }
    std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.find('.') == std::string::npos && !section.empty()) {
      key = section + "." + key;
    }
    set_key(base, key, value, where);
  }
  base.sync_derived();
  return base;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like section.key=value, got \"" +
                      assignment + "\"");
  }
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
          "");
  cfg.sync_derived();
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, entry] : key_table()) {
    const auto dotpos = key.find('.');
    const std::string sec = key.substr(0, dotpos);
    if (sec != section) {
      if (!section.empty()) {
        os << "\n";
      }
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << key.substr(dotpos + 1) << " = " << entry.get(cfg) << "\n";
  }
  return os.str();
}

}  // namespace convoaffect
