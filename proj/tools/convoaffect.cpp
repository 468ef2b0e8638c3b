// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// convoaffect command-line tool: feature extraction, training, evaluation,
// prediction, attention export, config inspection and a synthetic-corpus
// generator. Exit codes: 0 ok, 1 usage/config, 2 data, 3 numeric.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "convoaffect/checkpoint.hpp"
#include "convoaffect/config.hpp"
#include "convoaffect/features.hpp"
#include "convoaffect/synth.hpp"
#include "convoaffect/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace convoaffect;

namespace {

// The shipping scalar type; tests exercise the double instantiation.
using S = float;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "INI-style config file");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set train.lr=0.001");
  cmd->add_option("--seed", opts.seed, "master seed (train/embedder/state)")
      ->each([&opts](const std::string&) { opts.has_seed = true; });
}

RunConfig make_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = parse_config_file(opts.config_path);
  }
  for (const auto& kv : opts.overrides) {
    apply_override(cfg, kv);
  }
  if (opts.has_seed) {
    cfg.train.seed = opts.seed;
    cfg.embedder.seed = opts.seed;
    cfg.model.state_seed = opts.seed;
  }
  cfg.sync_derived();
  return cfg;
}

std::string default_data_root(const std::string& manifest_path,
                              const std::string& explicit_root) {
  if (!explicit_root.empty()) {
    return explicit_root;
  }
  if (std::getenv("CONVO_AFFECT_DATA_ROOT") != nullptr) {
    return "";  // resolve_source falls back to the environment
  }
  return fs::path(manifest_path).parent_path().string();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw DataError("cannot open for writing: " + path);
  }
  os << text;
}

// ---- extract-features ------------------------------------------------------

int run_extract(const CommonOpts& common, const std::string& in_path,
                const std::string& out_dir, int jobs, bool keep_going) {
  const RunConfig cfg = make_config(common);
  cfg.frontend.validate();

  std::vector<fs::path> files;
  if (fs::is_directory(in_path)) {
    for (const auto& entry : fs::directory_iterator(in_path)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (ext == ".wav") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(in_path)) {
    files.push_back(in_path);
  } else {
    throw DataError("input path does not exist: " + in_path);
  }

  fs::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<long> total_segments{0};
  std::atomic<long> ok_files{0};
  std::mutex err_mutex;
  std::vector<std::pair<std::string, std::string>> errors;

  auto worker = [&]() {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= files.size()) {
        return;
      }
      const fs::path& file = files[i];
      try {
        const Waveform w = read_wav(file.string());
        const auto patches = patches_from_waveform(w, cfg.frontend);
        const fs::path out =
            fs::path(out_dir) / (file.stem().string() + ".cafe");
        write_patch_file(out.string(), patches_to_file(patches));
        total_segments += static_cast<long>(patches.size());
        ++ok_files;
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        errors.emplace_back(file.string(), e.what());
        if (!keep_going) {
          abort.store(true);
        }
      }
    }
  };

  const int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads - 1; ++i) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) {
    t.join();
  }

  std::sort(errors.begin(), errors.end());
  for (const auto& [file, msg] : errors) {
    std::cerr << "error: " << file << ": " << msg << "\n";
  }
  std::cout << ok_files.load() << " files, " << total_segments.load()
            << " segments\n";
  return errors.empty() ? 0 : 2;
}

// ---- train ------------------------------------------------------------------

int run_train(const CommonOpts& common, const std::string& manifest_path,
              const std::string& val_manifest_path,
              const std::string& out_checkpoint, const std::string& out_log,
              const std::string& data_root) {
  const RunConfig cfg = make_config(common);
  cfg.validate();

  const auto train_recs = load_manifest(manifest_path);
  const std::string root = default_data_root(manifest_path, data_root);
  const auto train_ds =
      load_dataset<S>(train_recs, cfg.frontend, cfg.embedder, root);

  Dataset<S> val_ds;
  if (!val_manifest_path.empty()) {
    const auto val_recs = load_manifest(val_manifest_path);
    val_ds = load_dataset<S>(
        val_recs, cfg.frontend, cfg.embedder,
        default_data_root(val_manifest_path, data_root));
  }

  auto outcome = train(train_ds, val_ds, cfg.model, cfg.embedder, cfg.train);
  save_checkpoint(out_checkpoint, outcome.checkpoint);
  const std::string log_path =
      out_log.empty() ? out_checkpoint + ".log.json" : out_log;
  write_text_file(log_path, outcome.log_json);

  std::cout << "trained " << outcome.epochs_run << " epochs, checkpoint from epoch "
            << outcome.checkpoint.epoch;
  if (outcome.checkpoint.metric >= 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", outcome.checkpoint.metric);
    std::cout << " (val weighted F1 = " << buf << ")";
  }
  std::cout << "\n";
  return 0;
}

// ---- evaluate / predict / export-attention ----------------------------------

template <class Fn>
int with_checkpoint_dataset(const CommonOpts& common,
                            const std::string& manifest_path,
                            const std::string& checkpoint_path,
                            const std::string& data_root, Fn&& fn) {
  const RunConfig cfg = make_config(common);
  const Checkpoint<S> ckpt = load_checkpoint<S>(checkpoint_path);
  const auto recs = load_manifest(manifest_path);
  const auto ds =
      load_dataset<S>(recs, cfg.frontend, ckpt.embedder_cfg,
                      default_data_root(manifest_path, data_root));
  return fn(ckpt, ds);
}

json report_to_json(const EvalReport& r) {
  json per_class = json::array();
  for (Index c = 0; c < r.per_class_f1.rows(); ++c) {
    per_class.push_back(r.per_class_f1[c]);
  }
  json support = json::array();
  for (Index c = 0; c < r.support.rows(); ++c) {
    support.push_back(r.support[c]);
  }
  json confusion = json::array();
  for (Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < r.confusion.cols(); ++j) {
      row.push_back(r.confusion(i, j));
    }
    confusion.push_back(row);
  }
  return {{"class_names", emotion_names()},
          {"per_class_f1", per_class},
          {"weighted_f1", r.weighted_f1},
          {"support", support},
          {"confusion", confusion},
          {"accuracy", r.accuracy()}};
}

int run_evaluate(const CommonOpts& common, const std::string& manifest_path,
                 const std::string& checkpoint_path,
                 const std::string& out_report, const std::string& data_root) {
  return with_checkpoint_dataset(
      common, manifest_path, checkpoint_path, data_root,
      [&](const Checkpoint<S>& ckpt, const Dataset<S>& ds) {
        const EvalReport report =
            evaluate_dataset(ds, ckpt.model_cfg, ckpt.params);
        std::vector<std::string> names = emotion_names();
        names.resize(static_cast<std::size_t>(ckpt.model_cfg.n_classes),
                     "class");
        std::cout << format_report_table(
            report, std::span<const std::string>(names));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", report.weighted_f1);
        std::cout << "w-average F1 = " << buf << "\n";
        write_text_file(out_report, report_to_json(report).dump(2) + "\n");
        return 0;
      });
}

int run_predict(const CommonOpts& common, const std::string& manifest_path,
                const std::string& checkpoint_path, const std::string& out_path,
                const std::string& data_root) {
  return with_checkpoint_dataset(
      common, manifest_path, checkpoint_path, data_root,
      [&](const Checkpoint<S>& ckpt, const Dataset<S>& ds) {
        const auto rows = predict_dataset(ds, ckpt.model_cfg, ckpt.params);
        std::ofstream os(out_path, std::ios::trunc);
        if (!os) {
          throw DataError("cannot open for writing: " + out_path);
        }
        for (const auto& r : rows) {
          json line{{"dialogue_id", r.dialogue_id},
                    {"turn", r.turn},
                    {"probs", r.probs},
                    {"argmax", r.predicted}};
          os << line.dump() << "\n";
        }
        std::cout << rows.size() << " predictions\n";
        return 0;
      });
}

int run_export_attention(const CommonOpts& common,
                         const std::string& manifest_path,
                         const std::string& checkpoint_path,
                         const std::string& out_path,
                         const std::string& data_root) {
  return with_checkpoint_dataset(
      common, manifest_path, checkpoint_path, data_root,
      [&](const Checkpoint<S>& ckpt, const Dataset<S>& ds) {
        std::vector<AttentionRow> attn;
        predict_dataset(ds, ckpt.model_cfg, ckpt.params, &attn);
        std::ofstream os(out_path, std::ios::trunc);
        if (!os) {
          throw DataError("cannot open for writing: " + out_path);
        }
        for (const auto& a : attn) {
          json line{{"dialogue_id", a.dialogue_id},
                    {"t", a.t},
                    {"weights", a.weights}};
          os << line.dump() << "\n";
        }
        std::cout << attn.size() << " attention rows\n";
        return 0;
      });
}

// ---- synth-corpus ------------------------------------------------------------

int run_synth(std::uint64_t seed, const std::string& out_dir, int n_dialogues,
              int n_utterances, int d_emb, const std::string& kind,
              int n_parties) {
  const bool as_patches = kind == "patches";
  if (!as_patches && kind != "embeddings") {
    throw ConfigError("--kind must be embeddings or patches");
  }
  SynthSpec spec;
  spec.seed = seed;
  spec.dialogues = n_dialogues;
  spec.utterances = n_utterances;
  spec.d_emb = d_emb;
  spec.parties = n_parties;
  spec.patches = as_patches;
  make_synthetic_corpus(spec, out_dir);
  std::cout << "wrote " << n_dialogues << " dialogues ("
            << n_dialogues * n_utterances << " utterances) to "
            << (fs::path(out_dir) / "manifest.jsonl").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversational speech emotion recognition pipeline"};
  app.require_subcommand(1);

  std::function<int()> action;

  // extract-features
  CommonOpts ex_common;
  std::string ex_in, ex_out;
  int ex_jobs = 1;
  bool ex_keep_going = false;
  auto* ex = app.add_subcommand("extract-features",
                                "WAV files -> log-mel patch containers");
  add_common(ex, ex_common);
  ex->add_option("--in", ex_in, "audio file or directory")->required();
  ex->add_option("--out", ex_out, "output directory")->required();
  ex->add_option("--jobs", ex_jobs, "worker threads");
  ex->add_flag("--keep-going", ex_keep_going,
               "process remaining files after an error");
  ex->callback([&]() {
    action = [&]() {
      return run_extract(ex_common, ex_in, ex_out, ex_jobs, ex_keep_going);
    };
  });

  // train
  CommonOpts tr_common;
  std::string tr_manifest, tr_val_manifest, tr_ckpt, tr_log, tr_root,
      tr_embedder;
  auto* tr = app.add_subcommand("train", "train on a manifest");
  add_common(tr, tr_common);
  tr->add_option("--manifest", tr_manifest, "training manifest (JSONL)")
      ->required();
  tr->add_option("--val-manifest", tr_val_manifest, "validation manifest");
  tr->add_option("--out-checkpoint", tr_ckpt, "checkpoint output path")
      ->required();
  tr->add_option("--out-log", tr_log,
                 "training log path (default <checkpoint>.log.json)");
  tr->add_option("--data-root", tr_root,
                 "prefix for relative sources (default: manifest directory)");
  tr->add_option("--embedder", tr_embedder,
                 "embedder kind: precomputed|stub|linear");
  tr->callback([&]() {
    action = [&]() {
      if (!tr_embedder.empty()) {
        tr_common.overrides.push_back("embedder.kind=" + tr_embedder);
      }
      return run_train(tr_common, tr_manifest, tr_val_manifest, tr_ckpt,
                       tr_log, tr_root);
    };
  });

  // evaluate
  CommonOpts ev_common;
  std::string ev_manifest, ev_ckpt, ev_report = "report.json", ev_root;
  auto* ev = app.add_subcommand("evaluate",
                                "score a checkpoint against a manifest");
  add_common(ev, ev_common);
  ev->add_option("--manifest", ev_manifest, "manifest (JSONL)")->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--out-report", ev_report, "report JSON path");
  ev->add_option("--data-root", ev_root, "prefix for relative sources");
  ev->callback([&]() {
    action = [&]() {
      return run_evaluate(ev_common, ev_manifest, ev_ckpt, ev_report, ev_root);
    };
  });

  // predict
  CommonOpts pr_common;
  std::string pr_manifest, pr_ckpt, pr_out, pr_root;
  auto* pr = app.add_subcommand("predict", "per-utterance class distributions");
  add_common(pr, pr_common);
  pr->add_option("--manifest", pr_manifest, "manifest (JSONL)")->required();
  pr->add_option("--checkpoint", pr_ckpt, "checkpoint path")->required();
  pr->add_option("--out", pr_out, "output JSONL path")->required();
  pr->add_option("--data-root", pr_root, "prefix for relative sources");
  pr->callback([&]() {
    action = [&]() {
      return run_predict(pr_common, pr_manifest, pr_ckpt, pr_out, pr_root);
    };
  });

  // export-attention
  CommonOpts at_common;
  std::string at_manifest, at_ckpt, at_out, at_root;
  auto* at = app.add_subcommand("export-attention",
                                "attention weights per utterance as JSONL");
  add_common(at, at_common);
  at->add_option("--manifest", at_manifest, "manifest (JSONL)")->required();
  at->add_option("--checkpoint", at_ckpt, "checkpoint path")->required();
  at->add_option("--out", at_out, "output JSONL path")->required();
  at->add_option("--data-root", at_root, "prefix for relative sources");
  at->callback([&]() {
    action = [&]() {
      return run_export_attention(at_common, at_manifest, at_ckpt, at_out,
                                  at_root);
    };
  });

  // config
  CommonOpts cf_common;
  bool cf_dump = false;
  auto* cf = app.add_subcommand("config", "inspect the merged configuration");
  add_common(cf, cf_common);
  cf->add_flag("--dump", cf_dump, "print every key (default behavior)");
  cf->callback([&]() {
    action = [&]() {
      std::cout << dump_config(make_config(cf_common));
      return 0;
    };
  });

  // synth-corpus
  std::uint64_t sy_seed = 0;
  std::string sy_out, sy_kind = "embeddings";
  int sy_dialogues = 8, sy_utterances = 6, sy_demb = 8, sy_parties = 2;
  auto* sy = app.add_subcommand(
      "synth-corpus", "deterministic synthetic corpus for tests and demos");
  sy->add_option("--out", sy_out, "output directory")->required();
  sy->add_option("--seed", sy_seed, "generator seed");
  sy->add_option("--dialogues", sy_dialogues, "dialogue count");
  sy->add_option("--utterances", sy_utterances, "utterances per dialogue");
  sy->add_option("--d-emb", sy_demb, "embedding dimension");
  sy->add_option("--kind", sy_kind, "embeddings|patches");
  sy->add_option("--parties", sy_parties, "speakers per dialogue");
  sy->callback([&]() {
    action = [&]() {
      return run_synth(sy_seed, sy_out, sy_dialogues, sy_utterances, sy_demb,
                       sy_kind, sy_parties);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return action ? action() : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const NotScalar& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const TapeConsumed& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
