// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/synth.hpp"

#include <cstdio>
#include <filesystem>

#include "convoaffect/encoder.hpp"
#include "convoaffect/train.hpp"

namespace fs = std::filesystem;

namespace convoaffect {

std::vector<DialogueRecords> make_synthetic_corpus(const SynthSpec& spec,
                                                   const std::string& out_dir) {
  if (spec.dialogues < 1 || spec.utterances < 1 || spec.d_emb < 1 ||
      spec.parties < 1) {
    throw ConfigError("synthetic corpus sizes must be positive");
  }
  fs::create_directories(out_dir);

  const FrontendConfig fcfg;  // patch geometry for the patches flavor
  const int n_classes = 7;
  Rng rng(spec.seed);
  Eigen::MatrixXd probes(n_classes, 3 * spec.d_emb);
  for (Index r = 0; r < probes.rows(); ++r) {
    for (Index c = 0; c < probes.cols(); ++c) {
      probes(r, c) = normal01(rng);
    }
  }
  const Eigen::MatrixXd stub_proj =
      stub_projection(spec.d_emb, fcfg.segment_frames, fcfg.n_mels, spec.seed);

  std::vector<DialogueRecords> dialogues;
  for (int d = 0; d < spec.dialogues; ++d) {
    DialogueRecords dlg;
    char id[32];
    std::snprintf(id, sizeof(id), "dlg_%03d", d);
    dlg.id = id;
    for (int t = 0; t < spec.utterances; ++t) {
      const int n_segments = 2 + static_cast<int>(rng() % 3);
      std::vector<Eigen::VectorXd> embs;
      char stem[48];
      std::snprintf(stem, sizeof(stem), "%s_t%02d.cafe", id, t);
      const std::string filename = stem;
      const std::string path = (fs::path(out_dir) / filename).string();

      if (spec.patches) {
        std::vector<SegmentPatch> patch_seq;
        for (int l = 0; l < n_segments; ++l) {
          SegmentPatch p(fcfg.segment_frames, fcfg.n_mels);
          for (Index r = 0; r < p.rows(); ++r) {
            for (Index c = 0; c < p.cols(); ++c) {
              p(r, c) = normal01(rng);
            }
          }
          patch_seq.push_back(std::move(p));
          embs.push_back(
              (stub_proj * flatten_patch(patch_seq.back())).array().tanh());
        }
        write_patch_file(path, patches_to_file(patch_seq));
      } else {
        for (int l = 0; l < n_segments; ++l) {
          Eigen::VectorXd e(spec.d_emb);
          for (int i = 0; i < spec.d_emb; ++i) {
            e[i] = normal01(rng);
          }
          embs.push_back(std::move(e));
        }
        write_embedding_file(path, embeddings_to_file(embs));
      }

      const Eigen::VectorXd u = statistical_unit(embs);
      const Eigen::VectorXd scores = probes * u;
      UtteranceRecord rec;
      rec.dialogue_id = dlg.id;
      rec.turn = t;
      rec.speaker = "spk" + std::to_string(t % spec.parties);
      rec.label = argmax_first(scores);
      rec.source = filename;
      dlg.utts.push_back(std::move(rec));
    }
    dialogues.push_back(std::move(dlg));
  }

  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), dialogues);
  return dialogues;
}

}  // namespace convoaffect
