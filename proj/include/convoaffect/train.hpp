// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Dialogue-level training (Adam + cross-entropy + L2) and evaluation.
//
// A batch is up to batch_dialogues dialogues; its loss is
//   sum over utterances of -log p(true class) / (utterances in batch)
//   + l2_weight * sum of squared parameters
// Gradients accumulate across the batch's dialogues, then one Adam step
// runs. The checkpoint keeps the epoch with the best validation weighted
// F1; training stops early after `patience` epochs without improvement.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convoaffect/adam.hpp"
#include "convoaffect/checkpoint.hpp"
#include "convoaffect/features.hpp"
#include "convoaffect/metrics.hpp"

namespace convoaffect {

struct TrainConfig {
  double lr = 1e-4;
  int batch_dialogues = 32;
  double l2_weight = 3e-4;
  int max_epochs = 100;
  int patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 0;
  bool shuffle = true;
  double clip_norm = 0.0;  // global-norm gradient clip; 0 disables
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (batch_dialogues <= 0) throw ConfigError("batch_dialogues must be positive");
    if (max_epochs <= 0) throw ConfigError("max_epochs must be positive");
    if (l2_weight < 0.0) throw ConfigError("l2_weight must be nonnegative");
    if (patience < 0) throw ConfigError("patience must be nonnegative");
  }
};

template <class Scalar>
struct ParamVarsSet {
  ModelVars<Scalar> model;
  std::optional<LinearEmbedderVars<Scalar>> embedder;
};

template <class Scalar>
ParamVarsSet<Scalar> mount_param_set(Tape<Scalar>& tape,
                                     const ParamSet<Scalar>& params,
                                     bool requires_grad) {
  ParamVarsSet<Scalar> vars;
  vars.model = mount(tape, params.model, requires_grad);
  if (params.embedder) {
    vars.embedder = mount(tape, *params.embedder, requires_grad);
  }
  return vars;
}

inline int argmax_first(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int i = 1; i < v.rows(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

namespace detail {

// Fisher-Yates with the project rng; std::shuffle is not pinned by the
// standard, this is.
inline void deterministic_shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

template <class Scalar>
int find_patch_flat_dim(const Dataset<Scalar>& ds) {
  for (const auto& d : ds) {
    for (const auto& u : d.utts) {
      if (u.features.has_patches()) {
        return static_cast<int>(u.features.patch_cols.rows());
      }
    }
  }
  return 0;
}

template <class Scalar>
void check_labels(const Dataset<Scalar>& ds, int n_classes) {
  for (const auto& d : ds) {
    for (const auto& u : d.utts) {
      if (u.label < 0 || u.label >= n_classes) {
        throw DataError("label " + std::to_string(u.label) + " in dialogue \"" +
                        d.id + "\" outside [0, " + std::to_string(n_classes) +
                        ")");
      }
    }
  }
}

template <class Scalar>
void check_feature_dims(const Dataset<Scalar>& ds, const ModelConfig& mcfg) {
  for (const auto& d : ds) {
    for (const auto& u : d.utts) {
      if (!u.features.has_patches() &&
          u.features.pooled.rows() != mcfg.d_u) {
        throw DimError("dialogue \"" + d.id + "\" has utterance vectors of dim " +
                       std::to_string(u.features.pooled.rows()) +
                       ", model expects d_u = " + std::to_string(mcfg.d_u));
      }
    }
  }
}

}  // namespace detail

// Fresh parameters for a run; draws model tensors first, then the linear
// embedder when one is configured.
template <class Scalar>
ParamSet<Scalar> init_param_set(const ModelConfig& mcfg,
                                const EmbedderConfig& ecfg, int patch_flat_dim,
                                Rng& rng) {
  ParamSet<Scalar> params;
  params.model = init_model_params<Scalar>(mcfg, rng);
  if (ecfg.kind == EmbedderKind::linear) {
    if (patch_flat_dim <= 0) {
      throw ModeMismatch(
          "linear embedder configured but the dataset has no patch sources");
    }
    params.embedder =
        init_linear_embedder<Scalar>(ecfg.dim, patch_flat_dim, rng);
  }
  return params;
}

// Mean per-utterance cross-entropy plus the L2 term, without touching any
// optimizer state.
template <class Scalar>
double dataset_loss(const Dataset<Scalar>& ds, const ModelConfig& mcfg,
                    const ParamSet<Scalar>& params, double l2_weight) {
  long total_utts = 0;
  for (const auto& d : ds) total_utts += static_cast<long>(d.utts.size());
  if (total_utts == 0) {
    throw EmptyDialogue("dataset_loss: no utterances");
  }
  double loss = 0.0;
  for (const auto& d : ds) {
    Tape<Scalar> tape;
    auto vars = mount_param_set(tape, params, false);
    auto inputs = mount_utterances(tape, d, vars.embedder);
    auto fwd = forward_dialogue(tape, vars.model, mcfg,
                                std::span<const UtteranceInput<Scalar>>(inputs),
                                static_cast<int>(d.roster.size()));
    for (std::size_t t = 0; t < d.utts.size(); ++t) {
      loss += static_cast<double>(
          cross_entropy_with_logits(fwd.logits[t], d.utts[t].label)
              .value()(0, 0));
    }
  }
  loss /= static_cast<double>(total_utts);
  if (l2_weight > 0.0) {
    double sq = 0.0;
    visit_param_set(const_cast<ParamSet<Scalar>&>(params),
                    [&](const std::string&, const MatX<Scalar>& m) {
                      sq += static_cast<double>(m.squaredNorm());
                    });
    loss += l2_weight * sq;
  }
  return loss;
}

// ---- inference -------------------------------------------------------------

struct PredictionRow {
  std::string dialogue_id;
  int turn = 0;
  std::vector<double> probs;
  int predicted = 0;
};

struct AttentionRow {
  std::string dialogue_id;
  int t = 0;  // 1-based utterance position
  std::vector<double> weights;
};

template <class Scalar>
std::vector<PredictionRow> predict_dataset(const Dataset<Scalar>& ds,
                                           const ModelConfig& mcfg,
                                           const ParamSet<Scalar>& params,
                                           std::vector<AttentionRow>* attention
                                           = nullptr) {
  detail::check_feature_dims(ds, mcfg);
  std::vector<PredictionRow> rows;
  for (const auto& d : ds) {
    Tape<Scalar> tape;
    auto vars = mount_param_set(tape, params, false);
    auto inputs = mount_utterances(tape, d, vars.embedder);
    auto fwd = forward_dialogue(tape, vars.model, mcfg,
                                std::span<const UtteranceInput<Scalar>>(inputs),
                                static_cast<int>(d.roster.size()));
    for (std::size_t t = 0; t < d.utts.size(); ++t) {
      PredictionRow row;
      row.dialogue_id = d.id;
      row.turn = d.utts[t].turn;
      const auto& p = fwd.probs[t].value();
      row.probs.resize(static_cast<std::size_t>(p.rows()));
      Eigen::VectorXd pd(p.rows());
      for (Index i = 0; i < p.rows(); ++i) {
        pd[i] = static_cast<double>(p(i, 0));
        row.probs[static_cast<std::size_t>(i)] = pd[i];
      }
      row.predicted = argmax_first(pd);
      rows.push_back(std::move(row));
      if (attention != nullptr) {
        attention->push_back({d.id, static_cast<int>(t) + 1,
                              fwd.attention.weights[t]});
      }
    }
  }
  return rows;
}

template <class Scalar>
EvalReport evaluate_dataset(const Dataset<Scalar>& ds, const ModelConfig& mcfg,
                            const ParamSet<Scalar>& params) {
  const auto rows = predict_dataset(ds, mcfg, params);
  std::vector<int> preds;
  std::vector<int> labels;
  preds.reserve(rows.size());
  for (const auto& r : rows) {
    preds.push_back(r.predicted);
  }
  for (const auto& d : ds) {
    for (const auto& u : d.utts) {
      labels.push_back(u.label);
    }
  }
  return compute_eval_report(preds, labels, mcfg.n_classes);
}

// ---- training --------------------------------------------------------------

template <class Scalar>
struct TrainOutcome {
  Checkpoint<Scalar> checkpoint;  // parameters from the best epoch
  std::string log_json;
  int epochs_run = 0;
};

template <class Scalar>
TrainOutcome<Scalar> train(const Dataset<Scalar>& train_ds,
                           const Dataset<Scalar>& val_ds,
                           const ModelConfig& mcfg, const EmbedderConfig& ecfg,
                           const TrainConfig& tcfg) {
  mcfg.validate();
  ecfg.validate();
  tcfg.validate();
  if (train_ds.empty()) {
    throw DataError("training split is empty");
  }
  if (mcfg.d_u != 3 * ecfg.dim) {
    throw ConfigError("d_u = " + std::to_string(mcfg.d_u) +
                      " must be 3 * embedder dim = " +
                      std::to_string(3 * ecfg.dim));
  }
  detail::check_labels(train_ds, mcfg.n_classes);
  detail::check_labels(val_ds, mcfg.n_classes);
  detail::check_feature_dims(train_ds, mcfg);
  detail::check_feature_dims(val_ds, mcfg);

  Rng init_rng(tcfg.seed);
  ParamSet<Scalar> params = init_param_set<Scalar>(
      mcfg, ecfg, detail::find_patch_flat_dim(train_ds), init_rng);

  std::vector<MatX<Scalar>*> param_ptrs;
  visit_param_set(params, [&](const std::string&, MatX<Scalar>& m) {
    param_ptrs.push_back(&m);
  });
  AdamConfig adam_cfg{tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.epsilon};
  AdamState<Scalar> adam = make_adam_state(param_ptrs, adam_cfg);

  std::vector<MatX<Scalar>> grads;
  grads.reserve(param_ptrs.size());
  for (const auto* p : param_ptrs) {
    grads.emplace_back(MatX<Scalar>::Zero(p->rows(), p->cols()));
  }

  const bool have_val = !val_ds.empty();
  ParamSet<Scalar> best_params = params;
  double best_metric = -1.0;
  int best_epoch = 0;
  int since_best = 0;

  Rng shuffle_rng(tcfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  nlohmann::json epochs_log = nlohmann::json::array();
  int epochs_run = 0;

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    epochs_run = epoch;
    if (tcfg.shuffle) {
      detail::deterministic_shuffle(order, shuffle_rng);
    }

    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_dialogues)) {
      const std::size_t end =
          std::min(order.size(),
                   start + static_cast<std::size_t>(tcfg.batch_dialogues));
      long batch_utts = 0;
      for (std::size_t i = start; i < end; ++i) {
        batch_utts += static_cast<long>(train_ds[order[i]].utts.size());
      }

      for (auto& g : grads) g.setZero();
      double batch_loss = 0.0;

      for (std::size_t i = start; i < end; ++i) {
        const auto& dlg = train_ds[order[i]];
        Tape<Scalar> tape;
        auto vars = mount_param_set(tape, params, true);
        auto inputs = mount_utterances(tape, dlg, vars.embedder);
        auto fwd = forward_dialogue(
            tape, vars.model, mcfg,
            std::span<const UtteranceInput<Scalar>>(inputs),
            static_cast<int>(dlg.roster.size()));
        Var<Scalar> loss =
            cross_entropy_with_logits(fwd.logits[0], dlg.utts[0].label);
        for (std::size_t t = 1; t < dlg.utts.size(); ++t) {
          loss = add(loss, cross_entropy_with_logits(fwd.logits[t],
                                                     dlg.utts[t].label));
        }
        loss = scale(loss, Scalar(1) / static_cast<Scalar>(batch_utts));
        tape.backward(loss);
        batch_loss += static_cast<double>(loss.value()(0, 0));
        std::size_t k = 0;
        visit_param_set(vars, [&](const std::string&, const Var<Scalar>& v) {
          grads[k] += tape.grad(v);
          ++k;
        });
      }

      if (tcfg.l2_weight > 0.0) {
        Tape<Scalar> tape;
        auto vars = mount_param_set(tape, params, true);
        std::vector<Var<Scalar>> leaves;
        visit_param_set(vars, [&](const std::string&, const Var<Scalar>& v) {
          leaves.push_back(v);
        });
        Var<Scalar> penalty =
            l2_penalty(std::span<const Var<Scalar>>(leaves),
                       static_cast<Scalar>(tcfg.l2_weight));
        tape.backward(penalty);
        batch_loss += static_cast<double>(penalty.value()(0, 0));
        std::size_t k = 0;
        visit_param_set(vars, [&](const std::string&, const Var<Scalar>& v) {
          grads[k] += tape.grad(v);
          ++k;
        });
      }

      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(n_batches + 1));
      }
      clip_gradients(grads, tcfg.clip_norm);
      adam_step(param_ptrs, grads, adam);
      epoch_loss += batch_loss;
      ++n_batches;
    }
    epoch_loss /= std::max(1, n_batches);

    nlohmann::json entry{{"epoch", epoch}, {"train_loss", epoch_loss}};
    if (have_val) {
      const EvalReport val = evaluate_dataset(val_ds, mcfg, params);
      entry["val_weighted_f1"] = val.weighted_f1;
      if (val.weighted_f1 > best_metric) {
        best_metric = val.weighted_f1;
        best_params = params;
        best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      best_params = params;
      best_epoch = epoch;
    }
    epochs_log.push_back(std::move(entry));

    if (have_val && since_best >= tcfg.patience) {
      break;
    }
  }

  TrainOutcome<Scalar> out;
  out.epochs_run = epochs_run;
  out.checkpoint.model_cfg = mcfg;
  out.checkpoint.embedder_cfg = ecfg;
  out.checkpoint.patch_flat_dim = detail::find_patch_flat_dim(train_ds);
  out.checkpoint.epoch = best_epoch;
  out.checkpoint.metric = have_val ? best_metric : -1.0;
  out.checkpoint.params = std::move(best_params);

  nlohmann::json log;
  log["seed"] = tcfg.seed;
  log["lr"] = tcfg.lr;
  log["batch_dialogues"] = tcfg.batch_dialogues;
  log["l2_weight"] = tcfg.l2_weight;
  log["shuffle"] = tcfg.shuffle;
  log["embedder"] = to_string(ecfg.kind);
  log["epochs"] = std::move(epochs_log);
  log["best_epoch"] = best_epoch;
  if (have_val) {
    log["best_val_weighted_f1"] = best_metric;
  }
  out.log_json = log.dump(2) + "\n";
  return out;
}

// ---- ablation harness ------------------------------------------------------

struct AblationRow {
  std::string name;
  double weighted_f1 = 0.0;
};

// Trains and evaluates the four reduced configurations: the trainable
// linear embedder replacing the pretrained one, then each model branch
// switched off. Sources must provide patches (audio or patch containers)
// so the linear-embedder row can run.
template <class Scalar>
std::vector<AblationRow> run_ablation_suite(
    const std::vector<DialogueRecords>& train_manifest,
    const std::vector<DialogueRecords>& val_manifest,
    const FrontendConfig& fcfg, const ModelConfig& base_mcfg,
    const EmbedderConfig& base_ecfg, const TrainConfig& tcfg,
    const std::string& data_root = "") {
  std::vector<AblationRow> rows;

  auto run = [&](const std::string& name, const ModelConfig& mcfg,
                 const EmbedderConfig& ecfg) {
    const auto train_ds =
        load_dataset<Scalar>(train_manifest, fcfg, ecfg, data_root);
    const auto val_ds =
        load_dataset<Scalar>(val_manifest, fcfg, ecfg, data_root);
    auto outcome = train(train_ds, val_ds, mcfg, ecfg, tcfg);
    const auto report = evaluate_dataset(
        val_ds.empty() ? train_ds : val_ds, mcfg, outcome.checkpoint.params);
    rows.push_back({name, report.weighted_f1});
  };

  EmbedderConfig linear_ecfg = base_ecfg;
  linear_ecfg.kind = EmbedderKind::linear;
  run("linear_embedder", base_mcfg, linear_ecfg);

  ModelConfig no_attn = base_mcfg;
  no_attn.no_attention_context = true;
  run("no_attention_context", no_attn, base_ecfg);

  ModelConfig no_self = base_mcfg;
  no_self.no_self_state = true;
  run("no_self_state", no_self, base_ecfg);

  ModelConfig no_intra = base_mcfg;
  no_intra.no_intra_state = true;
  run("no_intra_state", no_intra, base_ecfg);

  return rows;
}

inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "configuration              w-avg F1\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-26s %.3f\n", r.name.c_str(),
                  r.weighted_f1);
    out += buf;
  }
  return out;
}

}  // namespace convoaffect
