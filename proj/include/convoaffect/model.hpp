// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Four-branch recurrent dialogue model over pooled utterance vectors.
//
// Per utterance t (speaker lambda), in this order:
//   a_t   = soft-attention pool over the context history [C_1..C_{t-1}]
//   C_t   = GRU_C(C_{t-1}, S_{lambda,t-1} + I_{t-1} + u_t)   (+ = concat)
//   history <- C_t (after the attention read)
//   S_*   = GRU_SS for the speaker, GRU_SL for every other party,
//           both on input C_t + u_t
//   I_t   = GRU_I(I_{t-1}, a_t + u_t)
//   E_t   = GRU_E(E_{t-1}, C_t + S_{lambda,t} + u_t)
//   probs = softmax(fc2(relu(fc1(E_t)) + E_t))
//
// The order is the unique one consistent with the state subscripts: the
// context update reads S and I from t-1, the self states read C_t, the
// emotion state reads the speaker's just-updated S_t.
//
// Ablations: no_attention_context zeroes a_t and skips the history read;
// no_self_state feeds zero blocks where S appears (context and emotion
// inputs) and skips the S updates; no_intra_state feeds a zero block where
// I appears and skips the I update. Bidirectional mode runs a twin
// recurrence with independent parameters over the reversed order and
// classifies the concatenation of the two emotion states.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convoaffect/gru.hpp"

namespace convoaffect {

struct ModelConfig {
  int d_u = 384;  // pooled utterance dim = 3 * embedding dim
  int h_c = 128;
  int h_s = 128;
  int h_i = 128;
  int h_e = 128;
  int h_a = 128;  // attention hidden size
  int n_classes = 7;
  bool bidirectional = false;
  bool no_attention_context = false;
  bool no_self_state = false;
  bool no_intra_state = false;
  // The narrative variant that feeds I_t into the emotion input as well;
  // the default follows the state-update equation, which omits it.
  bool emotion_uses_intra = false;
  std::uint64_t state_seed = 0;  // seeds the random context init per dialogue

  int context_input_dim() const { return h_s + h_i + d_u; }
  int speaker_input_dim() const { return h_c + d_u; }
  int intra_input_dim() const { return h_c + d_u; }
  int emotion_input_dim() const {
    return h_c + h_s + (emotion_uses_intra ? h_i : 0) + d_u;
  }
  int classifier_dim() const { return bidirectional ? 2 * h_e : h_e; }

  void validate() const {
    if (d_u <= 0 || h_c <= 0 || h_s <= 0 || h_i <= 0 || h_e <= 0 || h_a <= 0) {
      throw ConfigError("model dims must be positive");
    }
    if (n_classes < 2) {
      throw ConfigError("n_classes must be at least 2");
    }
  }
};

template <class Scalar>
struct RecurrenceParams {
  GruParams<Scalar> gru_c, gru_ss, gru_sl, gru_i, gru_e;
  MatX<Scalar> attn_w;  // h_a x h_c
  MatX<Scalar> attn_b;  // h_a x 1
  MatX<Scalar> attn_v;  // h_a x 1
};

template <class Scalar>
struct ModelParams {
  RecurrenceParams<Scalar> fwd;
  std::optional<RecurrenceParams<Scalar>> bwd;  // engaged iff bidirectional
  MatX<Scalar> fc1_w;  // classifier_dim x classifier_dim (residual block)
  MatX<Scalar> fc1_b;
  MatX<Scalar> fc2_w;  // n_classes x classifier_dim
  MatX<Scalar> fc2_b;
};

template <class P, class Fn>
void visit_recurrence(P& p, const std::string& prefix, Fn&& fn) {
  visit_gru(p.gru_c, prefix + ".gru_c", fn);
  visit_gru(p.gru_ss, prefix + ".gru_ss", fn);
  visit_gru(p.gru_sl, prefix + ".gru_sl", fn);
  visit_gru(p.gru_i, prefix + ".gru_i", fn);
  visit_gru(p.gru_e, prefix + ".gru_e", fn);
  fn(prefix + ".attn_w", p.attn_w);
  fn(prefix + ".attn_b", p.attn_b);
  fn(prefix + ".attn_v", p.attn_v);
}

// Fixed tensor enumeration for optimizer state and checkpoints; P may be
// ModelParams or ModelVars.
template <class P, class Fn>
void visit_model(P& p, Fn&& fn) {
  visit_recurrence(p.fwd, "fwd", fn);
  if (p.bwd) {
    visit_recurrence(*p.bwd, "bwd", fn);
  }
  fn("fc1_w", p.fc1_w);
  fn("fc1_b", p.fc1_b);
  fn("fc2_w", p.fc2_w);
  fn("fc2_b", p.fc2_b);
}

namespace detail {

template <class Scalar>
RecurrenceParams<Scalar> init_recurrence(const ModelConfig& cfg, Rng& rng) {
  RecurrenceParams<Scalar> p;
  p.gru_c = init_gru_params<Scalar>(cfg.h_c, cfg.context_input_dim(), rng);
  p.gru_ss = init_gru_params<Scalar>(cfg.h_s, cfg.speaker_input_dim(), rng);
  p.gru_sl = init_gru_params<Scalar>(cfg.h_s, cfg.speaker_input_dim(), rng);
  p.gru_i = init_gru_params<Scalar>(cfg.h_i, cfg.intra_input_dim(), rng);
  p.gru_e = init_gru_params<Scalar>(cfg.h_e, cfg.emotion_input_dim(), rng);
  const double ka = 1.0 / std::sqrt(static_cast<double>(cfg.h_a));
  p.attn_w = uniform_matrix<Scalar>(cfg.h_a, cfg.h_c, ka, rng);
  p.attn_b = MatX<Scalar>::Zero(cfg.h_a, 1);
  p.attn_v = uniform_matrix<Scalar>(cfg.h_a, 1, ka, rng);
  return p;
}

template <class Scalar>
RecurrenceParams<Scalar> zero_recurrence(const ModelConfig& cfg) {
  RecurrenceParams<Scalar> p;
  p.gru_c = zero_gru_params<Scalar>(cfg.h_c, cfg.context_input_dim());
  p.gru_ss = zero_gru_params<Scalar>(cfg.h_s, cfg.speaker_input_dim());
  p.gru_sl = zero_gru_params<Scalar>(cfg.h_s, cfg.speaker_input_dim());
  p.gru_i = zero_gru_params<Scalar>(cfg.h_i, cfg.intra_input_dim());
  p.gru_e = zero_gru_params<Scalar>(cfg.h_e, cfg.emotion_input_dim());
  p.attn_w = MatX<Scalar>::Zero(cfg.h_a, cfg.h_c);
  p.attn_b = MatX<Scalar>::Zero(cfg.h_a, 1);
  p.attn_v = MatX<Scalar>::Zero(cfg.h_a, 1);
  return p;
}

}  // namespace detail

template <class Scalar>
ModelParams<Scalar> init_model_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams<Scalar> p;
  p.fwd = detail::init_recurrence<Scalar>(cfg, rng);
  if (cfg.bidirectional) {
    p.bwd = detail::init_recurrence<Scalar>(cfg, rng);
  }
  const int dc = cfg.classifier_dim();
  const double k1 = 1.0 / std::sqrt(static_cast<double>(dc));
  const double k2 = 1.0 / std::sqrt(static_cast<double>(cfg.n_classes));
  p.fc1_w = detail::uniform_matrix<Scalar>(dc, dc, k1, rng);
  p.fc1_b = MatX<Scalar>::Zero(dc, 1);
  p.fc2_w = detail::uniform_matrix<Scalar>(cfg.n_classes, dc, k2, rng);
  p.fc2_b = MatX<Scalar>::Zero(cfg.n_classes, 1);
  return p;
}

template <class Scalar>
ModelParams<Scalar> zero_model_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams<Scalar> p;
  p.fwd = detail::zero_recurrence<Scalar>(cfg);
  if (cfg.bidirectional) {
    p.bwd = detail::zero_recurrence<Scalar>(cfg);
  }
  const int dc = cfg.classifier_dim();
  p.fc1_w = MatX<Scalar>::Zero(dc, dc);
  p.fc1_b = MatX<Scalar>::Zero(dc, 1);
  p.fc2_w = MatX<Scalar>::Zero(cfg.n_classes, dc);
  p.fc2_b = MatX<Scalar>::Zero(cfg.n_classes, 1);
  return p;
}

template <class Scalar>
struct RecurrenceVars {
  GruVars<Scalar> gru_c, gru_ss, gru_sl, gru_i, gru_e;
  Var<Scalar> attn_w, attn_b, attn_v;
};

template <class Scalar>
struct ModelVars {
  RecurrenceVars<Scalar> fwd;
  std::optional<RecurrenceVars<Scalar>> bwd;
  Var<Scalar> fc1_w, fc1_b, fc2_w, fc2_b;
};

namespace detail {

template <class Scalar>
RecurrenceVars<Scalar> mount_recurrence(Tape<Scalar>& tape,
                                        const RecurrenceParams<Scalar>& p,
                                        bool requires_grad) {
  RecurrenceVars<Scalar> v;
  v.gru_c = mount(tape, p.gru_c, requires_grad);
  v.gru_ss = mount(tape, p.gru_ss, requires_grad);
  v.gru_sl = mount(tape, p.gru_sl, requires_grad);
  v.gru_i = mount(tape, p.gru_i, requires_grad);
  v.gru_e = mount(tape, p.gru_e, requires_grad);
  v.attn_w = tape.leaf(p.attn_w, requires_grad);
  v.attn_b = tape.leaf(p.attn_b, requires_grad);
  v.attn_v = tape.leaf(p.attn_v, requires_grad);
  return v;
}

}  // namespace detail

template <class Scalar>
ModelVars<Scalar> mount(Tape<Scalar>& tape, const ModelParams<Scalar>& p,
                        bool requires_grad) {
  ModelVars<Scalar> v;
  v.fwd = detail::mount_recurrence(tape, p.fwd, requires_grad);
  if (p.bwd) {
    v.bwd = detail::mount_recurrence(tape, *p.bwd, requires_grad);
  }
  v.fc1_w = tape.leaf(p.fc1_w, requires_grad);
  v.fc1_b = tape.leaf(p.fc1_b, requires_grad);
  v.fc2_w = tape.leaf(p.fc2_w, requires_grad);
  v.fc2_b = tape.leaf(p.fc2_b, requires_grad);
  return v;
}

// ---- per-dialogue state ---------------------------------------------------

struct AttentionTrace {
  // weights[t] are the alpha over [C_1..C_t]'s predecessors when utterance
  // t (0-based) was processed; weights[0] is empty.
  std::vector<std::vector<double>> weights;
};

template <class Scalar>
struct DialogueCursor {
  Var<Scalar> context;               // C_{t-1} entering the next step
  std::vector<Var<Scalar>> self;     // per roster party
  Var<Scalar> intra;
  Var<Scalar> emotion;
  std::vector<Var<Scalar>> history;  // [C_1 .. C_{t-1}]
};

// Context state ~ uniform(-0.1, 0.1) from the rng; self/intra/emotion
// states start at zero; empty history.
template <class Scalar>
DialogueCursor<Scalar> init_states(Tape<Scalar>& tape, const ModelConfig& cfg,
                                   int n_parties, Rng& rng) {
  cfg.validate();
  if (n_parties < 1) {
    throw DataError("dialogue needs at least one party");
  }
  DialogueCursor<Scalar> st;
  MatX<Scalar> c0(cfg.h_c, 1);
  for (int i = 0; i < cfg.h_c; ++i) {
    c0(i, 0) = static_cast<Scalar>(uniform(rng, -0.1, 0.1));
  }
  st.context = tape.leaf(std::move(c0));
  st.self.reserve(static_cast<std::size_t>(n_parties));
  for (int p = 0; p < n_parties; ++p) {
    st.self.push_back(tape.zeros(cfg.h_s));
  }
  st.intra = tape.zeros(cfg.h_i);
  st.emotion = tape.zeros(cfg.h_e);
  return st;
}

// ---- steps ----------------------------------------------------------------

// score_i = v . tanh(W C_i + b), one scalar per history entry.
template <class Scalar>
Var<Scalar> attention_scores(const RecurrenceVars<Scalar>& p,
                             std::span<const Var<Scalar>> history) {
  std::vector<Var<Scalar>> scores;
  scores.reserve(history.size());
  for (const auto& c : history) {
    scores.push_back(dot(p.attn_v, tanh(p.attn_w * c + p.attn_b)));
  }
  return concat_rows<Scalar>(scores);
}

template <class Scalar>
struct AttentionResult {
  Var<Scalar> pooled;  // a_t, h_c x 1 (zero when history is empty)
  Var<Scalar> alpha;   // invalid when history is empty
};

template <class Scalar>
AttentionResult<Scalar> attention_pool(Tape<Scalar>& tape,
                                       const RecurrenceVars<Scalar>& p,
                                       std::span<const Var<Scalar>> history,
                                       Index h_c) {
  AttentionResult<Scalar> out;
  if (history.empty()) {
    out.pooled = tape.zeros(h_c);
    return out;
  }
  out.alpha = softmax(attention_scores(p, history));
  out.pooled = matmul(concat_cols(history), out.alpha);
  return out;
}

// C_t = GRU_C(C_{t-1}, S_block + I_block + u); updates st.context and
// returns it. History management stays with the caller so the attention
// read of this step happens first.
template <class Scalar>
Var<Scalar> context_step(const RecurrenceVars<Scalar>& p,
                         const ModelConfig& cfg, Tape<Scalar>& tape,
                         DialogueCursor<Scalar>& st, int speaker,
                         const Var<Scalar>& u) {
  Var<Scalar> s_block = cfg.no_self_state
                            ? tape.zeros(cfg.h_s)
                            : st.self[static_cast<std::size_t>(speaker)];
  Var<Scalar> i_block =
      cfg.no_intra_state ? tape.zeros(cfg.h_i) : st.intra;
  st.context =
      gru_cell(p.gru_c, concat_rows({s_block, i_block, u}), st.context);
  return st.context;
}

// One GRU_SS update for the speaker and one GRU_SL update for every other
// roster party, all on the shared input C_t + u.
template <class Scalar>
void self_speaker_step(const RecurrenceVars<Scalar>& p,
                       DialogueCursor<Scalar>& st, int speaker,
                       const Var<Scalar>& c_t, const Var<Scalar>& u) {
  const Var<Scalar> input = concat_rows({c_t, u});
  for (std::size_t party = 0; party < st.self.size(); ++party) {
    const auto& cell =
        party == static_cast<std::size_t>(speaker) ? p.gru_ss : p.gru_sl;
    st.self[party] = gru_cell(cell, input, st.self[party]);
  }
}

template <class Scalar>
Var<Scalar> intra_speaker_step(const RecurrenceVars<Scalar>& p,
                               DialogueCursor<Scalar>& st,
                               const Var<Scalar>& a_t, const Var<Scalar>& u) {
  st.intra = gru_cell(p.gru_i, concat_rows({a_t, u}), st.intra);
  return st.intra;
}

template <class Scalar>
Var<Scalar> emotion_step(const RecurrenceVars<Scalar>& p,
                         const ModelConfig& cfg, Tape<Scalar>& tape,
                         DialogueCursor<Scalar>& st, int speaker,
                         const Var<Scalar>& u) {
  Var<Scalar> s_block = cfg.no_self_state
                            ? tape.zeros(cfg.h_s)
                            : st.self[static_cast<std::size_t>(speaker)];
  std::vector<Var<Scalar>> parts{st.context, s_block};
  if (cfg.emotion_uses_intra) {
    parts.push_back(cfg.no_intra_state ? tape.zeros(cfg.h_i) : st.intra);
  }
  parts.push_back(u);
  st.emotion =
      gru_cell(p.gru_e, concat_rows<Scalar>(parts), st.emotion);
  return st.emotion;
}

// logits = fc2(relu(fc1 e + b1) + e) + b2; the residual adds the block
// input, so fc1 must be square in the classifier dim.
template <class Scalar>
Var<Scalar> classifier_logits(const ModelVars<Scalar>& m,
                              const Var<Scalar>& e) {
  auto hidden = relu(m.fc1_w * e + m.fc1_b);
  return m.fc2_w * (hidden + e) + m.fc2_b;
}

template <class Scalar>
Var<Scalar> classify(const ModelVars<Scalar>& m, const Var<Scalar>& e) {
  return softmax(classifier_logits(m, e));
}

// ---- full dialogue --------------------------------------------------------

template <class Scalar>
struct UtteranceInput {
  int party = 0;       // dense roster index
  Var<Scalar> u;       // pooled utterance vector, d_u x 1
};

template <class Scalar>
struct DialogueForward {
  std::vector<Var<Scalar>> logits;  // per utterance, n_classes x 1
  std::vector<Var<Scalar>> probs;
  AttentionTrace attention;         // forward-direction weights
};

// Plain per-step state snapshots (forward direction), for inspection and
// reference comparisons.
template <class Scalar>
struct StepStates {
  MatX<Scalar> pooled;   // a_t
  MatX<Scalar> context;  // C_t
  std::vector<MatX<Scalar>> self;  // per roster party, after the update
  MatX<Scalar> intra;    // I_t
  MatX<Scalar> emotion;  // E_t
};

namespace detail {

template <class Scalar>
std::vector<Var<Scalar>> run_recurrence(Tape<Scalar>& tape,
                                        const RecurrenceVars<Scalar>& p,
                                        const ModelConfig& cfg,
                                        std::span<const UtteranceInput<Scalar>> utts,
                                        int n_parties, bool reversed, Rng& rng,
                                        AttentionTrace* trace,
                                        std::vector<StepStates<Scalar>>* states) {
  DialogueCursor<Scalar> st = init_states(tape, cfg, n_parties, rng);
  const std::size_t n = utts.size();
  std::vector<Var<Scalar>> emotions(n);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t idx = reversed ? n - 1 - step : step;
    const auto& utt = utts[idx];
    const Var<Scalar>& u = utt.u;

    AttentionResult<Scalar> att;
    if (cfg.no_attention_context) {
      att.pooled = tape.zeros(cfg.h_c);
    } else {
      att = attention_pool(tape, p, std::span<const Var<Scalar>>(st.history),
                           cfg.h_c);
    }
    if (trace != nullptr) {
      std::vector<double>& w = trace->weights[idx];
      if (att.alpha.valid()) {
        const auto& a = att.alpha.value();
        w.resize(static_cast<std::size_t>(a.rows()));
        for (Index i = 0; i < a.rows(); ++i) {
          w[static_cast<std::size_t>(i)] = static_cast<double>(a(i, 0));
        }
      }
    }

    const Var<Scalar> c_t = context_step(p, cfg, tape, st, utt.party, u);
    if (!cfg.no_attention_context) {
      st.history.push_back(c_t);
    }
    if (!cfg.no_self_state) {
      self_speaker_step(p, st, utt.party, c_t, u);
    }
    if (!cfg.no_intra_state) {
      intra_speaker_step(p, st, att.pooled, u);
    }
    emotions[idx] = emotion_step(p, cfg, tape, st, utt.party, u);

    if (states != nullptr) {
      StepStates<Scalar>& snap = (*states)[idx];
      snap.pooled = att.pooled.value();
      snap.context = st.context.value();
      snap.self.clear();
      for (const auto& s : st.self) {
        snap.self.push_back(s.value());
      }
      snap.intra = st.intra.value();
      snap.emotion = st.emotion.value();
    }
  }
  return emotions;
}

}  // namespace detail

template <class Scalar>
DialogueForward<Scalar> forward_dialogue(
    Tape<Scalar>& tape, const ModelVars<Scalar>& m, const ModelConfig& cfg,
    std::span<const UtteranceInput<Scalar>> utts, int n_parties,
    std::vector<StepStates<Scalar>>* state_trace = nullptr) {
  cfg.validate();
  if (utts.empty()) {
    throw EmptyDialogue("forward_dialogue: no utterances");
  }
  for (const auto& utt : utts) {
    if (utt.party < 0 || utt.party >= n_parties) {
      throw DataError("party index " + std::to_string(utt.party) +
                      " outside roster of " + std::to_string(n_parties));
    }
    if (utt.u.rows() != cfg.d_u || utt.u.cols() != 1) {
      throw ShapeError("utterance vector " +
                       shape_str(utt.u.rows(), utt.u.cols()) +
                       " does not match d_u = " + std::to_string(cfg.d_u));
    }
  }
  if (cfg.bidirectional && !m.bwd) {
    throw ConfigError("bidirectional config but no backward parameters");
  }

  DialogueForward<Scalar> out;
  out.attention.weights.resize(utts.size());
  if (state_trace != nullptr) {
    state_trace->assign(utts.size(), {});
  }
  Rng state_rng(cfg.state_seed);
  std::vector<Var<Scalar>> emotions = detail::run_recurrence(
      tape, m.fwd, cfg, utts, n_parties,
      /*reversed=*/false, state_rng, &out.attention, state_trace);
  if (cfg.bidirectional) {
    std::vector<Var<Scalar>> rev = detail::run_recurrence<Scalar>(
        tape, *m.bwd, cfg, utts, n_parties,
        /*reversed=*/true, state_rng, nullptr, nullptr);
    for (std::size_t t = 0; t < emotions.size(); ++t) {
      emotions[t] = concat_rows({emotions[t], rev[t]});
    }
  }

  out.logits.reserve(utts.size());
  out.probs.reserve(utts.size());
  for (const auto& e : emotions) {
    out.logits.push_back(classifier_logits(m, e));
    out.probs.push_back(softmax(out.logits.back()));
  }
  return out;
}

}  // namespace convoaffect
