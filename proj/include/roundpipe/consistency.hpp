#pragma once

// Model checker for the asynchronous-optimizer hand-off protocol. Two
// sequential workers: the GPU worker uploads weights in forward order
// then writes gradients in backward order each iteration; the
// optimizer worker runs step(T) then per-layer param/grad copies.
// Five ordering constraints must hold under every interleaving:
//   (1) weight upload of (l,T) before param copy of (l,T)
//   (2) param copy of (l,T) before upload of (l,T+1)
//   (3) gradient write of (l,T) before grad copy of (l,T)
//   (4) grad copy of (l,T) before gradient write of (l,T+1)
//   (5) copies of iteration T sit between step(T) and step(T+1)
// The per-layer and per-model event modes enforce them with dependency
// edges; blocking mode serializes the two workers per iteration.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace roundpipe {

enum class ActionKind { ParamUpload, GradWrite, OptStep, ParamCopy, GradCopy };
enum class ProtocolMode { Blocking, EventPerModel, EventPerLayer };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::ParamUpload: return "param_upload";
    case ActionKind::GradWrite: return "grad_write";
    case ActionKind::OptStep: return "opt_step";
    case ActionKind::ParamCopy: return "p_copy";
    case ActionKind::GradCopy: return "g_copy";
  }
  return "?";
}

inline const char* to_string(ProtocolMode m) {
  switch (m) {
    case ProtocolMode::Blocking: return "blocking";
    case ProtocolMode::EventPerModel: return "event-per-model";
    case ProtocolMode::EventPerLayer: return "event-per-layer";
  }
  return "?";
}

inline std::optional<ProtocolMode> protocol_mode_from(const std::string& s) {
  if (s == "blocking") return ProtocolMode::Blocking;
  if (s == "event-per-model") return ProtocolMode::EventPerModel;
  if (s == "event-per-layer") return ProtocolMode::EventPerLayer;
  return std::nullopt;
}

struct ProtocolAction {
  ActionKind kind = ActionKind::ParamUpload;
  int layer = 0;  // -1 for opt_step
  int iteration = 0;
  bool operator==(const ProtocolAction&) const = default;
};

struct Protocol {
  int layers = 0;
  int iterations = 0;
  ProtocolMode mode = ProtocolMode::EventPerLayer;
  // Lane 0 (GPU worker) actions come first, then lane 1 (optimizer).
  std::vector<ProtocolAction> actions;
  int gpu_actions = 0;  // lane boundary
  std::vector<std::pair<int, int>> edges;  // action-index pairs (a before b)
};

struct Verdict {
  bool ok = true;
  int violated_constraint = 0;               // 1..5 when !ok
  std::vector<ProtocolAction> witness;       // interleaving prefix
};

namespace consistency {

// drop_edge in 1..4 removes that constraint's enforcement edges (event
// modes only) so the checker can demonstrate each edge is necessary.
inline Protocol build_protocol(int layers, int iterations, ProtocolMode mode,
                               int drop_edge = 0) {
  if (layers < 1 || iterations < 1)
    throw std::invalid_argument("build_protocol: layers, iterations >= 1");
  Protocol p;
  p.layers = layers;
  p.iterations = iterations;
  p.mode = mode;
  const int L = layers, T = iterations;
  std::map<std::tuple<int, int, int>, int> index;  // (kind, layer, iter)
  auto add = [&](ActionKind k, int l, int t) {
    index[{static_cast<int>(k), l, t}] = static_cast<int>(p.actions.size());
    p.actions.push_back({k, l, t});
  };
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) add(ActionKind::ParamUpload, l, t);
    for (int l = L - 1; l >= 0; --l) add(ActionKind::GradWrite, l, t);
  }
  p.gpu_actions = static_cast<int>(p.actions.size());
  for (int t = 0; t < T; ++t) {
    add(ActionKind::OptStep, -1, t);
    for (int l = 0; l < L; ++l) {
      add(ActionKind::ParamCopy, l, t);
      add(ActionKind::GradCopy, l, t);
    }
  }
  auto edge = [&](ActionKind ka, int la, int ta, ActionKind kb, int lb,
                  int tb) {
    auto a = index.find({static_cast<int>(ka), la, ta});
    auto b = index.find({static_cast<int>(kb), lb, tb});
    if (a != index.end() && b != index.end())
      p.edges.emplace_back(a->second, b->second);
  };
  // program order within each lane
  for (int i = 1; i < p.gpu_actions; ++i) p.edges.emplace_back(i - 1, i);
  for (int i = p.gpu_actions + 1; i < static_cast<int>(p.actions.size()); ++i)
    p.edges.emplace_back(i - 1, i);
  switch (mode) {
    case ProtocolMode::EventPerLayer:
      for (int t = 0; t < T; ++t)
        for (int l = 0; l < L; ++l) {
          if (drop_edge != 1)
            edge(ActionKind::ParamUpload, l, t, ActionKind::ParamCopy, l, t);
          if (drop_edge != 2)
            edge(ActionKind::ParamCopy, l, t, ActionKind::ParamUpload, l,
                 t + 1);
          if (drop_edge != 3)
            edge(ActionKind::GradWrite, l, t, ActionKind::GradCopy, l, t);
          if (drop_edge != 4)
            edge(ActionKind::GradCopy, l, t, ActionKind::GradWrite, l, t + 1);
        }
      break;
    case ProtocolMode::EventPerModel:
      for (int t = 0; t < T; ++t) {
        if (drop_edge != 1)
          edge(ActionKind::ParamUpload, L - 1, t, ActionKind::ParamCopy, 0, t);
        if (drop_edge != 2)
          edge(ActionKind::ParamCopy, L - 1, t, ActionKind::ParamUpload, 0,
               t + 1);
        if (drop_edge != 3)
          edge(ActionKind::GradWrite, 0, t, ActionKind::GradCopy, 0, t);
        if (drop_edge != 4)
          edge(ActionKind::GradCopy, L - 1, t, ActionKind::GradWrite, L - 1,
               t + 1);
      }
      break;
    case ProtocolMode::Blocking:
      // GPU iteration t finishes (last grad write is layer 0) before
      // the optimizer's step(t); the optimizer's last copy of t
      // (g_copy of layer L-1) before the GPU starts iteration t+1.
      for (int t = 0; t < T; ++t) {
        edge(ActionKind::GradWrite, 0, t, ActionKind::OptStep, -1, t);
        edge(ActionKind::GradCopy, L - 1, t, ActionKind::ParamUpload, 0,
             t + 1);
      }
      break;
  }
  return p;
}

struct CapExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Explores every interleaving of the two sequential lanes admitted by
// the dependency graph. Lane progress (i, j) fully determines the done
// set, so states are memoized; the walk is DFS with the GPU lane tried
// first, making any witness deterministic.
inline Verdict check_all_interleavings(const Protocol& p,
                                       std::size_t max_states = 1u << 24) {
  const int n = static_cast<int>(p.actions.size());
  const int G = p.gpu_actions, O = n - G;
  std::vector<std::vector<int>> pred(n);
  for (auto [a, b] : p.edges) pred[b].push_back(a);

  // semantic constraints, re-derived independently of the graph edges
  struct Constraint {
    int id, a, b;  // a must be done before b is scheduled
  };
  std::vector<Constraint> cons;
  std::map<std::tuple<int, int, int>, int> index;
  for (int i = 0; i < n; ++i)
    index[{static_cast<int>(p.actions[i].kind), p.actions[i].layer,
           p.actions[i].iteration}] = i;
  auto at = [&](ActionKind k, int l, int t) -> int {
    auto it = index.find({static_cast<int>(k), l, t});
    return it == index.end() ? -1 : it->second;
  };
  auto require = [&](int id, int a, int b) {
    if (a >= 0 && b >= 0) cons.push_back({id, a, b});
  };
  for (int t = 0; t < p.iterations; ++t)
    for (int l = 0; l < p.layers; ++l) {
      require(1, at(ActionKind::ParamUpload, l, t),
              at(ActionKind::ParamCopy, l, t));
      require(2, at(ActionKind::ParamCopy, l, t),
              at(ActionKind::ParamUpload, l, t + 1));
      require(3, at(ActionKind::GradWrite, l, t),
              at(ActionKind::GradCopy, l, t));
      require(4, at(ActionKind::GradCopy, l, t),
              at(ActionKind::GradWrite, l, t + 1));
      require(5, at(ActionKind::OptStep, -1, t),
              at(ActionKind::ParamCopy, l, t));
      require(5, at(ActionKind::OptStep, -1, t),
              at(ActionKind::GradCopy, l, t));
      require(5, at(ActionKind::ParamCopy, l, t),
              at(ActionKind::OptStep, -1, t + 1));
      require(5, at(ActionKind::GradCopy, l, t),
              at(ActionKind::OptStep, -1, t + 1));
    }
  std::vector<std::vector<Constraint>> cons_by_target(n);
  for (auto c : cons) cons_by_target[c.b].push_back(c);

  auto is_done = [&](int a, int i, int j) {
    return a < G ? a < i : a - G < j;
  };
  std::set<std::pair<int, int>> seen;
  Verdict verdict;
  std::vector<ProtocolAction> path;
  auto dfs = [&](auto&& self, int i, int j) -> bool {
    if (i == G && j == O) return true;
    if (seen.count({i, j})) return true;
    if (seen.size() > max_states)
      throw CapExceededError("interleaving state cap exceeded");
    for (int k : {i < G ? i : -1, j < O ? G + j : -1}) {
      if (k < 0) continue;
      bool ready = true;
      for (int q : pred[k])
        if (!is_done(q, i, j)) {
          ready = false;
          break;
        }
      if (!ready) continue;
      for (const auto& c : cons_by_target[k])
        if (!is_done(c.a, i, j)) {
          path.push_back(p.actions[k]);
          verdict = {false, c.id, path};
          return false;
        }
      path.push_back(p.actions[k]);
      const bool ok = k < G ? self(self, i + 1, j) : self(self, i, j + 1);
      if (!ok) return false;
      path.pop_back();
    }
    seen.insert({i, j});
    return true;
  };
  if (dfs(dfs, 0, 0)) verdict = Verdict{};
  return verdict;
}

}  // namespace consistency

struct ActionDurations {
  std::int64_t upload_ns = 2;
  std::int64_t grad_write_ns = 2;
  std::int64_t step_ns = 3;
  std::int64_t p_copy_ns = 1;
  std::int64_t g_copy_ns = 1;

  std::int64_t of(ActionKind k) const {
    switch (k) {
      case ActionKind::ParamUpload: return upload_ns;
      case ActionKind::GradWrite: return grad_write_ns;
      case ActionKind::OptStep: return step_ns;
      case ActionKind::ParamCopy: return p_copy_ns;
      case ActionKind::GradCopy: return g_copy_ns;
    }
    return 0;
  }
};

namespace consistency {

// Critical-path length when actions run as early as their edges allow.
inline std::int64_t protocol_makespan(const Protocol& p,
                                      const ActionDurations& dur) {
  const int n = static_cast<int>(p.actions.size());
  std::vector<std::vector<int>> succ(n);
  std::vector<std::vector<int>> pred(n);
  std::vector<int> indeg(n, 0);
  for (auto [a, b] : p.edges) {
    succ[a].push_back(b);
    pred[b].push_back(a);
    ++indeg[b];
  }
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) order.push_back(i);
  for (std::size_t h = 0; h < order.size(); ++h)
    for (int y : succ[order[h]])
      if (--indeg[y] == 0) order.push_back(y);
  if (static_cast<int>(order.size()) != n)
    throw std::logic_error("protocol graph has a cycle");
  std::vector<std::int64_t> fin(n, 0);
  std::int64_t best = 0;
  for (int x : order) {
    std::int64_t start = 0;
    for (int q : pred[x]) start = std::max(start, fin[q]);
    fin[x] = start + dur.of(p.actions[x].kind);
    best = std::max(best, fin[x]);
  }
  return best;
}

}  // namespace consistency
}  // namespace roundpipe
