#include "fairicl/smite.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fairicl {

namespace {

bool admissible(const BatchContext& ctx, const std::vector<RecordId>& core, RecordId id) {
  return !ctx.is_proxy(id) && std::find(core.begin(), core.end(), id) == core.end();
}

// First admissible 1-based rank strictly after `after`, or 0.
std::size_t next_admissible(const BatchContext& ctx, const CoreSetState& state, std::size_t j,
                            std::size_t after) {
  const auto& ranked = ctx.support[j].ranked_ids;
  for (std::size_t rank = after + 1; rank <= ranked.size(); ++rank) {
    if (admissible(ctx, state.cores[j], ranked[rank - 1])) return rank;
  }
  return 0;
}

}  // namespace

bool CoreSetState::all_frozen() const {
  return std::all_of(frozen.begin(), frozen.end(), [](bool f) { return f; });
}

CoreSetState init_core_sets(const BatchContext& ctx) {
  const auto m = ctx.support.size();
  CoreSetState state;
  state.last_rank.assign(m, 2);
  state.frozen.assign(m, false);
  state.cores.assign(m, {});
  for (std::size_t j = 0; j < m; ++j) {
    if (ctx.support[j].ranked_ids.size() < 2) {
      throw std::invalid_argument("position " + std::to_string(j) +
                                  " has fewer than 2 support entries");
    }
    const auto rank = next_admissible(ctx, state, j, 1);
    if (rank == 0) {
      state.frozen[j] = true;
      continue;
    }
    state.last_rank[j] = rank;
    state.cores[j].push_back(ctx.support[j].ranked_ids[rank - 1]);
    state.frozen[j] = next_admissible(ctx, state, j, rank) == 0;
  }
  return state;
}

CoreSetState expand(const BatchContext& ctx, CoreSetState state, std::size_t idx) {
  if (idx >= state.size()) throw std::out_of_range("expand: no position " + std::to_string(idx));
  if (state.frozen[idx]) {
    throw std::logic_error("expand: position " + std::to_string(idx) + " is frozen");
  }
  const auto rank = next_admissible(ctx, state, idx, state.last_rank[idx]);
  if (rank == 0) {
    state.frozen[idx] = true;
    return state;
  }
  state.last_rank[idx] = rank;
  state.cores[idx].push_back(ctx.support[idx].ranked_ids[rank - 1]);
  state.frozen[idx] = next_admissible(ctx, state, idx, rank) == 0;
  return state;
}

std::vector<RecordId> core_union(const CoreSetState& state) {
  std::vector<RecordId> out;
  for (const auto& core : state.cores) {
    for (auto id : core) {
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
  }
  return out;
}

SmiteResult icd_select(const BatchContext& ctx, const Dataset& train, const SmiteParams& params,
                       Predictor& predictor) {
  if (params.rounds == 0) throw std::invalid_argument("icd_select: rounds must be at least 1");
  if (ctx.proxy.empty()) throw std::invalid_argument("icd_select: empty batch");

  SmiteResult result;
  auto& trace = result.trace;
  trace.batch_index = ctx.batch_index;
  trace.best_total = std::numeric_limits<double>::infinity();

  auto state = init_core_sets(ctx);
  for (std::size_t round = 1; round <= params.rounds; ++round) {
    SmiteIteration it;
    it.round = round;
    it.last_rank = state.last_rank;
    it.frozen = state.frozen;
    for (const auto& core : state.cores) {
      it.individual.push_back(
          evaluate_proxy_error(train, ctx.proxy, core, params.alpha, predictor, params.rho).error);
    }
    const auto ices = core_union(state);
    it.ice_count = ices.size();
    it.total = evaluate_proxy_error(train, ctx.proxy, ices, params.alpha, predictor, params.rho).error;
    if (it.total < trace.best_total) {
      trace.best_total = it.total;
      trace.best_round = round;
      trace.best_last_rank = state.last_rank;
      result.icd = ices;
    }
    if (!state.all_frozen()) {
      std::size_t idx = state.size();
      for (std::size_t j = 0; j < state.size(); ++j) {
        if (state.frozen[j]) continue;
        if (idx == state.size() || it.individual[j] > it.individual[idx]) idx = j;
      }
      it.expanded = idx;
      state = expand(ctx, std::move(state), idx);
    }
    const bool stop = !it.expanded.has_value();
    trace.iterations.push_back(std::move(it));
    if (stop) break;
  }
  trace.icd = result.icd;
  return result;
}

nlohmann::json to_json(const SmiteTrace& trace) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& it : trace.iterations) {
    nlohmann::json frozen = nlohmann::json::array();
    for (bool f : it.frozen) frozen.push_back(f);
    iterations.push_back({{"round", it.round},
                          {"individual", it.individual},
                          {"total", it.total},
                          {"ice_count", it.ice_count},
                          {"last_rank", it.last_rank},
                          {"frozen", std::move(frozen)},
                          {"expanded", it.expanded ? nlohmann::json(*it.expanded) : nlohmann::json()}});
  }
  return {{"batch", trace.batch_index},
          {"iterations", std::move(iterations)},
          {"best_round", trace.best_round},
          {"best_total", trace.best_total},
          {"best_last_rank", trace.best_last_rank},
          {"icd", trace.icd}};
}

}  // namespace fairicl
