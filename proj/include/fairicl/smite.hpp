#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fairicl/dataset.hpp"
#include "fairicl/metrics.hpp"
#include "fairicl/predictor.hpp"
#include "fairicl/selection.hpp"

namespace fairicl {

/// Per-position core sets for one batch.
///
/// `last_rank[j]` is the 1-based support rank most recently added to position
/// j's core set (2 = second closest). Ranks whose id is a proxy member are
/// skipped, so cores[j] == support[j] ranks 2..last_rank[j] minus proxy ids.
/// A position is frozen once no admissible rank is left to add.
struct CoreSetState {
  std::vector<std::size_t> last_rank;
  std::vector<bool> frozen;
  std::vector<std::vector<RecordId>> cores;

  std::size_t size() const { return last_rank.size(); }
  bool all_frozen() const;
};

// Seeds each position with its first admissible rank >= 2.
CoreSetState init_core_sets(const BatchContext& ctx);

// Adds the next admissible rank of position idx. When none is left the
// position is frozen and its core set is unchanged. Throws std::logic_error
// if idx is already frozen.
CoreSetState expand(const BatchContext& ctx, CoreSetState state, std::size_t idx);

// Union of all core sets, deduplicated, ordered by (position, rank).
std::vector<RecordId> core_union(const CoreSetState& state);

struct SmiteIteration {
  std::size_t round = 0;  // 1-based
  std::vector<double> individual;
  double total = 0.0;
  std::size_t ice_count = 0;
  std::vector<std::size_t> last_rank;  // before this round's expansion
  std::vector<bool> frozen;
  std::optional<std::size_t> expanded;  // empty when every position was frozen
};

struct SmiteTrace {
  std::size_t batch_index = 0;
  std::vector<SmiteIteration> iterations;
  std::size_t best_round = 0;
  double best_total = 0.0;
  std::vector<std::size_t> best_last_rank;
  std::vector<RecordId> icd;
};

struct SmiteParams {
  double alpha = 0.5;
  std::size_t rounds = 10;  // l
  double rho = kDefaultRho;
};

struct SmiteResult {
  std::vector<RecordId> icd;
  SmiteTrace trace;
};

/// Greedy ICE selection for one batch. Each round scores every core set on
/// its own (individual error) and their union (total error) against the
/// proxy set, remembers the union with the strictly lowest total error, then
/// grows the non-frozen core set with the highest individual error (lowest
/// position wins ties). Stops after `rounds` rounds or once every position is
/// frozen.
SmiteResult icd_select(const BatchContext& ctx, const Dataset& train, const SmiteParams& params,
                       Predictor& predictor);

nlohmann::json to_json(const SmiteTrace& trace);

}  // namespace fairicl
