#pragma once

#include <cstddef>
#include <cstdint>

#include "fairicl/dataset.hpp"

namespace fairicl {

// Adult-like schema used for offline runs: two numeric features, four
// categorical ones (sex among them) and an ">50K"/"<=50K" income label.
Schema synthetic_schema();

/// Deterministic tabular data whose label is a noisy threshold of a score
/// driven mostly by education and occupation, with a smaller boost for the
/// z = 1 group so that group positive rates differ.
Dataset generate_synthetic(std::size_t rows, std::uint64_t seed);

}  // namespace fairicl
