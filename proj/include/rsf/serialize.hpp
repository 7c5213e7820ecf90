#pragma once

#include <iosfwd>
#include <string>

#include "rsf/forest.hpp"

namespace rsf {

/// Model file layout, version 1:
///
///   line 1   "RSF-FOREST 1"
///   rest     one JSON object:
///     config       {ntree, mtry, nodesize, min_child, split_rule, seed}
///     variables    predictor names, in column order
///     event_grid   pooled event times of the learning data
///     trees        [{inbag: [multiplicity per observation],
///                    nodes: [[left, right, terminal, variable, threshold, value, switched], ...],
///                    terminals: [{knots, values, inbag, uncensored, score}, ...]}]
///
/// Node 0 is the root. Internal nodes have terminal = -1; terminal nodes have
/// left = right = -1. Reals are written in shortest round-trip form, so
/// loading a saved forest reproduces it exactly.
inline constexpr const char* kForestMagic = "RSF-FOREST";
inline constexpr int kForestFormatVersion = 1;

void save_forest(const Forest& forest, std::ostream& out);
void save_forest(const Forest& forest, const std::string& path);

/// Throws FormatError on a bad magic line, unsupported version or malformed body.
Forest load_forest(std::istream& in);
Forest load_forest(const std::string& path);

}  // namespace rsf
