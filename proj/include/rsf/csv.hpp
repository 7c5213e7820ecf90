#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsf/evaluation.hpp"
#include "rsf/survival.hpp"

namespace rsf {

/// Reads a header row with columns `time` and `status` plus any number of
/// predictor columns (kept in file order). Throws LoadError naming the data
/// row (1-based, header excluded) and column of the first bad cell.
SurvivalDataset load_csv(const std::string& path);
SurvivalDataset read_csv(std::istream& in, const std::string& source = "<stream>");

/// Writes time,status,<predictors> with reals in shortest round-trip form.
void write_csv(const SurvivalDataset& data, const std::string& path);
void write_csv(const SurvivalDataset& data, std::ostream& out);

/// Single `score` column, one row per observation.
void write_scores_csv(const std::vector<double>& scores, const std::string& path);
std::vector<double> load_scores_csv(const std::string& path);

/// variable,raw,scaled,rank
void write_importance_csv(const ImportanceReport& report, const std::string& path);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

}  // namespace rsf
