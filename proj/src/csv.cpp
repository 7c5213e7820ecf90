#include "rsf/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rsf/error.hpp"

namespace rsf {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw OutputError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

SurvivalDataset read_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line);
  std::ptrdiff_t time_col = -1, status_col = -1;
  std::vector<std::size_t> predictor_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.empty()) throw LoadError(source + ": empty column name in header (column " + std::to_string(c + 1) + ")");
    if (h == "time" || h == "status") {
      auto& slot = h == "time" ? time_col : status_col;
      if (slot >= 0) throw LoadError(source + ": duplicate '" + h + "' column");
      slot = static_cast<std::ptrdiff_t>(c);
      continue;
    }
    for (const auto& seen : names) {
      if (seen == h) throw LoadError(source + ": duplicate column '" + h + "'");
    }
    predictor_cols.push_back(c);
    names.push_back(h);
  }
  if (time_col < 0) throw LoadError(source + ": missing required column 'time'");
  if (status_col < 0) throw LoadError(source + ": missing required column 'status'");

  std::vector<Observation> obs;
  std::vector<std::vector<double>> columns(predictor_cols.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (cells.size() != header.size()) {
      throw LoadError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    const auto cell_value = [&](std::size_t c) {
      if (cells[c].empty()) throw LoadError(where + ", column '" + header[c] + "': missing value");
      auto v = parse_real(cells[c]);
      if (!v) throw LoadError(where + ", column '" + header[c] + "': not a number ('" + cells[c] + "')");
      return *v;
    };
    const double t = cell_value(static_cast<std::size_t>(time_col));
    if (!(t > 0.0)) throw LoadError(where + ", column 'time': time must be positive");
    const double s = cell_value(static_cast<std::size_t>(status_col));
    if (s != 0.0 && s != 1.0) throw LoadError(where + ", column 'status': status must be 0 or 1");
    obs.push_back(Observation{t, static_cast<std::uint8_t>(s)});
    for (std::size_t k = 0; k < predictor_cols.size(); ++k) columns[k].push_back(cell_value(predictor_cols[k]));
  }
  if (obs.empty()) throw LoadError(source + ": no data rows");
  return SurvivalDataset(std::move(obs), std::move(columns), std::move(names));
}

SurvivalDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(const SurvivalDataset& data, std::ostream& out) {
  out << "time,status";
  for (const auto& name : data.variable_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << format_real(data.observation(i).time) << ',' << static_cast<int>(data.observation(i).status);
    for (std::size_t j = 0; j < data.p(); ++j) out << ',' << format_real(data.value(i, j));
    out << '\n';
  }
}

void write_csv(const SurvivalDataset& data, const std::string& path) {
  auto out = open_out(path);
  write_csv(data, out);
}

void write_scores_csv(const std::vector<double>& scores, const std::string& path) {
  auto out = open_out(path);
  out << "score\n";
  for (double s : scores) out << format_real(s) << '\n';
}

std::vector<double> load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "score") throw LoadError(path + ": expected header 'score'");
  std::vector<double> scores;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto v = parse_real(trim(line));
    if (!v) throw LoadError(path + ": row " + std::to_string(row) + ": not a number");
    scores.push_back(*v);
  }
  return scores;
}

void write_importance_csv(const ImportanceReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "variable,raw,scaled,rank\n";
  for (std::size_t j = 0; j < report.variables.size(); ++j) {
    out << report.variables[j] << ',' << format_real(report.raw[j]) << ',' << format_real(report.scaled[j]) << ','
        << report.rank[j] << '\n';
  }
}

}  // namespace rsf
