#include <sqvi/problems.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <utility>
#include <vector>

namespace sqvi {

namespace {

bool ParseDouble(std::string_view s, double* out) {
  if (s.size() > 1 && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool ParseIndex(std::string_view s, long* out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void Fail(int line, const std::string& what) {
  throw Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + what);
}

}  // namespace

LibsvmData ParseLibsvm(const std::string& text) {
  struct Row {
    double label;
    std::vector<std::pair<long, double>> entries;
  };
  std::vector<Row> rows;
  long max_index = 0;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;

    Row row;
    if (!ParseDouble(tok, &row.label)) Fail(line_no, "bad label '" + tok + "'");
    long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        Fail(line_no, "expected idx:val, got '" + tok + "'");
      }
      long idx = 0;
      double val = 0.0;
      const std::string_view view(tok);
      if (!ParseIndex(view.substr(0, colon), &idx) || idx < 1) {
        Fail(line_no, "bad index in '" + tok + "'");
      }
      if (!ParseDouble(view.substr(colon + 1), &val)) {
        Fail(line_no, "bad value in '" + tok + "'");
      }
      if (idx <= prev) Fail(line_no, "indices must be strictly ascending");
      prev = idx;
      max_index = std::max(max_index, idx);
      row.entries.emplace_back(idx, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptyFile, "no data lines");

  LibsvmData data;
  data.features = Mat::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  data.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    data.targets[r] = rows[r].label;
    for (const auto& [idx, val] : rows[r].entries) {
      data.features(r, idx - 1) = val;
    }
  }
  return data;
}

LibsvmData LoadLibsvm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return ParseLibsvm(buf.str());
}

}  // namespace sqvi
