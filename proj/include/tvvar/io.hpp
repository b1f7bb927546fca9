#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tvvar/error.hpp"
#include "tvvar/series.hpp"

namespace tvvar {

inline constexpr int kMinimumRows = 30;

namespace detail {

/// Splits RFC-4180 text into records. Quoted fields may hold commas, doubled
/// quotes and line breaks. `lines[i]` is the 1-based line each record starts on.
inline std::vector<std::vector<std::string>> csv_records(const std::string& text, std::vector<int>& lines) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, at_start = true, any = false;
  int line = 1, rec_line = 1;
  auto end_field = [&] {
    rec.push_back(field);
    field.clear();
    at_start = true;
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.size() == 1 && rec[0].empty() && !any)) {
      out.push_back(rec);
      lines.push_back(rec_line);
    }
    rec.clear();
    any = false;
  };
  std::size_t i = 0;
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && at_start) {
      quoted = true;
      at_start = false;
      any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
      rec_line = line;
    } else {
      field += c;
      at_start = false;
      any = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field starting on line " + std::to_string(rec_line));
  if (!field.empty() || !rec.empty() || any) end_record();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(const std::string& raw, double& v) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

} // namespace detail

/// Header row, then numeric rows. A first column whose first value is not
/// numeric is taken as row labels (dates).
inline SeriesMatrix parse_csv(const std::string& text, const std::string& source = "<input>") {
  std::vector<int> lines;
  const auto recs = detail::csv_records(text, lines);
  if (recs.empty()) throw DataError(source + ": empty file");
  const auto& header = recs.front();
  const auto ncol = header.size();
  const auto nrows = recs.size() - 1;
  if (nrows < static_cast<std::size_t>(kMinimumRows)) {
    throw DataError(source + ": too short, " + std::to_string(nrows) + " data rows (need at least " +
                    std::to_string(kMinimumRows) + ")");
  }
  double probe = 0.0;
  const bool labelled = ncol > 1 && !detail::parse_number(recs[1][0], probe);
  const std::size_t c0 = labelled ? 1 : 0;
  std::vector<std::string> names;
  for (std::size_t j = c0; j < ncol; ++j) names.push_back(detail::trim(header[j]));
  Mat values(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncol - c0));
  std::vector<std::string> labels;
  for (std::size_t r = 1; r < recs.size(); ++r) {
    const auto& rec = recs[r];
    if (rec.size() != ncol) {
      throw DataError(source + ": line " + std::to_string(lines[r]) + " has " + std::to_string(rec.size()) +
                      " fields, header has " + std::to_string(ncol));
    }
    if (labelled) labels.push_back(detail::trim(rec[0]));
    for (std::size_t j = c0; j < ncol; ++j) {
      double v = 0.0;
      if (!detail::parse_number(rec[j], v)) {
        throw DataError(source + ": line " + std::to_string(lines[r]) + ", column " + std::to_string(j + 1) + " ('" +
                        names[j - c0] + "'): cannot parse '" + rec[j] + "' as a number");
      }
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j - c0)) = v;
    }
  }
  return SeriesMatrix(std::move(values), std::move(names), std::move(labels));
}

inline SeriesMatrix ingest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

/// Shortest round-trip decimal form; NaN becomes an empty field.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Accumulates rows and writes them with CRLF-free RFC-4180 quoting.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : ncol_(header.size()) { row(header); }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != ncol_) throw std::logic_error("CsvWriter: field count mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += csv_field(fields[i]);
    }
    buf_ += '\n';
  }

  const std::string& str() const { return buf_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << buf_;
  }

  static std::string series_text(const SeriesMatrix& x) {
    std::vector<std::string> head;
    if (!x.labels.empty()) head.push_back("date");
    head.insert(head.end(), x.names.begin(), x.names.end());
    CsvWriter w(head);
    for (int t = 0; t < x.T(); ++t) {
      std::vector<std::string> f;
      if (!x.labels.empty()) f.push_back(x.labels[static_cast<std::size_t>(t)]);
      for (int j = 0; j < x.d(); ++j) f.push_back(format_number(x.values(t, j)));
      w.row(f);
    }
    return w.str();
  }

private:
  std::size_t ncol_;
  std::string buf_;
};

} // namespace tvvar
