/*
 * Copyright 2026 The quadscreen Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dataset and model persistence.
//
// Sparse binary: one row per line, ascending feature indices of the present
// features ("i" or "i:1"), labels in a separate file with one of 0, 1, -1,
// +1 per line.
//
// CSV:
//
//   # quadscreen dataset v1
//   # seed: 7
//   # alphabet: * -1 1
//   # alphabet: 4 -2 -1 1 2
//   y,x0,x1,...
//   1,-1,1,...
//
// Columns without an alphabet directive default to {-1, 1}.
//
// Model JSON:
//
//   {"p": 3, "alphabet": [-1, 1] | "alphabets": [[...], ...],
//    "quad_terms": [[i, j, beta], ...], "lin_terms": [[j, alpha], ...],
//    "constant": 0, "gamma": 1, "sigma": "sigmoid" | "piecewise_linear",
//    "marginals": [[...], ...] | "biases": [...], "seed": 0}
//
// Readers reject malformed input; every error carries a location.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"

namespace quadscreen {

enum class Encoding { kPlusMinusOne, kZeroOne };

inline Alphabet encoding_alphabet(Encoding e) {
  return e == Encoding::kPlusMinusOne ? Alphabet::plus_minus_one()
                                      : Alphabet::zero_one();
}

namespace detail {

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading", path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing", path.string());
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t t = 0;
  while (t < s.size()) {
    while (t < s.size() && (s[t] == ' ' || s[t] == '\t')) ++t;
    const std::size_t start = t;
    while (t < s.size() && s[t] != ' ' && s[t] != '\t') ++t;
    if (t > start) out.push_back(s.substr(start, t - start));
  }
  return out;
}

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  T value{};
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline std::uint8_t parse_label(std::string_view token, const std::string& loc) {
  const auto t = trim(token);
  if (t == "1" || t == "+1") return 1;
  if (t == "0" || t == "-1") return 0;
  throw Error(ErrorCode::kParse, "label must be one of 0, 1, -1, +1", loc);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sparse binary.

struct SparseReadOptions {
  std::size_t p = 0;
  Encoding encoding = Encoding::kPlusMinusOne;
  std::size_t index_base = 0;
  std::uint64_t seed = 0;
};

inline std::vector<std::uint8_t> read_labels(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<std::uint8_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (detail::trim(line).empty()) {
      throw Error(ErrorCode::kParse, "empty label line", detail::where(path, lineno));
    }
    labels.push_back(detail::parse_label(line, detail::where(path, lineno)));
  }
  return labels;
}

inline Dataset read_sparse_binary(const std::filesystem::path& features,
                                  const std::filesystem::path& labels_path,
                                  const SparseReadOptions& opts) {
  if (opts.p == 0) throw Error(ErrorCode::kInvalidArgument, "sparse read needs p >= 1");
  if (opts.index_base > 1) {
    throw Error(ErrorCode::kInvalidArgument, "index base must be 0 or 1");
  }
  const Alphabet alphabet = encoding_alphabet(opts.encoding);
  const std::uint8_t absent = *alphabet.code_of(opts.encoding == Encoding::kPlusMinusOne ? -1.0 : 0.0);
  const std::uint8_t present = *alphabet.code_of(1.0);

  auto in = detail::open_in(features);
  std::vector<std::vector<std::size_t>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    const auto loc = detail::where(features, lineno);
    std::vector<std::size_t> row;
    for (auto token : detail::split_ws(line)) {
      const auto colon = token.find(':');
      auto index_part = token.substr(0, colon);
      if (colon != std::string_view::npos) {
        const auto v = detail::parse_number<double>(token.substr(colon + 1));
        if (!v || *v != 1.0) {
          throw Error(ErrorCode::kParse, "feature value must be 1", loc);
        }
      }
      const auto raw = detail::parse_number<std::uint64_t>(index_part);
      if (!raw) {
        throw Error(ErrorCode::kParse,
                    "malformed index '" + std::string(index_part) + "'", loc);
      }
      if (*raw < opts.index_base || *raw - opts.index_base >= opts.p) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "index " + std::to_string(*raw) + " outside p=" + std::to_string(opts.p),
                    loc);
      }
      const std::size_t idx = *raw - opts.index_base;
      if (!row.empty() && idx <= row.back()) {
        throw Error(ErrorCode::kParse, "indices must be strictly ascending", loc);
      }
      row.push_back(idx);
    }
    rows.push_back(std::move(row));
  }
  auto labels = read_labels(labels_path);
  if (labels.size() != rows.size()) {
    throw Error(ErrorCode::kSchema,
                "label file has " + std::to_string(labels.size()) +
                    " rows, feature file has " + std::to_string(rows.size()),
                labels_path.string());
  }
  const std::size_t n = rows.size();
  std::vector<std::uint8_t> codes(n * opts.p, absent);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t idx : rows[r]) codes[idx * n + r] = present;
  }
  return Dataset(n, opts.p, std::vector<Alphabet>(opts.p, alphabet), std::move(codes),
                 std::move(labels), opts.seed);
}

inline void write_labels(const std::filesystem::path& path,
                         std::span<const std::uint8_t> labels) {
  auto out = detail::open_out(path);
  for (auto y : labels) out << static_cast<int>(y) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed", path.string());
}

// Every column must use the encoding's alphabet.
inline void write_sparse_binary(const std::filesystem::path& features,
                                const std::filesystem::path& labels_path,
                                const Dataset& data,
                                Encoding encoding = Encoding::kPlusMinusOne,
                                std::size_t index_base = 0) {
  const Alphabet alphabet = encoding_alphabet(encoding);
  for (std::size_t i = 0; i < data.cols(); ++i) {
    if (!(data.alphabet(i) == alphabet)) {
      throw Error(ErrorCode::kSchema, "column alphabet does not match the encoding",
                  "column " + std::to_string(i));
    }
  }
  const std::uint8_t present = *alphabet.code_of(1.0);
  auto out = detail::open_out(features);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    bool first = true;
    for (std::size_t i = 0; i < data.cols(); ++i) {
      if (data.column(i)[r] != present) continue;
      if (!first) out << ' ';
      out << i + index_base;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed", features.string());
  write_labels(labels_path, data.labels());
}

// ---------------------------------------------------------------------------
// CSV.

inline constexpr std::string_view kCsvMagic = "# quadscreen dataset v1";

inline void write_csv_dataset(std::ostream& out, const Dataset& data) {
  out << kCsvMagic << '\n';
  out << "# seed: " << data.seed() << '\n';
  auto alphabet_line = [&](const std::string& col, const Alphabet& a) {
    out << "# alphabet: " << col;
    for (double v : a.values()) out << ' ' << detail::format_double(v);
    out << '\n';
  };
  const Alphabet& common = data.cols() > 0 ? data.alphabet(0) : Alphabet();
  alphabet_line("*", common);
  for (std::size_t i = 0; i < data.cols(); ++i) {
    if (!(data.alphabet(i) == common)) alphabet_line(std::to_string(i), data.alphabet(i));
  }
  out << 'y';
  for (std::size_t i = 0; i < data.cols(); ++i) out << ",x" << i;
  out << '\n';
  std::vector<std::vector<std::string>> text(data.cols());
  for (std::size_t i = 0; i < data.cols(); ++i) {
    for (double v : data.alphabet(i).values()) text[i].push_back(detail::format_double(v));
  }
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << static_cast<int>(data.labels()[r]);
    for (std::size_t i = 0; i < data.cols(); ++i) out << ',' << text[i][data.column(i)[r]];
    out << '\n';
  }
}

inline void write_csv_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = detail::open_out(path);
  write_csv_dataset(out, data);
  if (!out) throw Error(ErrorCode::kIo, "write failed", path.string());
}

inline Dataset read_csv_dataset(std::istream& in, const std::string& name = "<csv>") {
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t seed = 0;
  std::optional<Alphabet> common;
  std::map<std::size_t, Alphabet> overrides;
  std::optional<std::size_t> p;
  std::vector<std::uint8_t> labels;
  std::vector<std::vector<std::uint8_t>> cols;
  std::vector<Alphabet> alphabets;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    const std::string loc = name + ":" + std::to_string(lineno);
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (p) throw Error(ErrorCode::kParse, "directive after header", loc);
      auto body = detail::trim(view.substr(1));
      if (body.starts_with("seed:")) {
        const auto v = detail::parse_number<std::uint64_t>(detail::trim(body.substr(5)));
        if (!v) throw Error(ErrorCode::kParse, "malformed seed", loc);
        seed = *v;
      } else if (body.starts_with("alphabet:")) {
        const auto tokens = detail::split_ws(body.substr(9));
        if (tokens.size() < 3) throw Error(ErrorCode::kParse, "alphabet needs a column and >= 2 values", loc);
        std::vector<double> values;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
          const auto v = detail::parse_number<double>(tokens[t]);
          if (!v) throw Error(ErrorCode::kParse, "malformed alphabet value", loc);
          values.push_back(*v);
        }
        Alphabet a = [&] {
          try {
            return Alphabet(values);
          } catch (const Error& e) {
            throw Error(ErrorCode::kSchema, e.message(), loc);
          }
        }();
        if (tokens[0] == "*") {
          common = a;
        } else {
          const auto col = detail::parse_number<std::size_t>(tokens[0]);
          if (!col) throw Error(ErrorCode::kParse, "malformed alphabet column", loc);
          overrides[*col] = a;
        }
      }
      continue;
    }
    const auto fields = detail::split_char(view, ',');
    if (!p) {
      if (detail::trim(fields[0]) != "y") {
        throw Error(ErrorCode::kSchema, "header must start with 'y'", loc);
      }
      p = fields.size() - 1;
      for (const auto& [col, a] : overrides) {
        if (col >= *p) throw Error(ErrorCode::kSchema, "alphabet directive for missing column", loc);
      }
      for (std::size_t i = 0; i < *p; ++i) {
        const auto it = overrides.find(i);
        alphabets.push_back(it != overrides.end() ? it->second
                                                  : common.value_or(Alphabet::plus_minus_one()));
      }
      cols.resize(*p);
      continue;
    }
    if (fields.size() != *p + 1) {
      throw Error(ErrorCode::kSchema,
                  "expected " + std::to_string(*p + 1) + " fields, got " +
                      std::to_string(fields.size()),
                  loc);
    }
    labels.push_back(detail::parse_label(fields[0], loc + ", column y"));
    for (std::size_t i = 0; i < *p; ++i) {
      const auto v = detail::parse_number<double>(detail::trim(fields[i + 1]));
      if (!v) {
        throw Error(ErrorCode::kParse, "malformed value", loc + ", column x" + std::to_string(i));
      }
      const auto code = alphabets[i].code_of(*v);
      if (!code) {
        throw Error(ErrorCode::kSchema, "value outside the column alphabet",
                    loc + ", column x" + std::to_string(i));
      }
      cols[i].push_back(static_cast<std::uint8_t>(*code));
    }
  }
  if (!p) throw Error(ErrorCode::kSchema, "missing header line", name);
  const std::size_t n = labels.size();
  std::vector<std::uint8_t> codes;
  codes.reserve(n * *p);
  for (auto& c : cols) codes.insert(codes.end(), c.begin(), c.end());
  return Dataset(n, *p, std::move(alphabets), std::move(codes), std::move(labels), seed);
}

inline Dataset read_csv_dataset(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_csv_dataset(in, path.string());
}

// ---------------------------------------------------------------------------
// Model JSON.

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) {
    throw Error(ErrorCode::kSchema, std::string("missing field '") + key + "'", path);
  }
  return obj.at(key);
}

inline double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw Error(ErrorCode::kSchema, "expected a number", path);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::kSchema, "number not finite", path);
  return d;
}

inline std::size_t as_index(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::kSchema, "expected a non-negative integer", path);
  }
  return v.get<std::size_t>();
}

inline const json& as_array(const json& v, const std::string& path, std::optional<std::size_t> len = {}) {
  if (!v.is_array()) throw Error(ErrorCode::kSchema, "expected an array", path);
  if (len && v.size() != *len) {
    throw Error(ErrorCode::kSchema, "expected " + std::to_string(*len) + " entries", path);
  }
  return v;
}

inline std::vector<double> as_reals(const json& v, const std::string& path) {
  as_array(v, path);
  std::vector<double> out;
  for (std::size_t t = 0; t < v.size(); ++t) {
    out.push_back(as_real(v[t], path + "[" + std::to_string(t) + "]"));
  }
  return out;
}

inline Alphabet as_alphabet(const json& v, const std::string& path) {
  try {
    return Alphabet(as_reals(v, path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchema) throw;
    throw Error(ErrorCode::kSchema, e.message(), path);
  }
}

inline SigmaKind parse_sigma(const json& v, const std::string& path) {
  if (!v.is_string()) throw Error(ErrorCode::kSchema, "expected a string", path);
  const auto s = v.get<std::string>();
  if (s == "sigmoid") return SigmaKind::kSigmoid;
  if (s == "piecewise_linear") return SigmaKind::kPiecewiseLinear;
  throw Error(ErrorCode::kSchema, "unknown sigma kind '" + s + "'", path);
}

}  // namespace detail

inline GenerativeModel model_from_json(const nlohmann::json& j) {
  using detail::as_array;
  using detail::as_index;
  using detail::as_real;
  using detail::field;
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "model must be an object", "$");
  GenerativeModel m;
  m.p = as_index(field(j, "p", "$"), "$.p");
  if (m.p == 0) throw Error(ErrorCode::kSchema, "p must be >= 1", "$.p");

  if (j.contains("alphabets")) {
    const auto& arr = as_array(j["alphabets"], "$.alphabets", m.p);
    for (std::size_t i = 0; i < m.p; ++i) {
      m.alphabets.push_back(detail::as_alphabet(arr[i], "$.alphabets[" + std::to_string(i) + "]"));
    }
  } else {
    const Alphabet a = j.contains("alphabet") ? detail::as_alphabet(j["alphabet"], "$.alphabet")
                                              : Alphabet::plus_minus_one();
    m.alphabets.assign(m.p, a);
  }

  if (j.contains("quad_terms")) {
    const auto& arr = as_array(j["quad_terms"], "$.quad_terms");
    for (std::size_t t = 0; t < arr.size(); ++t) {
      const std::string path = "$.quad_terms[" + std::to_string(t) + "]";
      const auto& e = as_array(arr[t], path, 3);
      m.poly.quad_terms.push_back({as_index(e[0], path + "[0]"), as_index(e[1], path + "[1]"),
                                   as_real(e[2], path + "[2]")});
    }
  }
  if (j.contains("lin_terms")) {
    const auto& arr = as_array(j["lin_terms"], "$.lin_terms");
    for (std::size_t t = 0; t < arr.size(); ++t) {
      const std::string path = "$.lin_terms[" + std::to_string(t) + "]";
      const auto& e = as_array(arr[t], path, 2);
      m.poly.lin_terms.push_back({as_index(e[0], path + "[0]"), as_real(e[1], path + "[1]")});
    }
  }
  if (j.contains("constant")) m.poly.constant = as_real(j["constant"], "$.constant");
  if (j.contains("gamma")) m.gamma = as_real(j["gamma"], "$.gamma");
  if (j.contains("sigma")) m.sigma = detail::parse_sigma(j["sigma"], "$.sigma");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw Error(ErrorCode::kSchema, "expected an integer", "$.seed");
    }
    m.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("marginals")) {
    const auto& arr = as_array(j["marginals"], "$.marginals", m.p);
    for (std::size_t i = 0; i < m.p; ++i) {
      m.marginals.push_back(detail::as_reals(arr[i], "$.marginals[" + std::to_string(i) + "]"));
    }
  } else if (j.contains("biases")) {
    const auto b = detail::as_reals(as_array(j["biases"], "$.biases", m.p), "$.biases");
    for (std::size_t i = 0; i < m.p; ++i) {
      if (!m.alphabets[i].is_plus_minus_one()) {
        throw Error(ErrorCode::kSchema, "biases need ±1 alphabets",
                    "$.biases[" + std::to_string(i) + "]");
      }
      const double q = b[i];
      m.marginals.push_back(m.alphabets[i][0] < 0 ? std::vector<double>{1.0 - q, q}
                                                   : std::vector<double>{q, 1.0 - q});
    }
  } else {
    for (std::size_t i = 0; i < m.p; ++i) {
      const double k = static_cast<double>(m.alphabets[i].size());
      m.marginals.emplace_back(m.alphabets[i].size(), 1.0 / k);
    }
  }
  try {
    validate_model(m);
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::kInvalidArgument ? ErrorCode::kSchema : e.code(),
                e.message(), e.location().empty() ? "$" : "$." + e.location());
  }
  return m;
}

inline nlohmann::json model_to_json(const GenerativeModel& m) {
  nlohmann::json j;
  j["p"] = m.p;
  bool uniform = true;
  for (const auto& a : m.alphabets) uniform = uniform && a == m.alphabets.front();
  auto values = [](const Alphabet& a) { return std::vector<double>(a.values().begin(), a.values().end()); };
  if (uniform && !m.alphabets.empty()) {
    j["alphabet"] = values(m.alphabets.front());
  } else {
    j["alphabets"] = nlohmann::json::array();
    for (const auto& a : m.alphabets) j["alphabets"].push_back(values(a));
  }
  j["quad_terms"] = nlohmann::json::array();
  for (const auto& q : m.poly.quad_terms) j["quad_terms"].push_back({q.i, q.j, q.beta});
  j["lin_terms"] = nlohmann::json::array();
  for (const auto& l : m.poly.lin_terms) j["lin_terms"].push_back({l.j, l.alpha});
  j["constant"] = m.poly.constant;
  j["gamma"] = m.gamma;
  j["sigma"] = to_string(m.sigma);
  j["marginals"] = m.marginals;
  j["seed"] = m.seed;
  return j;
}

inline GenerativeModel read_model_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), path.string() + ":byte " + std::to_string(e.byte));
  }
  try {
    return model_from_json(j);
  } catch (const Error& e) {
    throw Error(e.code(), e.message(), path.string() + " " + e.location());
  }
}

inline void write_model_json(const std::filesystem::path& path, const GenerativeModel& m) {
  auto out = detail::open_out(path);
  out << model_to_json(m).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed", path.string());
}

// ---------------------------------------------------------------------------
// Experiment configuration: every field optional, unknown keys rejected.

struct ExperimentConfig {
  std::optional<std::string> model_path;
  std::optional<std::string> data_path;
  std::optional<std::size_t> p;
  std::optional<std::size_t> r;
  std::optional<std::size_t> num_lin;
  std::optional<std::size_t> num_quad;
  std::optional<std::size_t> k;
  std::optional<std::size_t> hashes;
  std::optional<std::int64_t> hash_range;
  std::optional<bool> normalize;
  std::optional<bool> include_squares;
  std::vector<std::size_t> sample_sizes;
  std::optional<std::size_t> polys;
  std::optional<std::size_t> draws;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
};

inline ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), path.string() + ":byte " + std::to_string(e.byte));
  }
  const std::string base = path.string() + " $";
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "config must be an object", base);
  ExperimentConfig c;
  auto count = [&](const char* key, std::optional<std::size_t>& dst) {
    if (j.contains(key)) dst = detail::as_index(j[key], base + "." + key);
  };
  auto flag = [&](const char* key, std::optional<bool>& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw Error(ErrorCode::kSchema, "expected a boolean", base + "." + key);
    dst = j[key].get<bool>();
  };
  auto existing_path = [&](const char* key, std::optional<std::string>& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw Error(ErrorCode::kSchema, "expected a string", base + "." + key);
    std::filesystem::path ref = j[key].get<std::string>();
    if (ref.is_relative()) ref = path.parent_path() / ref;
    if (!std::filesystem::exists(ref)) {
      throw Error(ErrorCode::kIo, "referenced file does not exist: " + ref.string(), base + "." + key);
    }
    dst = ref.string();
  };
  static const std::vector<std::string> known = {
      "model", "data", "p", "r", "num_lin", "num_quad", "k", "hashes", "hash_range",
      "normalize", "include_squares", "sample_sizes", "polys", "draws", "trials", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kSchema, "unknown key '" + key + "'", base);
    }
  }
  existing_path("model", c.model_path);
  existing_path("data", c.data_path);
  count("p", c.p);
  count("r", c.r);
  count("num_lin", c.num_lin);
  count("num_quad", c.num_quad);
  count("k", c.k);
  count("hashes", c.hashes);
  count("polys", c.polys);
  count("draws", c.draws);
  count("trials", c.trials);
  if (j.contains("hash_range")) {
    c.hash_range = static_cast<std::int64_t>(detail::as_index(j["hash_range"], base + ".hash_range"));
  }
  flag("normalize", c.normalize);
  flag("include_squares", c.include_squares);
  if (j.contains("sample_sizes")) {
    const auto& arr = detail::as_array(j["sample_sizes"], base + ".sample_sizes");
    for (std::size_t t = 0; t < arr.size(); ++t) {
      c.sample_sizes.push_back(
          detail::as_index(arr[t], base + ".sample_sizes[" + std::to_string(t) + "]"));
    }
  }
  if (j.contains("seed")) {
    c.seed = static_cast<std::uint64_t>(detail::as_index(j["seed"], base + ".seed"));
  }
  return c;
}

}  // namespace quadscreen
