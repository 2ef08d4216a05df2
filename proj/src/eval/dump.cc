// Copyright 2026 The CDFSE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdfse/eval/dump.h"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "cdfse/common/errors.h"

namespace cdfse::eval {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

template <typename T>
std::vector<T> ParseRow(const std::string& text, int line_no) {
  std::vector<T> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    T v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw FormatError("cannot parse '" + tok + "'", line_no);
    }
    out.push_back(v);
  }
  return out;
}

void WriteInts(std::ostream& out, const char* tag, std::span<const int> v) {
  out << tag;
  for (int x : v) out << ' ' << x;
  out << '\n';
}

std::string AfterTag(const std::string& line, const std::string& tag, int line_no) {
  if (line.compare(0, tag.size(), tag) != 0) {
    throw FormatError("expected " + tag, line_no);
  }
  return line.substr(tag.size());
}

}  // namespace

void WriteAttentionDump(std::ostream& out, const AttentionDump& dump) {
  WriteInts(out, "#query_phonemes", dump.query_phonemes);
  WriteInts(out, "#ref_segments", dump.column_labels);
  for (Eigen::Index i = 0; i < dump.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < dump.weights.cols(); ++j) {
      if (j) out << ' ';
      out << FormatDouble(dump.weights(i, j));
    }
    out << '\n';
  }
}

AttentionDump ParseAttentionDump(std::istream& in) {
  AttentionDump d;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing #query_phonemes line", 1);
  d.query_phonemes = ParseRow<int>(AfterTag(line, "#query_phonemes", 1), 1);
  if (!std::getline(in, line)) throw FormatError("missing #ref_segments line", 2);
  d.column_labels = ParseRow<int>(AfterTag(line, "#ref_segments", 2), 2);
  const Eigen::Index rows = static_cast<Eigen::Index>(d.query_phonemes.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(d.column_labels.size());
  d.weights.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int line_no = static_cast<int>(i) + 3;
    if (!std::getline(in, line)) throw FormatError("missing attention row", line_no);
    std::vector<double> v = ParseRow<double>(line, line_no);
    if (static_cast<Eigen::Index>(v.size()) != cols) {
      throw FormatError("expected " + std::to_string(cols) + " values", line_no);
    }
    for (Eigen::Index j = 0; j < cols; ++j) d.weights(i, j) = v[j];
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw FormatError("trailing content after attention rows");
    }
  }
  return d;
}

void WriteEmbeddings(std::ostream& out, std::span<const EmbeddingRow> rows) {
  for (const EmbeddingRow& r : rows) {
    out << r.speaker << ' ' << r.phoneme;
    for (Eigen::Index j = 0; j < r.values.size(); ++j) out << ' ' << FormatDouble(r.values[j]);
    out << '\n';
  }
}

std::vector<EmbeddingRow> ParseEmbeddings(std::istream& in) {
  std::vector<EmbeddingRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    EmbeddingRow r;
    std::string rest;
    if (!(ss >> r.speaker >> r.phoneme)) throw FormatError("expected speaker and phoneme", line_no);
    std::getline(ss, rest);
    std::vector<double> v = ParseRow<double>(rest, line_no);
    if (v.empty()) throw FormatError("embedding row has no values", line_no);
    if (!rows.empty() && static_cast<Eigen::Index>(v.size()) != rows.front().values.size()) {
      throw FormatError("embedding width changes", line_no);
    }
    r.values = Eigen::Map<nn::RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace cdfse::eval
