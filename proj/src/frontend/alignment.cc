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

#include "cdfse/frontend/alignment.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdfse/common/errors.h"

namespace cdfse::frontend {

PhonemeSet::PhonemeSet(std::string name, std::vector<std::string> symbols)
    : name_(std::move(name)), symbols_(std::move(symbols)) {}

PhonemeSet PhonemeSet::Synthetic(int n) {
  if (n < 1) throw ConfigError("phoneme set needs at least one symbol");
  std::vector<std::string> symbols;
  for (int i = 0; i < n; ++i) symbols.push_back("p" + std::to_string(i));
  return PhonemeSet("synth" + std::to_string(n), std::move(symbols));
}

PhonemeSet PhonemeSet::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open phoneme set " + path);
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string sym;
    if (ss >> sym) symbols.push_back(sym);
  }
  if (symbols.empty()) throw FormatError("empty phoneme set " + path);
  return PhonemeSet(std::filesystem::path(path).stem().string(), std::move(symbols));
}

PhonemeSet PhonemeSet::Resolve(const std::string& name, const std::string& dir) {
  if (name.rfind("synth", 0) == 0 && name.size() > 5 &&
      name.find_first_not_of("0123456789", 5) == std::string::npos) {
    return Synthetic(std::stoi(name.substr(5)));
  }
  return FromFile((std::filesystem::path(dir) / (name + ".phones")).string());
}

int PhonemeSet::Id(const std::string& symbol) const {
  for (size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

const std::string& PhonemeSet::Symbol(int id) const {
  if (id < 0 || id >= size()) {
    throw InvalidInput("phoneme id " + std::to_string(id) + " outside set " + name_);
  }
  return symbols_[id];
}

AlignmentTrack AlignmentTrack::FromTags(std::vector<int> tags) {
  AlignmentTrack track;
  track.frame_tags = std::move(tags);
  const int n = track.num_frames();
  for (int t = 0; t < n; ++t) {
    if (t == 0 || track.frame_tags[t] != track.frame_tags[t - 1]) {
      track.segments.push_back({track.frame_tags[t], t, t + 1});
    } else {
      track.segments.back().end = t + 1;
    }
  }
  return track;
}

AlignmentTrack AlignmentTrack::FromDurations(std::span<const int> phonemes,
                                             std::span<const int> durations) {
  if (phonemes.size() != durations.size()) {
    throw InvalidInput("alignment: phoneme and duration counts differ");
  }
  std::vector<int> tags;
  for (size_t i = 0; i < phonemes.size(); ++i) {
    if (durations[i] < 1) throw InvalidInput("alignment: duration must be >= 1");
    if (i > 0 && phonemes[i] == phonemes[i - 1]) {
      throw InvalidInput("alignment: consecutive identical phonemes would merge");
    }
    tags.insert(tags.end(), durations[i], phonemes[i]);
  }
  return FromTags(std::move(tags));
}

std::vector<int> AlignmentTrack::SegmentPhonemes() const {
  std::vector<int> out;
  for (const auto& s : segments) out.push_back(s.phoneme);
  return out;
}

std::vector<int> AlignmentTrack::SegmentDurations() const {
  std::vector<int> out;
  for (const auto& s : segments) out.push_back(s.length());
  return out;
}

AlignmentTrack ParseAlignment(std::istream& in, const PhonemeSet& set) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<int> tags;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (!have_header) {
      std::string name;
      if (first != "#phoneme_set" || !(ss >> name)) {
        throw FormatError("alignment: expected '#phoneme_set <name>' header", line_no);
      }
      if (name != set.name()) {
        throw FormatError("alignment: phoneme set '" + name + "' but expected '" +
                              set.name() + "'",
                          line_no);
      }
      have_header = true;
      continue;
    }
    if (first[0] == '#') continue;
    int index = 0;
    try {
      size_t used = 0;
      index = std::stoi(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::exception&) {
      throw FormatError("alignment: bad frame index '" + first + "'", line_no);
    }
    std::string symbol;
    if (!(ss >> symbol)) throw FormatError("alignment: missing phoneme symbol", line_no);
    std::string extra;
    if (ss >> extra) throw FormatError("alignment: trailing field '" + extra + "'", line_no);
    if (index < static_cast<int>(tags.size())) {
      throw FormatError("alignment: frame " + std::to_string(index) +
                            " overlaps an earlier frame",
                        line_no);
    }
    if (index > static_cast<int>(tags.size())) {
      throw FormatError("alignment: gap before frame " + std::to_string(index),
                        line_no);
    }
    const int id = set.Id(symbol);
    if (id < 0) throw FormatError("alignment: unknown phoneme '" + symbol + "'", line_no);
    tags.push_back(id);
  }
  if (!have_header) throw FormatError("alignment: missing header");
  if (tags.empty()) throw FormatError("alignment: no frames");
  return AlignmentTrack::FromTags(std::move(tags));
}

AlignmentTrack LoadAlignment(const std::string& path, const PhonemeSet& set) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open alignment " + path);
  return ParseAlignment(in, set);
}

std::string ReadAlignmentPhonemeSetName(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open alignment " + path);
  std::string tag, name;
  if (!(in >> tag >> name) || tag != "#phoneme_set") {
    throw FormatError(path + ": expected '#phoneme_set <name>' header", 1);
  }
  return name;
}

void WriteAlignment(std::ostream& out, const AlignmentTrack& track,
                    const PhonemeSet& set) {
  out << "#phoneme_set " << set.name() << "\n";
  for (int t = 0; t < track.num_frames(); ++t) {
    out << t << " " << set.Symbol(track.frame_tags[t]) << "\n";
  }
}

void SaveAlignment(const std::string& path, const AlignmentTrack& track,
                   const PhonemeSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write alignment " + path);
  WriteAlignment(out, track, set);
  if (!out) throw std::runtime_error("failed writing alignment " + path);
}

}  // namespace cdfse::frontend
