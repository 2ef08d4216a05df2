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

#ifndef CDFSE_FRONTEND_ALIGNMENT_H_
#define CDFSE_FRONTEND_ALIGNMENT_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cdfse::frontend {

// Symbol inventory for alignment files. `synth<N>` names a built-in set with
// symbols p0 .. p<N-1>.
class PhonemeSet {
 public:
  PhonemeSet() = default;
  PhonemeSet(std::string name, std::vector<std::string> symbols);

  static PhonemeSet Synthetic(int n);
  // One symbol per line; the set is named after the file stem.
  static PhonemeSet FromFile(const std::string& path);
  // Built-in `synth<N>` names, otherwise `<dir>/<name>.phones`.
  static PhonemeSet Resolve(const std::string& name, const std::string& dir);

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(symbols_.size()); }
  // -1 when unknown.
  int Id(const std::string& symbol) const;
  const std::string& Symbol(int id) const;

 private:
  std::string name_;
  std::vector<std::string> symbols_;
};

struct PhonemeSegment {
  int phoneme = 0;
  int start = 0;
  int end = 0;  // exclusive

  int length() const { return end - start; }
  bool operator==(const PhonemeSegment&) const = default;
};

// Frame-level phoneme tags and their run-length segments.
struct AlignmentTrack {
  std::vector<int> frame_tags;
  std::vector<PhonemeSegment> segments;

  int num_frames() const { return static_cast<int>(frame_tags.size()); }

  static AlignmentTrack FromTags(std::vector<int> tags);
  // Throws InvalidInput if a duration is < 1, lengths differ, or two
  // consecutive phonemes are identical (they would merge into one segment).
  static AlignmentTrack FromDurations(std::span<const int> phonemes,
                                      std::span<const int> durations);

  std::vector<int> SegmentPhonemes() const;
  std::vector<int> SegmentDurations() const;
};

// Text format: `#phoneme_set <name>` header, then `<frame_index> <symbol>`
// per frame, contiguous from 0. Blank lines are ignored.
AlignmentTrack ParseAlignment(std::istream& in, const PhonemeSet& set);
AlignmentTrack LoadAlignment(const std::string& path, const PhonemeSet& set);
// Reads only the header name.
std::string ReadAlignmentPhonemeSetName(const std::string& path);
void WriteAlignment(std::ostream& out, const AlignmentTrack& track,
                    const PhonemeSet& set);
void SaveAlignment(const std::string& path, const AlignmentTrack& track,
                   const PhonemeSet& set);

}  // namespace cdfse::frontend

#endif  // CDFSE_FRONTEND_ALIGNMENT_H_
