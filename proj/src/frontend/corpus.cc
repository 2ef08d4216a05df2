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

#include "cdfse/frontend/corpus.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cdfse/common/errors.h"

namespace cdfse::frontend {
namespace fs = std::filesystem;

void UtteranceRecord::Validate() const {
  if (phonemes.empty() || phonemes.size() != durations.size()) {
    throw InvalidInput(id + ": phoneme/duration counts differ");
  }
  int total = 0;
  for (int d : durations) {
    if (d < 1) throw InvalidInput(id + ": duration < 1");
    total += d;
  }
  if (total != mel.rows() || total != alignment.num_frames()) {
    throw InvalidInput(id + ": durations sum to " + std::to_string(total) +
                       " but mel has " + std::to_string(mel.rows()) + " frames");
  }
  if (alignment.SegmentPhonemes() != phonemes ||
      alignment.SegmentDurations() != durations) {
    throw InvalidInput(id + ": alignment segments disagree with phonemes/durations");
  }
}

void SyntheticCorpusSpec::Validate() const {
  if (n_speakers < 1 || n_phonemes < 2 || utterances_per_speaker < 1 || n_mels < 1) {
    throw ConfigError("synthetic corpus: counts must be positive (n_phonemes >= 2)");
  }
  if (min_phonemes < 1 || max_phonemes < min_phonemes) {
    throw ConfigError("synthetic corpus: invalid phonemes-per-utterance range");
  }
  if (min_duration < 1 || max_duration < min_duration || duration_jitter < 0) {
    throw ConfigError("synthetic corpus: invalid duration range");
  }
  if (content_strength < 0.0 || noise_std < 0.0) {
    throw ConfigError("synthetic corpus: alpha and sigma must be >= 0");
  }
}

nn::RowVector SyntheticCorpus::CleanFrame(int speaker, int phoneme) const {
  return phoneme_base.row(phoneme) + speaker_offset.row(speaker) +
         spec.content_strength * signatures.row(speaker * spec.n_phonemes + phoneme);
}

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec) {
  spec.Validate();
  SyntheticCorpus corpus;
  corpus.spec = spec;
  // Separate streams: latent vectors, utterance layout, frame noise.
  std::mt19937_64 latent_rng(spec.seed);
  std::mt19937_64 layout_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 noise_rng(spec.seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](nn::Matrix& m, int rows) {
    m.resize(rows, spec.n_mels);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(latent_rng);
  };
  fill(corpus.phoneme_base, spec.n_phonemes);
  fill(corpus.speaker_offset, spec.n_speakers);
  fill(corpus.signatures, spec.n_speakers * spec.n_phonemes);

  std::uniform_int_distribution<int> base_duration(spec.min_duration, spec.max_duration);
  std::vector<int> mean_duration(spec.n_speakers * spec.n_phonemes);
  for (int& d : mean_duration) d = base_duration(layout_rng);

  std::uniform_int_distribution<int> length_dist(spec.min_phonemes, spec.max_phonemes);
  std::uniform_int_distribution<int> jitter_dist(-spec.duration_jitter, spec.duration_jitter);
  std::uniform_int_distribution<int> next_phoneme(0, spec.n_phonemes - 2);
  std::uniform_int_distribution<int> first_phoneme(0, spec.n_phonemes - 1);
  for (int s = 0; s < spec.n_speakers; ++s) {
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      UtteranceRecord rec;
      rec.id = "spk" + std::to_string(s) + "_utt" + std::to_string(u);
      rec.speaker_id = s;
      const int len = length_dist(layout_rng);
      for (int i = 0; i < len; ++i) {
        int p = first_phoneme(layout_rng);
        if (i > 0) {
          p = next_phoneme(layout_rng);
          if (p >= rec.phonemes.back()) ++p;
        }
        rec.phonemes.push_back(p);
        const int d = mean_duration[s * spec.n_phonemes + p] + jitter_dist(layout_rng);
        rec.durations.push_back(std::clamp(d, spec.min_duration, spec.max_duration));
      }
      rec.alignment = AlignmentTrack::FromDurations(rec.phonemes, rec.durations);
      rec.mel.resize(rec.alignment.num_frames(), spec.n_mels);
      for (int t = 0; t < rec.mel.rows(); ++t) {
        const nn::RowVector clean = corpus.CleanFrame(s, rec.alignment.frame_tags[t]);
        for (int c = 0; c < spec.n_mels; ++c) {
          rec.mel(t, c) = clean(c) + spec.noise_std * normal(noise_rng);
        }
      }
      corpus.records.push_back(std::move(rec));
    }
  }
  return corpus;
}

CorpusSplit SplitHeldOut(const std::vector<UtteranceRecord>& records,
                         int heldout_per_speaker) {
  std::map<int, int> remaining;
  for (const auto& r : records) ++remaining[r.speaker_id];
  CorpusSplit split;
  for (const auto& r : records) {
    int& left = remaining[r.speaker_id];
    if (left <= heldout_per_speaker) {
      split.heldout.push_back(r);
    } else {
      split.train.push_back(r);
    }
    --left;
  }
  return split;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "MEL1/CKPT I/O assumes a little-endian host");

void WriteU32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t ReadU32(std::istream& in, const std::string& path) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw FormatError(path + ": truncated header");
  }
  return v;
}

}  // namespace

void WriteMel(const std::string& path, const nn::Matrix& mel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mel file " + path);
  out.write("MEL1", 4);
  WriteU32(out, static_cast<uint32_t>(mel.rows()));
  WriteU32(out, static_cast<uint32_t>(mel.cols()));
  std::vector<float> buf(mel.size());
  for (Eigen::Index i = 0; i < mel.size(); ++i) buf[i] = static_cast<float>(mel.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing mel file " + path);
}

nn::Matrix ReadMel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open mel file " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MEL1", 4) != 0) {
    throw FormatError(path + ": bad magic, expected MEL1");
  }
  const uint32_t t = ReadU32(in, path);
  const uint32_t n = ReadU32(in, path);
  if (t == 0 || n == 0) throw FormatError(path + ": empty mel");
  std::vector<float> buf(static_cast<size_t>(t) * n);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw FormatError(path + ": truncated data");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path + ": trailing bytes after mel data");
  }
  nn::Matrix mel(t, n);
  for (size_t i = 0; i < buf.size(); ++i) mel.data()[i] = buf[i];
  return mel;
}

nn::Matrix RoundToFloat(const nn::Matrix& m) {
  return m.cast<float>().cast<double>();
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    ManifestEntry e;
    std::string ids;
    if (!(ss >> e.utt_id)) continue;
    if (e.utt_id[0] == '#') continue;
    if (!(ss >> e.speaker_id >> e.mel_path >> e.align_path >> ids)) {
      throw FormatError(path + ": expected 5 fields", line_no);
    }
    std::string extra;
    if (ss >> extra) throw FormatError(path + ": trailing field '" + extra + "'", line_no);
    if (e.speaker_id < 0) throw FormatError(path + ": negative speaker id", line_no);
    std::istringstream id_stream(ids);
    std::string tok;
    while (std::getline(id_stream, tok, ',')) {
      try {
        size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
        e.phonemes.push_back(v);
      } catch (const std::exception&) {
        throw FormatError(path + ": bad phoneme id '" + tok + "'", line_no);
      }
    }
    if (e.phonemes.empty()) throw FormatError(path + ": no phoneme ids", line_no);
    if (fs::path(e.mel_path).is_relative()) e.mel_path = (base / e.mel_path).string();
    if (fs::path(e.align_path).is_relative()) e.align_path = (base / e.align_path).string();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string WriteCorpus(const std::string& dir,
                        const std::vector<UtteranceRecord>& records,
                        const PhonemeSet& set) {
  fs::create_directories(fs::path(dir) / "mels");
  fs::create_directories(fs::path(dir) / "align");
  const std::string manifest = (fs::path(dir) / "manifest.txt").string();
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write manifest " + manifest);
  for (const auto& r : records) {
    const std::string mel_rel = "mels/" + r.id + ".mel";
    const std::string align_rel = "align/" + r.id + ".align";
    WriteMel((fs::path(dir) / mel_rel).string(), r.mel);
    SaveAlignment((fs::path(dir) / align_rel).string(), r.alignment, set);
    out << r.id << " " << r.speaker_id << " " << mel_rel << " " << align_rel << " ";
    for (size_t i = 0; i < r.phonemes.size(); ++i) {
      out << (i ? "," : "") << r.phonemes[i];
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing manifest " + manifest);
  return manifest;
}

std::vector<UtteranceRecord> LoadCorpus(const std::string& manifest_path,
                                        PhonemeSet* set_out) {
  if (!fs::exists(manifest_path)) throw FormatError("corpus not found: " + manifest_path);
  const auto entries = ReadManifest(manifest_path);
  if (entries.empty()) throw FormatError(manifest_path + ": empty corpus");
  const std::string base = fs::path(manifest_path).parent_path().string();
  PhonemeSet set = PhonemeSet::Resolve(
      ReadAlignmentPhonemeSetName(entries.front().align_path), base);
  std::vector<UtteranceRecord> records;
  for (const auto& e : entries) {
    UtteranceRecord r;
    r.id = e.utt_id;
    r.speaker_id = e.speaker_id;
    r.mel = ReadMel(e.mel_path);
    r.alignment = LoadAlignment(e.align_path, set);
    r.phonemes = e.phonemes;
    r.durations = r.alignment.SegmentDurations();
    if (r.alignment.SegmentPhonemes() != r.phonemes) {
      throw FormatError(manifest_path + ": phoneme ids of " + r.id +
                        " disagree with its alignment segments");
    }
    if (r.mel.rows() != r.alignment.num_frames()) {
      throw FormatError(manifest_path + ": " + r.id + " mel has " +
                        std::to_string(r.mel.rows()) + " frames, alignment " +
                        std::to_string(r.alignment.num_frames()));
    }
    records.push_back(std::move(r));
  }
  if (set_out != nullptr) *set_out = set;
  return records;
}

}  // namespace cdfse::frontend
