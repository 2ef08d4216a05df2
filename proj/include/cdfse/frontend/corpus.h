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

#ifndef CDFSE_FRONTEND_CORPUS_H_
#define CDFSE_FRONTEND_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cdfse/frontend/alignment.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::frontend {

struct UtteranceRecord {
  std::string id;
  int speaker_id = 0;
  std::vector<int> phonemes;
  std::vector<int> durations;
  nn::Matrix mel;  // T x n_mels
  AlignmentTrack alignment;

  int num_frames() const { return static_cast<int>(mel.rows()); }
  // Throws InvalidInput when durations, mel length and alignment disagree.
  void Validate() const;
};

struct SyntheticCorpusSpec {
  int n_speakers = 4;
  int n_phonemes = 12;
  int utterances_per_speaker = 50;
  int min_phonemes = 5;  // per utterance
  int max_phonemes = 8;
  int min_duration = 10;  // frames per phoneme
  int max_duration = 22;
  // Each (speaker, phoneme) has a base duration; utterances jitter it by at
  // most this many frames.
  int duration_jitter = 1;
  double content_strength = 1.0;  // alpha
  double noise_std = 0.05;        // sigma
  int n_mels = 80;
  uint64_t seed = 7;

  void Validate() const;
};

// Generated records plus the latent vectors they were built from.
struct SyntheticCorpus {
  SyntheticCorpusSpec spec;
  std::vector<UtteranceRecord> records;
  nn::Matrix phoneme_base;    // n_phonemes x n_mels, e_p
  nn::Matrix speaker_offset;  // n_speakers x n_mels, o_s
  nn::Matrix signatures;      // (n_speakers * n_phonemes) x n_mels, g_{s,p}

  // e_p + o_s + alpha * g_{s,p}
  nn::RowVector CleanFrame(int speaker, int phoneme) const;
};

// Frame = e_p + o_s + alpha * g_{s,p} + sigma * noise; all latent vectors are
// standard normal. Phoneme sequences never repeat a phoneme back to back.
// Deterministic in `spec.seed`.
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec);

struct CorpusSplit {
  std::vector<UtteranceRecord> train;
  std::vector<UtteranceRecord> heldout;
};

// The last `heldout_per_speaker` utterances of every speaker (in corpus
// order) are held out.
CorpusSplit SplitHeldOut(const std::vector<UtteranceRecord>& records,
                         int heldout_per_speaker);

// MEL1: magic, u32 T, u32 n_mels, T*n_mels little-endian float32, row-major.
void WriteMel(const std::string& path, const nn::Matrix& mel);
nn::Matrix ReadMel(const std::string& path);
// Values as stored (rounded to float32).
nn::Matrix RoundToFloat(const nn::Matrix& m);

// Manifest lines: `<utt_id> <speaker_id> <mel_path> <align_path> <ids>`, ids
// comma separated. Relative paths are resolved against the manifest's
// directory.
struct ManifestEntry {
  std::string utt_id;
  int speaker_id = 0;
  std::string mel_path;
  std::string align_path;
  std::vector<int> phonemes;
};
std::vector<ManifestEntry> ReadManifest(const std::string& path);

// Writes mels/, align/ and manifest.txt under `dir`; returns the manifest path.
std::string WriteCorpus(const std::string& dir,
                        const std::vector<UtteranceRecord>& records,
                        const PhonemeSet& set);
// Loads every record of a manifest and checks that its phoneme list matches
// the alignment segments. Returns the phoneme set named by the alignments.
std::vector<UtteranceRecord> LoadCorpus(const std::string& manifest_path,
                                        PhonemeSet* set = nullptr);

}  // namespace cdfse::frontend

#endif  // CDFSE_FRONTEND_CORPUS_H_
