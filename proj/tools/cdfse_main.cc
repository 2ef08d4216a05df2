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

// cdfse command-line tool: corpus generation, training, synthesis, alignment
// and embedding dumps, the pooling-factor ablation and cosine similarity.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdfse/common/errors.h"
#include "cdfse/eval/ablation.h"
#include "cdfse/eval/dump.h"
#include "cdfse/eval/metrics.h"
#include "cdfse/frontend/alignment.h"
#include "cdfse/frontend/corpus.h"
#include "cdfse/model/config.h"
#include "cdfse/train/checkpoint.h"
#include "cdfse/train/trainer.h"

namespace fs = std::filesystem;

namespace cdfse {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct GlobalFlags {
  uint64_t seed = 7;
  bool seed_set = false;
  std::string config;
  int threads = 1;
};

void RequireFile(const std::string& what, const std::string& path) {
  if (!fs::is_regular_file(path)) throw InvalidInput(what + " not found: " + path);
}

std::ofstream OpenOutput(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<int> ParseIds(const std::string& text) {
  std::vector<int> ids;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    std::istringstream one(item);
    int v;
    std::string extra;
    if (!(one >> v) || (one >> extra)) {
      throw InvalidInput("phoneme ids: cannot parse '" + item + "'");
    }
    ids.push_back(v);
  }
  if (ids.empty()) throw InvalidInput("phoneme ids: empty list");
  return ids;
}

model::RunConfig BaseConfig(const GlobalFlags& g) {
  model::RunConfig c;
  if (!g.config.empty()) {
    RequireFile("config", g.config);
    c = model::LoadConfig(g.config, c);
  }
  if (g.seed_set) c.train.seed = g.seed;
  return c;
}

void ApplyFactor(model::RunConfig& c, int factor) {
  if (factor != 1 && factor != 4 && factor != 16 && factor != 64) {
    throw ConfigError("factor: expected 1, 4, 16 or 64, got " + std::to_string(factor));
  }
  int stages = 0;
  while ((1 << stages) < factor) ++stages;
  c.model.ref.pool_stages = stages;
}

std::unique_ptr<model::CdfseModel> LoadModel(const std::string& path) {
  RequireFile("checkpoint", path);
  return train::RestoreModel(train::ReadCheckpoint(path));
}

frontend::CorpusSplit LoadSplit(const std::string& manifest, int heldout) {
  RequireFile("corpus", manifest);
  if (heldout < 0) throw InvalidInput("heldout must be non-negative");
  return frontend::SplitHeldOut(frontend::LoadCorpus(manifest), heldout);
}

void PrintEval(const eval::EvalReport& r) {
  std::printf("phoneme_accuracy %.6f\n", r.phoneme_accuracy);
  std::printf("speaker_accuracy %.6f\n", r.speaker_accuracy);
  std::printf("mel_mae %.6f\n", r.mel_mae);
  std::printf("duration_mae %.6f\n", r.duration_mae);
  std::printf("plurality %d/%d %.6f\n", r.plurality.hits, r.plurality.total, r.plurality.rate());
  std::printf("reversed_probe %d/%d %.6f\n", r.reversed.hits, r.reversed.total,
              r.reversed.rate());
  std::printf("cosine_similarity %.6f\n", r.cosine_similarity);
}

std::vector<double> ReadVector(const std::string& path) {
  RequireFile("vector file", path);
  std::ifstream in(path);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw FormatError(path + ": not a whitespace separated list of numbers");
  return v;
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"Content-dependent fine-grained speaker embedding TTS toolkit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--seed", g.seed, "Training / corpus seed")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--config", g.config, "key=value config file");
  app.add_option("--threads", g.threads, "Worker threads (the core runs on one)")
      ->check(CLI::PositiveNumber);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus");
  frontend::SyntheticCorpusSpec spec;
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--speakers", spec.n_speakers);
  gen->add_option("--phonemes", spec.n_phonemes);
  gen->add_option("--per-speaker", spec.utterances_per_speaker);
  gen->add_option("--alpha", spec.content_strength, "Signature strength");
  gen->add_option("--sigma", spec.noise_std, "Frame noise");
  gen->add_option("--n-mels", spec.n_mels);

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string corpus, out, log_path, resume, mode;
  int factor = 0, steps = -1, heldout = 5;
  tr->add_option("--corpus", corpus, "Corpus manifest")->required();
  tr->add_option("--out", out, "Output checkpoint")->required();
  tr->add_option("--log", log_path, "Training log (default <out>.log)");
  tr->add_option("--mode", mode, "cdfse or cls");
  tr->add_option("--factor", factor, "Downsample factor 1, 4, 16 or 64");
  tr->add_option("--steps", steps, "Override max_steps");
  tr->add_option("--heldout", heldout, "Utterances per speaker kept out of training");
  tr->add_option("--resume", resume, "Continue from a checkpoint");

  // synth
  auto* sy = app.add_subcommand("synth", "Synthesize a mel from text and a reference");
  std::string ckpt, ids_text, ref_mel;
  sy->add_option("--checkpoint", ckpt)->required();
  sy->add_option("--phonemes", ids_text, "Comma separated phoneme ids")->required();
  sy->add_option("--reference", ref_mel, "Reference MEL1 file")->required();
  sy->add_option("--out", out, "Output MEL1 file")->required();

  // align-dump
  auto* al = app.add_subcommand("align-dump", "Dump a reference attention matrix");
  std::string align_path;
  al->add_option("--checkpoint", ckpt)->required();
  al->add_option("--phonemes", ids_text)->required();
  al->add_option("--reference", ref_mel)->required();
  al->add_option("--alignment", align_path, "Alignment of the reference")->required();
  al->add_option("--out", out)->required();

  // embed-dump
  auto* em = app.add_subcommand("embed-dump", "Export fine-grained speaker embeddings");
  em->add_option("--checkpoint", ckpt)->required();
  em->add_option("--corpus", corpus)->required();
  em->add_option("--out", out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  ev->add_option("--checkpoint", ckpt)->required();
  ev->add_option("--corpus", corpus)->required();
  ev->add_option("--heldout", heldout);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and score every downsample factor");
  std::vector<int> factors{1, 4, 16, 64};
  ab->add_option("--corpus", corpus)->required();
  ab->add_option("--out", out, "Report path")->required();
  ab->add_option("--factors", factors)->delimiter(',');
  ab->add_option("--steps", steps);
  ab->add_option("--heldout", heldout);

  // cosine
  auto* co = app.add_subcommand("cosine", "Cosine similarity of two vectors or two mels");
  std::string path_a, path_b;
  co->add_option("a", path_a)->required();
  co->add_option("b", path_b)->required();
  co->add_option("--checkpoint", ckpt, "Treat a and b as MEL1 files and compare speaker vectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*gen) {
      if (g.seed_set) spec.seed = g.seed;
      frontend::SyntheticCorpus c = frontend::GenerateSyntheticCorpus(spec);
      const std::string manifest = frontend::WriteCorpus(
          gen_out, c.records, frontend::PhonemeSet::Synthetic(spec.n_phonemes));
      std::printf("%s\n", manifest.c_str());
    } else if (*tr) {
      model::RunConfig config = BaseConfig(g);
      if (!mode.empty()) config.model.backbone.mode = model::ParseMode(mode);
      if (factor != 0) ApplyFactor(config, factor);
      if (steps >= 0) config.train.max_steps = steps;
      config.Validate();
      frontend::CorpusSplit split = LoadSplit(corpus, heldout);
      std::unique_ptr<train::Trainer> trainer;
      if (!resume.empty()) {
        RequireFile("checkpoint", resume);
        trainer = train::Trainer::Resume(resume, split.train);
        if (steps >= 0) trainer->set_max_steps(steps);
      } else {
        trainer = std::make_unique<train::Trainer>(config, split.train);
      }
      if (log_path.empty()) log_path = out + ".log";
      // A resumed run continues the existing log.
      std::ofstream log =
          OpenOutput(log_path, resume.empty() ? std::ios::out : std::ios::app);
      trainer->Run(
          [&](const train::StepRecord& r) {
            const std::string line = train::FormatLogLine(r);
            std::printf("%s\n", line.c_str());
            log << line << '\n';
          },
          out);
    } else if (*sy) {
      auto m = LoadModel(ckpt);
      RequireFile("reference mel", ref_mel);
      model::SynthesisResult r = m->Synthesize(ParseIds(ids_text), frontend::ReadMel(ref_mel));
      frontend::WriteMel(out, r.mel);
      std::printf("frames %lld\n", static_cast<long long>(r.mel.rows()));
    } else if (*al) {
      auto m = LoadModel(ckpt);
      if (m->mode() != model::ConditioningMode::kCdfse) {
        throw InvalidInput("align-dump needs a cdfse checkpoint");
      }
      RequireFile("reference mel", ref_mel);
      RequireFile("alignment", align_path);
      const nn::Matrix mel = frontend::ReadMel(ref_mel);
      const frontend::PhonemeSet set = frontend::PhonemeSet::Resolve(
          frontend::ReadAlignmentPhonemeSetName(align_path),
          fs::path(align_path).parent_path().string());
      const frontend::AlignmentTrack track = frontend::LoadAlignment(align_path, set);
      if (track.num_frames() != mel.rows()) {
        throw InvalidInput("alignment has " + std::to_string(track.num_frames()) +
                           " frames, reference mel has " + std::to_string(mel.rows()));
      }
      eval::AttentionDump dump;
      dump.query_phonemes = ParseIds(ids_text);
      dump.weights = m->Synthesize(dump.query_phonemes, mel).attention;
      dump.column_labels = eval::ColumnLabels(track.frame_tags, m->config().ref.factor());
      std::ofstream f = OpenOutput(out);
      eval::WriteAttentionDump(f, dump);
      std::vector<int> expected;
      const std::vector<int> argmax = eval::ArgmaxLabels(dump.weights, dump.query_phonemes,
                                                         dump.column_labels, &expected);
      const eval::AlignmentScore s =
          eval::PluralityScore(dump.weights, dump.query_phonemes, dump.column_labels);
      std::printf("plurality %d/%d\n", s.hits, s.total);
      std::printf("argmax_labels");
      for (int a : argmax) std::printf(" %d", a);
      std::printf("\n");
    } else if (*em) {
      auto m = LoadModel(ckpt);
      RequireFile("corpus", corpus);
      const auto rows = eval::ExportEmbeddings(*m, frontend::LoadCorpus(corpus));
      std::ofstream f = OpenOutput(out);
      eval::WriteEmbeddings(f, rows);
      std::printf("rows %zu\n", rows.size());
    } else if (*ev) {
      auto m = LoadModel(ckpt);
      frontend::CorpusSplit split = LoadSplit(corpus, heldout);
      PrintEval(eval::Evaluate(*m, heldout > 0 ? split.heldout : split.train));
    } else if (*ab) {
      model::RunConfig config = BaseConfig(g);
      if (steps >= 0) config.train.max_steps = steps;
      config.Validate();
      eval::ValidateFactors(factors);
      frontend::CorpusSplit split = LoadSplit(corpus, heldout);
      const auto rows = eval::RunAblation(config, split, factors);
      const std::string report = eval::FormatAblationReport(
          rows, config.train.seed, static_cast<int>(split.heldout.size()));
      std::ofstream f = OpenOutput(out);
      f << report;
      std::fputs(report.c_str(), stdout);
      for (const auto& r : rows) {
        if (!r.ok) return kExitRuntime;
      }
    } else if (*co) {
      double cs;
      if (!ckpt.empty()) {
        auto m = LoadModel(ckpt);
        RequireFile("mel", path_a);
        RequireFile("mel", path_b);
        const nn::RowVector a = eval::SpeakerVector(*m, frontend::ReadMel(path_a));
        const nn::RowVector b = eval::SpeakerVector(*m, frontend::ReadMel(path_b));
        cs = eval::CosineSimilarity(std::span<const double>(a.data(), a.size()),
                                    std::span<const double>(b.data(), b.size()));
      } else {
        cs = eval::CosineSimilarity(ReadVector(path_a), ReadVector(path_b));
      }
      std::printf("%s\n", eval::FormatDouble(cs).c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitInvalid;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitInvalid;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}

}  // namespace cdfse

int main(int argc, char** argv) { return cdfse::Main(argc, argv); }
