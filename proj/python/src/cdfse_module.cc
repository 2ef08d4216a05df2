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

#include <map>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cdfse/common/errors.h"
#include "cdfse/eval/metrics.h"
#include "cdfse/frontend/corpus.h"
#include "cdfse/frontend/mel.h"
#include "cdfse/frontend/shuffle.h"
#include "cdfse/model/config.h"
#include "cdfse/model/model.h"
#include "cdfse/train/checkpoint.h"
#include "cdfse/train/trainer.h"

namespace py = pybind11;

namespace cdfse {
namespace {

using frontend::UtteranceRecord;

// {"mode": "cls", "downsample_factor": 4} on top of the toy defaults.
model::RunConfig ConfigFromDict(const py::dict& overrides) {
  std::string text;
  for (const auto& [key, value] : overrides) {
    text += py::str(key).cast<std::string>() + "=" + py::str(value).cast<std::string>() + "\n";
  }
  return model::ParseConfig(text, model::RunConfig{});
}

py::dict ConfigToDict(const model::RunConfig& config) {
  py::dict out;
  const std::string text = model::ConfigText(config);
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos);
    const size_t eq = line.find('=');
    out[py::str(line.substr(0, eq))] = line.substr(eq + 1);
    pos = end + 1;
  }
  return out;
}

py::dict LossDict(const train::StepRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["total"] = r.loss.total;
  d["mel"] = r.loss.mel;
  d["duration"] = r.loss.duration;
  d["phoneme_ce"] = r.loss.phoneme_ce;
  d["speaker_ce"] = r.loss.speaker_ce;
  d["lr"] = r.lr;
  return d;
}

UtteranceRecord MakeUtterance(std::string id, int speaker, std::vector<int> phonemes,
                              std::vector<int> durations, nn::Matrix mel) {
  UtteranceRecord r;
  r.id = std::move(id);
  r.speaker_id = speaker;
  r.alignment = frontend::AlignmentTrack::FromDurations(phonemes, durations);
  r.phonemes = std::move(phonemes);
  r.durations = std::move(durations);
  r.mel = std::move(mel);
  r.Validate();
  return r;
}

}  // namespace
}  // namespace cdfse

PYBIND11_MODULE(_cdfse, m) {
  using namespace cdfse;
  m.doc() = "Content-dependent fine-grained speaker embedding TTS core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);

  m.def(
      "wav_to_mel",
      [](const std::vector<double>& samples, int sample_rate, int n_mels) {
        frontend::MelConfig c;
        c.sample_rate = sample_rate;
        c.n_mels = n_mels;
        return frontend::WavToMel(samples, c).frames;
      },
      py::arg("samples"), py::arg("sample_rate") = 22050, py::arg("n_mels") = 80,
      "Log mel spectrogram, frames x n_mels.");

  py::class_<UtteranceRecord>(m, "Utterance")
      .def(py::init(&MakeUtterance), py::arg("id"), py::arg("speaker_id"), py::arg("phonemes"),
           py::arg("durations"), py::arg("mel"))
      .def_readonly("id", &UtteranceRecord::id)
      .def_readonly("speaker_id", &UtteranceRecord::speaker_id)
      .def_readonly("phonemes", &UtteranceRecord::phonemes)
      .def_readonly("durations", &UtteranceRecord::durations)
      .def_readonly("mel", &UtteranceRecord::mel)
      .def_property_readonly("frame_tags",
                             [](const UtteranceRecord& r) { return r.alignment.frame_tags; })
      .def("__repr__", [](const UtteranceRecord& r) {
        return "<Utterance " + r.id + " speaker=" + std::to_string(r.speaker_id) +
               " frames=" + std::to_string(r.num_frames()) + ">";
      });

  m.def(
      "generate_corpus",
      [](int n_speakers, int n_phonemes, int per_speaker, double alpha, double sigma, int n_mels,
         uint64_t seed) {
        frontend::SyntheticCorpusSpec s;
        s.n_speakers = n_speakers;
        s.n_phonemes = n_phonemes;
        s.utterances_per_speaker = per_speaker;
        s.content_strength = alpha;
        s.noise_std = sigma;
        s.n_mels = n_mels;
        s.seed = seed;
        return frontend::GenerateSyntheticCorpus(s).records;
      },
      py::arg("n_speakers") = 4, py::arg("n_phonemes") = 12, py::arg("per_speaker") = 50,
      py::arg("alpha") = 1.0, py::arg("sigma") = 0.05, py::arg("n_mels") = 80,
      py::arg("seed") = 7);
  m.def("split_heldout",
        [](const std::vector<UtteranceRecord>& records, int per_speaker) {
          frontend::CorpusSplit s = frontend::SplitHeldOut(records, per_speaker);
          return py::make_tuple(s.train, s.heldout);
        },
        py::arg("records"), py::arg("per_speaker"));
  m.def("write_corpus",
        [](const std::string& dir, const std::vector<UtteranceRecord>& records, int n_phonemes) {
          return frontend::WriteCorpus(dir, records, frontend::PhonemeSet::Synthetic(n_phonemes));
        },
        py::arg("dir"), py::arg("records"), py::arg("n_phonemes"));
  m.def("load_corpus", [](const std::string& path) { return frontend::LoadCorpus(path); },
        py::arg("manifest"));
  m.def("read_mel", &frontend::ReadMel, py::arg("path"));
  m.def("write_mel", &frontend::WriteMel, py::arg("path"), py::arg("mel"));

  m.def(
      "shuffle_by_phoneme",
      [](const nn::Matrix& mel, std::vector<int> frame_tags, uint64_t seed) {
        std::mt19937_64 rng(seed);
        frontend::ShuffledReference s = frontend::ShuffleByPhoneme(
            mel, frontend::AlignmentTrack::FromTags(std::move(frame_tags)), rng);
        return py::make_tuple(s.mel, s.frame_tags, s.order);
      },
      py::arg("mel"), py::arg("frame_tags"), py::arg("seed"),
      "Returns (mel, frame_tags, order) with phoneme segments in random order.");

  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return eval::CosineSimilarity(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def("column_labels", &eval::ColumnLabels, py::arg("frame_tags"), py::arg("factor"));

  m.def("config_keys", &model::ConfigKeys);
  m.def(
      "default_config", [] { return ConfigToDict(model::RunConfig{}); },
      "Toy run configuration as a {key: value string} dict.");

  py::class_<model::SynthesisResult>(m, "SynthesisResult")
      .def_readonly("mel", &model::SynthesisResult::mel)
      .def_readonly("attention", &model::SynthesisResult::attention)
      .def_readonly("durations", &model::SynthesisResult::durations);

  py::class_<model::CdfseModel>(m, "Model")
      .def(py::init([](const py::dict& config, uint64_t seed) {
             return std::make_unique<model::CdfseModel>(ConfigFromDict(config).model, seed);
           }),
           py::arg("config") = py::dict(), py::arg("seed") = 7)
      .def_static(
          "load",
          [](const std::string& path) { return train::RestoreModel(train::ReadCheckpoint(path)); },
          py::arg("path"))
      .def_property_readonly("mode",
                             [](const model::CdfseModel& m) { return model::ModeName(m.mode()); })
      .def_property_readonly("factor",
                             [](const model::CdfseModel& m) { return m.config().ref.factor(); })
      .def_property_readonly("parameter_count",
                             [](const model::CdfseModel& m) {
                               return model::AnalyticParameterCount(m.config());
                             })
      .def(
          "synthesize",
          [](const model::CdfseModel& m, const std::vector<int>& ids, const nn::Matrix& ref) {
            py::gil_scoped_release release;
            return m.Synthesize(ids, ref);
          },
          py::arg("phonemes"), py::arg("reference_mel"))
      .def(
          "speaker_vector",
          [](const model::CdfseModel& m, const nn::Matrix& mel) {
            return eval::SpeakerVector(m, mel);
          },
          py::arg("mel"));

  py::class_<train::Trainer>(m, "Trainer")
      .def(py::init([](const std::vector<UtteranceRecord>& corpus, const py::dict& config) {
             return std::make_unique<train::Trainer>(ConfigFromDict(config), corpus);
           }),
           py::arg("corpus"), py::arg("config") = py::dict())
      .def_static("resume", &train::Trainer::Resume, py::arg("path"), py::arg("corpus"))
      .def("step", [](train::Trainer& t) { return LossDict(t.Step()); })
      .def(
          "run",
          [](train::Trainer& t, const std::function<void(py::dict)>& on_step) {
            t.Run([&](const train::StepRecord& r) {
              if (on_step) on_step(LossDict(r));
            });
          },
          py::arg("on_step") = nullptr)
      .def("save", &train::Trainer::Save, py::arg("path"))
      .def_property_readonly("steps_done", &train::Trainer::step)
      .def_property_readonly("config", [](const train::Trainer& t) { return ConfigToDict(t.config()); })
      .def_property_readonly(
          "model", [](train::Trainer& t) -> model::CdfseModel& { return t.model(); },
          py::return_value_policy::reference_internal);

  m.def(
      "evaluate",
      [](const model::CdfseModel& model, const std::vector<UtteranceRecord>& records) {
        const eval::EvalReport r = eval::Evaluate(model, records);
        py::dict d;
        d["phoneme_accuracy"] = r.phoneme_accuracy;
        d["speaker_accuracy"] = r.speaker_accuracy;
        d["mel_mae"] = r.mel_mae;
        d["duration_mae"] = r.duration_mae;
        d["plurality"] = r.plurality.rate();
        d["reversed_probe"] = r.reversed.rate();
        d["cosine_similarity"] = r.cosine_similarity;
        return d;
      },
      py::arg("model"), py::arg("records"));
  m.def(
      "export_embeddings",
      [](const model::CdfseModel& model, const std::vector<UtteranceRecord>& records) {
        const auto rows = eval::ExportEmbeddings(model, records);
        std::vector<int> speakers, phonemes;
        nn::Matrix values(rows.size(), rows.empty() ? 0 : rows.front().values.size());
        for (size_t i = 0; i < rows.size(); ++i) {
          speakers.push_back(rows[i].speaker);
          phonemes.push_back(rows[i].phoneme);
          values.row(i) = rows[i].values;
        }
        return py::make_tuple(speakers, phonemes, values);
      },
      py::arg("model"), py::arg("records"),
      "Returns (speaker ids, phoneme ids, rows x out_dim matrix).");
}
