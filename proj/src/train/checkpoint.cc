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

#include "cdfse/train/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "cdfse/common/errors.h"

namespace cdfse::train {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};

NamedTensor FromMatrix(const std::string& name, const std::vector<int>& shape,
                       const nn::Matrix& m) {
  return {name, shape, m};
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void Pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void String(const std::string& s) {
    Pod<uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}
  template <typename T>
  T Pod() {
    T v{};
    Read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  std::string String() {
    const uint64_t n = Pod<uint64_t>();
    if (n > (1u << 30)) throw FormatError(path_ + ": implausible string length");
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }
  void Read(char* dst, size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw FormatError(path_ + ": truncated checkpoint");
    }
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

const NamedTensor* Checkpoint::Find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint CaptureCheckpoint(const model::RunConfig& config, const model::CdfseModel& model,
                             const nn::Adam* optimizer, int64_t step) {
  Checkpoint c;
  c.config = config;
  c.config.model = model.config();
  c.step = step;
  for (const nn::Parameter* p : model.params().All()) {
    c.tensors.push_back(FromMatrix(p->name, p->shape, p->value));
  }
  if (optimizer != nullptr) {
    const auto& params = optimizer->params();
    const nn::OptimizerState& s = optimizer->state();
    for (size_t i = 0; i < params.size(); ++i) {
      c.tensors.push_back(FromMatrix("adam.m/" + params[i]->name, params[i]->shape,
                                     s.first_moment[i]));
    }
    for (size_t i = 0; i < params.size(); ++i) {
      c.tensors.push_back(FromMatrix("adam.v/" + params[i]->name, params[i]->shape,
                                     s.second_moment[i]));
    }
  }
  return c;
}

void WriteCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  Writer w(out);
  out.write(kMagic, 4);
  w.Pod<uint32_t>(kCheckpointVersion);
  w.String(model::ConfigText(checkpoint.config));
  w.Pod<int64_t>(checkpoint.step);
  w.Pod<uint64_t>(checkpoint.tensors.size());
  for (const NamedTensor& t : checkpoint.tensors) {
    w.String(t.name);
    w.Pod<uint32_t>(static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) w.Pod<int32_t>(d);
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(t.value.size() * sizeof(double)));
  }
  if (!out) throw FormatError("failed while writing checkpoint " + path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[4];
  r.Read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path + ": not a CKPT file");
  const uint32_t version = r.Pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  try {
    c.config = model::ParseConfig(r.String());
  } catch (const ConfigError& e) {
    throw FormatError(path + ": bad stored config: " + e.what());
  }
  c.step = r.Pod<int64_t>();
  const uint64_t count = r.Pod<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.String();
    const uint32_t ndim = r.Pod<uint32_t>();
    if (ndim == 0 || ndim > 8) throw FormatError(path + ": bad rank for " + t.name);
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      const int32_t extent = r.Pod<int32_t>();
      if (extent < 1) throw FormatError(path + ": bad extent for " + t.name);
      t.shape.push_back(extent);
      numel *= extent;
    }
    if (numel > (int64_t{1} << 32)) throw FormatError(path + ": tensor too large");
    const int cols = t.shape.back();
    t.value.resize(numel / cols, cols);
    r.Read(reinterpret_cast<char*>(t.value.data()), numel * sizeof(double));
    c.tensors.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path + ": trailing bytes after tensor table");
  }
  return c;
}

namespace {

void CopyInto(const Checkpoint& c, const std::string& name, const std::vector<int>& shape,
              nn::Matrix& dst) {
  const NamedTensor* t = c.Find(name);
  if (t == nullptr) throw FormatError("checkpoint lacks tensor " + name);
  if (t->shape != shape) throw FormatError("checkpoint tensor " + name + " has wrong shape");
  dst = t->value;
}

}  // namespace

std::unique_ptr<model::CdfseModel> RestoreModel(
    const Checkpoint& checkpoint, std::optional<model::ConditioningMode> expected_mode) {
  const model::ConditioningMode stored = checkpoint.config.model.backbone.mode;
  if (expected_mode && *expected_mode != stored) {
    throw ConfigError("mode mismatch: checkpoint was trained in " + model::ModeName(stored) +
                      " mode, requested " + model::ModeName(*expected_mode));
  }
  auto m = std::make_unique<model::CdfseModel>(checkpoint.config.model, 0);
  for (nn::Parameter* p : m->params().All()) {
    CopyInto(checkpoint, p->name, p->shape, p->value);
  }
  for (const NamedTensor& t : checkpoint.tensors) {
    if (t.name.rfind("adam.", 0) != 0 && m->params().Find(t.name) == nullptr) {
      throw FormatError("checkpoint tensor " + t.name + " is not part of the model");
    }
  }
  return m;
}

void RestoreOptimizer(const Checkpoint& checkpoint, nn::Adam& optimizer) {
  nn::OptimizerState& s = optimizer.state();
  const auto& params = optimizer.params();
  for (size_t i = 0; i < params.size(); ++i) {
    CopyInto(checkpoint, "adam.m/" + params[i]->name, params[i]->shape, s.first_moment[i]);
    CopyInto(checkpoint, "adam.v/" + params[i]->name, params[i]->shape, s.second_moment[i]);
  }
  s.step = checkpoint.step;
}

}  // namespace cdfse::train
