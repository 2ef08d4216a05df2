# Copyright 2026 The CDFSE Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Content-dependent fine-grained speaker embedding TTS core (C++ extension)."""

from ._cdfse import (
    ConfigError,
    FormatError,
    InvalidInput,
    Model,
    SynthesisResult,
    Trainer,
    Utterance,
    UsageError,
    column_labels,
    config_keys,
    cosine_similarity,
    default_config,
    evaluate,
    export_embeddings,
    generate_corpus,
    load_corpus,
    read_mel,
    shuffle_by_phoneme,
    split_heldout,
    wav_to_mel,
    write_corpus,
    write_mel,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "InvalidInput",
    "Model",
    "SynthesisResult",
    "Trainer",
    "Utterance",
    "UsageError",
    "column_labels",
    "config_keys",
    "cosine_similarity",
    "default_config",
    "evaluate",
    "export_embeddings",
    "generate_corpus",
    "load_corpus",
    "read_mel",
    "shuffle_by_phoneme",
    "split_heldout",
    "wav_to_mel",
    "write_corpus",
    "write_mel",
]
