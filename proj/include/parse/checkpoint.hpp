/* Copyright 2026 The PARSE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <string>

#include "parse/model.hpp"
#include "parse/serialize.hpp"

namespace parse {

inline constexpr char kCheckpointMagic[9] = "PARSEv01";
inline constexpr int kCheckpointVersion = 1;

// Container layout:
//   8 bytes   magic "PARSEv01"
//   8 bytes   header length L, unsigned little-endian
//   L bytes   UTF-8 JSON header; tensor offsets are relative to the payload
//   payload   little-endian float32 tensors, back to back
struct Checkpoint {
  Model<float> model;
  Json training;  // training configuration, null when absent
  Json metrics;   // metrics history, null when absent
  Json extra;     // free-form provenance (e.g. compaction source)
};

std::string checkpoint_header(const Model<float>& model, const Json& training,
                              const Json& metrics, const Json& extra);
void save_checkpoint(const std::string& path, const Model<float>& model,
                     const Json& training = nullptr, const Json& metrics = nullptr,
                     const Json& extra = nullptr);
std::string serialize_checkpoint(const Model<float>& model, const Json& training,
                                 const Json& metrics, const Json& extra);

Checkpoint load_checkpoint(const std::string& path);
Checkpoint parse_checkpoint(const std::string& bytes);
// Header only, validated against the container size.
Json read_checkpoint_header(const std::string& path);

}  // namespace parse
