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

#include "parse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "parse/error.hpp"

namespace parse {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::size_t kPrefix = 16;

Json header_json(const Model<float>& model, const Json& training, const Json& metrics,
                 const Json& extra) {
  Json tensors = Json::array();
  std::size_t offset = 0;
  for (const auto& t : model.params().tensors()) {
    const std::size_t bytes = t.data.size() * sizeof(float);
    tensors.push_back(
        {{"name", t.name}, {"dtype", "f32"}, {"shape", t.shape}, {"offset", offset}, {"nbytes", bytes}});
    offset += bytes;
  }
  Json h = {{"format", kCheckpointMagic},
            {"version", kCheckpointVersion},
            {"model", to_json(model.config())},
            {"catalog", catalog_descriptor(model.catalog())},
            {"tensors", tensors},
            {"payload_bytes", offset}};
  if (!training.is_null()) h["training"] = training;
  if (!metrics.is_null()) h["metrics"] = metrics;
  if (!extra.is_null()) h["extra"] = extra;
  return h;
}

std::uint64_t read_u64(const std::string& bytes, std::size_t at) {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data() + at, 8);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read checkpoint", path);
  return ss.str();
}

Json parse_header(const std::string& bytes) {
  if (bytes.size() < kPrefix) throw FormatError("checkpoint truncated before header", bytes.size());
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw FormatError("bad checkpoint magic", 0);
  const std::uint64_t len = read_u64(bytes, 8);
  if (len > bytes.size() - kPrefix) throw FormatError("checkpoint header extends past end of file", 8);
  Json h;
  try {
    h = Json::parse(bytes.begin() + kPrefix, bytes.begin() + kPrefix + std::ptrdiff_t(len));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(),
                      kPrefix + e.byte);
  }
  if (!h.is_object() || h.value("format", "") != kCheckpointMagic)
    throw FormatError("checkpoint header has wrong format tag", kPrefix);
  if (h.value("version", -1) != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version", kPrefix);
  const std::size_t payload = kPrefix + len;
  std::size_t expected = 0;
  try {
    for (const auto& t : h.at("tensors")) {
      if (t.at("dtype") != "f32") throw FormatError("unsupported tensor dtype", kPrefix);
      std::size_t n = 1;
      for (int d : t.at("shape").get<std::vector<int>>()) {
        if (d < 0) throw FormatError("negative tensor dimension", kPrefix);
        n *= std::size_t(d);
      }
      const auto off = t.at("offset").get<std::size_t>();
      const auto nbytes = t.at("nbytes").get<std::size_t>();
      if (off != expected || nbytes != n * sizeof(float))
        throw FormatError("inconsistent offset for tensor " + t.at("name").get<std::string>(),
                          payload + off);
      expected += nbytes;
    }
    if (h.at("payload_bytes").get<std::size_t>() != expected)
      throw FormatError("payload size does not match tensor table", payload);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed tensor table: ") + e.what(), kPrefix);
  }
  if (bytes.size() < payload + expected)
    throw FormatError("checkpoint payload truncated", bytes.size());
  if (bytes.size() > payload + expected)
    throw FormatError("trailing bytes after checkpoint payload", payload + expected);
  return h;
}

}  // namespace

std::string checkpoint_header(const Model<float>& model, const Json& training,
                              const Json& metrics, const Json& extra) {
  return header_json(model, training, metrics, extra).dump();
}

std::string serialize_checkpoint(const Model<float>& model, const Json& training,
                                 const Json& metrics, const Json& extra) {
  const std::string header = checkpoint_header(model, training, metrics, extra);
  std::string out;
  out.reserve(kPrefix + header.size() + model.params().total_elements() * sizeof(float));
  out.append(kCheckpointMagic, 8);
  const std::uint64_t len = header.size();
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += header;
  for (const auto& t : model.params().tensors())
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  return out;
}

void save_checkpoint(const std::string& path, const Model<float>& model, const Json& training,
                     const Json& metrics, const Json& extra) {
  const std::string bytes = serialize_checkpoint(model, training, metrics, extra);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create checkpoint", path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("cannot write checkpoint", path);
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  const Json h = parse_header(bytes);
  const std::size_t payload = kPrefix + read_u64(bytes, 8);
  ModelConfig config;
  std::shared_ptr<const RelationCatalog> catalog;
  try {
    config = model_from_json(h.at("model"));
    catalog = std::make_shared<const RelationCatalog>(catalog_from_descriptor(h.at("catalog")));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what(), kPrefix);
  }
  Checkpoint ck{Model<float>(config, catalog), nullptr, nullptr, nullptr};
  auto& params = ck.model.params();
  const auto& table = h.at("tensors");
  if (table.size() != params.size())
    throw FormatError("checkpoint has " + std::to_string(table.size()) + " tensors, model expects " +
                          std::to_string(params.size()),
                      kPrefix);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = table[i];
    auto& dst = params.tensor(i);
    const std::size_t off = payload + t.at("offset").get<std::size_t>();
    if (t.at("name").get<std::string>() != dst.name ||
        t.at("shape").get<std::vector<int>>() != dst.shape)
      throw FormatError("tensor " + t.at("name").get<std::string>() +
                            " does not match expected " + dst.name,
                        off);
    std::memcpy(dst.data.data(), bytes.data() + off, dst.data.size() * sizeof(float));
  }
  if (h.contains("training")) ck.training = h.at("training");
  if (h.contains("metrics")) ck.metrics = h.at("metrics");
  if (h.contains("extra")) ck.extra = h.at("extra");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

Json read_checkpoint_header(const std::string& path) { return parse_header(read_file(path)); }

}  // namespace parse
