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

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "parse/checkpoint.hpp"
#include "parse/compaction.hpp"
#include "parse/error.hpp"
#include "parse/gradcheck.hpp"
#include "parse/rng.hpp"
#include "temp_dir.hpp"

using namespace parse;

namespace {

Model<float> float_toy(bool relations, std::uint64_t seed) {
  return toy_model(toy_config(relations), seed).cast<float>();
}

std::vector<float> image_for(const Model<float>& m, std::uint64_t seed) {
  Rng rng(seed, 1);
  std::vector<float> x(m.config().backbone.input_size());
  for (float& v : x) v = float(rng.uniform());
  return x;
}

std::uint64_t header_length(const std::string& bytes) {
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  return len;
}

}  // namespace

TEST_CASE("save, load and forward are bit exact") {
  TempDir tmp("ckpt");
  for (bool relations : {true, false}) {
    const auto m = float_toy(relations, 3);
    const Json training = {{"lr", 0.001}}, metrics = Json::array({{{"epoch", 0}}});
    save_checkpoint(tmp / "m.parse", m, training, metrics);
    const Checkpoint ck = load_checkpoint(tmp / "m.parse");
    CHECK(ck.training == training);
    CHECK(ck.metrics == metrics);
    CHECK(ck.extra.is_null());
    REQUIRE(ck.model.params().size() == m.params().size());
    for (std::size_t t = 0; t < m.params().size(); ++t) {
      CHECK(ck.model.params().tensor(t).name == m.params().tensor(t).name);
      CHECK(ck.model.params().tensor(t).data == m.params().tensor(t).data);
    }
    CHECK(ck.model.catalog().fingerprint() == m.catalog().fingerprint());
    const auto img = image_for(m, 4);
    const auto a = m.logits(img), b = ck.model.logits(img);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    // Re-saving the loaded model reproduces the file byte for byte.
    CHECK(serialize_checkpoint(ck.model, ck.training, ck.metrics, ck.extra) ==
          serialize_checkpoint(m, training, metrics, nullptr));
  }
}

TEST_CASE("header is readable without the library") {
  const auto m = float_toy(true, 5);
  const std::string bytes = serialize_checkpoint(m, nullptr, nullptr, nullptr);
  CHECK(bytes.compare(0, 8, "PARSEv01") == 0);
  const std::uint64_t len = header_length(bytes);
  const auto h = nlohmann::json::parse(bytes.substr(16, len));
  CHECK(h.at("format") == "PARSEv01");
  CHECK(h.at("version") == 1);
  CHECK(h.at("catalog").at("fingerprint") == m.catalog().fingerprint());
  CHECK(h.at("catalog").at("size") == m.catalog().size());
  std::size_t expect = 0;
  for (const auto& t : h.at("tensors")) {
    CHECK(t.at("dtype") == "f32");
    CHECK(t.at("offset").get<std::size_t>() == expect);
    std::size_t n = 4;
    for (int d : t.at("shape")) n *= std::size_t(d);
    CHECK(t.at("nbytes").get<std::size_t>() == n);
    expect += n;
  }
  CHECK(h.at("payload_bytes").get<std::size_t>() == expect);
  CHECK(bytes.size() == 16 + len + expect);
  // Direct float read of the last tensor matches the model.
  const auto& last = h.at("tensors").back();
  float v = 0;
  std::memcpy(&v, bytes.data() + 16 + len + last.at("offset").get<std::size_t>(), 4);
  CHECK(v == m.params().tensors().back().data[0]);
}

TEST_CASE("corrupt containers are rejected with offsets") {
  const auto m = float_toy(true, 6);
  const std::string good = serialize_checkpoint(m, nullptr, nullptr, nullptr);
  const std::uint64_t len = header_length(good);

  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad), FormatError);
  try {
    parse_checkpoint(bad);
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, 10)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, 16 + len / 2)), FormatError);
  try {
    parse_checkpoint(good.substr(0, good.size() - 3));
    FAIL("truncated payload accepted");
  } catch (const FormatError& e) {
    CHECK(e.offset() == good.size() - 3);
  }
  CHECK_THROWS_AS(parse_checkpoint(good + "zz"), FormatError);

  std::string json_broken = good;
  json_broken[16] = '#';
  try {
    parse_checkpoint(json_broken);
    FAIL("broken JSON accepted");
  } catch (const FormatError& e) {
    CHECK(e.offset() >= 16);
  }

  auto h = nlohmann::json::parse(good.substr(16, len));
  auto rebuild = [&](const nlohmann::json& hdr) {
    const std::string text = hdr.dump();
    std::string out(good.substr(0, 8));
    const std::uint64_t n = text.size();
    out.append(reinterpret_cast<const char*>(&n), 8);
    out += text;
    out += good.substr(16 + len);
    return out;
  };
  CHECK_NOTHROW(parse_checkpoint(rebuild(h)));
  auto wrong_version = h;
  wrong_version["version"] = 2;
  CHECK_THROWS_AS(parse_checkpoint(rebuild(wrong_version)), FormatError);
  auto wrong_offset = h;
  wrong_offset["tensors"][1]["offset"] = wrong_offset["tensors"][1]["offset"].get<int>() + 4;
  CHECK_THROWS_AS(parse_checkpoint(rebuild(wrong_offset)), FormatError);
  auto wrong_dtype = h;
  wrong_dtype["tensors"][0]["dtype"] = "f16";
  CHECK_THROWS_AS(parse_checkpoint(rebuild(wrong_dtype)), FormatError);
  auto wrong_print = h;
  wrong_print["catalog"]["fingerprint"] = "0000000000000000";
  CHECK_THROWS_AS(parse_checkpoint(rebuild(wrong_print)), InvalidArgument);
  auto wrong_name = h;
  wrong_name["tensors"][0]["name"] = "backbone.block9.weight";
  CHECK_THROWS_AS(parse_checkpoint(rebuild(wrong_name)), FormatError);

  TempDir tmp("ckpt-io");
  CHECK_THROWS_AS(load_checkpoint(tmp / "absent.parse"), IoError);
}

TEST_CASE("compacted checkpoints carry their entry list") {
  TempDir tmp("ckpt-compact");
  auto d = toy_model(toy_config(true), 8);
  Rng rng(8, 3);
  for (double& v : d.params()[d.slots().lambda]) v = rng.bernoulli(0.05) ? 1.0 : -2.0;
  for (double tau : {0.0, 0.05}) {
    const auto c = compact(d, plan_compaction(d, tau)).cast<float>();
    save_checkpoint(tmp / "c.parse", c);
    const auto h = read_checkpoint_header(tmp / "c.parse");
    CHECK(h.at("catalog").at("compacted") == true);
    CHECK(h.at("catalog").at("entries").size() == c.catalog().size());
    const auto back = load_checkpoint(tmp / "c.parse").model;
    CHECK(back.catalog().entries() == c.catalog().entries());
    CHECK(back.config().frozen_weights == (tau > 0));
    const auto img = image_for(back, 1);
    CHECK(back.logits(img) == c.logits(img));
  }
}
