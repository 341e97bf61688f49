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

// Command-line front end over the C interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "parse/parse.h"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Failure : std::runtime_error {
  int code;
  Failure(const std::string& what, int c) : std::runtime_error(what), code(c) {}
};

void check(parse_status s, const char* what) {
  if (s == PARSE_OK) return;
  const int code = s == PARSE_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
  throw Failure(std::string(what) + ": " + parse_last_error(), code);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  parse_string_free(s);
  return out;
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot open config " + path, kExitUsage);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Failure("config " + path + " must hold a JSON object", kExitUsage);
    return j;
  } catch (const json::parse_error& e) {
    throw Failure("config " + path + ": " + e.what(), kExitUsage);
  }
}

json section(const json& cfg, const char* name) {
  auto it = cfg.find(name);
  return it == cfg.end() ? json::object() : *it;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure("cannot write " + path, kExitRuntime);
  out << text << '\n';
}

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool float64 = false;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config, "JSON config file; flags win on conflict");
  app->add_option("--seed", s.seed, "Seed for all randomness");
  app->add_flag("--deterministic", s.deterministic, "Fixed reduction order (always on)");
  app->add_flag("--float64", s.float64, "Double precision compute");
}

struct DatasetHandle {
  parse_dataset* p = nullptr;
  explicit DatasetHandle(const std::string& dir) { check(parse_dataset_open(dir.c_str(), &p), "open dataset"); }
  ~DatasetHandle() { parse_dataset_free(p); }
  json info() const {
    char* out = nullptr;
    check(parse_dataset_info(p, &out), "dataset info");
    return json::parse(take(out));
  }
};

struct ModelHandle {
  parse_model* p = nullptr;
  ModelHandle() = default;
  explicit ModelHandle(const std::string& path) { check(parse_model_load(path.c_str(), &p), "load checkpoint"); }
  ~ModelHandle() { parse_model_free(p); }
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
};

struct TrainFlags {
  std::optional<int> epochs, batch, primitives;
  std::optional<double> lr, val_fraction, l_sparse, l_bn, l_conc, l_ang;
  std::optional<std::string> families;
  bool no_style_mix = false;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    app->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--primitives,-K", primitives, "Number of primitives K");
    app->add_option("--families", families,
                    "all, none, or a list of presence,binary,ternary,quaternary");
    app->add_option("--val-fraction", val_fraction, "Validation share of source data");
    app->add_option("--lambda-sparse", l_sparse, "Weight of the Lambda l1 penalty");
    app->add_option("--lambda-bn", l_bn, "Weight of the bottleneck regularizers");
    app->add_option("--lambda-conc", l_conc, "Concentration weight inside the bottleneck term");
    app->add_option("--lambda-ang", l_ang, "Weight of the angle diversity term");
    app->add_flag("--no-style-mix", no_style_mix, "Disable feature-level style mixing");
  }

  json merge(json t, const Shared& s, const json& data_info) const {
    json& model = t["model"];
    if (!model.is_object()) model = json::object();
    if (!model.contains("classes")) model["classes"] = data_info.at("classes");
    if (!model.contains("input"))
      model["input"] = {3, data_info.at("image_size"), data_info.at("image_size")};
    if (primitives) model["primitives"] = *primitives;
    if (families) model["families"] = *families;
    if (epochs) t["epochs"] = *epochs;
    if (batch) t["batch"] = *batch;
    if (lr) t["lr"] = *lr;
    if (val_fraction) t["val_fraction"] = *val_fraction;
    if (no_style_mix) t["style_mix"] = false;
    if (s.seed) t["seed"] = *s.seed;
    if (s.float64) t["float64"] = true;
    if (s.deterministic) t["deterministic"] = true;
    auto set_loss = [&](const char* key, const std::optional<double>& v) {
      if (v) t["loss"][key] = *v;
    };
    set_loss("sparse", l_sparse);
    set_loss("bn", l_bn);
    set_loss("conc", l_conc);
    set_loss("ang", l_ang);
    return t;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural part-relation classifier: data, training, compaction, inspection"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print library and format versions");

  // gen-data
  Shared gen_s;
  std::string gen_out, gen_domains;
  std::optional<int> gen_classes, gen_per_class, gen_size;
  std::optional<double> gen_jitter, gen_shift;
  std::string gen_glyphs;
  auto* gen = app.add_subcommand("gen-data", "Render the synthetic multi-domain dataset");
  add_shared(gen, gen_s);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", gen_classes, "Number of classes");
  gen->add_option("--domains", gen_domains, "Comma separated: solid,outline,textured,inverted");
  gen->add_option("--per-class", gen_per_class, "Samples per (class, domain)");
  gen->add_option("--image-size", gen_size, "Image side in pixels");
  gen->add_option("--jitter", gen_jitter, "Part position jitter (normalized units)");
  gen->add_option("--layout-shift", gen_shift, "Max per-sample layout translation");
  gen->add_option("--glyphs", gen_glyphs, "Glyph kinds per class: distinct, random or shared")
      ->check(CLI::IsMember({"distinct", "random", "shared"}));

  // train
  Shared tr_s;
  TrainFlags tr_f;
  std::string tr_data, tr_target, tr_out, tr_metrics, tr_summary;
  auto* tr = app.add_subcommand("train", "Train with one domain held out");
  add_shared(tr, tr_s);
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--target", tr_target, "Held-out target domain")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--metrics", tr_metrics, "Epoch metrics (default <out>.metrics.ndjson)");
  tr->add_option("--summary", tr_summary, "Summary JSON path (default <out>.summary.json)");
  tr_f.add(tr);

  // eval
  Shared ev_s;
  std::string ev_ckpt, ev_data, ev_target, ev_split = "test", ev_report;
  std::optional<double> ev_val;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_shared(ev, ev_s);
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--target", ev_target, "Target domain; all samples when omitted");
  ev->add_option("--split", ev_split, "test, val, train or all")
      ->check(CLI::IsMember({"test", "val", "train", "all"}));
  ev->add_option("--val-fraction", ev_val, "Validation share used to rebuild the split");
  ev->add_option("--report", ev_report, "Write the report JSON here");

  // lodo
  Shared lo_s;
  TrainFlags lo_f;
  std::string lo_data, lo_out;
  auto* lo = app.add_subcommand("lodo", "Leave-one-domain-out over every domain");
  add_shared(lo, lo_s);
  lo->add_option("--data", lo_data, "Dataset directory")->required();
  lo->add_option("--out", lo_out, "Output directory")->required();
  lo_f.add(lo);

  // compact
  Shared co_s;
  std::string co_ckpt, co_out, co_report, co_data;
  std::optional<double> co_tau;
  std::optional<std::size_t> co_samples;
  auto* co = app.add_subcommand("compact", "Prune relations no class uses and verify");
  add_shared(co, co_s);
  co->add_option("--ckpt", co_ckpt, "Input checkpoint")->required();
  co->add_option("--out", co_out, "Compacted checkpoint")->required();
  co->add_option("--tau", co_tau, "Pruning threshold (default 0, lossless)")->check(CLI::NonNegativeNumber);
  co->add_option("--report", co_report, "Write the report JSON here");
  co->add_option("--data", co_data, "Dataset used for the equivalence check");
  co->add_option("--samples", co_samples, "Samples for the equivalence check (default 1000)")->check(CLI::PositiveNumber);

  // inspect
  Shared in_s;
  std::string in_ckpt, in_image, in_out;
  auto* in = app.add_subcommand("inspect", "Heatmap overlays and relation report for one image");
  add_shared(in, in_s);
  in->add_option("--ckpt", in_ckpt, "Checkpoint")->required();
  in->add_option("--image", in_image, "PNG image")->required();
  in->add_option("--out", in_out, "Output directory")->required();

  // gradcheck
  Shared gc_s;
  std::optional<int> gc_models;
  std::optional<double> gc_step, gc_tol;
  std::string gc_head = "relations", gc_report;
  bool gc_no_mix = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  add_shared(gc, gc_s);
  gc->add_option("--models", gc_models, "Number of random toy models (default 5)")->check(CLI::PositiveNumber);
  gc->add_option("--step", gc_step, "Central difference step (default 1e-5)")->check(CLI::PositiveNumber);
  gc->add_option("--tolerance", gc_tol, "Max relative error (default 1e-4)")->check(CLI::PositiveNumber);
  gc->add_option("--head", gc_head, "relations or none")->check(CLI::IsMember({"relations", "none"}));
  gc->add_flag("--no-style-mix", gc_no_mix, "Check without style mixing");
  gc->add_option("--report", gc_report, "Write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (version) {
      std::cout << parse_version() << '\n';
      return 0;
    }
    if (gen->parsed()) {
      json d = section(read_config(gen_s.config), "data");
      if (gen_classes) d["classes"] = *gen_classes;
      if (gen_per_class) d["per_class"] = *gen_per_class;
      if (gen_size) d["image_size"] = *gen_size;
      if (gen_jitter) d["jitter"] = *gen_jitter;
      if (gen_shift) d["layout_shift"] = *gen_shift;
      if (!gen_glyphs.empty()) d["glyphs"] = gen_glyphs;
      if (gen_s.seed) d["seed"] = *gen_s.seed;
      if (!gen_domains.empty()) {
        json list = json::array();
        std::size_t pos = 0;
        while (pos <= gen_domains.size()) {
          const std::size_t end = std::min(gen_domains.find(',', pos), gen_domains.size());
          list.push_back(gen_domains.substr(pos, end - pos));
          pos = end + 1;
        }
        d["domains"] = list;
      }
      check(parse_dataset_generate(d.dump().c_str(), gen_out.c_str()), "gen-data");
      std::cout << json{{"out", gen_out}, {"config", d}}.dump(2) << '\n';
    } else if (tr->parsed()) {
      DatasetHandle data(tr_data);
      const json t = tr_f.merge(section(read_config(tr_s.config), "train"), tr_s, data.info());
      const std::string metrics = tr_metrics.empty() ? tr_out + ".metrics.ndjson" : tr_metrics;
      char* out = nullptr;
      check(parse_train(data.p, tr_target.c_str(), t.dump().c_str(), tr_out.c_str(),
                        metrics.c_str(), &out),
            "train");
      const std::string summary = take(out);
      write_file(tr_summary.empty() ? tr_out + ".summary.json" : tr_summary, summary);
      std::cout << summary << '\n';
    } else if (ev->parsed()) {
      ModelHandle model(ev_ckpt);
      DatasetHandle data(ev_data);
      json spec = section(read_config(ev_s.config), "eval");
      if (!ev_target.empty()) spec["target"] = ev_target;
      if (ev->count("--split")) spec["split"] = ev_split;
      if (ev_val) spec["val_fraction"] = *ev_val;
      if (ev_s.seed) spec["seed"] = *ev_s.seed;
      char* out = nullptr;
      check(parse_evaluate(model.p, data.p, spec.dump().c_str(), ev_s.float64, &out), "eval");
      const std::string report = take(out);
      if (!ev_report.empty()) write_file(ev_report, report);
      std::cout << report << '\n';
    } else if (lo->parsed()) {
      DatasetHandle data(lo_data);
      const json t = lo_f.merge(section(read_config(lo_s.config), "train"), lo_s, data.info());
      char* out = nullptr;
      check(parse_lodo(data.p, t.dump().c_str(), lo_out.c_str(), &out), "lodo");
      std::cout << take(out) << '\n';
    } else if (co->parsed()) {
      const json c = section(read_config(co_s.config), "compact");
      const double tau = co_tau ? *co_tau : c.value("tau", 0.0);
      const std::size_t samples = co_samples ? *co_samples : c.value("samples", std::size_t{1000});
      const std::string data_dir = !co_data.empty() ? co_data : c.value("data", std::string());
      ModelHandle model(co_ckpt);
      std::optional<DatasetHandle> data;
      if (!data_dir.empty()) data.emplace(data_dir);
      ModelHandle compacted;
      char* out = nullptr;
      check(parse_compact(model.p, tau, data ? data->p : nullptr, samples,
                          co_s.seed.value_or(0), co_s.float64, &compacted.p, &out),
            "compact");
      const std::string report = take(out);
      check(parse_model_save(compacted.p, co_out.c_str()), "save compacted checkpoint");
      if (!co_report.empty()) write_file(co_report, report);
      std::cout << report << '\n';
    } else if (in->parsed()) {
      ModelHandle model(in_ckpt);
      char* out = nullptr;
      check(parse_inspect(model.p, in_image.c_str(), in_out.c_str(), &out), "inspect");
      std::cout << take(out) << '\n';
    } else if (gc->parsed()) {
      json o = section(read_config(gc_s.config), "gradcheck");
      if (gc_models) o["models"] = *gc_models;
      if (gc_step) o["step"] = *gc_step;
      if (gc_tol) o["tolerance"] = *gc_tol;
      if (gc->count("--head")) o["relations"] = gc_head == "relations";
      if (gc_no_mix) o["style_mix"] = false;
      char* out = nullptr;
      check(parse_gradcheck(gc_s.seed.value_or(0), o.dump().c_str(), &out), "gradcheck");
      const std::string report = take(out);
      if (!gc_report.empty()) write_file(gc_report, report);
      std::cout << report << '\n';
      if (!json::parse(report).at("passed").get<bool>()) return kExitRuntime;
    } else {
      std::cout << app.help() << '\n';
      return kExitUsage;
    }
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
