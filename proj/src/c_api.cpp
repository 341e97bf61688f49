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

#include "parse/parse.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "parse/checkpoint.hpp"
#include "parse/compaction.hpp"
#include "parse/error.hpp"
#include "parse/gradcheck.hpp"
#include "parse/inspect.hpp"
#include "parse/trainer.hpp"
#include "parse/version.hpp"

struct parse_model {
  parse::Checkpoint ck;
};

struct parse_dataset {
  parse::Dataset data;
};

namespace {

using parse::Json;

thread_local std::string g_last_error;

template <typename F>
parse_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return PARSE_OK;
  } catch (const parse::InvalidArgument& e) {
    g_last_error = e.what();
    return PARSE_ERR_INVALID_ARGUMENT;
  } catch (const parse::FormatError& e) {
    g_last_error = e.what();
    return PARSE_ERR_FORMAT;
  } catch (const parse::IoError& e) {
    g_last_error = e.what();
    return PARSE_ERR_IO;
  } catch (const parse::NumericError& e) {
    g_last_error = e.what();
    return PARSE_ERR_NUMERIC;
  } catch (const Json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return PARSE_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PARSE_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return PARSE_ERR_RUNTIME;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw parse::InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const Json& j) {
  if (out) *out = dup_string(j.dump(2));
}

Json parse_json_arg(const char* text) {
  if (!text || !*text) return Json::object();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw parse::InvalidArgument(std::string("malformed JSON argument: ") + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw parse::IoError("cannot write", path);
  out << text;
  if (!out) throw parse::IoError("write failed", path);
}

Json model_info(const parse::Model<float>& m) {
  return {{"model", parse::to_json(m.config())},
          {"catalog", [&] {
             Json c = parse::catalog_descriptor(m.catalog());
             c.erase("entries");
             return c;
           }()},
          {"parameters", m.params().total_elements()},
          {"structural_parameters", m.structural_parameter_count()},
          {"input_size", m.config().backbone.input_size()},
          {"classes", m.config().classes},
          {"temperature", m.temperature()},
          {"omega", m.omega()}};
}

std::vector<std::size_t> select_split(const parse::Dataset& data, const Json& spec,
                                      std::uint64_t default_seed) {
  std::vector<std::size_t> idx;
  if (!spec.contains("target")) {
    for (std::size_t i = 0; i < data.samples.size(); ++i) idx.push_back(i);
    return idx;
  }
  const auto target = parse::domain_from_name(spec.at("target").get<std::string>());
  const auto split = parse::load_split(data, target, spec.value("val_fraction", 0.2),
                                       spec.value("seed", default_seed));
  const std::string which = spec.value("split", "test");
  if (which == "test") return split.test;
  if (which == "val") return split.val;
  if (which == "train") return split.train;
  if (which == "all") {
    for (std::size_t i = 0; i < data.samples.size(); ++i) idx.push_back(i);
    return idx;
  }
  throw parse::InvalidArgument("unknown split '" + which + "'");
}

Json training_header(const parse::TrainConfig& cfg, parse::Domain target) {
  Json t = parse::to_json(cfg);
  t["target"] = parse::domain_name(target);
  return t;
}

Json history_json(const parse::TrainResult& r) {
  Json h = Json::array();
  for (const auto& e : r.history) h.push_back(parse::to_json(e));
  return h;
}

}  // namespace

extern "C" {

const char* parse_version(void) {
  static const std::string v = Json{{"library", parse::kLibraryVersion},
                                    {"checkpoint_format", parse::kCheckpointMagic},
                                    {"checkpoint_version", parse::kCheckpointVersion},
                                    {"catalog_canonicalization", parse::kCanonicalizationVersion}}
                                   .dump();
  return v.c_str();
}

const char* parse_last_error(void) { return g_last_error.c_str(); }

void parse_string_free(char* s) { std::free(s); }

parse_status parse_dataset_generate(const char* config_json, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    parse::generate(parse::synth_from_json(parse_json_arg(config_json)), out_dir);
  });
}

parse_status parse_dataset_open(const char* dir, parse_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new parse_dataset{parse::load_dataset(dir)};
  });
}

void parse_dataset_free(parse_dataset* data) { delete data; }

parse_status parse_dataset_info(const parse_dataset* data, char** out_json) {
  return guarded([&] {
    require(data, "data");
    Json j = parse::to_json(data->data.config);
    j["samples"] = data->data.samples.size();
    j["root"] = data->data.root;
    emit(out_json, j);
  });
}

parse_status parse_model_create(const char* model_config_json, uint64_t seed, parse_model** out) {
  return guarded([&] {
    require(out, "out");
    const auto cfg = parse::model_from_json(parse_json_arg(model_config_json));
    *out = new parse_model{{parse::Model<float>::create(cfg, seed), nullptr, nullptr, nullptr}};
  });
}

parse_status parse_model_load(const char* path, parse_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new parse_model{parse::load_checkpoint(path)};
  });
}

parse_status parse_model_save(const parse_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    parse::save_checkpoint(path, model->ck.model, model->ck.training, model->ck.metrics,
                           model->ck.extra);
  });
}

void parse_model_free(parse_model* model) { delete model; }

parse_status parse_model_info(const parse_model* model, char** out_json) {
  return guarded([&] {
    require(model, "model");
    Json j = model_info(model->ck.model);
    if (!model->ck.training.is_null()) j["training"] = model->ck.training;
    if (!model->ck.extra.is_null()) j["extra"] = model->ck.extra;
    emit(out_json, j);
  });
}

parse_status parse_model_logits(const parse_model* model, const float* image, size_t image_len,
                                int float64, double* logits, size_t logits_len) {
  return guarded([&] {
    require(model, "model");
    require(image, "image");
    require(logits, "logits");
    const auto& m = model->ck.model;
    if (logits_len != std::size_t(m.config().classes))
      throw parse::InvalidArgument("logits buffer must hold one value per class");
    const std::span<const float> in(image, image_len);
    if (float64) {
      const std::vector<double> x(in.begin(), in.end());
      const auto out = m.cast<double>().logits(x);
      std::copy(out.begin(), out.end(), logits);
    } else {
      const auto out = m.logits(in);
      std::copy(out.begin(), out.end(), logits);
    }
  });
}

parse_status parse_train(const parse_dataset* data, const char* target,
                         const char* train_config_json, const char* checkpoint_path,
                         const char* metrics_path, char** summary_json) {
  return guarded([&] {
    require(data, "data");
    require(target, "target");
    require(checkpoint_path, "checkpoint_path");
    parse::TrainConfig cfg = parse::train_from_json(parse_json_arg(train_config_json));
    const parse::Domain dom = parse::domain_from_name(target);
    const parse::Split split = parse::load_split(data->data, dom, cfg.val_fraction, cfg.seed);
    std::ofstream metrics;
    if (metrics_path) {
      metrics.open(metrics_path, std::ios::binary | std::ios::trunc);
      if (!metrics) throw parse::IoError("cannot write metrics", metrics_path);
    }
    const parse::TrainResult r = parse::train(cfg, data->data, split, [&](const auto& rec) {
      if (metrics.is_open()) metrics << parse::to_json(rec).dump() << '\n' << std::flush;
    });
    const parse::EvalMetrics test = parse::evaluate(r.model, data->data, split.test);
    Json summary = {{"target", target},
                    {"best_epoch", r.best_epoch},
                    {"val_accuracy", r.best_val_accuracy},
                    {"test", parse::to_json(test)},
                    {"sizes",
                     {{"train", split.train.size()},
                      {"val", split.val.size()},
                      {"test", split.test.size()}}},
                    {"relations", r.model.catalog().size()},
                    {"structural_parameters", r.model.structural_parameter_count()},
                    {"fingerprint", r.model.catalog().fingerprint()}};
    Json extra = {{"summary", summary}};
    parse::save_checkpoint(checkpoint_path, r.model, training_header(cfg, dom), history_json(r),
                           extra);
    emit(summary_json, summary);
  });
}

parse_status parse_evaluate(const parse_model* model, const parse_dataset* data,
                            const char* split_json, int float64, char** report_json) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    const Json spec = parse_json_arg(split_json);
    const auto& ck = model->ck;
    std::uint64_t seed = 0;
    if (ck.training.is_object()) seed = ck.training.value("seed", std::uint64_t{0});
    const auto idx = select_split(data->data, spec, seed);
    const parse::EvalMetrics m =
        float64 ? parse::evaluate(ck.model.cast<double>(), data->data, idx)
                : parse::evaluate(ck.model, data->data, idx);
    Json report = parse::to_json(m);
    report["fingerprint"] = ck.model.catalog().fingerprint();
    report["precision"] = float64 ? "f64" : "f32";
    emit(report_json, report);
  });
}

parse_status parse_lodo(const parse_dataset* data, const char* train_config_json,
                        const char* out_dir, char** summary_json) {
  return guarded([&] {
    require(data, "data");
    require(out_dir, "out_dir");
    const parse::TrainConfig cfg = parse::train_from_json(parse_json_arg(train_config_json));
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw parse::IoError("cannot create directory", dir.string());
    std::ofstream metrics;
    parse::Domain current = parse::Domain::kSolid;
    bool open = false;
    auto on_epoch = [&](parse::Domain d, const parse::EpochRecord& rec) {
      if (!open || d != current) {
        metrics.close();
        const auto path = dir / (std::string(parse::domain_name(d)) + ".metrics.ndjson");
        metrics.open(path, std::ios::binary | std::ios::trunc);
        if (!metrics) throw parse::IoError("cannot write metrics", path.string());
        current = d;
        open = true;
      }
      metrics << parse::to_json(rec).dump() << '\n' << std::flush;
    };
    auto on_model = [&](const parse::LodoRow& row, const parse::TrainResult& tr) {
      const auto path = dir / (std::string(parse::domain_name(row.target)) + ".parse");
      Json extra = {{"summary", {{"target", parse::domain_name(row.target)},
                                 {"best_epoch", row.best_epoch},
                                 {"val_accuracy", row.val_accuracy},
                                 {"test", parse::to_json(row.test)}}}};
      parse::save_checkpoint(path.string(), tr.model, training_header(cfg, row.target),
                             history_json(tr), extra);
    };
    const parse::LodoResult res = parse::lodo(cfg, data->data, on_model, on_epoch);
    Json summary = parse::to_json(res);
    summary["config"] = parse::to_json(cfg);
    write_text((dir / "lodo.json").string(), summary.dump(2) + "\n");
    emit(summary_json, summary);
  });
}

parse_status parse_compact(const parse_model* model, double tau, const parse_dataset* data,
                           size_t sample_count, uint64_t seed, int float64, parse_model** out,
                           char** report_json) {
  return guarded([&] {
    require(model, "model");
    const auto& src = model->ck.model;
    const parse::CompactionPlan plan = parse::plan_compaction(src, tau);
    parse::Model<float> compacted = parse::compact(src, plan);

    const std::size_t n_in = src.config().backbone.input_size();
    std::vector<float> images;
    std::size_t count = 0;
    if (data) {
      const std::size_t total = data->data.samples.size();
      count = std::min(sample_count, total);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < count; ++i) idx.push_back(i * total / count);
      images = parse::gather_images<float>(data->data, idx);
      if (count && images.size() != n_in * count)
        throw parse::InvalidArgument("compact: dataset images do not match the model input");
    } else {
      count = sample_count;
      images.resize(n_in * count);
      parse::Rng rng(seed, parse::stream_id(parse::streams::kToy, 99));
      for (float& v : images) v = float(rng.uniform());
    }
    parse::CompactionReport r;
    if (float64) {
      const std::vector<double> wide(images.begin(), images.end());
      r = parse::verify_equivalence(src.cast<double>(), compacted.cast<double>(),
                                    std::span<const double>(wide), count);
    } else {
      r = parse::verify_equivalence(src, compacted, std::span<const float>(images), count);
    }
    r.tau = tau;
    Json report = {{"tau", tau},
                   {"relations_before", r.relations_before},
                   {"relations_after", r.relations_after},
                   {"structural_parameters_before", r.structural_before},
                   {"structural_parameters_after", r.structural_after},
                   {"reduction", r.reduction},
                   {"samples", r.samples},
                   {"sample_source", data ? "dataset" : "random"},
                   {"precision", float64 ? "f64" : "f32"},
                   {"top1_agreement", r.agreement},
                   {"max_logit_deviation", r.max_logit_deviation},
                   {"source_fingerprint", plan.source_fingerprint},
                   {"fingerprint", compacted.catalog().fingerprint()}};
    Json extra = model->ck.extra.is_object() ? model->ck.extra : Json::object();
    extra["compaction"] = {{"tau", tau},
                           {"source_fingerprint", plan.source_fingerprint},
                           {"source_relations", plan.source_size}};
    if (out) *out = new parse_model{{std::move(compacted), model->ck.training, model->ck.metrics, extra}};
    emit(report_json, report);
  });
}

parse_status parse_inspect(const parse_model* model, const char* image_path, const char* out_dir,
                           char** report_json) {
  return guarded([&] {
    require(model, "model");
    require(image_path, "image_path");
    require(out_dir, "out_dir");
    const parse::RgbImage image = parse::read_png(image_path);
    Json report = parse::inspect_image(model->ck.model, image, out_dir);
    report["image"] = image_path;
    write_text((std::filesystem::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
    emit(report_json, report);
  });
}

parse_status parse_gradcheck(uint64_t seed, const char* options_json, char** report_json) {
  return guarded([&] {
    const Json o = parse_json_arg(options_json);
    parse::GradcheckOptions opt;
    opt.models = o.value("models", opt.models);
    opt.step = o.value("step", opt.step);
    opt.tolerance = o.value("tolerance", opt.tolerance);
    opt.batch = o.value("batch", opt.batch);
    opt.style_mix = o.value("style_mix", opt.style_mix);
    opt.relations = o.value("relations", opt.relations);
    const parse::GradcheckSummary s = parse::run_gradcheck(seed, opt);
    Json models = Json::array();
    for (const auto& m : s.models) {
      Json groups = Json::array();
      for (const auto& g : m.groups)
        groups.push_back({{"group", g.group},
                          {"checked", g.report.checked},
                          {"skipped_nonsmooth", g.skipped},
                          {"max_rel_err", g.report.max_rel_err},
                          {"max_abs_grad", g.max_abs_grad},
                          {"worst_param", g.report.worst_param},
                          {"analytic", g.report.analytic},
                          {"numeric", g.report.numeric}});
      models.push_back({{"seed", m.seed}, {"max_rel_err", m.max_rel_err}, {"groups", groups}});
    }
    emit(report_json, {{"passed", s.passed},
                       {"max_rel_err", s.max_rel_err},
                       {"tolerance", s.tolerance},
                       {"step", opt.step},
                       {"models", models}});
  });
}

}  // extern "C"
