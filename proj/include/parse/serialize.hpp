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

#include <string>
#include <string_view>

#include <json.hpp>

#include "parse/catalog.hpp"
#include "parse/model.hpp"
#include "parse/scoring.hpp"
#include "parse/synthdata.hpp"

namespace parse {

using Json = nlohmann::json;

Json to_json(const FamilySwitches& s);
FamilySwitches switches_from_json(const Json& j);
// "all", "none" or a comma separated subset of presence,binary,ternary,quaternary.
// Returns false for the relations flag when "none" is given.
FamilySwitches parse_family_list(std::string_view text, bool* relations);
std::string family_list(const FamilySwitches& s, bool relations);

Json to_json(const VocabCounts& c);
VocabCounts counts_from_json(const Json& j);

Json to_json(const LossConfig& c);
// Missing keys keep the values already in `base`.
LossConfig loss_from_json(const Json& j, LossConfig base = {});

Json to_json(const ModelConfig& c);
ModelConfig model_from_json(const Json& j, ModelConfig base = {});

Json to_json(const SynthConfig& c);
SynthConfig synth_from_json(const Json& j, SynthConfig base = {});

// Catalog descriptor stored in checkpoints; compacted catalogs carry their
// explicit entry list.
Json catalog_descriptor(const RelationCatalog& catalog);
RelationCatalog catalog_from_descriptor(const Json& j);
CatalogEntry parse_entry_label(std::string_view label);

}  // namespace parse
