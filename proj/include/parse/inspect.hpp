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

#include "parse/image_io.hpp"
#include "parse/model.hpp"
#include "parse/serialize.hpp"

namespace parse {

// Heatmap overlay of primitive k: normalized heatmap upsampled to the image by
// nearest neighbour and alpha-blended in red, soft center marked.
RgbImage heatmap_overlay(const RgbImage& image, const Inference<float>& inference, int k);

// Writes primitive_<k>.png per primitive into out_dir and returns the report:
// prediction, descriptors and the top nonzero relations of the predicted class.
Json inspect_image(const Model<float>& model, const RgbImage& image, const std::string& out_dir,
                   int top = 10);

}  // namespace parse
