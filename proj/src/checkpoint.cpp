// Copyright 2026 The FAAL Desk Authors.
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

#include "faal/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "faal/errors.hpp"

namespace faal {
namespace {

using nlohmann::json;

void append_number(std::string& out, double v) {
  out += fmt::format("{:.17g}", v);
}

void append_row(std::string& out, std::span<const double> row) {
  out += '[';
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j > 0) out += ',';
    append_number(out, row[j]);
  }
  out += ']';
}

DenseMatrix parse_matrix(const json& rows) {
  if (!rows.is_array() || rows.empty()) {
    throw FormatError("checkpoint: weight must be a nonempty array of rows");
  }
  const std::size_t n = rows.size();
  const std::size_t c = rows.front().is_array() ? rows.front().size() : 0;
  if (c == 0) throw FormatError("checkpoint: empty weight row");
  std::vector<double> data;
  data.reserve(n * c);
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != c) {
      throw FormatError("checkpoint: ragged weight matrix");
    }
    for (const auto& v : r) {
      if (!v.is_number()) throw FormatError("checkpoint: non-numeric entry");
      data.push_back(v.get<double>());
    }
  }
  return DenseMatrix(n, c, std::move(data));
}

DenseMatrix parse_vector(const json& values) {
  if (!values.is_array() || values.empty()) {
    throw FormatError("checkpoint: bias must be a nonempty array");
  }
  std::vector<double> data;
  for (const auto& v : values) {
    if (!v.is_number()) throw FormatError("checkpoint: non-numeric entry");
    data.push_back(v.get<double>());
  }
  const std::size_t n = data.size();
  return DenseMatrix(1, n, std::move(data));
}

}  // namespace

std::string checkpoint_to_json(const MlpModel& model,
                               const CheckpointMeta& meta) {
  std::string out = "{\"layers\":[";
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0) out += ',';
    out += "{\"w\":[";
    for (std::size_t i = 0; i < layers[l].weight.rows(); ++i) {
      if (i > 0) out += ',';
      append_row(out, layers[l].weight.row(i));
    }
    out += "],\"b\":";
    append_row(out, layers[l].bias.row(0));
    out += '}';
  }
  out += "],\"meta\":{\"arch\":[";
  const auto widths = model.widths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(widths[i]);
  }
  out += fmt::format("],\"epoch\":{},\"seed\":{}}}}}\n", meta.epoch, meta.seed);
  return out;
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("checkpoint: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc.contains("meta")) {
    throw FormatError("checkpoint: expected {\"layers\":..., \"meta\":...}");
  }
  const json& layers_json = doc["layers"];
  if (!layers_json.is_array() || layers_json.empty()) {
    throw FormatError("checkpoint: layers must be a nonempty array");
  }
  std::vector<DenseLayer> layers;
  try {
    for (const auto& lj : layers_json) {
      if (!lj.is_object() || !lj.contains("w") || !lj.contains("b")) {
        throw FormatError("checkpoint: layer needs \"w\" and \"b\"");
      }
      layers.emplace_back(parse_matrix(lj["w"]), parse_vector(lj["b"]));
    }
  } catch (const DimensionError& e) {
    throw FormatError(fmt::format("checkpoint: {}", e.what()));
  }

  const json& meta_json = doc["meta"];
  if (!meta_json.is_object()) throw FormatError("checkpoint: meta not object");
  CheckpointMeta meta;
  try {
    meta.epoch = meta_json.value("epoch", std::size_t{0});
    meta.seed = meta_json.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("checkpoint meta: {}", e.what()));
  }

  std::optional<MlpModel> model;
  try {
    model.emplace(std::move(layers));
  } catch (const DimensionError& e) {
    throw FormatError(fmt::format("checkpoint: {}", e.what()));
  }
  if (meta_json.contains("arch")) {
    std::vector<std::size_t> arch;
    try {
      arch = meta_json["arch"].get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("checkpoint arch: {}", e.what()));
    }
    if (arch != model->widths()) {
      throw FormatError("checkpoint: meta.arch disagrees with layer shapes");
    }
  }
  return Checkpoint{std::move(*model), meta};
}

void save_checkpoint(const MlpModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << checkpoint_to_json(model, meta);
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace faal
