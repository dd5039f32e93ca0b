#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "screenlab/model.hpp"

namespace screenlab {

inline constexpr int kModelFormatVersion = 1;

/// Free-form training facts stored alongside a model (seed, split, row counts).
/// Never holds training rows.
using ModelMetadata = std::map<std::string, std::string>;

struct LoadedModel {
  AnyModel model;
  ModelMetadata metadata;
  /// FNV-1a of the document text, hex. Identifies the exact file served.
  std::string model_id;

  const Schema& schema() const { return schema_of(model); }
};

/// JSON document: format tag, format_version, model_kind, schema, metadata,
/// then the structure or weights of the model family. Reals round-trip exactly.
std::string serialize(const AnyModel& model, const ModelMetadata& metadata = {});
void save(const AnyModel& model, const std::string& path, const ModelMetadata& metadata = {});

/// Throws PersistError on malformed text, a wrong format_version or an unknown kind.
LoadedModel deserialize(std::string_view text);
LoadedModel load(const std::string& path);
/// Also throws SchemaMismatch naming the first column that differs from `expected`.
LoadedModel load(const std::string& path, const Schema& expected);

std::string fnv1a_hex(std::string_view text);

}  // namespace screenlab
