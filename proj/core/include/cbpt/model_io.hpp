#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cbpt/boosting.hpp"

namespace cbpt {

/// Version written into every model document. Loading a document with any
/// other version raises FormatError.
inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document: config, class and feature names, trees as node
/// arrays in id order, and the training log. Doubles are written with
/// shortest round-trip precision, so predictions survive a round trip
/// bit-exactly.
std::string serialize_model(const EnsembleModel& m);
EnsembleModel deserialize_model(std::string_view json_text);

void save_model(const EnsembleModel& m, const std::filesystem::path& path);
EnsembleModel load_model(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace cbpt
