#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mixkrr/kernelspec.hpp"
#include "mixkrr/sequencegen.hpp"

namespace mixkrr {

/// Everything needed to regenerate a dataset and its ground truth.
struct DatasetMeta {
  ProcessSpec spec;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  Origin origin;
  std::optional<nlohmann::json> model;  ///< spectral model + target, if known
};

/// "%.17g" rendering: parses back to the same double.
std::string format_double(double v);
/// Strict full-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(const std::string& s);

/// Writes `<stem>.csv` (header `index,x,y`) and `<stem>.json` sidecar.
void save_dataset(const Dataset& data, const std::filesystem::path& csv_path,
                  const std::optional<nlohmann::json>& model = std::nullopt);

/// Reads the CSV and, when present, the `.json` sidecar next to it.
/// Throws ParseError with the offending line number.
Dataset load_dataset(const std::filesystem::path& csv_path, DatasetMeta* meta = nullptr);

nlohmann::json sidecar_json(const Dataset& data, const std::optional<nlohmann::json>& model);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mixkrr
