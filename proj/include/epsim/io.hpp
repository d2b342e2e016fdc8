#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace epsim::io {

/// Shortest round-trip decimal form (std::to_chars); stable across runs,
/// used for every numeric cell the tool emits.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Complex scalar as "re+imj" / "re-imj" (e.g. "0.5-0.25j").
std::string format_complex(std::complex<double> z);
std::complex<double> parse_complex(std::string_view s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// JSON with // comments allowed (used by config files).
nlohmann::json load_jsonc(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

/// FNV-1a over a canonical JSON dump; reported as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Column schemas for every CSV the tool emits, keyed by file-name prefix.
/// Throws std::runtime_error when a file does not match its documented schema.
void validate_output_schema(const std::filesystem::path& path);
bool has_known_schema(const std::filesystem::path& path);

}  // namespace epsim::io
