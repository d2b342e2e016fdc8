#include "epsim/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace epsim::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad numeric field: '" + std::string(s) + "'");
  return v;
}

std::string format_complex(std::complex<double> z) {
  std::string out = format_double(z.real());
  const double im = z.imag();
  if (std::signbit(im)) {
    out += '-';
    out += format_double(-im);
  } else {
    out += '+';
    out += format_double(im);
  }
  out += 'j';
  return out;
}

std::complex<double> parse_complex(std::string_view s) {
  if (s.empty() || s.back() != 'j')
    throw std::invalid_argument("bad complex field: '" + std::string(s) + "'");
  s.remove_suffix(1);
  // split at the last +/- that is not an exponent sign and not leading
  std::size_t split = std::string_view::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    const char c = s[i];
    if ((c == '+' || c == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos)
    throw std::invalid_argument("bad complex field: '" + std::string(s) + "j'");
  const double re = parse_double(s.substr(0, split));
  // from_chars rejects an explicit leading '+'
  std::string_view im_part = s.substr(split);
  if (im_part.front() == '+') im_part.remove_prefix(1);
  const double im = parse_double(im_part);
  return {re, im};
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : l) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
    }
  }
  if (first) throw std::runtime_error("empty CSV: " + path.string());
  return t;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("CSV row width mismatch while writing " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

nlohmann::json load_jsonc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  return nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path.string());
  out << j.dump(2) << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path.string());
  out << content;
}

std::string config_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

// file-name prefix -> required header
const std::map<std::string, std::vector<std::string>, std::less<>>& schema_registry() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> reg = {
      {"counts_",
       {"setting_index", "basis", "qwp_signal_deg", "hwp_signal_deg", "pol_signal_deg",
        "qwp_idler_deg", "hwp_idler_deg", "pol_idler_deg", "singles_signal_hz",
        "singles_idler_hz", "coincidences_hz", "accidentals_hz", "integration_time_s",
        "pump_power_mw", "raw_singles_signal", "raw_singles_idler", "raw_coincidences",
        "raw_accidentals"}},
      {"shg_", {"wavelength_nm", "normalized_intensity"}},
      {"spdc", {"wavelength_nm", "normalized_intensity"}},
      {"gvd", {"wavelength_nm", "gvd_ps2_per_km"}},
      {"prc_conversion", {"wavelength_nm", "transmission_db"}},
      {"rho_", {"hh", "hv", "vh", "vv"}},
      {"dispersion_", {"wavelength_nm", "effective_index"}},
      {"mmi_tree", {"splitter_count", "output_power_dbm"}},
  };
  return reg;
}

const std::vector<std::string>* lookup_schema(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  for (const auto& [prefix, header] : schema_registry()) {
    if (name.rfind(prefix, 0) == 0) return &header;
  }
  return nullptr;
}

}  // namespace

bool has_known_schema(const std::filesystem::path& path) {
  return path.extension() == ".csv" && lookup_schema(path) != nullptr;
}

void validate_output_schema(const std::filesystem::path& path) {
  const auto* header = lookup_schema(path);
  if (!header)
    throw std::runtime_error("no documented schema for " + path.filename().string());
  const CsvTable t = read_csv(path);
  if (t.header != *header)
    throw std::runtime_error("schema mismatch in " + path.filename().string());
  for (const auto& row : t.rows) {
    if (row.size() != header->size())
      throw std::runtime_error("row width mismatch in " + path.filename().string());
  }
}

}  // namespace epsim::io
