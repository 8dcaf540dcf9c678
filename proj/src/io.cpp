#include "mixkrr/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixkrr/error.hpp"

namespace mixkrr {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  // from_chars keeps subnormals; strtod flags them ERANGE.
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

nlohmann::json sidecar_json(const Dataset& data, const std::optional<nlohmann::json>& model) {
  nlohmann::json j{{"spec", to_json(data.spec)},
                   {"seed", data.seed},
                   {"n", data.size()},
                   {"origin", data.origin.str()},
                   {"origin_kind", static_cast<int>(data.origin.kind)},
                   {"origin_index", data.origin.index},
                   {"origin_count", data.origin.count},
                   {"clip", data.clip}};
  if (model) j["model"] = *model;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path,
                  const std::optional<nlohmann::json>& model) {
  std::ostringstream os;
  os << "index,x,y\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    os << i << ',' << format_double(data.x[i]) << ',' << format_double(data.y[i]) << '\n';
  write_text_file(csv_path, os.str());
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  write_text_file(sidecar, sidecar_json(data, model).dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& csv_path, DatasetMeta* meta) {
  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open dataset '" + csv_path.string() + "'");
  const std::string path = csv_path.string();
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,x,y") throw ParseError(path, lineno, "expected header 'index,x,y'");
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 3) throw ParseError(path, lineno, "expected 3 fields");
    const auto idx = parse_double(fields[0]);
    const auto x = parse_double(fields[1]);
    const auto y = parse_double(fields[2]);
    if (!idx || !x || !y) throw ParseError(path, lineno, "non-numeric field");
    if (*idx != static_cast<double>(d.x.size())) throw ParseError(path, lineno, "index out of order");
    d.x.push_back(*x);
    d.y.push_back(*y);
  }
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  DatasetMeta m;
  if (std::filesystem::exists(sidecar)) {
    const auto j = read_json_file(sidecar);
    try {
      m.spec = process_from_json(j.at("spec"));
      m.seed = j.at("seed").get<std::uint64_t>();
      m.n = j.at("n").get<std::size_t>();
      m.origin = Origin{static_cast<Origin::Kind>(j.value("origin_kind", 0)), j.value("origin_index", 0),
                        j.value("origin_count", 1)};
      if (j.contains("model")) m.model = j.at("model");
      d.clip = j.value("clip", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(sidecar.string(), 0, e.what());
    }
    if (m.n != d.size()) throw ParseError(sidecar.string(), 0, "sidecar n does not match the CSV row count");
  } else {
    m.n = d.size();
  }
  d.spec = m.spec;
  d.seed = m.seed;
  d.origin = m.origin;
  if (meta) *meta = std::move(m);
  return d;
}

}  // namespace mixkrr
