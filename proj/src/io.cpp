#include "cfmpp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace cfmpp {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "inf") return kInfinity;
  if (text == "-inf") return -kInfinity;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

namespace {

const char* mode_name(Interpolation m) { return m == Interpolation::Step ? "step" : "linear"; }

Interpolation mode_from_name(const std::string& s) {
  if (s == "step") return Interpolation::Step;
  if (s == "linear") return Interpolation::Linear;
  throw ValidationError("path.mode: expected 'step' or 'linear', got '" + s + "'");
}

const char* aux_kind_name(AuxReference::Kind k) {
  switch (k) {
    case AuxReference::Kind::Counting: return "counting";
    case AuxReference::Kind::UnitExponential: return "unit_exponential";
    case AuxReference::Kind::Uniform: return "uniform";
    case AuxReference::Kind::Lebesgue: return "lebesgue";
    case AuxReference::Kind::Product: return "product";
  }
  return "counting";
}

AuxReference::Kind aux_kind_from_name(const std::string& s) {
  static const std::map<std::string, AuxReference::Kind> names{
      {"counting", AuxReference::Kind::Counting},
      {"unit_exponential", AuxReference::Kind::UnitExponential},
      {"uniform", AuxReference::Kind::Uniform},
      {"lebesgue", AuxReference::Kind::Lebesgue},
      {"product", AuxReference::Kind::Product}};
  const auto it = names.find(s);
  if (it == names.end()) throw ValidationError("reference.aux.kind: unknown '" + s + "'");
  return it->second;
}

const char* mark_kind_name(MarkReference::Kind k) {
  switch (k) {
    case MarkReference::Kind::Wiener: return "wiener";
    case MarkReference::Kind::PointMass: return "point_mass";
    case MarkReference::Kind::User: return "user";
  }
  return "point_mass";
}

MarkReference::Kind mark_kind_from_name(const std::string& s) {
  if (s == "wiener") return MarkReference::Kind::Wiener;
  if (s == "point_mass") return MarkReference::Kind::PointMass;
  if (s == "user") return MarkReference::Kind::User;
  throw ValidationError("reference.mark.kind: unknown '" + s + "'");
}

template <typename T>
T field(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) {
    throw ValidationError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(where) + "." + key + ": " + e.what());
  }
}

json reference_to_json(const ReferenceSpec& r) {
  return json{{"aux",
               {{"kind", aux_kind_name(r.aux.kind)},
                {"types", r.aux.types},
                {"lower", r.aux.lower},
                {"upper", r.aux.upper}}},
              {"mark", {{"kind", mark_kind_name(r.mark.kind)}, {"id", r.mark.id}}}};
}

ReferenceSpec reference_from_json(const json& j) {
  ReferenceSpec r;
  if (j.contains("aux")) {
    const json& a = j.at("aux");
    r.aux.kind = aux_kind_from_name(a.value("kind", std::string("counting")));
    r.aux.types = a.value("types", 1);
    r.aux.lower = a.value("lower", 0.0);
    r.aux.upper = a.value("upper", 1.0);
  }
  if (j.contains("mark")) {
    const json& m = j.at("mark");
    r.mark.kind = mark_kind_from_name(m.value("kind", std::string("point_mass")));
    r.mark.id = m.value("id", std::string());
  }
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ';')) out.push_back(parse_double(part));
  return out;
}

}  // namespace

json window_to_json(const Window& w) {
  json j{{"lower", w.lower()}, {"upper", w.upper()}, {"torus", w.torus()},
         {"time_scale", w.time_scale()}};
  if (w.temporal()) j["horizon"] = w.horizon();
  return j;
}

Window window_from_json(const json& j) {
  std::optional<double> horizon;
  if (j.contains("horizon") && !j.at("horizon").is_null()) {
    horizon = field<double>(j, "horizon", "window");
  }
  return Window(field<std::vector<double>>(j, "lower", "window"),
                field<std::vector<double>>(j, "upper", "window"), horizon,
                j.value("torus", false), j.value("time_scale", 1.0));
}

json path_to_json(const CadlagPath& p) {
  json support = json::array({p.support().start});
  if (std::isinf(p.support().end)) {
    support.push_back(nullptr);
  } else {
    support.push_back(p.support().end);
  }
  return json{{"grid", p.grid()}, {"values", p.values()}, {"support", support},
              {"mode", mode_name(p.mode())}};
}

CadlagPath path_from_json(const json& j) {
  auto grid = field<std::vector<double>>(j, "grid", "mark");
  auto values = field<std::vector<double>>(j, "values", "mark");
  Support support{0.0, 0.0};
  if (j.contains("support")) {
    const json& s = j.at("support");
    if (!s.is_array() || s.size() != 2) throw ValidationError("mark.support: expected [start, end]");
    support.start = s[0].get<double>();
    support.end = s[1].is_null() ? kInfinity : s[1].get<double>();
  }
  const auto mode = mode_from_name(j.value("mode", std::string("step")));
  return CadlagPath(std::move(grid), std::move(values), support, mode);
}

json configuration_to_json(const Configuration& c) {
  json points = json::array();
  for (const auto& p : c.points()) {
    json aux = json::object();
    if (p.aux.type) aux["type"] = *p.aux.type;
    if (!p.aux.continuous.empty()) aux["continuous"] = p.aux.continuous;
    json jp{{"x", p.location.x}, {"aux", aux}, {"mark", path_to_json(p.mark)}};
    if (p.location.t) jp["t"] = *p.location.t;
    points.push_back(std::move(jp));
  }
  return json{{"window", window_to_json(c.window())},
              {"reference", reference_to_json(c.reference())},
              {"points", std::move(points)}};
}

Configuration configuration_from_json(const json& j) {
  if (!j.contains("window")) throw ValidationError("configuration: missing field 'window'");
  Window w = window_from_json(j.at("window"));
  ReferenceSpec ref = j.contains("reference") ? reference_from_json(j.at("reference")) : ReferenceSpec{};
  std::vector<MarkedPoint> points;
  if (j.contains("points")) {
    for (const json& jp : j.at("points")) {
      MarkedPoint p;
      p.location.x = field<std::vector<double>>(jp, "x", "point");
      if (jp.contains("t") && !jp.at("t").is_null()) p.location.t = jp.at("t").get<double>();
      if (jp.contains("aux")) {
        const json& a = jp.at("aux");
        p.aux.type = a.contains("type") ? std::optional<int>(a.at("type").get<int>()) : std::nullopt;
        p.aux.continuous = a.value("continuous", std::vector<double>{});
      }
      if (jp.contains("mark")) p.mark = path_from_json(jp.at("mark"));
      points.push_back(std::move(p));
    }
  }
  return Configuration(std::move(w), std::move(points), std::move(ref));
}

void write_configuration_json(const std::filesystem::path& file, const Configuration& c) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << configuration_to_json(c).dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

Configuration read_configuration_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  return configuration_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV

void write_configuration_csv(std::ostream& out, const Configuration& c) {
  const Window& w = c.window();
  const ReferenceSpec& r = c.reference();
  CsvTable table([&] {
    std::vector<std::string> h{"point"};
    for (std::size_t i = 0; i < w.dimension(); ++i) h.push_back("x" + std::to_string(i + 1));
    for (const char* name : {"t", "type", "aux", "support_start", "support_end", "mode",
                             "grid_time", "value"}) {
      h.emplace_back(name);
    }
    return h;
  }());
  table.meta("window.lower", join_numbers(w.lower()));
  table.meta("window.upper", join_numbers(w.upper()));
  table.meta("window.horizon", w.temporal() ? format_double(w.horizon()) : "");
  table.meta("window.torus", w.torus() ? "1" : "0");
  table.meta("window.time_scale", format_double(w.time_scale()));
  table.meta("reference.aux", std::string(aux_kind_name(r.aux.kind)) + ";" +
                                  std::to_string(r.aux.types) + ";" + format_double(r.aux.lower) +
                                  ";" + format_double(r.aux.upper));
  table.meta("reference.mark", std::string(mark_kind_name(r.mark.kind)) + ";" + r.mark.id);

  for (std::size_t i = 0; i < c.size(); ++i) {
    const MarkedPoint& p = c[i];
    std::vector<std::string> prefix{std::to_string(i)};
    for (double x : p.location.x) prefix.push_back(format_double(x));
    prefix.push_back(p.location.t ? format_double(*p.location.t) : "");
    prefix.push_back(p.aux.type ? std::to_string(*p.aux.type) : "");
    prefix.push_back(join_numbers(p.aux.continuous));
    prefix.push_back(format_double(p.mark.support().start));
    prefix.push_back(format_double(p.mark.support().end));
    prefix.push_back(mode_name(p.mark.mode()));
    if (p.mark.empty()) {
      auto row = prefix;
      row.emplace_back();
      row.emplace_back();
      table.row(std::move(row));
      continue;
    }
    for (std::size_t j = 0; j < p.mark.size(); ++j) {
      auto row = prefix;
      row.push_back(format_double(p.mark.grid()[j]));
      row.push_back(format_double(p.mark.values()[j]));
      table.row(std::move(row));
    }
  }
  table.write(out);
}

Configuration read_configuration_csv(std::istream& in) {
  std::map<std::string, std::string> meta;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        meta[key] = line.substr(eq + 1);
      }
      continue;
    }
    header = split(line, ',');
    break;
  }
  if (header.empty()) throw ValidationError("configuration csv: missing header row");
  for (const char* key : {"window.lower", "window.upper"}) {
    if (!meta.count(key)) throw ValidationError(std::string("configuration csv: missing metadata ") + key);
  }
  std::optional<double> horizon;
  if (!meta["window.horizon"].empty()) horizon = parse_double(meta["window.horizon"]);
  Window w(parse_numbers(meta["window.lower"]), parse_numbers(meta["window.upper"]), horizon,
           meta["window.torus"] == "1",
           meta.count("window.time_scale") ? parse_double(meta["window.time_scale"]) : 1.0);
  ReferenceSpec ref;
  if (meta.count("reference.aux")) {
    const auto parts = split(meta["reference.aux"], ';');
    if (parts.size() == 4) {
      ref.aux.kind = aux_kind_from_name(parts[0]);
      ref.aux.types = std::stoi(parts[1]);
      ref.aux.lower = parse_double(parts[2]);
      ref.aux.upper = parse_double(parts[3]);
    }
  }
  if (meta.count("reference.mark")) {
    const auto parts = split(meta["reference.mark"], ';');
    ref.mark.kind = mark_kind_from_name(parts[0]);
    if (parts.size() > 1) ref.mark.id = parts[1];
  }

  const std::size_t d = w.dimension();
  const std::size_t expected = 1 + d + 8;
  if (header.size() != expected) throw ValidationError("configuration csv: unexpected column count");

  struct Pending {
    MarkedPoint point;
    std::vector<double> grid, values;
    Support support;
    Interpolation mode = Interpolation::Step;
  };
  std::vector<Pending> pending;
  long last = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != expected) {
      throw ValidationError("configuration csv: row " + std::to_string(line_no) +
                            " has the wrong number of cells");
    }
    const long idx = std::stol(cells[0]);
    if (idx != last) {
      Pending p;
      for (std::size_t i = 0; i < d; ++i) p.point.location.x.push_back(parse_double(cells[1 + i]));
      if (!cells[1 + d].empty()) p.point.location.t = parse_double(cells[1 + d]);
      p.point.aux.type = cells[2 + d].empty() ? std::nullopt : std::optional<int>(std::stoi(cells[2 + d]));
      p.point.aux.continuous = parse_numbers(cells[3 + d]);
      p.support = Support{parse_double(cells[4 + d]), parse_double(cells[5 + d])};
      p.mode = mode_from_name(cells[6 + d]);
      pending.push_back(std::move(p));
      last = idx;
    }
    if (!cells[7 + d].empty()) {
      pending.back().grid.push_back(parse_double(cells[7 + d]));
      pending.back().values.push_back(parse_double(cells[8 + d]));
    }
  }
  std::vector<MarkedPoint> points;
  points.reserve(pending.size());
  for (auto& p : pending) {
    if (!p.grid.empty() || p.support != Support{0.0, 0.0}) {
      p.point.mark = CadlagPath(std::move(p.grid), std::move(p.values), p.support, p.mode);
    }
    points.push_back(std::move(p.point));
  }
  return Configuration(std::move(w), std::move(points), std::move(ref));
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("csv row width does not match header");
  rows_.push_back(std::move(cells));
}

void CsvTable::row_numbers(const std::vector<double>& cells) {
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (double v : cells) text.push_back(format_double(v));
  row(std::move(text));
}

void CsvTable::write(std::ostream& out) const {
  for (const auto& [k, v] : meta_) out << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
  out << '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

void CsvTable::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write(out);
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

}  // namespace cfmpp
