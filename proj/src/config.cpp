#include "twistdn/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace twistdn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream in(cleaned);
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << " ";
    out << v[i];
  }
  return out.str();
}

}  // namespace

void RunConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config: expected key=value, got '" + kv + "'");
  const std::string key = trim(kv.substr(0, eq));
  const std::string val = trim(kv.substr(eq + 1));
  try {
    if (key == "section") section = val;
    else if (key == "ellipse_rx") ellipse_rx = std::stod(val);
    else if (key == "ellipse_ry") ellipse_ry = std::stod(val);
    else if (key == "rect_width") rect_width = std::stod(val);
    else if (key == "rect_height") rect_height = std::stod(val);
    else if (key == "polygon") polygon_xy = parse_list(val);
    else if (key == "target_h") target_h = std::stod(val);
    else if (key == "K") K = std::stoi(val);
    else if (key == "a") a = std::stod(val);
    else if (key == "xi") xi = std::stod(val);
    else if (key == "variant") variant = val;
    else if (key == "export_family") export_family = std::stoi(val) != 0;
    else if (key == "a_values") a_values = parse_list(val);
    else if (key == "close_pair_gap") close_pair_gap = std::stod(val);
    else if (key == "xi_half_width") xi_half_width = std::stod(val);
    else if (key == "xi_step") xi_step = std::stod(val);
    else if (key == "sigma_g") sigma_g = std::stod(val);
    else if (key == "noise") noise = std::stod(val);
    else if (key == "seed") seed = std::stoull(val);
    else if (key == "search_lo") search_lo = std::stod(val);
    else if (key == "search_hi") search_hi = std::stod(val);
    else if (key == "mode") mode = val;
    else if (key == "out_dir") out_dir = val;
    else if (key == "threads") threads = std::stoi(val);
    else
      throw std::invalid_argument("config: unknown key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value for '" + key + "': " + val);
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      cfg.apply_override(line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (line " +
                                  std::to_string(lineno) + " of " + path + ")");
    }
  }
  return cfg;
}

std::string RunConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  auto num = [](double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  kv["section"] = section;
  kv["ellipse_rx"] = num(ellipse_rx);
  kv["ellipse_ry"] = num(ellipse_ry);
  kv["rect_width"] = num(rect_width);
  kv["rect_height"] = num(rect_height);
  kv["polygon"] = format_list(polygon_xy);
  kv["target_h"] = num(target_h);
  kv["K"] = std::to_string(K);
  kv["a"] = num(a);
  kv["xi"] = num(xi);
  kv["variant"] = variant;
  kv["export_family"] = export_family ? "1" : "0";
  kv["a_values"] = format_list(a_values);
  kv["close_pair_gap"] = num(close_pair_gap);
  kv["xi_half_width"] = num(xi_half_width);
  kv["xi_step"] = num(xi_step);
  kv["sigma_g"] = num(sigma_g);
  kv["noise"] = num(noise);
  kv["seed"] = std::to_string(seed);
  kv["search_lo"] = num(search_lo);
  kv["search_hi"] = num(search_hi);
  kv["mode"] = mode;
  kv["out_dir"] = out_dir;
  kv["threads"] = std::to_string(threads);

  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  return out.str();
}

CrossSection RunConfig::make_section() const {
  if (section == "unit_disc") return CrossSection::unit_disc();
  if (section == "ellipse") return CrossSection::ellipse(ellipse_rx, ellipse_ry);
  if (section == "rectangle")
    return CrossSection::rectangle(rect_width, rect_height);
  if (section == "polygon") {
    if (polygon_xy.size() < 6 || polygon_xy.size() % 2 != 0)
      throw std::invalid_argument(
          "config: polygon needs an even list of at least 6 coordinates");
    std::vector<Eigen::Vector2d> verts;
    for (size_t i = 0; i + 1 < polygon_xy.size(); i += 2)
      verts.emplace_back(polygon_xy[i], polygon_xy[i + 1]);
    return CrossSection::polygon(std::move(verts));
  }
  throw std::invalid_argument("config: unknown section '" + section + "'");
}

}  // namespace twistdn
