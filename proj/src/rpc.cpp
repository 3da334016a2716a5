#include "satnerf/rpc.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace satnerf {

double rpc_poly_eval(const std::array<double, 20>& c, double l, double p,
                     double h) {
  return c[0] + c[1] * l + c[2] * p + c[3] * h + c[4] * l * p + c[5] * l * h +
         c[6] * p * h + c[7] * l * l + c[8] * p * p + c[9] * h * h +
         c[10] * p * l * h + c[11] * l * l * l + c[12] * l * p * p +
         c[13] * l * h * h + c[14] * l * l * p + c[15] * p * p * p +
         c[16] * p * h * h + c[17] * l * l * h + c[18] * p * p * h +
         c[19] * h * h * h;
}

namespace {

struct NormalizedPixel {
  double row_n, col_n;
};

NormalizedPixel project_normalized(const RpcModel& m, double l, double p,
                                   double h) {
  const double dl = rpc_poly_eval(m.line_den, l, p, h);
  const double ds = rpc_poly_eval(m.samp_den, l, p, h);
  if (std::abs(dl) < 1e-12 || std::abs(ds) < 1e-12)
    throw DenominatorNearZero("rpc_project: denominator near zero");
  return {rpc_poly_eval(m.line_num, l, p, h) / dl,
          rpc_poly_eval(m.samp_num, l, p, h) / ds};
}

const char* const kScalarKeys[] = {"LINE_OFF", "LINE_SCALE", "SAMP_OFF",
                                   "SAMP_SCALE", "LAT_OFF", "LAT_SCALE",
                                   "LON_OFF", "LON_SCALE", "ALT_OFF",
                                   "ALT_SCALE"};
const char* const kCoeffKeys[] = {"LINE_NUM_COEFF", "LINE_DEN_COEFF",
                                  "SAMP_NUM_COEFF", "SAMP_DEN_COEFF"};
const char* const kInvCoeffKeys[] = {"LAT_NUM_COEFF", "LAT_DEN_COEFF",
                                     "LON_NUM_COEFF", "LON_DEN_COEFF"};

void assign_scalars(RpcModel& m, const std::map<std::string, double>& kv) {
  auto get = [&](const char* k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw MissingField(k);
    return it->second;
  };
  m.row_off = get("LINE_OFF");
  m.row_scale = get("LINE_SCALE");
  m.col_off = get("SAMP_OFF");
  m.col_scale = get("SAMP_SCALE");
  m.lat_off = get("LAT_OFF");
  m.lat_scale = get("LAT_SCALE");
  m.lon_off = get("LON_OFF");
  m.lon_scale = get("LON_SCALE");
  m.alt_off = get("ALT_OFF");
  m.alt_scale = get("ALT_SCALE");
}

void validate(const RpcModel& m) {
  if (m.lat_scale <= 0 || m.lon_scale <= 0 || m.alt_scale <= 0 ||
      m.row_scale <= 0 || m.col_scale <= 0)
    throw RpcParseError("rpc: scales must be positive");
  if (m.line_den[0] == 0.0 || m.samp_den[0] == 0.0)
    throw RpcParseError("rpc: denominator constant term is zero");
}

std::array<double, 20>* coeff_slot(RpcModel& m, const std::string& group) {
  if (group == "LINE_NUM_COEFF") return &m.line_num;
  if (group == "LINE_DEN_COEFF") return &m.line_den;
  if (group == "SAMP_NUM_COEFF") return &m.samp_num;
  if (group == "SAMP_DEN_COEFF") return &m.samp_den;
  if (group == "LAT_NUM_COEFF") return &m.inv_lat_num;
  if (group == "LAT_DEN_COEFF") return &m.inv_lat_den;
  if (group == "LON_NUM_COEFF") return &m.inv_lon_num;
  if (group == "LON_DEN_COEFF") return &m.inv_lon_den;
  return nullptr;
}

}  // namespace

RpcModel parse_rpc_text(const std::string& blob) {
  RpcModel m;
  std::map<std::string, double> scalars;
  std::map<std::string, std::array<bool, 21>> seen_coeff;

  std::istringstream in(blob);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments and whitespace-only lines
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw MalformedNumber(lineno, "expected KEY: value");
    std::string key = line.substr(a, colon - a);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
      key.pop_back();
    const std::string valstr = line.substr(colon + 1);
    double value = 0;
    {
      const char* b = valstr.c_str();
      char* end = nullptr;
      value = std::strtod(b, &end);
      if (end == b) throw MalformedNumber(lineno, "bad number for " + key);
      for (const char* q = end; *q; ++q)
        if (*q != ' ' && *q != '\t' && *q != '\r')
          throw MalformedNumber(lineno, "trailing junk after " + key);
    }

    // coefficient keys end in _<index>
    const size_t us = key.find_last_of('_');
    bool handled = false;
    if (us != std::string::npos) {
      const std::string group = key.substr(0, us);
      if (coeff_slot(m, group)) {
        int idx = 0;
        auto [p, ec] = std::from_chars(key.data() + us + 1,
                                       key.data() + key.size(), idx);
        if (ec != std::errc() || p != key.data() + key.size())
          throw MalformedNumber(lineno, "bad coefficient index in " + key);
        if (idx < 1 || idx > 20)
          throw BadCoefficientCount("coefficient index out of range: " + key);
        auto& seen = seen_coeff[group];
        if (seen[idx])
          throw BadCoefficientCount("duplicate coefficient: " + key);
        seen[idx] = true;
        (*coeff_slot(m, group))[idx - 1] = value;
        handled = true;
      }
    }
    if (!handled) {
      bool known = false;
      for (const char* k : kScalarKeys) known |= key == k;
      if (!known) throw MalformedNumber(lineno, "unknown key: " + key);
      if (scalars.count(key))
        throw MalformedNumber(lineno, "duplicate key: " + key);
      scalars[key] = value;
    }
  }

  assign_scalars(m, scalars);
  for (const char* group : kCoeffKeys) {
    auto it = seen_coeff.find(group);
    int count = 0;
    if (it != seen_coeff.end())
      for (int i = 1; i <= 20; ++i) count += it->second[i];
    if (count != 20)
      throw BadCoefficientCount(std::string(group) + ": expected 20 got " +
                                std::to_string(count));
  }
  int inv_groups = 0;
  for (const char* group : kInvCoeffKeys) {
    auto it = seen_coeff.find(group);
    int count = 0;
    if (it != seen_coeff.end())
      for (int i = 1; i <= 20; ++i) count += it->second[i];
    if (count == 20)
      ++inv_groups;
    else if (count != 0)
      throw BadCoefficientCount(std::string(group) + ": expected 0 or 20 got " +
                                std::to_string(count));
  }
  if (inv_groups == 4)
    m.has_inverse = true;
  else if (inv_groups != 0)
    throw BadCoefficientCount("inverse coefficients must be all-or-none");
  validate(m);
  return m;
}

namespace {

void append_kv(std::string& out, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s: %.17g\n", key, v);
  out += buf;
}

void append_coeffs(std::string& out, const char* group,
                   const std::array<double, 20>& c) {
  char buf[80];
  for (int i = 0; i < 20; ++i) {
    std::snprintf(buf, sizeof buf, "%s_%d: %.17g\n", group, i + 1, c[i]);
    out += buf;
  }
}

}  // namespace

std::string serialize_rpc_text(const RpcModel& m) {
  std::string out;
  append_kv(out, "LINE_OFF", m.row_off);
  append_kv(out, "LINE_SCALE", m.row_scale);
  append_kv(out, "SAMP_OFF", m.col_off);
  append_kv(out, "SAMP_SCALE", m.col_scale);
  append_kv(out, "LAT_OFF", m.lat_off);
  append_kv(out, "LAT_SCALE", m.lat_scale);
  append_kv(out, "LON_OFF", m.lon_off);
  append_kv(out, "LON_SCALE", m.lon_scale);
  append_kv(out, "ALT_OFF", m.alt_off);
  append_kv(out, "ALT_SCALE", m.alt_scale);
  append_coeffs(out, "LINE_NUM_COEFF", m.line_num);
  append_coeffs(out, "LINE_DEN_COEFF", m.line_den);
  append_coeffs(out, "SAMP_NUM_COEFF", m.samp_num);
  append_coeffs(out, "SAMP_DEN_COEFF", m.samp_den);
  if (m.has_inverse) {
    append_coeffs(out, "LAT_NUM_COEFF", m.inv_lat_num);
    append_coeffs(out, "LAT_DEN_COEFF", m.inv_lat_den);
    append_coeffs(out, "LON_NUM_COEFF", m.inv_lon_num);
    append_coeffs(out, "LON_DEN_COEFF", m.inv_lon_den);
  }
  return out;
}

RpcModel parse_rpc_json(const std::string& json_blob) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_blob);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedNumber(0, e.what());
  }
  RpcModel m;
  std::map<std::string, double> scalars;
  for (const char* k : kScalarKeys) {
    if (!j.contains(k)) throw MissingField(k);
    if (!j[k].is_number()) throw MalformedNumber(0, std::string(k));
    scalars[k] = j[k].get<double>();
  }
  auto read_coeffs = [&](const char* k, std::array<double, 20>& dst,
                         bool required) {
    if (!j.contains(k)) {
      if (required) throw MissingField(k);
      return false;
    }
    const auto& arr = j[k];
    if (!arr.is_array() || arr.size() != 20)
      throw BadCoefficientCount(std::string(k) + ": expected 20 got " +
                                std::to_string(arr.is_array() ? arr.size() : 0));
    for (int i = 0; i < 20; ++i) {
      if (!arr[i].is_number()) throw MalformedNumber(0, std::string(k));
      dst[i] = arr[i].get<double>();
    }
    return true;
  };
  assign_scalars(m, scalars);
  read_coeffs("LINE_NUM_COEFF", m.line_num, true);
  read_coeffs("LINE_DEN_COEFF", m.line_den, true);
  read_coeffs("SAMP_NUM_COEFF", m.samp_num, true);
  read_coeffs("SAMP_DEN_COEFF", m.samp_den, true);
  const bool a = read_coeffs("LAT_NUM_COEFF", m.inv_lat_num, false);
  const bool b = read_coeffs("LAT_DEN_COEFF", m.inv_lat_den, false);
  const bool c = read_coeffs("LON_NUM_COEFF", m.inv_lon_num, false);
  const bool d = read_coeffs("LON_DEN_COEFF", m.inv_lon_den, false);
  if (a != b || b != c || c != d)
    throw BadCoefficientCount("inverse coefficients must be all-or-none");
  m.has_inverse = a;
  validate(m);
  return m;
}

std::string serialize_rpc_json(const RpcModel& m) {
  nlohmann::json j;
  j["LINE_OFF"] = m.row_off;
  j["LINE_SCALE"] = m.row_scale;
  j["SAMP_OFF"] = m.col_off;
  j["SAMP_SCALE"] = m.col_scale;
  j["LAT_OFF"] = m.lat_off;
  j["LAT_SCALE"] = m.lat_scale;
  j["LON_OFF"] = m.lon_off;
  j["LON_SCALE"] = m.lon_scale;
  j["ALT_OFF"] = m.alt_off;
  j["ALT_SCALE"] = m.alt_scale;
  j["LINE_NUM_COEFF"] = m.line_num;
  j["LINE_DEN_COEFF"] = m.line_den;
  j["SAMP_NUM_COEFF"] = m.samp_num;
  j["SAMP_DEN_COEFF"] = m.samp_den;
  if (m.has_inverse) {
    j["LAT_NUM_COEFF"] = m.inv_lat_num;
    j["LAT_DEN_COEFF"] = m.inv_lat_den;
    j["LON_NUM_COEFF"] = m.inv_lon_num;
    j["LON_DEN_COEFF"] = m.inv_lon_den;
  }
  return j.dump(2);
}

PixelCoord rpc_project(const RpcModel& m, const GeodeticPoint& g) {
  const double l = (g.lon_deg - m.lon_off) / m.lon_scale;
  const double p = (g.lat_deg - m.lat_off) / m.lat_scale;
  const double h = (g.alt_m - m.alt_off) / m.alt_scale;
  const auto [rn, cn] = project_normalized(m, l, p, h);
  return {rn * m.row_scale + m.row_off, cn * m.col_scale + m.col_off};
}

GeodeticPoint rpc_localize(const RpcModel& m, const PixelCoord& px,
                           double alt_m) {
  const double rn = (px.row - m.row_off) / m.row_scale;
  const double cn = (px.col - m.col_off) / m.col_scale;
  const double h = (alt_m - m.alt_off) / m.alt_scale;

  double l = 0, p = 0;
  if (m.has_inverse) {
    const double dlat = rpc_poly_eval(m.inv_lat_den, cn, rn, h);
    const double dlon = rpc_poly_eval(m.inv_lon_den, cn, rn, h);
    if (std::abs(dlat) > 1e-12 && std::abs(dlon) > 1e-12) {
      const double lat = rpc_poly_eval(m.inv_lat_num, cn, rn, h) / dlat;
      const double lon = rpc_poly_eval(m.inv_lon_num, cn, rn, h) / dlon;
      p = lat;
      l = lon;
    }
  }

  constexpr double kTol = 1e-10;
  constexpr double kStep = 1e-6;
  for (int it = 0; it < 20; ++it) {
    const auto f = project_normalized(m, l, p, h);
    const double er = f.row_n - rn;
    const double ec = f.col_n - cn;
    if (std::abs(er) < kTol && std::abs(ec) < kTol)
      return {p * m.lat_scale + m.lat_off, l * m.lon_scale + m.lon_off, alt_m};

    const auto fl = project_normalized(m, l + kStep, p, h);
    const auto fp = project_normalized(m, l, p + kStep, h);
    const double j00 = (fl.row_n - f.row_n) / kStep;  // d row / d l
    const double j01 = (fp.row_n - f.row_n) / kStep;  // d row / d p
    const double j10 = (fl.col_n - f.col_n) / kStep;
    const double j11 = (fp.col_n - f.col_n) / kStep;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-15)
      throw NonConvergence("rpc_localize: singular jacobian");
    l -= (j11 * er - j01 * ec) / det;
    p -= (-j10 * er + j00 * ec) / det;
  }
  throw NonConvergence("rpc_localize: no convergence in 20 iterations");
}

}  // namespace satnerf
