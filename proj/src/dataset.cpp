#include "scatlab/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json_util.hpp"
#include "scatlab/forward.hpp"

namespace scatlab {

namespace fs = std::filesystem;
using detail::json;

namespace detail {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, long line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("not a number: '" + token + "'", line);
  return v;
}

}  // namespace detail

namespace {

std::string kp_name(const char* stem, int k, int p) {
  return std::string(stem) + "_k" + std::to_string(k) + "_p" + std::to_string(p) + ".csv";
}

void write_field_csv(const fs::path& path, const RVec& angles, const CVec& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "rx_angle_deg,re_vpm,im_vpm\n";
  for (Eigen::Index i = 0; i < field.size(); ++i)
    os << detail::format_double(angles[i]) << ',' << detail::format_double(field[i].real()) << ','
       << detail::format_double(field[i].imag()) << '\n';
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

void read_field_csv(const fs::path& path, RVec& angles, CVec& field) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(is, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "rx_angle_deg,re_vpm,im_vpm")
    throw ParseError("unexpected header in " + path.string(), 1);
  std::vector<double> a, re, im;
  long n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 3) throw ParseError("expected 3 columns in " + path.string(), n);
    a.push_back(detail::parse_double(cols[0], n));
    re.push_back(detail::parse_double(cols[1], n));
    im.push_back(detail::parse_double(cols[2], n));
  }
  angles = Eigen::Map<RVec>(a.data(), Eigen::Index(a.size()));
  field.resize(Eigen::Index(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) field[Eigen::Index(i)] = {re[i], im[i]};
}

}  // namespace

bool DatasetBundle::has_incident() const {
  if (incident.size() == 0) return false;
  for (const auto& v : incident)
    if (v.size() == 0) return false;
  return true;
}

void DatasetBundle::validate() const {
  const int K = frequencies();
  const int P = transmitters();
  if (K == 0 || P == 0) throw DataError("dataset has no frequencies or transmitters");
  if (scattered.frequencies() != K || scattered.transmitters() != P || rx_angles_deg.frequencies() != K ||
      rx_angles_deg.transmitters() != P)
    throw DataError("dataset record grid does not match K x P from the manifest");
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) {
      const std::string where = " at (k=" + std::to_string(k) + ", p=" + std::to_string(p) + ")";
      const RVec& a = rx_angles_deg(k, p);
      if (a.size() == 0 || a.size() != scattered(k, p).size()) throw DataError("record count mismatch" + where);
      for (Eigen::Index i = 1; i < a.size(); ++i)
        if (!(a[i] > a[i - 1])) throw DataError("receiver angles not strictly increasing" + where);
      if (!scattered(k, p).allFinite()) throw DataError("non-finite scattered field" + where);
      if (has_incident() && incident(k, p).size() != a.size()) throw DataError("incident record count mismatch" + where);
    }
  if (truth && truth_grid && !truth->matches(*truth_grid)) throw DataError("ground truth map does not match its grid");
}

SensorArray DatasetBundle::sensors() const {
  validate();
  std::string offending;
  bool shared = true;
  for (int p = 0; p < transmitters(); ++p) {
    const RVec& ref = rx_angles_deg(0, p);
    for (int k = 1; k < frequencies(); ++k) {
      const RVec& a = rx_angles_deg(k, p);
      if (a.size() != ref.size() || (a - ref).cwiseAbs().maxCoeff() > 1e-9)
        offending += " (k=" + std::to_string(k) + ", p=" + std::to_string(p) + ")";
    }
    const RVec& first = rx_angles_deg(0, 0);
    if (ref.size() != first.size() || (ref - first).cwiseAbs().maxCoeff() > 1e-9) shared = false;
  }
  if (!offending.empty())
    throw DataError("receiver angles differ from k=0 at" + offending +
                    "; every frequency must record the same receivers");
  if (shared) {
    const RVec& ref = rx_angles_deg(0, 0);
    return circular_array(sensor_radius, tx_angles_deg, std::vector<double>(ref.data(), ref.data() + ref.size()));
  }
  std::vector<std::vector<double>> rx;
  for (int p = 0; p < transmitters(); ++p) {
    const RVec& a = rx_angles_deg(0, p);
    if (a.size() != rx_angles_deg(0, 0).size())
      throw DataError("transmitter " + std::to_string(p) + " records a different number of receivers than transmitter 0");
    rx.emplace_back(a.data(), a.data() + a.size());
  }
  return per_transmitter_array(sensor_radius, tx_angles_deg, rx);
}

void export_bundle(const DatasetBundle& b, const std::string& dir) {
  b.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const int K = b.frequencies();
  const int P = b.transmitters();

  json m;
  m["schema"] = "scatlab-dataset/1";
  m["convention"] = kConventionTag;
  m["units"] = {{"field", "V/m"}, {"angle", "deg"}, {"frequency", "Hz"}, {"length", "m"}};
  m["frequencies_hz"] = b.frequencies_hz;
  m["tx_angles_deg"] = b.tx_angles_deg;
  m["sensor_radius_m"] = b.sensor_radius;
  m["K"] = K;
  m["P"] = P;
  json q = json::array();
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) q.push_back(b.scattered(k, p).size());
  m["Q"] = q;
  m["provenance"] = b.provenance;
  m["scattered_from_total"] = b.scattered_from_total;
  m["has_incident"] = b.has_incident();
  if (b.truth_scene) m["truth_scene"] = detail::to_json(*b.truth_scene);
  if (b.truth_grid) m["truth_grid"] = detail::to_json(*b.truth_grid);
  m["has_truth_map"] = b.truth.has_value();

  {
    std::ofstream os(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write manifest in '" + dir + "'");
    os << m.dump(2) << '\n';
  }
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < P; ++p) {
      write_field_csv(fs::path(dir) / kp_name("fields", k, p), b.rx_angles_deg(k, p), b.scattered(k, p));
      if (b.has_incident())
        write_field_csv(fs::path(dir) / kp_name("incident", k, p), b.rx_angles_deg(k, p), b.incident(k, p));
    }
  if (b.truth) {
    std::ofstream os(fs::path(dir) / "truth_chi.csv", std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write truth map in '" + dir + "'");
    os << "index,re_chi,im_chi\n";
    for (int i = 0; i < b.truth->size(); ++i)
      os << i << ',' << detail::format_double((*b.truth)[i].real()) << ','
         << detail::format_double((*b.truth)[i].imag()) << '\n';
  }
}

DatasetBundle import_bundle(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IoError("no manifest.json in '" + dir + "'");
  DatasetBundle b;
  try {
    const json m = json::parse(is);
    if (m.at("schema") != "scatlab-dataset/1") throw ParseError("unsupported dataset schema in " + dir);
    if (m.at("convention") != kConventionTag)
      throw DataError("dataset convention '" + m.at("convention").get<std::string>() + "' differs from '" +
                      kConventionTag + "'");
    if (m.at("units").at("field") != "V/m") throw DataError("dataset field units must be V/m");
    b.frequencies_hz = m.at("frequencies_hz").get<std::vector<double>>();
    b.tx_angles_deg = m.at("tx_angles_deg").get<std::vector<double>>();
    b.sensor_radius = m.at("sensor_radius_m");
    b.provenance = m.value("provenance", std::string());
    b.scattered_from_total = m.value("scattered_from_total", false);
    const int K = m.at("K");
    const int P = m.at("P");
    if (K != b.frequencies() || P != b.transmitters()) throw DataError("manifest K/P disagree with its lists");
    const auto q = m.at("Q").get<std::vector<long>>();
    if (q.size() != std::size_t(K) * P) throw DataError("manifest Q list must have K*P entries");
    const bool has_inc = m.value("has_incident", false);
    b.rx_angles_deg = KPArray<RVec>(K, P);
    b.scattered = KPArray<CVec>(K, P);
    if (has_inc) b.incident = KPArray<CVec>(K, P);
    for (int k = 0; k < K; ++k)
      for (int p = 0; p < P; ++p) {
        read_field_csv(fs::path(dir) / kp_name("fields", k, p), b.rx_angles_deg(k, p), b.scattered(k, p));
        if (b.scattered(k, p).size() != q[std::size_t(k) * P + p])
          throw DataError("manifest Q does not match the row count of " + kp_name("fields", k, p));
        if (has_inc) {
          RVec a;
          read_field_csv(fs::path(dir) / kp_name("incident", k, p), a, b.incident(k, p));
          if (a != b.rx_angles_deg(k, p)) throw DataError("incident angles differ in " + kp_name("incident", k, p));
        }
      }
    if (m.contains("truth_scene")) b.truth_scene = detail::scene_from_json(m["truth_scene"], "truth_scene");
    if (m.contains("truth_grid")) b.truth_grid = detail::grid_from_json(m["truth_grid"]);
    if (m.value("has_truth_map", false)) {
      if (!b.truth_grid) throw DataError("truth map present without truth_grid");
      std::ifstream ts(fs::path(dir) / "truth_chi.csv");
      if (!ts) throw IoError("missing truth_chi.csv in '" + dir + "'");
      std::string line;
      std::getline(ts, line);
      CVec v(b.truth_grid->size());
      long n = 1;
      int count = 0;
      while (std::getline(ts, line)) {
        ++n;
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 3) throw ParseError("expected 3 columns in truth_chi.csv", n);
        const long i = std::lround(detail::parse_double(cols[0], n));
        if (i < 0 || i >= v.size()) throw ParseError("cell index out of range in truth_chi.csv", n);
        v[i] = {detail::parse_double(cols[1], n), detail::parse_double(cols[2], n)};
        ++count;
      }
      if (count != v.size()) throw DataError("truth_chi.csv row count does not match the grid");
      b.truth = ContrastMap(b.truth_grid->nx(), b.truth_grid->ny(), v);
    }
  } catch (const json::exception& e) {
    throw ParseError("malformed manifest in '" + dir + "': " + e.what());
  }
  b.validate();
  return b;
}

FresnelColumns FresnelColumns::parse(const std::string& spec) {
  FresnelColumns c;
  const std::map<std::string, int FresnelColumns::*> fields{
      {"tx", &FresnelColumns::tx_deg},         {"rx", &FresnelColumns::rx_deg},
      {"freq", &FresnelColumns::freq_ghz},     {"re_total", &FresnelColumns::re_total},
      {"im_total", &FresnelColumns::im_total}, {"re_inc", &FresnelColumns::re_inc},
      {"im_inc", &FresnelColumns::im_inc}};
  for (const auto& item : split(spec, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("column map entry '" + item + "' must be name=index");
    const auto it = fields.find(item.substr(0, eq));
    if (it == fields.end()) throw ConfigError("unknown column name '" + item.substr(0, eq) + "'");
    int idx = -1;
    const std::string v = item.substr(eq + 1);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), idx);
    if (ec != std::errc() || ptr != v.data() + v.size() || idx < 0)
      throw ConfigError("column index '" + v + "' must be a non-negative integer");
    c.*(it->second) = idx;
  }
  return c;
}

DatasetBundle import_fresnel(const std::string& path, const FresnelOptions& options) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  const FresnelColumns& c = options.columns;
  const int needed = 1 + std::max({c.tx_deg, c.rx_deg, c.freq_ghz, c.re_total, c.im_total, c.re_inc, c.im_inc});

  struct Row {
    double rx;
    cplx total;
    cplx inc;
  };
  // Keys rounded so that text round-off cannot split one group into two.
  auto key = [](double v, double q) { return std::llround(v / q); };
  std::map<long long, double> freq_value;
  std::map<long long, double> tx_value;
  std::map<std::pair<long long, long long>, std::vector<Row>> groups;

  std::string line;
  long n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = tokens(line);
    if (t.empty()) continue;
    const char first = t[0][0];
    if (first == '#' || first == '%' || first == '!') continue;
    double probe = 0.0;
    const auto [ptr, ec] = std::from_chars(t[0].data() + (first == '+'), t[0].data() + t[0].size(), probe);
    if (ec != std::errc() || ptr != t[0].data() + t[0].size()) continue;  // header line
    if (int(t.size()) < needed)
      throw ParseError("expected at least " + std::to_string(needed) + " columns, found " + std::to_string(t.size()), n);
    auto col = [&](int i) { return detail::parse_double(t[std::size_t(i)], n); };
    const double tx = col(c.tx_deg), rx = col(c.rx_deg), ghz = col(c.freq_ghz);
    const cplx total{col(c.re_total), col(c.im_total)};
    const cplx inc{col(c.re_inc), col(c.im_inc)};
    if (!std::isfinite(tx) || !std::isfinite(rx) || !std::isfinite(ghz) || !std::isfinite(total.real()) ||
        !std::isfinite(total.imag()) || !std::isfinite(inc.real()) || !std::isfinite(inc.imag()))
      throw ParseError("non-finite value in record", n);
    if (!(ghz > 0.0)) throw ParseError("frequency must be positive", n);
    const long long fk = key(ghz, 1e-6), tk = key(tx, 1e-6);
    freq_value.emplace(fk, ghz * 1e9);
    tx_value.emplace(tk, tx);
    groups[{fk, tk}].push_back({rx, total, inc});
  }
  if (groups.empty()) throw ParseError("no data records in '" + path + "'");

  DatasetBundle b;
  b.provenance = "import_fresnel:" + fs::path(path).filename().string();
  b.scattered_from_total = true;
  b.sensor_radius = options.sensor_radius;
  for (const auto& [k, hz] : freq_value) b.frequencies_hz.push_back(hz);
  for (const auto& [k, deg] : tx_value) b.tx_angles_deg.push_back(deg);
  const int K = b.frequencies(), P = b.transmitters();
  b.rx_angles_deg = KPArray<RVec>(K, P);
  b.scattered = KPArray<CVec>(K, P);
  b.incident = KPArray<CVec>(K, P);

  std::size_t expected = 0;
  for (const auto& [kp, rows] : groups) expected = std::max(expected, rows.size());
  std::string offending;
  int k = 0;
  for (const auto& [fk, hz] : freq_value) {
    int p = 0;
    for (const auto& [tk, deg] : tx_value) {
      const auto it = groups.find({fk, tk});
      const std::size_t count = it == groups.end() ? 0 : it->second.size();
      if (count != expected) {
        offending += " (k=" + std::to_string(k) + ", p=" + std::to_string(p) + ") with " + std::to_string(count) + ";";
      } else {
        auto rows = it->second;
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.rx < b.rx; });
        RVec a(Eigen::Index(rows.size()));
        CVec s(a.size()), inc(a.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (i > 0 && !(rows[i].rx > rows[i - 1].rx))
            throw ParseError("duplicate receiver angle " + detail::format_double(rows[i].rx) + " at (k=" +
                             std::to_string(k) + ", p=" + std::to_string(p) + ")");
          a[Eigen::Index(i)] = rows[i].rx;
          s[Eigen::Index(i)] = rows[i].total - rows[i].inc;
          inc[Eigen::Index(i)] = rows[i].inc;
        }
        b.rx_angles_deg(k, p) = std::move(a);
        b.scattered(k, p) = std::move(s);
        b.incident(k, p) = std::move(inc);
      }
      ++p;
    }
    ++k;
  }
  if (!offending.empty())
    throw ParseError("inconsistent record counts (expected " + std::to_string(expected) + " per (k, p)) at" +
                     offending);
  b.validate();
  return b;
}

void export_fresnel(const DatasetBundle& b, const std::string& path) {
  b.validate();
  if (!b.has_incident()) throw DataError("Fresnel layout needs incident fields");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path + "'");
  os << "# tx_deg rx_deg freq_ghz re_total im_total re_inc im_inc\n";
  for (int k = 0; k < b.frequencies(); ++k)
    for (int p = 0; p < b.transmitters(); ++p)
      for (Eigen::Index i = 0; i < b.scattered(k, p).size(); ++i) {
        const cplx inc = b.incident(k, p)[i];
        const cplx total = b.scattered(k, p)[i] + inc;
        os << detail::format_double(b.tx_angles_deg[std::size_t(p)]) << ' '
           << detail::format_double(b.rx_angles_deg(k, p)[i]) << ' '
           << detail::format_double(b.frequencies_hz[std::size_t(k)] * 1e-9) << ' '
           << detail::format_double(total.real()) << ' ' << detail::format_double(total.imag()) << ' '
           << detail::format_double(inc.real()) << ' ' << detail::format_double(inc.imag()) << '\n';
      }
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace scatlab
