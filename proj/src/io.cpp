#include "chainid/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"

namespace chainid {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void add_block(std::vector<std::string>& names, std::vector<const Mat*>& blocks, const char* prefix, const Mat& m) {
  if (m.size() == 0) return;
  for (Eigen::Index c = 0; c < m.cols(); ++c) names.push_back(std::string(prefix) + "_" + std::to_string(c + 1));
  blocks.push_back(&m);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // no negative zero in output
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s0) {
  const std::string s = trim(s0);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = s.data();
  if (!s.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ParseError("not a number: '" + s0 + "'");
  return v;
}

void atomic_write(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path()))
    throw ValidationError("output directory does not exist: " + target.parent_path().string());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.good()) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_to_csv(const RobotModel& model, const TrajectoryDataset& ds, const Mat* ea) {
  (void)model;
  std::vector<std::string> names{"t"};
  std::vector<const Mat*> blocks;
  add_block(names, blocks, "qa", ds.qa);
  add_block(names, blocks, "qda", ds.qda);
  add_block(names, blocks, "u", ds.u);
  add_block(names, blocks, "qdda", ds.qdda);
  add_block(names, blocks, "q", ds.q);
  add_block(names, blocks, "qd", ds.qd);
  add_block(names, blocks, "qdd", ds.qdd);
  if (ea != nullptr) add_block(names, blocks, "ea", *ea);
  std::string out = "# stage: " + std::string(stage_name(ds.stage)) + "\n";
  for (size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  out += "\n";
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    out += format_double(ds.t[r]);
    for (const Mat* m : blocks)
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        out += ',';
        out += format_double((*m)(r, c));
      }
    out += '\n';
  }
  return out;
}

TrajectoryDataset dataset_from_csv(const RobotModel& model, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  Stage stage = Stage::Raw;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string tl = trim(line);
    if (tl.empty()) continue;
    if (tl[0] == '#') {
      const auto p = tl.find("stage:");
      if (p != std::string::npos) stage = stage_from_name(trim(tl.substr(p + 6)));
      continue;
    }
    if (header.empty()) {
      for (auto& h : split(tl, ',')) header.push_back(trim(h));
      continue;
    }
    const auto cells = split(tl, ',');
    if (cells.size() != header.size())
      throw ParseError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(cells.size()));
    std::vector<double> v;
    v.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        v.push_back(parse_double(c));
      } catch (const ParseError&) {
        throw ParseError("CSV line " + std::to_string(lineno) + ": not a number '" + c + "'");
      }
    }
    rows.push_back(std::move(v));
  }
  if (header.empty()) throw ParseError("CSV: missing header");
  const auto N = static_cast<Eigen::Index>(rows.size());
  auto column_of = [&](const std::string& name) -> int {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  auto block = [&](const char* prefix, int cols, bool required) -> Mat {
    std::vector<int> idx;
    for (int c = 0; c < cols; ++c) {
      const int k = column_of(std::string(prefix) + "_" + std::to_string(c + 1));
      if (k < 0) {
        if (required || c > 0) throw ParseError(std::string("CSV: missing column ") + prefix + "_" + std::to_string(c + 1));
        return Mat();
      }
      idx.push_back(k);
    }
    Mat m(N, cols);
    for (Eigen::Index r = 0; r < N; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(idx[static_cast<size_t>(c)])];
    return m;
  };
  const int tc = column_of("t");
  if (tc < 0) throw ParseError("CSV: missing column t");
  TrajectoryDataset ds;
  ds.t.resize(N);
  for (Eigen::Index r = 0; r < N; ++r) ds.t[r] = rows[static_cast<size_t>(r)][static_cast<size_t>(tc)];
  ds.qa = block("qa", model.n_a(), true);
  ds.qda = block("qda", model.n_a(), true);
  ds.u = block("u", model.n_a(), true);
  ds.qdda = block("qdda", model.n_a(), false);
  ds.q = block("q", model.n(), false);
  ds.qd = block("qd", model.n(), false);
  ds.qdd = block("qdd", model.n(), false);
  ds.stage = stage;
  if (stage >= Stage::Differentiated && ds.qdda.size() == 0) throw ParseError("CSV: stage requires qdda columns");
  if (stage >= Stage::Lifted && !ds.lifted()) throw ParseError("CSV: stage requires q, qd, qdd columns");
  ds.validate(model);
  return ds;
}

TrajectoryDataset load_dataset(const RobotModel& model, const std::string& path) {
  return dataset_from_csv(model, read_file(path));
}

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

Vec json_vec(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_string())
      v[static_cast<Eigen::Index>(i)] = parse_double(j[i].get<std::string>());
    else
      v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat json_mat(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("expected an array of rows");
  if (j.empty()) return Mat();
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (size_t r = 0; r < j.size(); ++r) {
    const Vec row = json_vec(j[r]);
    if (row.size() != m.cols()) throw ParseError("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Vec theta_from_json(const nlohmann::json& doc, int n_params) {
  Vec th;
  try {
    if (doc.is_array())
      th = json_vec(doc);
    else if (doc.is_object() && doc.contains("theta0"))
      th = json_vec(doc["theta0"]);
    else if (doc.is_object() && doc.contains("theta"))
      th = json_vec(doc["theta"]);
    else
      throw ParseError("parameter file: expected an array or a 'theta' key");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("parameter file: ") + e.what());
  }
  if (th.size() != n_params)
    throw ValidationError("parameter file has " + std::to_string(th.size()) + " entries, model needs " +
                          std::to_string(n_params));
  return th;
}

Vec load_theta(const std::string& path, int n_params) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
  return theta_from_json(doc, n_params);
}

nlohmann::json maps_to_json(const RegroupingMaps& maps) {
  return {{"n_params", maps.n_params}, {"idx_b", maps.idx_b},   {"idx_d", maps.idx_d},
          {"idx_fixed", maps.idx_fixed}, {"free_index", maps.free_index()}, {"Kd", mat_json(maps.Kd)}};
}

RegroupingMaps maps_from_json(const nlohmann::json& j) {
  RegroupingMaps m;
  try {
    m.n_params = j.at("n_params").get<int>();
    m.idx_b = j.at("idx_b").get<std::vector<int>>();
    m.idx_d = j.at("idx_d").get<std::vector<int>>();
    m.idx_fixed = j.at("idx_fixed").get<std::vector<int>>();
    m.Kd = json_mat(j.at("Kd"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("maps: ") + e.what());
  }
  if (m.Kd.size() == 0) m.Kd = Mat::Zero(m.n_id(), m.n_d());
  return m;
}

nlohmann::json result_to_json(const IdentificationResult& res, const RegroupingMaps& maps) {
  nlohmann::json report = nlohmann::json::array();
  for (const auto& l : res.consistency.links)
    report.push_back({{"link", l.link}, {"ok", l.ok}, {"min_eigenvalue", l.min_eigenvalue}, {"violation", l.violation}});
  return {{"pi0", vec_json(res.pi0)},
          {"theta_d0", vec_json(res.theta_d0)},
          {"theta0", vec_json(res.theta0.vector())},
          {"maps", maps_to_json(maps)},
          {"residual_rms", vec_json(res.residual_rms)},
          {"joint_weights", vec_json(res.joint_weights)},
          {"objective", res.objective},
          {"cond", res.cond},
          {"irwls_iterations", res.irwls_iterations},
          {"restart_objectives", res.restart_objectives},
          {"consistency", {{"ok", res.consistency.ok}, {"links", report}}}};
}

ReferenceTrajectory parse_reference(const RobotModel& model, const std::string& spec) {
  const int na = model.n_a();
  if (spec.rfind("sine", 0) != 0) {
    if (!std::filesystem::exists(spec)) throw ValidationError("reference '" + spec + "' is neither a sine spec nor a file");
    try {
      auto doc = nlohmann::json::parse(read_file(spec));
      ReferenceTrajectory r = reference_from_json(doc.contains("reference") ? doc["reference"] : doc);
      if (r.n_a() != na) throw ValidationError("reference file joint count does not match the model");
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("reference file '" + spec + "': " + e.what());
    }
  }
  auto per_joint = [&](const std::string& v, const char* key) {
    const auto parts = split(v, '/');
    if (parts.size() != 1 && static_cast<int>(parts.size()) != na)
      throw ValidationError(std::string("sine ") + key +
                            (na == 1 ? ": need 1 value" : ": need 1 or " + std::to_string(na) + " values"));
    Vec out(na);
    for (int i = 0; i < na; ++i) out[i] = parse_double(parts[parts.size() == 1 ? 0 : static_cast<size_t>(i)]);
    return out;
  };
  std::optional<Vec> amp, freq, maxvel, phase, offset;
  const auto colon = spec.find(':');
  if (colon != std::string::npos && colon + 1 < spec.size()) {
    for (const auto& kv : split(spec.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("sine spec: expected key=value, got '" + kv + "'");
      const std::string key = trim(kv.substr(0, eq));
      const std::string val = kv.substr(eq + 1);
      if (key == "amp") amp = per_joint(val, "amp");
      else if (key == "freq") freq = per_joint(val, "freq");
      else if (key == "maxvel") maxvel = per_joint(val, "maxvel");
      else if (key == "phase") phase = per_joint(val, "phase");
      else if (key == "offset") offset = per_joint(val, "offset");
      else throw ValidationError("sine spec: unknown key '" + key + "'");
    }
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  ReferenceTrajectory r;
  r.kind = ReferenceTrajectory::Kind::Sine;
  if (maxvel) {
    if (amp && freq) throw ValidationError("sine spec: give at most two of amp, freq, maxvel");
    if (amp) {
      freq = Vec(na);
      for (int i = 0; i < na; ++i) (*freq)[i] = (*maxvel)[i] / (kTwoPi * (*amp)[i]);
    } else {
      if (!freq) freq = Vec::Constant(na, 0.5);
      amp = Vec(na);
      for (int i = 0; i < na; ++i) (*amp)[i] = (*maxvel)[i] / (kTwoPi * (*freq)[i]);
    }
  }
  r.amp = amp ? *amp : Vec::Constant(na, 0.5);
  r.freq = freq ? *freq : Vec::Constant(na, 0.5);
  r.phase = phase ? *phase : Vec::Zero(na);
  r.offset = offset ? *offset : model.select_actuated(assembled_home(model));
  for (int i = 0; i < na; ++i)
    if (!(r.freq[i] > 0.0) || !std::isfinite(r.amp[i])) throw ValidationError("sine spec: frequency must be positive");
  return r;
}

nlohmann::json reference_to_json(const ReferenceTrajectory& ref) {
  if (ref.kind == ReferenceTrajectory::Kind::Sine)
    return {{"kind", "sine"}, {"amp", vec_json(ref.amp)}, {"freq", vec_json(ref.freq)},
            {"phase", vec_json(ref.phase)}, {"offset", vec_json(ref.offset)}};
  return {{"kind", "fourier"}, {"base_freq", ref.base_freq}, {"offset", vec_json(ref.offset)},
          {"a", mat_json(ref.a)}, {"b", mat_json(ref.b)}};
}

ReferenceTrajectory reference_from_json(const nlohmann::json& j) {
  ReferenceTrajectory r;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    r.offset = json_vec(j.at("offset"));
    if (kind == "sine") {
      r.kind = ReferenceTrajectory::Kind::Sine;
      r.amp = json_vec(j.at("amp"));
      r.freq = json_vec(j.at("freq"));
      r.phase = json_vec(j.at("phase"));
    } else if (kind == "fourier") {
      r.kind = ReferenceTrajectory::Kind::Fourier;
      r.base_freq = j.at("base_freq").get<double>();
      r.a = json_mat(j.at("a"));
      r.b = json_mat(j.at("b"));
    } else {
      throw ParseError("reference kind must be sine or fourier");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("reference: ") + e.what());
  }
  return r;
}

namespace {

void dump_into(const nlohmann::json& j, std::string& out, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // nlohmann objects iterate in key order
        if (!first) out += ",\n";
        first = false;
        out += pad_in + nlohmann::json(it.key()).dump() + ": ";
        dump_into(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      if (scalar) {
        out += "[";
        for (size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump_into(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad_in;
        dump_into(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : nlohmann::json(format_double(v)).dump();
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j) {
  std::string out;
  dump_into(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace chainid
