#include "exitdim/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace exitdim {
namespace {

// ------------------------------------------------------------ binary plumbing

constexpr std::uint32_t kSpaceMagic = 0x53445845u;   // "EXDS" little-endian
constexpr std::uint32_t kKernelMagic = 0x4b445845u;  // "EXDK"
constexpr std::uint32_t kFormatVersion = 1;

struct BinWriter {
  std::ofstream f;
  std::string path;

  explicit BinWriter(const std::string& p) : f(p, std::ios::binary), path(p) {
    if (!f) throw InvalidArgument("cannot open for writing: " + p);
  }
  void raw(const void* data, std::size_t n) {
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <class T>
  void scalar(T v) {
    raw(&v, sizeof(T));
  }
  void str(const std::string& s) {
    scalar<std::uint64_t>(s.size());
    raw(s.data(), s.size());
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    scalar<std::uint64_t>(v.size());
    raw(v.data(), v.size() * sizeof(T));
  }
  void finish() {
    f.flush();
    if (!f) throw InvalidArgument("write failed: " + path);
  }
};

struct BinReader {
  std::ifstream f;
  std::string path;

  explicit BinReader(const std::string& p) : f(p, std::ios::binary), path(p) {
    if (!f) throw InvalidArgument("cannot open for reading: " + p);
  }
  void raw(void* data, std::size_t n) {
    f.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
      throw InvalidArgument("truncated snapshot: " + path);
  }
  template <class T>
  T scalar() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  std::string str() {
    auto n = scalar<std::uint64_t>();
    if (n > (1ull << 20)) throw InvalidArgument("corrupt snapshot (string size): " + path);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  template <class T>
  std::vector<T> vec() {
    auto n = scalar<std::uint64_t>();
    if (n > (1ull << 33)) throw InvalidArgument("corrupt snapshot (vector size): " + path);
    std::vector<T> v(n);
    raw(v.data(), n * sizeof(T));
    return v;
  }
};

// --------------------------------------------------------------- json helpers

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidArgument(std::string("missing json field: ") + key);
  return *it;
}

double num_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw InvalidArgument(std::string("json field not a number: ") + key);
  return v.get<double>();
}

void emit_string(const std::string& s, std::string& out) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;  // UTF-8 bytes pass through verbatim
        }
    }
  }
  out += '"';
}

void emit(const Json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  const std::string pad_in(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  switch (j.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += (j.get<bool>() ? "true" : "false"); break;
    case Json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case Json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) out += "null";
      else out += fmt_g17(v);
      break;
    }
    case Json::value_t::string: emit_string(j.get<std::string>(), out); break;
    case Json::value_t::array: {
      if (j.empty()) { out += "[]"; break; }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        emit(v, out, depth + 1);
      }
      out += '\n';
      out += pad;
      out += ']';
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) { out += "{}"; break; }
      out += "{\n";
      bool first = true;
      for (const auto& item : j.items()) {  // std::map order = sorted keys
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        emit_string(item.key(), out);
        out += ": ";
        emit(item.value(), out, depth + 1);
      }
      out += '\n';
      out += pad;
      out += '}';
      break;
    }
    default: throw InvalidArgument("unserializable json value (binary/discarded)");
  }
}

}  // namespace

// ------------------------------------------------------------ space snapshots

void write_space(const std::string& path, const FiniteSpace& s) {
  BinWriter w(path);
  w.scalar(kSpaceMagic);
  w.scalar(kFormatVersion);
  w.scalar<std::int32_t>(static_cast<std::int32_t>(s.kind));
  w.scalar<std::int32_t>(static_cast<std::int32_t>(s.metric));
  w.scalar<std::int32_t>(s.dim);
  w.scalar<std::int32_t>(s.stage);
  w.scalar<double>(s.total_mass);
  w.str(s.measure);
  w.vec(s.params);
  w.vec(s.coords);
  w.vec(s.weights);
  w.vec(s.diameters);
  w.vec(s.cell_param);
  w.finish();
}

FiniteSpace read_space(const std::string& path) {
  BinReader r(path);
  if (r.scalar<std::uint32_t>() != kSpaceMagic)
    throw InvalidArgument("not a space snapshot: " + path);
  if (r.scalar<std::uint32_t>() != kFormatVersion)
    throw InvalidArgument("unsupported snapshot version: " + path);
  FiniteSpace s;
  s.kind = static_cast<SpaceKind>(r.scalar<std::int32_t>());
  s.metric = static_cast<Metric>(r.scalar<std::int32_t>());
  s.dim = r.scalar<std::int32_t>();
  s.stage = r.scalar<std::int32_t>();
  s.total_mass = r.scalar<double>();
  s.measure = r.str();
  s.params = r.vec<double>();
  s.coords = r.vec<double>();
  s.weights = r.vec<double>();
  s.diameters = r.vec<double>();
  s.cell_param = r.vec<double>();
  const std::size_t n = s.weights.size();
  if (s.dim < 1 || s.dim > 2 || s.coords.size() != n * static_cast<std::size_t>(s.dim) ||
      s.diameters.size() != n || s.cell_param.size() != n)
    throw InvalidArgument("inconsistent space snapshot: " + path);
  return s;
}

// ----------------------------------------------------------- kernel snapshots

void write_kernel(const std::string& path, const WalkKernel& k) {
  BinWriter w(path);
  w.scalar(kKernelMagic);
  w.scalar(kFormatVersion);
  w.scalar<std::int32_t>(static_cast<std::int32_t>(k.kind));
  w.scalar<std::int32_t>(static_cast<std::int32_t>(k.metric));
  w.scalar<std::int32_t>(k.dim);
  w.scalar<std::int32_t>(k.space_points);
  w.scalar<double>(k.r);
  w.vec(k.states);
  w.vec(k.state_coords);
  w.vec(k.state_weights);
  w.vec(k.waiting);
  w.vec(k.stationary_density);
  std::vector<std::uint64_t> rp(k.row_ptr.begin(), k.row_ptr.end());
  w.vec(rp);
  w.vec(k.col);
  w.vec(k.val);
  w.finish();
}

WalkKernel read_kernel(const std::string& path) {
  BinReader r(path);
  if (r.scalar<std::uint32_t>() != kKernelMagic)
    throw InvalidArgument("not a kernel snapshot: " + path);
  if (r.scalar<std::uint32_t>() != kFormatVersion)
    throw InvalidArgument("unsupported snapshot version: " + path);
  WalkKernel k;
  k.kind = static_cast<KernelKind>(r.scalar<std::int32_t>());
  k.metric = static_cast<Metric>(r.scalar<std::int32_t>());
  k.dim = r.scalar<std::int32_t>();
  k.space_points = r.scalar<std::int32_t>();
  k.r = r.scalar<double>();
  k.states = r.vec<Id>();
  k.state_coords = r.vec<double>();
  k.state_weights = r.vec<double>();
  k.waiting = r.vec<double>();
  k.stationary_density = r.vec<double>();
  auto rp = r.vec<std::uint64_t>();
  k.row_ptr.assign(rp.begin(), rp.end());
  k.col = r.vec<Id>();
  k.val = r.vec<double>();
  const std::size_t m = k.states.size();
  bool ok = k.dim >= 1 && k.dim <= 2 &&
            k.state_coords.size() == m * static_cast<std::size_t>(k.dim) &&
            k.state_weights.size() == m && k.waiting.size() == m &&
            k.stationary_density.size() == m && k.row_ptr.size() == m + 1 &&
            k.col.size() == k.val.size() &&
            (m == 0 || k.row_ptr.back() == k.col.size());
  if (!ok) throw InvalidArgument("inconsistent kernel snapshot: " + path);
  return k;
}

// ------------------------------------------------------------------ json i/o

Json net_to_json(const NetIndex& net) {
  Json j;
  j["type"] = "epsilon_net";
  j["epsilon"] = net.epsilon;
  j["seed"] = net.seed;
  j["members"] = net.members;
  return j;
}

NetIndex net_from_json(const Json& j) {
  if (field(j, "type").get<std::string>() != "epsilon_net")
    throw InvalidArgument("json is not an epsilon_net document");
  NetIndex net;
  net.epsilon = num_field(j, "epsilon");
  net.seed = field(j, "seed").get<std::uint64_t>();
  net.members = field(j, "members").get<std::vector<Id>>();
  if (!(net.epsilon > 0)) throw InvalidArgument("net json: epsilon must be positive");
  if (!std::is_sorted(net.members.begin(), net.members.end()))
    throw InvalidArgument("net json: members must be sorted");
  return net;
}

Json graph_to_json(const ApproxGraph& g) {
  Json j;
  j["type"] = "approx_graph";
  j["kind"] = (g.kind == GraphKind::proximity) ? "proximity" : "covering";
  j["param"] = g.param;
  j["self_loops"] = g.self_loops;
  j["net"] = net_to_json(g.net);
  Json edges = Json::array();
  for (Id v = 0; v < g.vertex_count(); ++v) {
    for (std::size_t e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
      Id u = g.adj[e];  // adjacency stores vertex indices; export global ids
      if (u >= v)
        edges.push_back(Json::array({g.net.members[static_cast<std::size_t>(v)],
                                     g.net.members[static_cast<std::size_t>(u)]}));
    }
  }
  j["edges"] = std::move(edges);
  return j;
}

ApproxGraph graph_from_json(const Json& j) {
  if (field(j, "type").get<std::string>() != "approx_graph")
    throw InvalidArgument("json is not an approx_graph document");
  ApproxGraph g;
  std::string kind = field(j, "kind").get<std::string>();
  if (kind == "proximity") g.kind = GraphKind::proximity;
  else if (kind == "covering") g.kind = GraphKind::covering;
  else throw InvalidArgument("graph json: unknown kind " + kind);
  g.param = num_field(j, "param");
  g.self_loops = field(j, "self_loops").get<bool>();
  g.net = net_from_json(field(j, "net"));

  const Id m = static_cast<Id>(g.net.members.size());
  std::unordered_map<Id, Id> vertex_of;
  vertex_of.reserve(static_cast<std::size_t>(m));
  for (Id v = 0; v < m; ++v) vertex_of[g.net.members[static_cast<std::size_t>(v)]] = v;

  std::vector<std::vector<Id>> rows(static_cast<std::size_t>(m));
  for (const auto& e : field(j, "edges")) {
    if (!e.is_array() || e.size() != 2) throw InvalidArgument("graph json: edge is not a pair");
    Id a = e[0].get<Id>(), b = e[1].get<Id>();
    auto ia = vertex_of.find(a), ib = vertex_of.find(b);
    if (ia == vertex_of.end() || ib == vertex_of.end())
      throw InvalidArgument("graph json: edge endpoint is not a net member");
    rows[static_cast<std::size_t>(ia->second)].push_back(ib->second);
    if (a != b) rows[static_cast<std::size_t>(ib->second)].push_back(ia->second);
  }
  g.row_ptr.assign(static_cast<std::size_t>(m) + 1, 0);
  for (Id v = 0; v < m; ++v) {
    auto& row = rows[static_cast<std::size_t>(v)];
    std::sort(row.begin(), row.end());
    g.row_ptr[static_cast<std::size_t>(v) + 1] =
        g.row_ptr[static_cast<std::size_t>(v)] + row.size();
    g.adj.insert(g.adj.end(), row.begin(), row.end());
  }
  return g;
}

Json fit_to_json(const ExponentFit& fit) {
  Json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  j["scale_min"] = fit.scale_min;
  j["scale_max"] = fit.scale_max;
  j["n_points"] = fit.n_points;
  return j;
}

ExponentFit fit_from_json(const Json& j) {
  ExponentFit fit;
  fit.slope = num_field(j, "slope");
  fit.intercept = num_field(j, "intercept");
  fit.r_squared = num_field(j, "r_squared");
  fit.scale_min = num_field(j, "scale_min");
  fit.scale_max = num_field(j, "scale_max");
  fit.n_points = field(j, "n_points").get<int>();
  return fit;
}

Json series_to_json(const ScaleSeries& s) {
  Json j;
  j["label"] = s.label;
  Json pts = Json::array();
  for (const auto& [scale, value] : s.pairs) pts.push_back(Json::array({scale, value}));
  j["points"] = std::move(pts);
  return j;
}

ScaleSeries series_from_json(const Json& j) {
  ScaleSeries s;
  s.label = field(j, "label").get<std::string>();
  for (const auto& p : field(j, "points")) {
    if (!p.is_array() || p.size() != 2) throw InvalidArgument("series json: point is not a pair");
    s.pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return s;
}

// ------------------------------------------------------------- canonical text

std::string canonical_json(const Json& j) {
  std::string out;
  emit(j, out, 0);
  return out;
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, canonical_json(j) + "\n");
}

Json read_json_file(const std::string& path) {
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("malformed json: " + path);
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) throw InvalidArgument("write failed: " + path);
}

// ------------------------------------------------------------------ csv files

void write_points_csv(const std::string& path, const FiniteSpace& s) {
  std::string out = "id,x,y,weight,diameter\n";
  for (Id i = 0; i < s.size(); ++i) {
    const double* p = s.point(i);
    out += std::to_string(i);
    out += ',';
    out += fmt_g17(p[0]);
    out += ',';
    out += fmt_g17(s.dim == 2 ? p[1] : 0.0);
    out += ',';
    out += fmt_g17(s.weights[static_cast<std::size_t>(i)]);
    out += ',';
    out += fmt_g17(s.diameters[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_kernel_csv(const std::string& path, const WalkKernel& k) {
  std::string out = "row,col,value\n";
  for (Id i = 0; i < k.state_count(); ++i) {
    Id row_id = k.states[static_cast<std::size_t>(i)];
    for (std::size_t e = k.row_ptr[static_cast<std::size_t>(i)];
         e < k.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      out += std::to_string(row_id);
      out += ',';
      out += std::to_string(k.col[e]);
      out += ',';
      out += fmt_g17(k.val[e]);
      out += '\n';
    }
  }
  write_text_file(path, out);
}

void write_exit_csv(const std::string& path, const WalkKernel& k, const ExitField& field) {
  if (field.values.size() != static_cast<std::size_t>(k.state_count()))
    throw InvalidArgument("exit csv: field does not match kernel state count");
  std::string out = "id,phi\n";
  for (Id i = 0; i < k.state_count(); ++i) {
    out += std::to_string(k.states[static_cast<std::size_t>(i)]);
    out += ',';
    out += fmt_g17(field.values[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_series_csv(const std::string& path, const ScaleSeries& series) {
  std::string out = "scale,value\n";
  for (const auto& [scale, value] : series.pairs) {
    out += fmt_g17(scale);
    out += ',';
    out += fmt_g17(value);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace exitdim
