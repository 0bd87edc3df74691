#pragma once

// Model persistence. Parameters live in a single binary file of named
// tensors: magic "DYSP", u32 version, u32 tensor count, then per tensor a
// u32 name length, the name bytes, u32 rank, u32 dims, and row-major 64-bit
// floats. The graph side goes to JSON (service ids, edge list with both
// attention directions, last-update map) with the representations stored as
// a sibling embedding binary.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysr/dynrep.hpp"
#include "dysr/embedding_io.hpp"
#include "dysr/graph_state.hpp"
#include "dysr/recommend.hpp"

namespace dysr {

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
  }
};

inline constexpr char kTensorMagic[4] = {'D', 'Y', 'S', 'P'};
inline constexpr std::uint32_t kTensorVersion = 1;

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write(kTensorMagic, 4);
  put_u32(kTensorVersion);
  put_u32(static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.numel() != t.data.size())
      throw std::invalid_argument("save_tensors: shape/data mismatch for '" + t.name + "'");
    put_u32(static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kTensorMagic, 4))
    throw std::runtime_error("bad checkpoint magic: " + path);
  const std::uint32_t version = get_u32();
  if (version != kTensorVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32();
  std::vector<NamedTensor> tensors(count);
  for (NamedTensor& t : tensors) {
    const std::uint32_t name_len = get_u32();
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const std::uint32_t rank = get_u32();
    t.dims.resize(rank);
    for (std::uint32_t& d : t.dims) d = get_u32();
    t.data.resize(t.numel());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }
  return tensors;
}

// ---------------------------------------------------------------------------
// Parameter <-> tensor conversions
// ---------------------------------------------------------------------------

namespace detail {

inline NamedTensor tensor_of(const std::string& name, const DenseMatrix& m) {
  return {name,
          {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
          m.values};
}

inline NamedTensor tensor_of(const std::string& name, const DenseVector& v) {
  return {name, {static_cast<std::uint32_t>(v.size())}, v};
}

inline NamedTensor tensor_of(const std::string& name, double x) {
  return {name, {1}, {x}};
}

inline const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts,
                                      const std::string& name) {
  for (const NamedTensor& t : ts)
    if (t.name == name) return t;
  throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
}

inline bool has_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const NamedTensor& t : ts)
    if (t.name == name) return true;
  return false;
}

inline DenseMatrix matrix_from(const NamedTensor& t) {
  if (t.dims.size() != 2)
    throw std::runtime_error("tensor '" + t.name + "' is not a matrix");
  DenseMatrix m(t.dims[0], t.dims[1]);
  m.values = t.data;
  return m;
}

}  // namespace detail

inline std::vector<NamedTensor> params_to_tensors(const RecParams& rec, const DyRepParams& dy) {
  std::vector<NamedTensor> ts;
  if (!rec.no_transform) {
    ts.push_back(detail::tensor_of("recommend.w_psi", rec.w_psi));
    ts.push_back(detail::tensor_of("recommend.b_psi", rec.b_psi));
  }
  ts.push_back(detail::tensor_of("recommend.w_lambda", rec.w_lambda));
  ts.push_back(detail::tensor_of("dyrep.w_a", dy.w_a));
  ts.push_back(detail::tensor_of("dyrep.w_rec", dy.w_rec));
  ts.push_back(detail::tensor_of("dyrep.w_t", dy.w_t));
  ts.push_back(detail::tensor_of("dyrep.w_h", dy.w_h));
  ts.push_back(detail::tensor_of("dyrep.rho", dy.rho));
  ts.push_back(detail::tensor_of("dyrep.omega", dy.omega));
  ts.push_back(detail::tensor_of("dyrep.activation",
                                 dy.activation == Activation::kTanh ? 0.0 : 1.0));
  ts.push_back(detail::tensor_of("dyrep.time_scale", dy.time_scale));
  return ts;
}

inline std::pair<RecParams, DyRepParams> params_from_tensors(
    const std::vector<NamedTensor>& ts) {
  RecParams rec;
  rec.no_transform = !detail::has_tensor(ts, "recommend.w_psi");
  if (!rec.no_transform) {
    rec.w_psi = detail::matrix_from(detail::find_tensor(ts, "recommend.w_psi"));
    rec.b_psi = detail::find_tensor(ts, "recommend.b_psi").data;
  }
  rec.w_lambda = detail::matrix_from(detail::find_tensor(ts, "recommend.w_lambda"));

  DyRepParams dy;
  dy.w_a = detail::matrix_from(detail::find_tensor(ts, "dyrep.w_a"));
  dy.w_rec = detail::matrix_from(detail::find_tensor(ts, "dyrep.w_rec"));
  dy.w_t = detail::find_tensor(ts, "dyrep.w_t").data;
  dy.w_h = detail::matrix_from(detail::find_tensor(ts, "dyrep.w_h"));
  dy.rho = detail::find_tensor(ts, "dyrep.rho").data.at(0);
  dy.omega = detail::find_tensor(ts, "dyrep.omega").data;
  dy.activation = detail::find_tensor(ts, "dyrep.activation").data.at(0) == 0.0
                      ? Activation::kTanh
                      : Activation::kLogistic;
  dy.time_scale = detail::find_tensor(ts, "dyrep.time_scale").data.at(0);
  return {std::move(rec), std::move(dy)};
}

// ---------------------------------------------------------------------------
// Graph checkpoint
// ---------------------------------------------------------------------------

inline void save_graph(const std::string& json_path, const DynamicGraphState& state,
                       const std::vector<std::string>& service_ids) {
  const int n = state.service_count();
  if (static_cast<int>(service_ids.size()) != n)
    throw std::invalid_argument("save_graph: id list size mismatch");
  namespace fs = std::filesystem;
  const fs::path jp(json_path);
  const std::string z_file = jp.stem().string() + "_z.bin";

  nlohmann::json j;
  j["services"] = service_ids;
  j["current_time"] = state.current_time();
  j["z_file"] = z_file;
  nlohmann::json edges = nlohmann::json::array();
  for (int u = 0; u < n; ++u) {
    for (const auto& [v, c] : state.adjacency_row(u)) {
      if (v <= u) continue;
      const auto& row_u = state.attention_row(u);
      const auto& row_v = state.attention_row(v);
      auto it_uv = row_u.find(v);
      auto it_vu = row_v.find(u);
      edges.push_back({{"u", service_ids[u]},
                       {"v", service_ids[v]},
                       {"count", c},
                       {"attention_uv", it_uv == row_u.end() ? 0.0 : it_uv->second},
                       {"attention_vu", it_vu == row_v.end() ? 0.0 : it_vu->second}});
    }
  }
  j["edges"] = std::move(edges);
  nlohmann::json lu = nlohmann::json::object();
  for (int s = 0; s < n; ++s) lu[service_ids[s]] = state.last_update(s);
  j["last_update"] = std::move(lu);

  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot open graph checkpoint for writing: " + json_path);
  out << j.dump(2) << '\n';
  write_embeddings_binary((jp.parent_path() / z_file).string(), state.representations());
}

inline std::pair<DynamicGraphState, std::vector<std::string>> load_graph(
    const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open graph checkpoint: " + json_path);
  nlohmann::json j;
  in >> j;
  const std::vector<std::string> ids = j.at("services").get<std::vector<std::string>>();
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(json_path).parent_path();
  std::vector<DenseVector> z =
      read_embeddings_binary((dir / j.at("z_file").get<std::string>()).string());
  if (z.size() != ids.size())
    throw std::runtime_error("graph checkpoint: representation row count mismatch");
  DynamicGraphState state(std::move(z));

  std::vector<std::map<int, int>> adj(ids.size());
  std::vector<std::map<int, double>> attn(ids.size());
  for (const auto& e : j.at("edges")) {
    const int u = index.at(e.at("u").get<std::string>());
    const int v = index.at(e.at("v").get<std::string>());
    const int c = e.at("count").get<int>();
    adj[u][v] = c;
    adj[v][u] = c;
    const double suv = e.at("attention_uv").get<double>();
    const double svu = e.at("attention_vu").get<double>();
    if (suv != 0.0) attn[u][v] = suv;
    if (svu != 0.0) attn[v][u] = svu;
  }
  std::vector<double> last_update(ids.size(), 0.0);
  for (const auto& [sid, t] : j.at("last_update").items()) last_update[index.at(sid)] = t;
  state.set_topology(std::move(adj), std::move(attn), std::move(last_update),
                     j.at("current_time").get<double>());
  return {std::move(state), ids};
}

}  // namespace dysr
