#pragma once

// Corpus ingestion and the synthetic planted-community generator.
//
// Mashup file: JSON Lines, one record {"id", "timestamp" (ISO-8601 date),
// "services": [ids]} per line. Timestamps become fractional days since the
// corpus minimum date; within-day ties order by id. Service registry: CSV
// "id,name" with a header line. Embeddings follow embedding_io.hpp: binary
// rows are positional (registry order for services, raw record order for
// requirements), CSV rows are id-keyed.
//
// Ingestion drops mashups with fewer than two component services and
// services referenced by no mashup at all (filtered against the full
// corpus); both counts are reported.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysr/embedding_io.hpp"
#include "dysr/numerics.hpp"
#include "dysr/rng.hpp"
#include "dysr/types.hpp"

namespace dysr {

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

/// Days since 1970-01-01 for an ISO-8601 date.
inline long parse_iso_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw std::runtime_error("bad ISO-8601 date: '" + s + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw std::runtime_error("invalid calendar date: '" + s + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

inline std::string format_iso_date(long days_since_epoch) {
  const std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

struct IngestReport {
  std::size_t raw_mashups = 0;
  std::size_t dropped_small = 0;           // fewer than two components
  std::size_t dropped_unused_services = 0; // never referenced by any mashup
  std::string service_filter_scope = "full-corpus";
};

struct Corpus {
  std::vector<RequirementSample> samples;  // sorted by (t, id)
  std::vector<ServiceRecord> services;
  long epoch_days = 0;  // calendar day of t = 0
  IngestReport report;

  std::size_t d_r() const { return samples.empty() ? 0 : samples.front().v_r.size(); }
  std::size_t d_s() const { return services.empty() ? 0 : services.front().z0.size(); }
};

namespace detail {

struct RawMashup {
  std::string id;
  long day = 0;
  std::vector<std::string> services;
  std::size_t record_index = 0;
};

inline std::vector<RawMashup> read_mashups_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mashup file: " + path);
  std::vector<RawMashup> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("bad JSON in " + path + " line " + std::to_string(index + 1) +
                               ": " + e.what());
    }
    RawMashup m;
    m.id = j.at("id").get<std::string>();
    m.day = parse_iso_date(j.at("timestamp").get<std::string>());
    m.services = j.at("services").get<std::vector<std::string>>();
    m.record_index = index++;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_services_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open service registry: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("id,", 0) == 0) continue;  // header
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("bad service registry row in " + path + ": '" + line + "'");
    out.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  return out;
}

}  // namespace detail

/// Loads mashups, the service registry, and both embedding files, resolving
/// every reference. Samples come out sorted ascending by (timestamp, id)
/// with timestamps in fractional days since the corpus minimum date.
inline Corpus load_corpus(const std::string& mashup_path, const std::string& service_path,
                          const std::string& req_embedding_path,
                          const std::string& svc_embedding_path) {
  Corpus corpus;
  const auto registry_rows = detail::read_services_csv(service_path);
  std::map<std::string, int> registry_index;  // position in the registry file
  for (std::size_t i = 0; i < registry_rows.size(); ++i) {
    if (!registry_index.emplace(registry_rows[i].first, static_cast<int>(i)).second)
      throw std::runtime_error("duplicate service id in " + service_path + ": " +
                               registry_rows[i].first);
  }

  auto raw = detail::read_mashups_jsonl(mashup_path);
  corpus.report.raw_mashups = raw.size();

  // Requirement embeddings: positional for binary, id-keyed for CSV.
  std::vector<DenseVector> req_rows;
  std::map<std::string, std::size_t> req_by_id;
  if (ends_with_csv(req_embedding_path)) {
    auto [ids, rows] = read_embeddings_csv(req_embedding_path);
    req_rows = std::move(rows);
    for (std::size_t i = 0; i < ids.size(); ++i) req_by_id[ids[i]] = i;
  } else {
    req_rows = read_embeddings_binary(req_embedding_path);
    if (req_rows.size() != raw.size())
      throw std::runtime_error("requirement embedding count " + std::to_string(req_rows.size()) +
                               " does not match mashup record count " +
                               std::to_string(raw.size()) + " in " + req_embedding_path);
  }

  std::vector<DenseVector> svc_rows;
  std::map<std::string, std::size_t> svc_by_id;
  if (ends_with_csv(svc_embedding_path)) {
    auto [ids, rows] = read_embeddings_csv(svc_embedding_path);
    svc_rows = std::move(rows);
    for (std::size_t i = 0; i < ids.size(); ++i) svc_by_id[ids[i]] = i;
  } else {
    svc_rows = read_embeddings_binary(svc_embedding_path);
    if (svc_rows.size() != registry_rows.size())
      throw std::runtime_error("service embedding count " + std::to_string(svc_rows.size()) +
                               " does not match registry size " +
                               std::to_string(registry_rows.size()) + " in " +
                               svc_embedding_path);
  }

  // First pass: validate references, drop too-small mashups, find the set of
  // services actually used and the corpus epoch.
  std::set<std::string> used;
  std::vector<detail::RawMashup> kept;
  for (auto& m : raw) {
    std::set<std::string> dedup(m.services.begin(), m.services.end());
    for (const std::string& sid : dedup)
      if (!registry_index.count(sid))
        throw std::runtime_error("mashup " + m.id + " references unknown service id '" + sid +
                                 "'");
    if (dedup.size() < 2) {
      corpus.report.dropped_small++;
      continue;
    }
    m.services.assign(dedup.begin(), dedup.end());
    for (const std::string& sid : dedup) used.insert(sid);
    kept.push_back(std::move(m));
  }

  // Final registry: referenced services only, in registry-file order.
  std::map<std::string, int> final_index;
  std::size_t expected_ds = 0;
  for (std::size_t i = 0; i < registry_rows.size(); ++i) {
    const auto& [sid, name] = registry_rows[i];
    if (!used.count(sid)) {
      corpus.report.dropped_unused_services++;
      continue;
    }
    ServiceRecord rec;
    rec.id = sid;
    rec.name = name;
    if (!svc_by_id.empty()) {
      auto it = svc_by_id.find(sid);
      if (it == svc_by_id.end())
        throw std::runtime_error("missing service embedding for id '" + sid + "' in " +
                                 svc_embedding_path);
      rec.z0 = svc_rows[it->second];
    } else {
      rec.z0 = svc_rows[i];
    }
    if (expected_ds == 0) expected_ds = rec.z0.size();
    if (rec.z0.size() != expected_ds)
      throw std::runtime_error("inconsistent service embedding dimension in " +
                               svc_embedding_path + " for id '" + sid + "'");
    final_index[sid] = static_cast<int>(corpus.services.size());
    corpus.services.push_back(std::move(rec));
  }

  long epoch = 0;
  if (!kept.empty()) {
    epoch = kept.front().day;
    for (const auto& m : kept) epoch = std::min(epoch, m.day);
  }
  corpus.epoch_days = epoch;

  std::size_t expected_dr = 0;
  for (const auto& m : kept) {
    RequirementSample s;
    s.id = m.id;
    s.t = static_cast<double>(m.day - epoch);
    if (!req_by_id.empty()) {
      auto it = req_by_id.find(m.id);
      if (it == req_by_id.end())
        throw std::runtime_error("missing requirement embedding for id '" + m.id + "' in " +
                                 req_embedding_path);
      s.v_r = req_rows[it->second];
    } else {
      s.v_r = req_rows[m.record_index];
    }
    if (expected_dr == 0) expected_dr = s.v_r.size();
    if (s.v_r.size() != expected_dr)
      throw std::runtime_error("inconsistent requirement embedding dimension in " +
                               req_embedding_path + " for id '" + m.id + "'");
    for (const std::string& sid : m.services) s.components.push_back(final_index.at(sid));
    std::sort(s.components.begin(), s.components.end());
    corpus.samples.push_back(std::move(s));
  }

  std::stable_sort(corpus.samples.begin(), corpus.samples.end(),
                   [](const RequirementSample& a, const RequirementSample& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return a.id < b.id;
                   });
  return corpus;
}

/// First n_init samples form the initialization history, the next n_train
/// the training set, the remainder the test set.
inline CorpusSplit split_temporal(const std::vector<RequirementSample>& samples,
                                  std::size_t n_init, std::size_t n_train) {
  if (n_init + n_train > samples.size())
    throw std::invalid_argument("split_temporal: requested " + std::to_string(n_init) + "+" +
                                std::to_string(n_train) + " samples but corpus has " +
                                std::to_string(samples.size()));
  CorpusSplit split;
  split.init_history.assign(samples.begin(), samples.begin() + n_init);
  split.train.assign(samples.begin() + n_init, samples.begin() + n_init + n_train);
  split.test.assign(samples.begin() + n_init + n_train, samples.end());
  return split;
}

// ---------------------------------------------------------------------------
// Serialization (used by the synth command and round-trip checks)
// ---------------------------------------------------------------------------

inline void write_mashups_jsonl(const std::string& path,
                                const std::vector<RequirementSample>& samples,
                                const std::vector<ServiceRecord>& services, long epoch_days) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open mashup file for writing: " + path);
  for (const RequirementSample& s : samples) {
    nlohmann::json j;
    j["id"] = s.id;
    j["timestamp"] = format_iso_date(epoch_days + static_cast<long>(s.t));
    std::vector<std::string> ids;
    for (int c : s.components) ids.push_back(services.at(c).id);
    j["services"] = ids;
    out << j.dump() << '\n';
  }
}

inline void write_services_csv(const std::string& path,
                               const std::vector<ServiceRecord>& services) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open service registry for writing: " + path);
  out << "id,name\n";
  for (const ServiceRecord& s : services) out << s.id << ',' << s.name << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic planted-community corpus
// ---------------------------------------------------------------------------

struct SyntheticGroundTruth {
  DenseMatrix hidden_map;    // service space -> requirement space
  DenseVector hidden_bias;
  std::vector<std::vector<double>> centroids;  // K rows of dim d_s
  std::vector<int> community;                  // per service
  bool separable = false;                      // true when noise == 0
};

struct SyntheticCorpus {
  std::vector<RequirementSample> samples;
  std::vector<ServiceRecord> services;
  SyntheticGroundTruth truth;
  long epoch_days = 18262;  // 2020-01-01, used when serializing
};

/// Plants K communities of S services each. Service vectors are their
/// community centroid plus a per-service jitter, so every service stays
/// individually identifiable; requirement vectors are a hidden affine image
/// of the mean of the chosen service vectors plus `noise`-scaled Gaussian
/// noise, so at noise=0 the requirement determines the chosen subset
/// exactly. Vectors are kept at small magnitude (coordinates well inside the
/// linear range of a saturating update) so that representation dynamics on
/// the corpus are benign. Timestamps are whole days uniform over [0, R).
inline SyntheticCorpus generate_synthetic(int k_communities, int services_per_community,
                                          int n_requirements, std::size_t d_r, std::size_t d_s,
                                          double noise, std::uint64_t seed) {
  if (k_communities < 1 || services_per_community < 1 || n_requirements < 1)
    throw std::invalid_argument("generate_synthetic: sizes must be at least 1");
  if (noise < 0.0) throw std::invalid_argument("generate_synthetic: noise must be nonnegative");

  constexpr double kCentroidScale = 0.3;
  constexpr double kServiceJitter = 0.18;
  SyntheticCorpus out;
  auto rng = make_stream(seed, "synth");
  std::normal_distribution<double> unit(0.0, 1.0);

  out.truth.centroids.resize(k_communities);
  for (auto& c : out.truth.centroids) {
    c.resize(d_s);
    for (double& x : c) x = kCentroidScale * unit(rng);
  }

  const int n_services = k_communities * services_per_community;
  out.services.resize(n_services);
  out.truth.community.resize(n_services);
  char idbuf[32];
  for (int s = 0; s < n_services; ++s) {
    const int k = s / services_per_community;
    out.truth.community[s] = k;
    std::snprintf(idbuf, sizeof(idbuf), "s%04d", s);
    out.services[s].id = idbuf;
    out.services[s].name = "service-" + std::to_string(k) + "-" +
                           std::to_string(s % services_per_community);
    out.services[s].z0.resize(d_s);
    for (std::size_t i = 0; i < d_s; ++i)
      out.services[s].z0[i] = out.truth.centroids[k][i] + kServiceJitter * unit(rng);
  }

  out.truth.hidden_map = gaussian_matrix(d_r, d_s, 1.0 / std::sqrt(double(d_s)), rng);
  out.truth.hidden_bias = gaussian_vector(d_r, 0.5, rng);
  out.truth.separable = noise == 0.0;

  std::uniform_int_distribution<int> pick_k(0, k_communities - 1);
  const int max_take = std::min(5, services_per_community);
  const int min_take = std::min(2, max_take);
  std::uniform_int_distribution<int> pick_n(min_take, max_take);
  std::uniform_real_distribution<double> pick_t(0.0, static_cast<double>(n_requirements));

  struct Draft {
    double t_raw;
    std::vector<int> components;
    DenseVector v_r;
  };
  std::vector<Draft> drafts(n_requirements);
  for (Draft& d : drafts) {
    const int k = pick_k(rng);
    const int take = pick_n(rng);
    std::vector<int> pool(services_per_community);
    for (int i = 0; i < services_per_community; ++i) pool[i] = k * services_per_community + i;
    for (int i = 0; i < take; ++i) {
      std::uniform_int_distribution<int> swap_pick(i, services_per_community - 1);
      std::swap(pool[i], pool[swap_pick(rng)]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    d.components = std::move(pool);

    DenseVector mean(d_s, 0.0);
    for (int s : d.components) axpy(mean, 1.0 / take, out.services[s].z0);
    d.v_r = matvec(out.truth.hidden_map, mean);
    axpy(d.v_r, 1.0, out.truth.hidden_bias);
    for (double& x : d.v_r) x += noise * unit(rng);
    d.t_raw = pick_t(rng);
  }
  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.t_raw < b.t_raw; });

  // Whole-day timestamps rebased to zero so that the in-memory corpus equals
  // a serialize/reload cycle exactly.
  const double day0 = std::floor(drafts.front().t_raw);
  out.samples.resize(n_requirements);
  for (int i = 0; i < n_requirements; ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "m%06d", i);
    out.samples[i].id = idbuf;
    out.samples[i].t = std::floor(drafts[i].t_raw) - day0;
    out.samples[i].v_r = std::move(drafts[i].v_r);
    out.samples[i].components = std::move(drafts[i].components);
  }
  return out;
}

inline void write_ground_truth_json(const std::string& path, const SyntheticGroundTruth& t) {
  nlohmann::json j;
  j["separable"] = t.separable;
  j["community"] = t.community;
  j["centroids"] = t.centroids;
  j["hidden_bias"] = t.hidden_bias;
  j["hidden_map"] = {{"rows", t.hidden_map.rows},
                     {"cols", t.hidden_map.cols},
                     {"values", t.hidden_map.values}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open ground truth file for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace dysr
