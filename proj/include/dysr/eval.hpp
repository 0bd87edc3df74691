#pragma once

// Ranking metrics and the temporal test loop. Precision/recall are computed
// over the top-N prefix per requirement; F1 is the per-requirement harmonic
// mean, averaged afterwards (macro average). The printed-form variant
// |intersection| / (|C| + |Chat|), reachable behind paper_literal_f1, drops
// the factor two of the harmonic form.
//
// In prequential mode each test requirement is scored first and its true
// component set then drives graph/representation updates with frozen
// parameters; in frozen mode the state never changes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysr/dynrep.hpp"
#include "dysr/graph_state.hpp"
#include "dysr/recommend.hpp"
#include "dysr/types.hpp"

namespace dysr {

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline MetricTriple precision_recall_f1(const std::vector<int>& predicted,
                                        const std::set<int>& actual, std::size_t n,
                                        bool paper_literal_f1 = false) {
  if (actual.empty())
    throw std::invalid_argument("precision_recall_f1: actual set must be nonempty");
  if (n < 1) throw std::invalid_argument("precision_recall_f1: N must be at least 1");
  {
    std::set<int> dedup(predicted.begin(), predicted.end());
    if (dedup.size() != predicted.size())
      throw std::invalid_argument("precision_recall_f1: duplicate predictions");
  }
  const std::size_t take = std::min(n, predicted.size());
  if (take == 0) return {0.0, 0.0, 0.0};
  std::size_t hit = 0;
  for (std::size_t i = 0; i < take; ++i) hit += actual.count(predicted[i]);
  MetricTriple m;
  m.precision = static_cast<double>(hit) / static_cast<double>(take);
  m.recall = static_cast<double>(hit) / static_cast<double>(actual.size());
  if (paper_literal_f1) {
    m.f1 = static_cast<double>(hit) / static_cast<double>(actual.size() + take);
  } else {
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

enum class EvalMode { kPrequential, kFrozen };

inline const char* eval_mode_name(EvalMode m) {
  return m == EvalMode::kPrequential ? "prequential" : "frozen";
}

struct EvalOptions {
  EvalMode mode = EvalMode::kPrequential;
  bool paper_literal_f1 = false;
  bool static_z = false;  // suppresses prequential state updates
  std::vector<int> n_list = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

struct PerRequirementMetrics {
  std::string id;
  std::map<int, MetricTriple> by_n;
};

struct MetricsReport {
  std::string mode;
  std::vector<int> n_list;
  std::map<int, MetricTriple> mean;
  std::vector<PerRequirementMetrics> detail;
};

namespace detail {

inline MetricsReport finalize_report(std::string mode, const std::vector<int>& n_list,
                                     std::vector<PerRequirementMetrics> detail_rows) {
  MetricsReport rep;
  rep.mode = std::move(mode);
  rep.n_list = n_list;
  rep.detail = std::move(detail_rows);
  for (int n : n_list) {
    MetricTriple acc;
    for (const auto& row : rep.detail) {
      const MetricTriple& m = row.by_n.at(n);
      acc.precision += m.precision;
      acc.recall += m.recall;
      acc.f1 += m.f1;
    }
    const double cnt = rep.detail.empty() ? 1.0 : static_cast<double>(rep.detail.size());
    rep.mean[n] = {acc.precision / cnt, acc.recall / cnt, acc.f1 / cnt};
  }
  return rep;
}

inline void check_sorted(const std::vector<RequirementSample>& samples, const char* where) {
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].t < samples[i - 1].t)
      throw std::invalid_argument(std::string(where) + ": samples not sorted by timestamp");
}

}  // namespace detail

/// Temporal evaluation over the test samples. Mutates `state` in prequential
/// mode (frozen parameters, no optimizer steps).
inline MetricsReport evaluate(const std::vector<RequirementSample>& test,
                              DynamicGraphState& state, const RecParams& rec,
                              const DyRepParams& dy, const EvalOptions& opt = {}) {
  detail::check_sorted(test, "evaluate");
  const std::size_t max_n = opt.n_list.empty()
                                ? 0
                                : *std::max_element(opt.n_list.begin(), opt.n_list.end());
  std::vector<PerRequirementMetrics> rows;
  rows.reserve(test.size());
  for (const RequirementSample& sample : test) {
    const std::vector<ScoredService> ranked =
        rank_services(rec, sample.v_r, state.representations(), max_n);
    std::vector<int> predicted;
    predicted.reserve(ranked.size());
    for (const ScoredService& s : ranked) predicted.push_back(s.service);
    const std::set<int> actual(sample.components.begin(), sample.components.end());
    PerRequirementMetrics row;
    row.id = sample.id;
    for (int n : opt.n_list)
      row.by_n[n] = precision_recall_f1(predicted, actual, n, opt.paper_literal_f1);
    rows.push_back(std::move(row));

    if (opt.mode == EvalMode::kPrequential && !opt.static_z) {
      for (const CoInvocationEvent& o : generate_events(sample.components, sample.t))
        process_event(state, dy, o);
    }
  }
  return detail::finalize_report(eval_mode_name(opt.mode), opt.n_list, std::move(rows));
}

/// Ranks services by training-set usage count (ties by ascending id) and
/// evaluates that fixed list against the test samples.
inline MetricsReport popularity_baseline(const std::vector<RequirementSample>& train,
                                         const std::vector<RequirementSample>& test,
                                         int n_services, const EvalOptions& opt = {}) {
  if (train.empty()) throw std::invalid_argument("popularity_baseline: empty training set");
  detail::check_sorted(test, "popularity_baseline");
  std::vector<long> usage(n_services, 0);
  for (const RequirementSample& s : train)
    for (int c : s.components) usage.at(c) += 1;
  std::vector<int> order(n_services);
  for (int i = 0; i < n_services; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (usage[a] != usage[b]) return usage[a] > usage[b];
    return a < b;
  });

  std::vector<PerRequirementMetrics> rows;
  rows.reserve(test.size());
  for (const RequirementSample& sample : test) {
    const std::set<int> actual(sample.components.begin(), sample.components.end());
    PerRequirementMetrics row;
    row.id = sample.id;
    for (int n : opt.n_list)
      row.by_n[n] = precision_recall_f1(order, actual, n, opt.paper_literal_f1);
    rows.push_back(std::move(row));
  }
  return detail::finalize_report("popularity", opt.n_list, std::move(rows));
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

struct MetricStd {
  MetricTriple std;
};

/// CSV rows "mode,N,precision,recall,f1,precision_std,recall_std,f1_std";
/// the std columns stay empty for single runs.
inline void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports,
                              const std::map<std::string, std::map<int, MetricTriple>>* stds =
                                  nullptr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open metrics csv for writing: " + path);
  out << "mode,N,precision,recall,f1,precision_std,recall_std,f1_std\n";
  char buf[64];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return std::string(buf);
  };
  for (const MetricsReport& rep : reports) {
    for (int n : rep.n_list) {
      const MetricTriple& m = rep.mean.at(n);
      out << rep.mode << ',' << n << ',' << fmt(m.precision) << ',' << fmt(m.recall) << ','
          << fmt(m.f1);
      const std::map<int, MetricTriple>* s = nullptr;
      if (stds) {
        auto it = stds->find(rep.mode);
        if (it != stds->end()) s = &it->second;
      }
      if (s && s->count(n)) {
        const MetricTriple& sd = s->at(n);
        out << ',' << fmt(sd.precision) << ',' << fmt(sd.recall) << ',' << fmt(sd.f1) << '\n';
      } else {
        out << ",,,\n";
      }
    }
  }
}

inline void write_detail_jsonl(const std::string& path, const MetricsReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open detail file for writing: " + path);
  for (const PerRequirementMetrics& row : rep.detail) {
    nlohmann::json j;
    j["requirement_id"] = row.id;
    j["mode"] = rep.mode;
    nlohmann::json per_n = nlohmann::json::object();
    for (const auto& [n, m] : row.by_n)
      per_n[std::to_string(n)] = {{"precision", m.precision},
                                  {"recall", m.recall},
                                  {"f1", m.f1}};
    j["metrics"] = std::move(per_n);
    out << j.dump() << '\n';
  }
}

}  // namespace dysr
