#pragma once

// The dynamic service co-invocation graph. A holds symmetric co-invocation
// counts (zero diagonal, counts never decrease), S holds one attention row
// per service over its neighbors, Z the current representations, and
// last_update the time each service was last touched by an event.
//
// Attention maintenance on an event (u, v, t) with intensity lambda:
//   A[u][v] += 1 (symmetric), branching on the pre-event count;
//   for each endpoint j with partner i:
//     b = 1/|N_j| post-event;
//     existing edge:  y_i = b + lambda
//     new edge:       b' = 1/|N_j| pre-event (0 for an empty neighborhood),
//                     y_i = b + lambda, and y_w -= b' - b for every other
//                     nonzero entry of the row;
//   negative entries are clamped to zero, then the row is L1-normalized over
//   its nonzero support (reset to uniform over neighbors if it zeroed out).

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysr/numerics.hpp"
#include "dysr/types.hpp"

namespace dysr {

/// Co-invocation of two services at time t. The pair is unordered; (u, v, t)
/// and (v, u, t) describe the same event.
struct CoInvocationEvent {
  int u = -1;
  int v = -1;
  double t = 0.0;
};

/// All unordered component pairs of one requirement, each stamped with the
/// requirement's timestamp, ordered by (u, v). Fewer than two components
/// yield no events.
inline std::vector<CoInvocationEvent> generate_events(const std::vector<int>& components,
                                                      double t) {
  std::vector<int> ids(components);
  std::sort(ids.begin(), ids.end());
  std::vector<CoInvocationEvent> events;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      events.push_back({ids[i], ids[j], t});
  return events;
}

struct GraphSnapshot {
  std::vector<std::map<int, int>> adjacency;
  std::vector<std::map<int, double>> attention;
  std::vector<DenseVector> z;
  std::vector<double> last_update;
  double current_time = 0.0;
};

class DynamicGraphState {
 public:
  DynamicGraphState() = default;

  explicit DynamicGraphState(std::vector<DenseVector> z0)
      : adjacency_(z0.size()),
        attention_(z0.size()),
        z_(std::move(z0)),
        last_update_(z_.size(), 0.0) {}

  int service_count() const { return static_cast<int>(z_.size()); }
  double current_time() const { return current_time_; }

  const std::map<int, int>& adjacency_row(int s) const {
    check_id(s, "adjacency_row");
    return adjacency_[s];
  }

  const std::map<int, double>& attention_row(int s) const {
    check_id(s, "attention_row");
    return attention_[s];
  }

  std::vector<int> neighbors(int s) const {
    check_id(s, "neighbors");
    std::vector<int> out;
    out.reserve(adjacency_[s].size());
    for (const auto& [v, c] : adjacency_[s])
      if (c > 0) out.push_back(v);
    return out;
  }

  const DenseVector& representation(int s) const {
    check_id(s, "representation");
    return z_[s];
  }

  const std::vector<DenseVector>& representations() const { return z_; }

  double last_update(int s) const {
    check_id(s, "last_update");
    return last_update_[s];
  }

  const std::vector<double>& last_updates() const { return last_update_; }

  void set_representation(int s, DenseVector z, double t) {
    check_id(s, "set_representation");
    if (z.size() != z_[s].size())
      throw std::invalid_argument("set_representation: dimension change for service " +
                                  std::to_string(s));
    z_[s] = std::move(z);
    last_update_[s] = t;
    if (t > current_time_) current_time_ = t;
  }

  void apply_event_topology(const CoInvocationEvent& o, double lambda) {
    if (!(lambda > 0.0))
      throw std::invalid_argument("apply_event_topology: lambda must be positive");
    check_id(o.u, "apply_event_topology");
    check_id(o.v, "apply_event_topology");
    if (o.u == o.v)
      throw std::invalid_argument("apply_event_topology: self-event on service " +
                                  std::to_string(o.u));

    const int pre_count = count(o.u, o.v);
    const std::size_t pre_deg_u = adjacency_[o.u].size();
    const std::size_t pre_deg_v = adjacency_[o.v].size();
    adjacency_[o.u][o.v] += 1;
    adjacency_[o.v][o.u] += 1;

    update_attention_row(o.u, o.v, pre_count, pre_deg_u, lambda);
    update_attention_row(o.v, o.u, pre_count, pre_deg_v, lambda);
    if (o.t > current_time_) current_time_ = o.t;
  }

  int count(int u, int v) const {
    check_id(u, "count");
    check_id(v, "count");
    auto it = adjacency_[u].find(v);
    return it == adjacency_[u].end() ? 0 : it->second;
  }

  GraphSnapshot snapshot() const {
    return {adjacency_, attention_, z_, last_update_, current_time_};
  }

  /// Restores the topology side (A, S, last_update, clock) of a snapshot
  /// while keeping the current representations.
  void restore_topology(const GraphSnapshot& snap) {
    if (snap.adjacency.size() != adjacency_.size())
      throw std::invalid_argument("restore_topology: service count mismatch");
    adjacency_ = snap.adjacency;
    attention_ = snap.attention;
    last_update_ = snap.last_update;
    current_time_ = snap.current_time;
  }

  void restore(const GraphSnapshot& snap) {
    restore_topology(snap);
    z_ = snap.z;
  }

  // Used by checkpoint loading; rows must already satisfy the invariants.
  void set_topology(std::vector<std::map<int, int>> adj, std::vector<std::map<int, double>> attn,
                    std::vector<double> last_update, double current_time) {
    adjacency_ = std::move(adj);
    attention_ = std::move(attn);
    last_update_ = std::move(last_update);
    current_time_ = current_time;
  }

 private:
  void check_id(int s, const char* where) const {
    if (s < 0 || static_cast<std::size_t>(s) >= z_.size())
      throw std::invalid_argument(std::string(where) + ": unknown service id " +
                                  std::to_string(s));
  }

  void update_attention_row(int j, int partner, int pre_count, std::size_t pre_degree,
                            double lambda) {
    std::map<int, double>& row = attention_[j];
    const double b = 1.0 / static_cast<double>(adjacency_[j].size());
    if (pre_count > 0) {
      row[partner] = b + lambda;
    } else {
      const double b_prime = pre_degree == 0 ? 0.0 : 1.0 / static_cast<double>(pre_degree);
      const double x = b_prime - b;
      for (auto& [w, y] : row)
        if (w != partner && y != 0.0) y -= x;
      row[partner] = b + lambda;
    }
    normalize_row(j);
  }

  void normalize_row(int j) {
    std::map<int, double>& row = attention_[j];
    double sum = 0.0;
    for (auto it = row.begin(); it != row.end();) {
      if (it->second <= 0.0) {
        it = row.erase(it);
      } else {
        sum += it->second;
        ++it;
      }
    }
    if (row.empty() || sum <= 0.0) {
      row.clear();
      const auto& adj = adjacency_[j];
      if (adj.empty()) return;
      const double u = 1.0 / static_cast<double>(adj.size());
      for (const auto& [v, c] : adj) row[v] = u;
      return;
    }
    for (auto& [w, y] : row) y /= sum;
  }

  std::vector<std::map<int, int>> adjacency_;
  std::vector<std::map<int, double>> attention_;
  std::vector<DenseVector> z_;
  std::vector<double> last_update_;
  double current_time_ = 0.0;
};

/// Builds the state from an initialization prefix: pairwise co-invocation
/// counts from every component set, uniform attention rows over the
/// resulting neighborhoods, last_update at each service's latest appearance
/// (0 if it never appears).
inline DynamicGraphState init_from_history(const std::vector<RequirementSample>& mashups,
                                           std::vector<DenseVector> z0) {
  DynamicGraphState state(std::move(z0));
  const int n = state.service_count();
  std::vector<std::map<int, int>> adj(n);
  std::vector<double> last_update(n, 0.0);
  double current_time = 0.0;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (const RequirementSample& m : mashups) {
    if (m.t < prev_t)
      throw std::invalid_argument("init_from_history: samples not sorted by timestamp");
    prev_t = m.t;
    for (int s : m.components) {
      if (s < 0 || s >= n)
        throw std::runtime_error("init_from_history: component service index " +
                                 std::to_string(s) + " outside registry");
      last_update[s] = std::max(last_update[s], m.t);
    }
    for (std::size_t i = 0; i < m.components.size(); ++i)
      for (std::size_t j = i + 1; j < m.components.size(); ++j) {
        const int a = m.components[i], b = m.components[j];
        if (a == b) continue;
        adj[a][b] += 1;
        adj[b][a] += 1;
      }
    current_time = std::max(current_time, m.t);
  }
  std::vector<std::map<int, double>> attn(n);
  for (int j = 0; j < n; ++j) {
    if (adj[j].empty()) continue;
    const double u = 1.0 / static_cast<double>(adj[j].size());
    for (const auto& [v, c] : adj[j]) attn[j][v] = u;
  }
  state.set_topology(std::move(adj), std::move(attn), std::move(last_update), current_time);
  return state;
}

}  // namespace dysr
