#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nestcut/cluster_tree.hpp"
#include "nestcut/cut_cluster.hpp"
#include "nestcut/errors.hpp"
#include "nestcut/undirected_graph.hpp"

namespace nestcut {

// Priority of probing the interval [lo, hi] whose cluster-count jump is
// dk_own, next to a sibling interval with jump dk_sib. Rewards large and
// balanced jumps, wide intervals, and small alphas (coarse levels first).
inline double interval_priority(double lo, double hi, long long dk_own, long long dk_sib) {
  return 2.0 * std::log(static_cast<double>(dk_own)) + std::log(hi - lo) +
         static_cast<double>(std::min(dk_own, dk_sib)) + 1.0 / std::sqrt((lo + hi) / 2.0);
}

// The same quantity phrased for the left half of a parent interval
// [a_l, a_r] that was probed at a_m with cluster counts k_l, k_m, k_r.
inline double priority(double a_l, double a_m, double a_r, long long k_l, long long k_m,
                       long long k_r) {
  (void)a_r;
  return interval_priority(a_l, a_m, k_m - k_l, k_r - k_m);
}

struct SearchOptions {
  long long max_probes = -1;         // < 0: unlimited
  double max_seconds = 0.0;          // <= 0: unlimited
  int workers = 1;
  int fanout = 2;                    // subintervals per split; fanout-1 probes each
  long long alpha_min_target_k = 2;  // lower bracket: halve until k <= this
  long long alpha_max_target_k = 0;  // upper bracket: double until k >= this; 0: 90% of |V|
  double min_width = 1e-12;          // intervals narrower than this are spent
  std::string snapshot_path;         // empty: no periodic snapshots
  double snapshot_secs = 60.0;
  std::string stop_sentinel;         // existing file requests a graceful stop
  ClusterOptions cluster;
  // Called before every probe with (component, alpha, retry attempt);
  // doubles as a progress/logging seam and a fault-injection point in tests.
  std::function<void(int, double, int)> probe_observer;
};

// A leaf of the alpha-subdivision tree, pending a probe at its midpoints.
struct SearchInterval {
  int component = 0;
  double lo = 0.0, hi = 0.0;
  long long k_lo = 0, k_hi = 0;
  long long dk_sib = 0;
  bool retried = false;
  double prio = 0.0;
};

inline constexpr const char* kSearchStateHeader = "nestcut-search-state v1";

// Prioritized bisection of the alpha axis, one subdivision per connected
// component, sharing a single work queue and one global cluster tree.
// Probes are embarrassingly parallel; queue and tree mutations are serial
// under one mutex, so any completion order yields the same final tree.
class AlphaSearch {
 public:
  struct ComponentBracket {
    int component = 0;
    double alpha_min = 0.0, alpha_max = 0.0;
    long long k_min = 0, k_max = 0;
  };

  AlphaSearch(const UndirectedGraph& g, const SearchOptions& opt)
      : AlphaSearch(g, opt, nullptr, std::string()) {}

  // Continues a search from a state previously written by save_state; the
  // graph must be the one the state was produced from.
  static AlphaSearch resumed(const UndirectedGraph& g, const SearchOptions& opt,
                             std::istream& state, const std::string& source_name) {
    return AlphaSearch(g, opt, &state, source_name);
  }

  const ClusterTree& tree() const { return tree_; }
  long long probes_done() const { return probes_done_; }
  // Work done by this process (not restored from a resumed state).
  long long flow_calls() const { return flow_calls_; }
  long long remark_events() const { return remark_events_; }
  const std::vector<ComponentBracket>& brackets() const { return brackets_; }
  size_t pending_intervals() const { return heap_.size(); }

  // Drives the probe loop to completion (queue drained, budget exhausted,
  // or stop sentinel observed) and returns the accumulated tree.
  ClusterTree run() {
    start_time_ = std::chrono::steady_clock::now();
    last_snapshot_ = start_time_;
    int workers = std::max(1, opt_.workers);
    if (workers == 1) {
      worker_loop();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int i = 0; i < workers; ++i) pool.emplace_back([this] { worker_loop(); });
      for (std::thread& t : pool) t.join();
    }
    if (error_) std::rethrow_exception(error_);
    return tree_;
  }

  void save_state(std::ostream& out) const {
    std::lock_guard<std::mutex> lk(mu_);
    save_state_locked(out);
  }

 private:
  AlphaSearch(const UndirectedGraph& g, const SearchOptions& opt, std::istream* state,
              const std::string& source_name)
      : opt_(opt) {
    if (opt_.fanout < 2) throw InvariantError("search fan-out must be at least 2");
    component_of_ = components(g);
    int count = component_of_.empty() ? 0 : *std::max_element(component_of_.begin(),
                                                              component_of_.end()) + 1;
    views_.reserve(count);
    for (int c = 0; c < count; ++c) views_.push_back(component_subgraph(g, component_of_, c));
    if (state == nullptr) {
      tree_ = ClusterTree(g.labels(), component_of_);
      for (int c = 0; c < count; ++c) {
        if (views_[c].graph.vertex_count() < 2) continue;
        ComponentBracket b = bracket_component(c);
        brackets_.push_back(b);
        push_interval(b.component, b.alpha_min, b.alpha_max, b.k_min, b.k_max,
                      b.k_max - b.k_min);
      }
    } else {
      load_state(g, *state, source_name);
    }
  }

  // Bracketing probes: only the cluster count is kept, the partition itself
  // is discarded, so the budget=0 tree is exactly the bare fake-root tree.
  long long probe_count(int component, double alpha, int attempt) {
    if (opt_.probe_observer) opt_.probe_observer(component, alpha, attempt);
    Partition p = basic_cut_cluster(views_[component].graph, alpha, opt_.cluster);
    flow_calls_ += p.flow_calls;
    remark_events_ += p.remark_events;
    return static_cast<long long>(p.clusters.size());
  }

  ComponentBracket bracket_component(int c) {
    long long n = views_[c].graph.vertex_count();
    long long target_min = opt_.alpha_min_target_k;
    long long target_max = opt_.alpha_max_target_k > 0
                               ? std::min<long long>(opt_.alpha_max_target_k, n)
                               : static_cast<long long>(std::ceil(0.9 * static_cast<double>(n)));
    ComponentBracket b;
    b.component = c;
    long long k_at_one = probe_count(c, 1.0, 0);
    double a = 1.0;
    long long k = k_at_one;
    for (int step = 0; k > target_min; ++step) {
      if (step >= 64) {
        throw InvariantError("component " + std::to_string(c) +
                             ": clusters refuse to merge after 64 alpha halvings");
      }
      a *= 0.5;
      k = probe_count(c, a, 0);
    }
    b.alpha_min = a;
    b.k_min = k;
    a = 1.0;
    k = k_at_one;
    for (int step = 0; k < target_max; ++step) {
      if (step >= 64) {
        throw InvariantError("component " + std::to_string(c) +
                             ": clusters refuse to split after 64 alpha doublings");
      }
      a *= 2.0;
      k = probe_count(c, a, 0);
    }
    b.alpha_max = a;
    b.k_max = k;
    return b;
  }

  struct HeapOrder {
    bool operator()(const SearchInterval& x, const SearchInterval& y) const {
      if (x.prio != y.prio) return x.prio < y.prio;  // max-heap on priority
      if (x.component != y.component) return x.component > y.component;
      return x.lo > y.lo;
    }
  };

  void push_interval(int component, double lo, double hi, long long k_lo, long long k_hi,
                     long long dk_sib) {
    long long dk = k_hi - k_lo;
    if (dk < 0) {
      throw InvariantError("cluster count decreased between alpha " + std::to_string(lo) +
                           " and " + std::to_string(hi) + "; nesting violated");
    }
    if (dk == 0 || hi - lo < opt_.min_width) return;
    SearchInterval node;
    node.component = component;
    node.lo = lo;
    node.hi = hi;
    node.k_lo = k_lo;
    node.k_hi = k_hi;
    node.dk_sib = dk_sib;
    node.prio = interval_priority(lo, hi, dk, dk_sib);
    heap_.push_back(node);
    std::push_heap(heap_.begin(), heap_.end(), HeapOrder{});
  }

  bool budget_spent_locked() {
    if (opt_.max_probes >= 0 && dispatched_ >= opt_.max_probes) return true;
    if (opt_.max_seconds > 0.0) {
      auto elapsed = std::chrono::steady_clock::now() - start_time_;
      if (std::chrono::duration<double>(elapsed).count() >= opt_.max_seconds) return true;
    }
    if (!opt_.stop_sentinel.empty()) {
      auto now = std::chrono::steady_clock::now();
      if (std::chrono::duration<double>(now - last_sentinel_poll_).count() >= 0.5 ||
          sentinel_seen_) {
        last_sentinel_poll_ = now;
        if (!sentinel_seen_ && std::filesystem::exists(opt_.stop_sentinel)) {
          sentinel_seen_ = true;
        }
      }
      if (sentinel_seen_) return true;
    }
    return false;
  }

  void worker_loop() {
    std::unique_lock<std::mutex> lk(mu_);
    while (true) {
      cv_.wait(lk, [&] {
        return stop_ || error_ != nullptr || !heap_.empty() || inflight_ == 0;
      });
      if (stop_ || error_ != nullptr) return;
      if (heap_.empty()) return;  // nothing inflight either: drained
      if (budget_spent_locked()) {
        stop_ = true;
        cv_.notify_all();
        return;
      }
      std::pop_heap(heap_.begin(), heap_.end(), HeapOrder{});
      SearchInterval task = heap_.back();
      heap_.pop_back();
      dispatched_ += opt_.fanout - 1;
      ++inflight_;
      lk.unlock();

      std::vector<double> mids;
      std::vector<Partition> parts;
      std::exception_ptr probe_error;
      try {
        for (int j = 1; j < opt_.fanout; ++j) {
          double m = task.lo + (task.hi - task.lo) * j / opt_.fanout;
          if (opt_.probe_observer) opt_.probe_observer(task.component, m, task.retried ? 1 : 0);
          parts.push_back(basic_cut_cluster(views_[task.component].graph, m, opt_.cluster));
          flow_calls_ += parts.back().flow_calls;
          remark_events_ += parts.back().remark_events;
          mids.push_back(m);
        }
      } catch (...) {
        probe_error = std::current_exception();
      }

      lk.lock();
      --inflight_;
      if (probe_error) {
        if (task.retried) {
          error_ = probe_error;  // second failure on the same interval: surface
        } else {
          task.retried = true;
          heap_.push_back(task);
          std::push_heap(heap_.begin(), heap_.end(), HeapOrder{});
        }
        cv_.notify_all();
        continue;
      }
      try {
        for (size_t j = 0; j < parts.size(); ++j) {
          merge_probe_locked(task.component, mids[j], parts[j]);
        }
        probes_done_ += static_cast<long long>(parts.size());
        spawn_children_locked(task, mids, parts);
        maybe_snapshot_locked();
      } catch (...) {
        error_ = std::current_exception();  // nesting/io failures are fatal
      }
      cv_.notify_all();
    }
  }

  void merge_probe_locked(int component, double alpha, const Partition& p) {
    const std::vector<int>& to_orig = views_[component].to_original;
    std::vector<std::vector<int>> clusters;
    std::vector<std::vector<int>> heads;
    clusters.reserve(p.clusters.size());
    for (size_t i = 0; i < p.clusters.size(); ++i) {
      std::vector<int> c;
      c.reserve(p.clusters[i].size());
      for (int v : p.clusters[i]) c.push_back(to_orig[v]);
      clusters.push_back(std::move(c));
      heads.push_back({to_orig[p.heads[i]]});
    }
    tree_.merge_partition(alpha, clusters, heads);
  }

  void spawn_children_locked(const SearchInterval& task, const std::vector<double>& mids,
                             const std::vector<Partition>& parts) {
    std::vector<double> bounds{task.lo};
    std::vector<long long> ks{task.k_lo};
    for (size_t j = 0; j < mids.size(); ++j) {
      bounds.push_back(mids[j]);
      ks.push_back(static_cast<long long>(parts[j].clusters.size()));
    }
    bounds.push_back(task.hi);
    ks.push_back(task.k_hi);
    int pieces = static_cast<int>(bounds.size()) - 1;
    for (int i = 0; i < pieces; ++i) {
      long long dk_sib = 0;
      if (i > 0) dk_sib = std::max(dk_sib, ks[i] - ks[i - 1]);
      if (i + 1 < pieces) dk_sib = std::max(dk_sib, ks[i + 2] - ks[i + 1]);
      push_interval(task.component, bounds[i], bounds[i + 1], ks[i], ks[i + 1], dk_sib);
    }
  }

  void maybe_snapshot_locked() {
    if (opt_.snapshot_path.empty()) return;
    auto now = std::chrono::steady_clock::now();
    if (std::chrono::duration<double>(now - last_snapshot_).count() < opt_.snapshot_secs) return;
    last_snapshot_ = now;
    std::string tmp = opt_.snapshot_path + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw IoError("cannot write snapshot " + tmp);
      save_state_locked(out);
      if (!out.flush()) throw IoError("short write on snapshot " + tmp);
    }
    std::filesystem::rename(tmp, opt_.snapshot_path);
  }

  void save_state_locked(std::ostream& out) const {
    out << kSearchStateHeader << '\n';
    out << "components " << views_.size() << '\n';
    out << "probes " << probes_done_ << '\n';
    out << "brackets " << brackets_.size() << '\n';
    char buf[128];
    for (const ComponentBracket& b : brackets_) {
      std::snprintf(buf, sizeof buf, "b %d %.17g %.17g %lld %lld", b.component, b.alpha_min,
                    b.alpha_max, b.k_min, b.k_max);
      out << buf << '\n';
    }
    std::vector<SearchInterval> pending = heap_;
    std::sort(pending.begin(), pending.end(), [](const SearchInterval& x, const SearchInterval& y) {
      HeapOrder order;
      return order(y, x);  // highest priority first
    });
    out << "pending " << pending.size() << '\n';
    for (const SearchInterval& node : pending) {
      std::snprintf(buf, sizeof buf, "i %d %.17g %.17g %lld %lld %lld %d", node.component,
                    node.lo, node.hi, node.k_lo, node.k_hi, node.dk_sib, node.retried ? 1 : 0);
      out << buf << '\n';
    }
    tree_.save(out);
  }

  void load_state(const UndirectedGraph& g, std::istream& in, const std::string& source_name) {
    std::string line;
    int line_no = 0;
    auto next_line = [&]() {
      if (!std::getline(in, line)) {
        throw ParseError(source_name, line_no + 1, "unexpected end of file");
      }
      ++line_no;
    };
    next_line();
    if (line != kSearchStateHeader) {
      throw FormatError(source_name + ": expected header '" + std::string(kSearchStateHeader) +
                        "'");
    }
    auto expect_count = [&](const char* tag) {
      next_line();
      std::istringstream ls(line);
      std::string t;
      long long value = -1;
      if (!(ls >> t >> value) || t != tag || value < 0) {
        throw ParseError(source_name, line_no, std::string("expected: ") + tag + " <count>");
      }
      return value;
    };
    long long comp_count = expect_count("components");
    if (comp_count != static_cast<long long>(views_.size())) {
      throw ParseError(source_name, line_no, "state was produced from a different graph");
    }
    probes_done_ = expect_count("probes");
    long long bracket_count = expect_count("brackets");
    for (long long i = 0; i < bracket_count; ++i) {
      next_line();
      std::istringstream ls(line);
      std::string t;
      ComponentBracket b;
      if (!(ls >> t >> b.component >> b.alpha_min >> b.alpha_max >> b.k_min >> b.k_max) ||
          t != "b" || b.component < 0 || b.component >= static_cast<int>(views_.size())) {
        throw ParseError(source_name, line_no, "expected: b <component> <amin> <amax> <kmin> <kmax>");
      }
      brackets_.push_back(b);
    }
    long long pending_count = expect_count("pending");
    for (long long i = 0; i < pending_count; ++i) {
      next_line();
      std::istringstream ls(line);
      std::string t;
      SearchInterval node;
      int retried = 0;
      if (!(ls >> t >> node.component >> node.lo >> node.hi >> node.k_lo >> node.k_hi >>
            node.dk_sib >> retried) ||
          t != "i" || node.component < 0 || node.component >= static_cast<int>(views_.size()) ||
          !(node.lo < node.hi) || node.k_lo > node.k_hi) {
        throw ParseError(source_name, line_no, "bad pending interval");
      }
      node.retried = retried != 0;
      node.prio = interval_priority(node.lo, node.hi, node.k_hi - node.k_lo, node.dk_sib);
      heap_.push_back(node);
    }
    std::make_heap(heap_.begin(), heap_.end(), HeapOrder{});
    tree_ = ClusterTree::load(in, source_name);
    if (tree_.leaf_count() != g.vertex_count() || tree_.labels() != g.labels()) {
      throw ParseError(source_name, 0, "state tree does not match the graph");
    }
  }

  SearchOptions opt_;
  std::vector<int> component_of_;
  std::vector<ComponentView> views_;
  std::vector<ComponentBracket> brackets_;
  ClusterTree tree_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<SearchInterval> heap_;
  int inflight_ = 0;
  bool stop_ = false;
  bool sentinel_seen_ = false;
  std::exception_ptr error_;
  long long dispatched_ = 0;
  long long probes_done_ = 0;
  std::atomic<long long> flow_calls_{0};    // updated outside the lock
  std::atomic<long long> remark_events_{0};
  std::chrono::steady_clock::time_point start_time_{};
  std::chrono::steady_clock::time_point last_snapshot_{};
  std::chrono::steady_clock::time_point last_sentinel_poll_{};
};

// One-call variant matching the operation contract.
inline ClusterTree run_search(const UndirectedGraph& g, const SearchOptions& opt = {}) {
  AlphaSearch search(g, opt);
  return search.run();
}

}  // namespace nestcut
