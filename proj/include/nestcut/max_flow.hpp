#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "nestcut/errors.hpp"

namespace nestcut {

using Cap = long long;

// Per-vertex incident capacity budget. Excess never exceeds a vertex's
// incident capacity sum and a residual arc never exceeds twice one capacity,
// so inputs respecting this bound keep every intermediate quantity inside
// 64 bits. The artificial-sink vertex of an expanded clustering network is
// exempt: its excess is bounded by the max-flow value, which the source-side
// guard already caps.
inline constexpr Cap kCapacityHeadroom = Cap{1} << 62;

struct CapEdge {
  int u = -1;
  int v = -1;
  Cap capacity = 0;
};

struct MinCut {
  Cap value = 0;
  std::vector<int> source_side;  // sorted ascending, contains s, never t
};

// Max flow over undirected integer-capacity networks: push-relabel with
// highest-label selection, gap relabeling, and periodic global relabeling
// (exact distances by reverse-residual BFS). A single phase with labels up
// to 2n-1 returns a genuine flow, so the minimal min-cut source side can be
// read off as residual reachability from the source. That side is the
// intersection of all min-cut source sides and hence unique; callers get
// deterministic cut sides for free.
//
// The network is reusable: each max_flow() call resets residuals, so one
// build serves many (s, t) pairs.
class FlowNetwork {
 public:
  explicit FlowNetwork(int vertex_count) : n_(vertex_count) {
    if (vertex_count < 2) throw InvariantError("flow network needs at least 2 vertices");
  }

  // Undirected edge: capacity available in both directions, counted once in a cut.
  void add_edge(int u, int v, Cap capacity) {
    if (finalized_) throw InvariantError("add_edge after first solve");
    if (u < 0 || v < 0 || u >= n_ || v >= n_ || u == v) {
      throw InvariantError("bad edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    if (capacity < 0) throw InvariantError("negative capacity");
    edges_.push_back(CapEdge{u, v, capacity});
  }

  int vertex_count() const { return n_; }
  const std::vector<CapEdge>& edges() const { return edges_; }

  Cap max_flow(int source, int sink) {
    if (source == sink || source < 0 || sink < 0 || source >= n_ || sink >= n_) {
      throw InvariantError("max_flow needs two distinct vertices in range");
    }
    finalize();
    check_headroom(sink);
    source_ = source;
    sink_ = sink;
    ++solve_calls_;

    std::fill(excess_.begin(), excess_.end(), 0);
    for (size_t a = 0; a < res_.size(); ++a) res_[a] = cap0_[a];

    // Saturate the source's arcs, then let the first global update set exact
    // labels and activate the recipients.
    for (int i = adj_start_[source_]; i < adj_start_[source_ + 1]; ++i) {
      int a = adj_arc_[i];
      if (res_[a] == 0) continue;
      int w = arc_head_[a];
      excess_[w] += static_cast<Cap>(res_[a]);
      res_[a ^ 1] += res_[a];
      res_[a] = 0;
    }
    global_update();

    while (highest_active_ >= 0) {
      if (work_ > work_threshold_) {
        global_update();
        continue;  // the update rebuilds buckets and may leave nothing active
      }
      std::vector<int>& bucket = active_[highest_active_];
      if (bucket.empty()) {
        --highest_active_;
        continue;
      }
      int v = bucket.back();
      bucket.pop_back();
      if (!active_flag_[v] || dist_[v] != highest_active_) continue;  // superseded entry
      active_flag_[v] = false;
      discharge(v);
    }

    Cap value = excess_[sink_];
    verify_flow(value);
    extract_source_side();
    return value;
  }

  MinCut min_cut(int source, int sink) {
    MinCut cut;
    cut.value = max_flow(source, sink);
    cut.source_side = last_source_side();
    return cut;
  }

  // Minimal min-cut source side of the last solve.
  const std::vector<char>& last_source_side_mask() const { return side_mask_; }

  std::vector<int> last_source_side() const {
    std::vector<int> side;
    for (int v = 0; v < n_; ++v) {
      if (side_mask_[v]) side.push_back(v);
    }
    return side;
  }

  long long solve_calls() const { return solve_calls_; }
  long long global_updates() const { return global_updates_; }
  long long gap_events() const { return gap_events_; }

 private:
  void finalize() {
    if (finalized_) return;
    finalized_ = true;
    int m = static_cast<int>(edges_.size());
    arc_head_.resize(2 * m);
    cap0_.resize(2 * m);
    res_.resize(2 * m);
    adj_start_.assign(n_ + 1, 0);
    for (const CapEdge& e : edges_) {
      ++adj_start_[e.u + 1];
      ++adj_start_[e.v + 1];
    }
    for (int v = 0; v < n_; ++v) adj_start_[v + 1] += adj_start_[v];
    adj_arc_.resize(2 * m);
    std::vector<int> fill = adj_start_;
    for (int e = 0; e < m; ++e) {
      int a = 2 * e, b = 2 * e + 1;
      arc_head_[a] = edges_[e].v;
      arc_head_[b] = edges_[e].u;
      cap0_[a] = cap0_[b] = static_cast<unsigned long long>(edges_[e].capacity);
      adj_arc_[fill[edges_[e].u]++] = a;
      adj_arc_[fill[edges_[e].v]++] = b;
    }
    excess_.assign(n_, 0);
    dist_.assign(n_, 0);
    cur_.assign(n_, 0);
    cnt_.assign(2 * n_, 0);
    active_.assign(2 * n_, {});
    active_flag_.assign(n_, 0);
    side_mask_.assign(n_, 0);
    work_threshold_ = 12LL * n_ + 2LL * m;
  }

  void check_headroom(int sink) {
    for (int v = 0; v < n_; ++v) {
      if (v == sink) continue;
      __int128 sum = 0;
      for (int i = adj_start_[v]; i < adj_start_[v + 1]; ++i) {
        sum += cap0_[adj_arc_[i]];
      }
      if (sum > kCapacityHeadroom) {
        throw InvariantError("capacity headroom exceeded at vertex " + std::to_string(v));
      }
    }
  }

  void activate(int v) {
    if (active_flag_[v]) return;
    active_flag_[v] = 1;
    active_[dist_[v]].push_back(v);
    highest_active_ = std::max(highest_active_, dist_[v]);
  }

  void discharge(int v) {
    while (excess_[v] > 0) {
      if (cur_[v] == adj_start_[v + 1]) {
        relabel(v);
        continue;
      }
      int a = adj_arc_[cur_[v]];
      int w = arc_head_[a];
      if (res_[a] > 0 && dist_[v] == dist_[w] + 1) {
        unsigned long long delta =
            std::min(static_cast<unsigned long long>(excess_[v]), res_[a]);
        res_[a] -= delta;
        res_[a ^ 1] += delta;
        excess_[v] -= static_cast<Cap>(delta);
        bool was_idle = excess_[w] == 0;
        excess_[w] += static_cast<Cap>(delta);
        if (was_idle && w != source_ && w != sink_) activate(w);
      } else {
        ++cur_[v];
      }
    }
  }

  void relabel(int v) {
    int degree = adj_start_[v + 1] - adj_start_[v];
    work_ += 12 + degree;
    int old = dist_[v];
    int next = 2 * n_;
    for (int i = adj_start_[v]; i < adj_start_[v + 1]; ++i) {
      int a = adj_arc_[i];
      if (res_[a] > 0) next = std::min(next, dist_[arc_head_[a]] + 1);
    }
    if (next >= 2 * n_) {
      throw InvariantError("relabel found no residual arc at an excess vertex");
    }
    --cnt_[old];
    if (cnt_[old] == 0 && old < n_) gap(old);
    dist_[v] = next;
    ++cnt_[next];
    cur_[v] = adj_start_[v];
  }

  // Level g emptied below n: nothing above it can reach the sink anymore, so
  // lift those vertices past n in one step. Entries left behind in active
  // buckets are invalidated by the dist check at pop time.
  void gap(int g) {
    ++gap_events_;
    for (int v = 0; v < n_; ++v) {
      if (dist_[v] > g && dist_[v] < n_) {
        --cnt_[dist_[v]];
        dist_[v] = n_ + 1;
        ++cnt_[n_ + 1];
        if (active_flag_[v]) {
          active_[dist_[v]].push_back(v);
          highest_active_ = std::max(highest_active_, dist_[v]);
        }
      }
    }
  }

  // Exact distance labels: to the sink below n, and n + distance-to-source
  // for everything cut off from the sink. Labels only ever grow, so the
  // monotone bucket bookkeeping stays valid across updates.
  void global_update() {
    ++global_updates_;
    work_ = 0;
    int unreachable = 2 * n_ - 1;
    std::fill(dist_.begin(), dist_.end(), unreachable);
    dist_[sink_] = 0;
    dist_[source_] = n_;
    std::deque<int> queue{sink_};
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      for (int i = adj_start_[x]; i < adj_start_[x + 1]; ++i) {
        int a = adj_arc_[i];
        int w = arc_head_[a];
        // w steps to x along the reverse arc when that arc has residual
        if (res_[a ^ 1] > 0 && dist_[w] == unreachable && w != source_) {
          dist_[w] = dist_[x] + 1;
          queue.push_back(w);
        }
      }
    }
    queue.push_back(source_);
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      for (int i = adj_start_[x]; i < adj_start_[x + 1]; ++i) {
        int a = adj_arc_[i];
        int w = arc_head_[a];
        if (res_[a ^ 1] > 0 && dist_[w] == unreachable) {
          dist_[w] = dist_[x] + 1;
          queue.push_back(w);
        }
      }
    }
    std::fill(cnt_.begin(), cnt_.end(), 0);
    for (int v = 0; v < n_; ++v) ++cnt_[dist_[v]];
    for (auto& bucket : active_) bucket.clear();
    highest_active_ = -1;
    std::fill(active_flag_.begin(), active_flag_.end(), 0);
    for (int v = 0; v < n_; ++v) {
      cur_[v] = adj_start_[v];
      if (v != source_ && v != sink_ && excess_[v] > 0) activate(v);
    }
  }

  // Conservation and pair-capacity checks on the finished flow.
  void verify_flow(Cap value) const {
    std::vector<Cap> net(n_, 0);
    for (size_t e = 0; e < edges_.size(); ++e) {
      size_t a = 2 * e, b = a + 1;
      if (res_[a] + res_[b] != cap0_[a] + cap0_[b]) {
        throw InvariantError("residual pair sum drifted on edge " + std::to_string(e));
      }
      Cap fa = static_cast<Cap>(cap0_[a]) - static_cast<Cap>(res_[a]);
      net[edges_[e].u] += fa;
      net[edges_[e].v] -= fa;
    }
    for (int v = 0; v < n_; ++v) {
      Cap expect = v == source_ ? value : v == sink_ ? -value : 0;
      if (net[v] != expect) {
        throw InvariantError("flow conservation violated at vertex " + std::to_string(v));
      }
    }
  }

  void extract_source_side() {
    std::fill(side_mask_.begin(), side_mask_.end(), 0);
    side_mask_[source_] = 1;
    std::deque<int> queue{source_};
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      for (int i = adj_start_[x]; i < adj_start_[x + 1]; ++i) {
        int a = adj_arc_[i];
        int w = arc_head_[a];
        if (res_[a] > 0 && !side_mask_[w]) {
          side_mask_[w] = 1;
          queue.push_back(w);
        }
      }
    }
    if (side_mask_[sink_]) {
      throw InvariantError("sink reachable in residual graph after solve");
    }
  }

  int n_;
  std::vector<CapEdge> edges_;
  bool finalized_ = false;

  std::vector<int> arc_head_;
  std::vector<unsigned long long> cap0_;
  std::vector<unsigned long long> res_;
  std::vector<int> adj_start_;
  std::vector<int> adj_arc_;

  int source_ = -1;
  int sink_ = -1;
  std::vector<Cap> excess_;
  std::vector<int> dist_;
  std::vector<int> cur_;
  std::vector<int> cnt_;
  std::vector<std::vector<int>> active_;
  std::vector<char> active_flag_;
  std::vector<char> side_mask_;
  int highest_active_ = -1;
  long long work_ = 0;
  long long work_threshold_ = 0;

  long long solve_calls_ = 0;
  long long global_updates_ = 0;
  long long gap_events_ = 0;
};

}  // namespace nestcut
