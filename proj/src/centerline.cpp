#include "pcat/centerline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "pcat/errors.hpp"

namespace pcat {

std::vector<std::uint32_t> SkeletonGraph::endpoints() const {
  std::vector<std::uint32_t> result;
  for (std::uint32_t n = 0; n < node_count(); ++n)
    if (degree(n) == 1) result.push_back(n);
  return result;
}

SkeletonGraph build_graph(const BinaryMask& skeleton) {
  SkeletonGraph g;
  g.dims = skeleton.dims();
  g.spacing = skeleton.spacing();
  g.origin = skeleton.origin();
  for (std::size_t i = 0; i < skeleton.size(); ++i)
    if (skeleton[i]) g.voxels.push_back(i);
  if (g.voxels.empty()) throw NoCenterlineError("no centerline: skeleton mask is empty");

  std::unordered_map<std::size_t, std::uint32_t> id_of;
  id_of.reserve(g.voxels.size() * 2);
  for (std::uint32_t n = 0; n < g.voxels.size(); ++n) id_of.emplace(g.voxels[n], n);

  g.adjacency.resize(g.voxels.size());
  const Index3 dims = g.dims;
  for (std::uint32_t n = 0; n < g.voxels.size(); ++n) {
    const Index3 ijk = g.node_index3(n);
    for (std::int64_t dk = -1; dk <= 1; ++dk)
      for (std::int64_t dj = -1; dj <= 1; ++dj)
        for (std::int64_t di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          const std::int64_t i = ijk[0] + di, j = ijk[1] + dj, k = ijk[2] + dk;
          if (i < 0 || i >= dims[0] || j < 0 || j >= dims[1] || k < 0 || k >= dims[2]) continue;
          const auto it = id_of.find(
              static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k)));
          if (it != id_of.end()) g.adjacency[n].push_back(it->second);
        }
    std::sort(g.adjacency[n].begin(), g.adjacency[n].end());
  }
  return g;
}

namespace {

double step_mm(const SkeletonGraph& g, std::uint32_t a, std::uint32_t b) {
  return euclidean_mm(g.node_world(a), g.node_world(b));
}

struct SpurWalk {
  std::vector<std::uint32_t> branch;  // endpoint ... last node before stop
  std::uint32_t stop;                 // junction or opposite endpoint
  double length_mm;                   // includes the step into `stop`
  bool ends_at_junction;
};

// Walk from a degree-1 node through degree-2 nodes until a junction or
// another endpoint.
SpurWalk walk_spur(const SkeletonGraph& g, const std::vector<char>& alive,
                   const std::vector<int>& deg,
                   const std::vector<std::vector<std::uint32_t>>& adj, std::uint32_t endpoint) {
  SpurWalk walk{{endpoint}, endpoint, 0.0, false};
  std::uint32_t prev = endpoint;
  std::uint32_t cur = endpoint;
  for (;;) {
    std::uint32_t next = std::numeric_limits<std::uint32_t>::max();
    for (const std::uint32_t nb : adj[cur]) {
      if (!alive[nb] || nb == prev) continue;
      next = nb;
      break;
    }
    if (next == std::numeric_limits<std::uint32_t>::max()) {
      // isolated chain end (cur is the opposite endpoint)
      walk.stop = cur;
      walk.ends_at_junction = false;
      return walk;
    }
    walk.length_mm += step_mm(g, cur, next);
    if (deg[next] >= 3) {
      walk.stop = next;
      walk.ends_at_junction = true;
      return walk;
    }
    if (deg[next] == 1) {
      walk.stop = next;
      walk.ends_at_junction = false;
      return walk;
    }
    walk.branch.push_back(next);
    prev = cur;
    cur = next;
  }
}

SkeletonGraph subgraph(const SkeletonGraph& g, const std::vector<char>& alive) {
  SkeletonGraph out;
  out.dims = g.dims;
  out.spacing = g.spacing;
  out.origin = g.origin;
  std::vector<std::uint32_t> remap(g.node_count(), 0);
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    if (!alive[n]) continue;
    remap[n] = static_cast<std::uint32_t>(out.voxels.size());
    out.voxels.push_back(g.voxels[n]);
  }
  out.adjacency.resize(out.voxels.size());
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    if (!alive[n]) continue;
    auto& list = out.adjacency[remap[n]];
    for (const std::uint32_t nb : g.adjacency[n])
      if (alive[nb]) list.push_back(remap[nb]);
  }
  return out;
}

}  // namespace

SkeletonGraph prune_spurs(const SkeletonGraph& graph, double min_length_mm) {
  if (min_length_mm < 0) throw std::invalid_argument("prune_spurs: negative threshold");
  std::vector<char> alive(graph.node_count(), 1);
  std::vector<int> deg(graph.node_count());
  for (std::uint32_t n = 0; n < graph.node_count(); ++n) deg[n] = graph.degree(n);

  for (;;) {
    // Shortest eligible spur this round; removing one spur can demote a
    // junction, so re-evaluate after every removal.
    bool found = false;
    SpurWalk best{};
    for (std::uint32_t n = 0; n < graph.node_count(); ++n) {
      if (!alive[n] || deg[n] != 1) continue;
      SpurWalk walk = walk_spur(graph, alive, deg, graph.adjacency, n);
      if (!walk.ends_at_junction) continue;  // chain between endpoints: main path
      if (walk.length_mm >= min_length_mm) continue;
      if (!found || walk.length_mm < best.length_mm ||
          (walk.length_mm == best.length_mm && walk.branch[0] < best.branch[0])) {
        best = walk;
        found = true;
      }
    }
    if (!found) break;
    for (const std::uint32_t n : best.branch) {
      alive[n] = 0;
      for (const std::uint32_t nb : graph.adjacency[n])
        if (alive[nb]) --deg[nb];
      deg[n] = 0;
    }
  }
  return subgraph(graph, alive);
}

namespace {

// Arc-length distances from a source node (Dijkstra; skeleton graphs are
// small and edge weights are world steps).
std::vector<double> arc_distances(const SkeletonGraph& g, std::uint32_t source) {
  std::vector<double> dist(g.node_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, n] = heap.top();
    heap.pop();
    if (d > dist[n]) continue;
    for (const std::uint32_t nb : g.adjacency[n]) {
      const double nd = d + step_mm(g, n, nb);
      if (nd < dist[nb]) {
        dist[nb] = nd;
        heap.emplace(nd, nb);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::uint32_t> find_bifurcations(const SkeletonGraph& graph,
                                             std::optional<std::uint32_t> ostium) {
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t n = 0; n < graph.node_count(); ++n)
    if (graph.degree(n) >= 3) nodes.push_back(n);
  if (ostium) {
    const std::vector<double> dist = arc_distances(graph, *ostium);
    std::stable_sort(nodes.begin(), nodes.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return graph.voxels[a] < graph.voxels[b];
    });
  }
  return nodes;  // node ids ascend with linear voxel index by construction
}

std::uint32_t locate_ostium(const SkeletonGraph& graph, const BinaryMask* aorta) {
  const std::vector<std::uint32_t> ends = graph.endpoints();
  if (ends.empty())
    throw NoCenterlineError("no ostium: skeleton graph has no endpoint");

  if (aorta != nullptr) {
    std::vector<Vec3> aorta_points;
    for (std::size_t i = 0; i < aorta->size(); ++i)
      if ((*aorta)[i]) {
        const Index3 ijk = aorta->index_of(i);
        aorta_points.push_back(aorta->world_at(ijk));
      }
    if (!aorta_points.empty()) {
      std::uint32_t best = ends.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const std::uint32_t e : ends) {
        const Vec3 p = graph.node_world(e);
        double d = std::numeric_limits<double>::infinity();
        for (const Vec3& a : aorta_points) d = std::min(d, euclidean_mm(p, a));
        if (d < best_d) {  // ties keep the smaller linear index (ends ascend)
          best_d = d;
          best = e;
        }
      }
      return best;
    }
  }

  // No aorta: most superior endpoint, ties by most rightward, then smallest
  // linear index.
  std::uint32_t best = ends.front();
  Vec3 bw = graph.node_world(best);
  for (const std::uint32_t e : ends) {
    const Vec3 w = graph.node_world(e);
    if (w[2] > bw[2] || (w[2] == bw[2] && w[0] > bw[0])) {
      best = e;
      bw = w;
    }
  }
  return best;
}

BranchPolicy max_radius_policy(const VoxelGrid<double>& dt) {
  return [&dt](const SkeletonGraph& g, std::uint32_t previous, std::uint32_t current,
               const std::vector<std::uint32_t>& candidates) -> std::uint32_t {
    const Vec3 at = g.node_world(current);
    const Vec3 from = g.node_world(previous);
    const double in_len = euclidean_mm(from, at);
    std::uint32_t best = candidates.front();
    double best_radius = -1.0;
    double best_angle = std::numeric_limits<double>::infinity();
    for (const std::uint32_t c : candidates) {
      const double radius = dt[g.voxels[c]];
      double angle = 0.0;
      if (in_len > 0) {
        const Vec3 to = g.node_world(c);
        const double out_len = euclidean_mm(at, to);
        double dot = 0.0;
        for (int a = 0; a < 3; ++a) dot += (at[a] - from[a]) * (to[a] - at[a]);
        const double cosv = std::clamp(dot / (in_len * out_len), -1.0, 1.0);
        angle = std::acos(cosv);  // turning angle, 0 = straight on
      }
      if (radius > best_radius ||
          (radius == best_radius && angle < best_angle)) {
        best = c;
        best_radius = radius;
        best_angle = angle;
      }
    }
    return best;
  };
}

CenterlinePath walk_segment(const SkeletonGraph& graph, std::uint32_t start, double skip_mm,
                            double length_mm, const VoxelGrid<double>& dt,
                            const BranchPolicy& policy,
                            std::optional<std::uint32_t> first_step) {
  if (start >= graph.node_count())
    throw std::invalid_argument("walk_segment: start node not in graph");
  if (skip_mm < 0 || length_mm < 0)
    throw std::invalid_argument("walk_segment: negative skip or length");

  // Full walk from start, then cut the [skip, skip+length] window.
  std::vector<std::uint32_t> nodes{start};
  std::vector<double> arc{0.0};
  std::uint32_t prev = start;
  std::uint32_t cur = start;
  if (first_step) {
    nodes.push_back(*first_step);
    arc.push_back(step_mm(graph, start, *first_step));
    prev = start;
    cur = *first_step;
  }
  const std::size_t max_steps = graph.node_count() + 1;
  while (arc.back() < skip_mm + length_mm && nodes.size() <= max_steps) {
    std::vector<std::uint32_t> candidates;
    for (const std::uint32_t nb : graph.adjacency[cur])
      if (nb != prev) candidates.push_back(nb);
    if (candidates.empty()) break;  // end of branch
    const std::uint32_t next =
        candidates.size() == 1 ? candidates.front() : policy(graph, prev, cur, candidates);
    arc.push_back(arc.back() + step_mm(graph, cur, next));
    nodes.push_back(next);
    prev = cur;
    cur = next;
  }

  if (arc.back() < skip_mm)
    throw ShortCenterlineError("centerline branch shorter than the " + std::to_string(skip_mm) +
                               " mm offset");

  CenterlinePath path;
  // Truncated when the walk ran out of branch before skip+length of arc.
  path.truncated = arc.back() + 1e-9 < skip_mm + length_mm;
  double base = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (arc[i] < skip_mm) continue;
    if (path.node_ids.empty()) base = arc[i];  // arc length re-zeroes here
    path.node_ids.push_back(nodes[i]);
    path.voxels.push_back(graph.voxels[nodes[i]]);
    path.points_world.push_back(graph.node_world(nodes[i]));
    path.arc_length_mm.push_back(arc[i] - base);
    path.radius_mm.push_back(dt[graph.voxels[nodes[i]]]);
    if (arc[i] - skip_mm >= length_mm) break;
  }
  return path;
}

}  // namespace pcat
