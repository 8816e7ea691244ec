#include "adoptkit/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace adoptkit {

CentralityScores compute_centralities(const StaticGraph& g, double tol, std::uint32_t max_iter) {
    const std::size_t n = g.node_count();
    CentralityScores out;
    out.closeness.assign(n, 0.0);
    out.betweenness.assign(n, 0.0);
    out.eigenvector.assign(n, 0.0);
    if (n == 0) return out;

    // ---- closeness + betweenness via one Brandes sweep per source ----
    std::vector<std::int32_t> dist(n);
    std::vector<std::uint64_t> sigma(n);
    std::vector<double> delta(n);
    std::vector<std::uint32_t> order; // BFS visit order
    order.reserve(n);
    std::vector<std::uint32_t> frontier;

    const double nd = static_cast<double>(n);
    for (std::uint32_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(sigma.begin(), sigma.end(), 0);
        order.clear();
        dist[s] = 0;
        sigma[s] = 1;
        frontier.clear();
        frontier.push_back(s);
        std::size_t head = 0;
        std::uint64_t dist_sum = 0;
        while (head < frontier.size()) {
            std::uint32_t v = frontier[head++];
            order.push_back(v);
            dist_sum += static_cast<std::uint64_t>(dist[v]);
            for (std::uint32_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                std::uint32_t w = g.neighbors[e];
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    frontier.push_back(w);
                }
                if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
            }
        }
        const std::size_t reach = order.size(); // includes s
        if (reach > 1 && dist_sum > 0) {
            double r1 = static_cast<double>(reach - 1);
            out.closeness[s] = (n > 1)
                ? (r1 / (nd - 1.0)) * (r1 / static_cast<double>(dist_sum))
                : 0.0;
        }
        // dependency accumulation, reverse BFS order
        std::fill(delta.begin(), delta.end(), 0.0);
        for (std::size_t i = order.size(); i-- > 1;) { // skip source at i==0
            std::uint32_t w = order[i];
            for (std::uint32_t e = g.offsets[w]; e < g.offsets[w + 1]; ++e) {
                std::uint32_t v = g.neighbors[e];
                if (dist[v] == dist[w] - 1 && sigma[w] > 0) {
                    delta[v] += (static_cast<double>(sigma[v]) / static_cast<double>(sigma[w])) *
                                (1.0 + delta[w]);
                }
            }
            if (w != s) out.betweenness[w] += delta[w];
        }
    }
    // each unordered pair was seen from both endpoints
    if (n >= 3) {
        const double norm = (nd - 1.0) * (nd - 2.0) / 2.0;
        for (auto& b : out.betweenness) b = (b / 2.0) / norm;
    } else {
        std::fill(out.betweenness.begin(), out.betweenness.end(), 0.0);
    }

    // ---- eigenvector per connected component ----
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::uint32_t> members;
    std::uint32_t worst_iters = 0;
    bool all_converged = true;
    for (std::uint32_t root = 0; root < n; ++root) {
        if (comp[root] >= 0) continue;
        members.clear();
        comp[root] = static_cast<std::int32_t>(root);
        members.push_back(root);
        for (std::size_t head = 0; head < members.size(); ++head) {
            std::uint32_t v = members[head];
            for (std::uint32_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                std::uint32_t w = g.neighbors[e];
                if (comp[w] < 0) {
                    comp[w] = static_cast<std::int32_t>(root);
                    members.push_back(w);
                }
            }
        }
        bool has_edge = false;
        for (std::uint32_t v : members)
            if (g.offsets[v + 1] > g.offsets[v]) { has_edge = true; break; }
        if (!has_edge) continue; // isolates stay at 0

        // power iteration on A+I restricted to the component
        std::vector<double> cur(members.size(), 1.0), next(members.size());
        std::vector<std::int32_t> local(n, -1);
        for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = static_cast<std::int32_t>(i);
        std::uint32_t it = 0;
        bool converged = false;
        for (; it < max_iter; ++it) {
            for (std::size_t i = 0; i < members.size(); ++i) {
                double acc = cur[i]; // the +I shift
                std::uint32_t v = members[i];
                for (std::uint32_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
                    acc += cur[static_cast<std::size_t>(local[g.neighbors[e]])];
                next[i] = acc;
            }
            double mx = 0.0;
            for (double x : next) mx = std::max(mx, x);
            double diff = 0.0;
            for (std::size_t i = 0; i < members.size(); ++i) {
                next[i] /= mx;
                diff = std::max(diff, std::abs(next[i] - cur[i]));
            }
            cur.swap(next);
            if (diff < tol) { converged = true; ++it; break; }
        }
        worst_iters = std::max(worst_iters, it);
        if (!converged) all_converged = false;
        double mx = 0.0;
        for (double x : cur) mx = std::max(mx, x);
        for (std::size_t i = 0; i < members.size(); ++i)
            out.eigenvector[members[i]] = mx > 0.0 ? cur[i] / mx : 0.0;
    }
    out.eigen_converged = all_converged;
    out.eigen_iterations = worst_iters;
    return out;
}

const CentralityCache::Entry& CentralityCache::entry_asof(const Dataset& ds, const TemporalGraph& g,
                                                          Date date) {
    auto [e1, e2] = g.topology_epoch(date);
    Key key{(static_cast<std::uint64_t>(static_cast<std::uint32_t>(g.village)) << 1) |
                static_cast<std::uint64_t>(g.kind),
            (static_cast<std::uint64_t>(e1) << 32) | e2};
    {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = map_.find(key);
        if (it != map_.end()) {
            hits_.fetch_add(1, std::memory_order_relaxed);
            return *it->second;
        }
    }
    // compute outside the lock; duplicate computations are idempotent
    auto entry = std::make_shared<Entry>();
    entry->graph = snapshot(g, ds, date);
    entry->scores = compute_centralities(entry->graph);
    std::lock_guard<std::mutex> lk(mu_);
    auto [it, inserted] = map_.emplace(key, entry);
    if (inserted) {
        misses_.fetch_add(1, std::memory_order_relaxed);
        if (!entry->scores.eigen_converged) eigen_failures_.fetch_add(1, std::memory_order_relaxed);
    } else {
        hits_.fetch_add(1, std::memory_order_relaxed);
    }
    return *it->second;
}

CentralityTriple triple_for(const CentralityCache::Entry& e, Idx farmer) {
    std::int32_t l = e.graph.local_of(farmer);
    if (l < 0) return {};
    auto i = static_cast<std::size_t>(l);
    return {e.scores.closeness[i], e.scores.betweenness[i], e.scores.eigenvector[i]};
}

CentralityTriple CentralityCache::triple_asof(const Dataset& ds, const TemporalGraph& g, Idx farmer,
                                              Date date) {
    return triple_for(entry_asof(ds, g, date), farmer);
}

} // namespace adoptkit
