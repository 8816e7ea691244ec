#pragma once

#include "adoptkit/temporal_graph.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace adoptkit {

struct CentralityScores {
    // indexed by StaticGraph local node
    std::vector<double> closeness;
    std::vector<double> betweenness;
    std::vector<double> eigenvector;
    bool eigen_converged = true;
    std::uint32_t eigen_iterations = 0;
};

// All three measures on the unweighted topology.
//
// closeness: Wasserman-Faust reach-scaled form ((r-1)/(n-1)) * ((r-1)/sum_d)
//   with r the reachable count including the node itself and n the graph
//   node count; isolated nodes score 0.
// betweenness: Brandes, endpoints excluded, each unordered pair counted
//   once, normalized by (n-1)(n-2)/2; all zeros when n < 3.
// eigenvector: power iteration per connected component (shift A+I so
//   bipartite components converge), max-entry normalized to 1 within every
//   component that has at least one edge; isolates score 0. Non-convergence
//   after max_iter returns the last iterate with eigen_converged=false.
CentralityScores compute_centralities(const StaticGraph& g, double tol = 1e-10,
                                      std::uint32_t max_iter = 10000);

struct CentralityTriple {
    double closeness = 0.0;
    double betweenness = 0.0;
    double eigenvector = 0.0;
};

// Snapshot-level memoization. Values are keyed by (village, kind, topology
// epoch); two dates with identical topology share one entry, and a hit is
// bit-identical to a fresh computation because it is the same computation.
class CentralityCache {
public:
    struct Entry {
        StaticGraph graph;
        CentralityScores scores;
    };

    const Entry& entry_asof(const Dataset& ds, const TemporalGraph& g, Date date);

    CentralityTriple triple_asof(const Dataset& ds, const TemporalGraph& g, Idx farmer, Date date);

    std::uint64_t hits() const { return hits_.load(std::memory_order_relaxed); }
    std::uint64_t misses() const { return misses_.load(std::memory_order_relaxed); }
    std::uint64_t eigen_failures() const { return eigen_failures_.load(std::memory_order_relaxed); }

private:
    struct Key {
        std::uint64_t a, b;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t x = k.a * 0x9e3779b97f4a7c15ULL ^ k.b;
            x ^= x >> 29;
            x *= 0xbf58476d1ce4e5b9ULL;
            return static_cast<std::size_t>(x ^ (x >> 32));
        }
    };

    std::mutex mu_;
    // shared_ptr targets are stable across rehashes, so returned references
    // stay valid for the cache lifetime
    std::unordered_map<Key, std::shared_ptr<const Entry>, KeyHash> map_;
    std::atomic<std::uint64_t> hits_{0}, misses_{0}, eigen_failures_{0};
};

CentralityTriple triple_for(const CentralityCache::Entry& e, Idx farmer);

} // namespace adoptkit
