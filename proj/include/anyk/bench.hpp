#pragma once

// Workload builders and measured runs. Generators are seeded and
// platform-stable (explicit modulo and bit-shift sampling instead of
// standard-library distributions); measurements pair exact operation
// counters with informative wall-clock times.

#include <anyk/project.hpp>
#include <anyk/query.hpp>
#include <anyk/relation.hpp>
#include <anyk/weight.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace anyk {

// Chain query over ell binary atoms R1..Rell on consecutive variables.
ConjunctiveQuery path_cq(int ell);

// ell binary relations of n tuples each, named for path_cq: values uniform
// over [1, max(1, n/domain_divisor)] so a tuple matches domain_divisor
// tuples of the next relation on average, weights uniform real in
// [0, 10000].
Database gen_synthetic(long long n, int ell, int domain_divisor, std::uint64_t seed);

enum class GraphWeights { Provided, PageRank };

struct GraphWorkload {
    ConjunctiveQuery q;
    Database db;
};

// Walk workload over one weighted edge list: an ell-step chain query whose
// atoms all read the same edge relation. Edge files carry u,v[,w] lines;
// PageRank mode replaces weights with PR(u) + PR(v).
GraphWorkload gen_graph_query(const std::string& edge_csv, int ell,
                              GraphWeights mode = GraphWeights::Provided);

struct TtkRow {
    std::string algo;
    std::string workload;
    size_t k = 0;
    std::uint64_t elapsed_ns = 0;
    std::uint64_t pq_pops = 0;
    std::uint64_t pq_pushes = 0;
    std::uint64_t succ_calls = 0;
    std::uint64_t max_pq_size = 0;
};

// Header plus one line per row.
std::string ttk_csv(const std::vector<TtkRow>& rows);

// Runs the iterator over the workload and snapshots time and counters when
// the k-th answer lands, for each requested k. Elapsed time counts from
// before instance construction, so the first row carries preprocessing.
// Answers are consumed into a sink; nothing is serialized while timing.
// A nonzero budget stops the run at the first answer past it.
template <class D = Tropical>
std::vector<TtkRow> measure_ttk(const std::string& algo_name, const AlgoChoice& algo,
                                const std::string& workload_name, const ConjunctiveQuery& q,
                                const Database& db, std::vector<size_t> checkpoints,
                                std::uint64_t budget_ns = 0, bool* budget_hit = nullptr) {
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    while (!checkpoints.empty() && checkpoints.front() == 0)
        checkpoints.erase(checkpoints.begin());
    if (budget_hit) *budget_hit = false;

    std::vector<TtkRow> rows;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count());
    };

    auto it = enumerate_all_weight<D>(q, db, algo);
    RankedAnswer<D> a;
    size_t produced = 0, next_ck = 0;
    while (next_ck < checkpoints.size() && it->next(a)) {
        ++produced;
        if (produced == checkpoints[next_ck]) {
            const IterStats& s = it->stats();
            rows.push_back({algo_name, workload_name, produced, elapsed(), s.pq_pops,
                            s.pq_pushes, s.succ_calls, s.max_pq_size});
            ++next_ck;
        }
        if (budget_ns && elapsed() > budget_ns) {
            if (budget_hit) *budget_hit = true;
            break;
        }
    }
    return rows;
}

}  // namespace anyk
