#pragma once

// Brute-force references the tests trust: a nested-loop join that sorts all
// answers, and explicit enumeration of every s-t path of a DAG. Nothing here
// touches the engine's data structures.

#include <anyk/answer.hpp>
#include <anyk/query.hpp>
#include <anyk/weight.hpp>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

namespace anyk {

struct OracleCapExceeded : std::runtime_error {
    OracleCapExceeded() : std::runtime_error("oracle cap exceeded") {}
};

struct CycleDetected : std::runtime_error {
    CycleDetected() : std::runtime_error("graph contains a cycle") {}
};

namespace detail {

inline bool values_less(const std::vector<Value>& a, const std::vector<Value>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

template <class D>
bool answer_less(const RankedAnswer<D>& a, const RankedAnswer<D>& b) {
    if (D::less(a.weight, b.weight)) return true;
    if (D::less(b.weight, a.weight)) return false;
    if (values_less(a.head, b.head)) return true;
    if (values_less(b.head, a.head)) return false;
    return std::lexicographical_compare(a.witness.begin(), a.witness.end(),
                                        b.witness.begin(), b.witness.end(), values_less);
}

}  // namespace detail

// All answers of q over db, ascending by (weight, head, witness). Every
// partial assignment counts against the cap. MinWeight keeps, per distinct
// head, the preferred combined weight and the witness that produced it.
template <class D>
std::vector<RankedAnswer<D>> oracle_join_sort(const ConjunctiveQuery& q, const Database& db,
                                              Semantics sem = Semantics::AllWeights,
                                              size_t cap = 1000000) {
    size_t ell = q.atoms.size();
    std::vector<const Relation*> rels(ell);
    for (size_t i = 0; i < ell; ++i) {
        rels[i] = db.find(q.physical_rel(int(i)));
        if (!rels[i]) throw std::runtime_error("unknown relation: " + q.physical_rel(int(i)));
    }

    std::vector<RankedAnswer<D>> out;
    std::vector<std::vector<Value>> witness(ell);
    std::vector<typename D::W> folded(ell + 1);
    folded[0] = D::one();
    std::unordered_map<std::string, Value> bind;
    size_t visited = 0;

    auto rec = [&](auto&& self, size_t ai) -> void {
        if (ai == ell) {
            RankedAnswer<D> a;
            a.weight = folded[ell];
            for (const std::string& v : q.free_vars) a.head.push_back(bind.at(v));
            a.witness = witness;
            out.push_back(std::move(a));
            return;
        }
        const Atom& atom = q.atoms[ai];
        const Relation& rel = *rels[ai];
        std::vector<std::string> fresh;
        for (size_t r = 0; r < rel.size(); ++r) {
            const Value* row = rel.row(r);
            if (!row_passes(q, db, int(ai), row)) continue;
            bool match = true;
            fresh.clear();
            for (size_t p = 0; p < atom.vars.size() && match; ++p) {
                auto [it, ins] = bind.emplace(atom.vars[p], row[p]);
                if (ins)
                    fresh.push_back(atom.vars[p]);
                else if (it->second != row[p])
                    match = false;
            }
            if (match) {
                if (++visited > cap) throw OracleCapExceeded();
                witness[ai].assign(row, row + rel.arity);
                folded[ai + 1] = D::combine(
                    folded[ai], atom.introduced
                                    ? D::one()
                                    : lift_weight<D>(rel.weights[r], int(ai), int(ell)));
                self(self, ai + 1);
            }
            for (const std::string& v : fresh) bind.erase(v);
        }
    };
    rec(rec, 0);

    if (sem == Semantics::MinWeight) {
        std::map<std::vector<Value>, RankedAnswer<D>> groups;
        for (auto& a : out) {
            auto [it, ins] = groups.emplace(a.head, a);
            if (!ins && D::less(a.weight, it->second.weight)) it->second = a;
        }
        out.clear();
        for (auto& [h, a] : groups) out.push_back(std::move(a));
    }
    std::stable_sort(out.begin(), out.end(), detail::answer_less<D>);
    for (size_t i = 0; i < out.size(); ++i) out[i].rank = (long long)i + 1;
    return out;
}

template <class D>
struct DagEdge {
    int u, v;
    typename D::W w;
};

template <class D>
struct RankedPath {
    typename D::W weight{};
    std::vector<std::pair<int, int>> edges;
};

// Every s-t path, ascending by (weight, edge list). Nodes unreachable from s
// or not reaching t are pruned before the DFS so dead ends cost nothing.
template <class D>
std::vector<RankedPath<D>> oracle_dag_paths(const std::vector<DagEdge<D>>& g, int s, int t,
                                            size_t cap = 1000000) {
    std::unordered_map<int, int> id;
    auto intern = [&](int node) {
        auto [it, ins] = id.emplace(node, int(id.size()));
        return it->second;
    };
    int si = intern(s), ti = intern(t);
    std::vector<std::pair<int, int>> es;  // interned endpoints per edge
    for (const auto& e : g) es.push_back({intern(e.u), intern(e.v)});
    size_t n = id.size();

    std::vector<std::vector<int>> fwd(n), bwd(n);
    std::vector<int> indeg(n, 0);
    for (size_t i = 0; i < es.size(); ++i) {
        fwd[size_t(es[i].first)].push_back(int(i));
        bwd[size_t(es[i].second)].push_back(int(i));
        ++indeg[size_t(es[i].second)];
    }
    {
        std::vector<int> q;
        for (size_t v = 0; v < n; ++v)
            if (indeg[v] == 0) q.push_back(int(v));
        size_t done = 0;
        while (done < q.size()) {
            int v = q[done++];
            for (int ei : fwd[size_t(v)])
                if (--indeg[size_t(es[size_t(ei)].second)] == 0)
                    q.push_back(es[size_t(ei)].second);
        }
        if (done < n) throw CycleDetected();
    }

    std::vector<char> to_t(n, 0);
    {
        std::vector<int> q{ti};
        to_t[size_t(ti)] = 1;
        while (!q.empty()) {
            int v = q.back();
            q.pop_back();
            for (int ei : bwd[size_t(v)]) {
                int u = es[size_t(ei)].first;
                if (!to_t[size_t(u)]) {
                    to_t[size_t(u)] = 1;
                    q.push_back(u);
                }
            }
        }
    }

    std::vector<RankedPath<D>> out;
    if (!to_t[size_t(si)]) return out;
    std::vector<std::pair<int, int>> path;
    std::vector<typename D::W> folded{D::one()};
    auto dfs = [&](auto&& self, int v) -> void {
        if (v == ti) {
            if (out.size() >= cap) throw OracleCapExceeded();
            out.push_back({folded.back(), path});
            return;
        }
        for (int ei : fwd[size_t(v)]) {
            int w = es[size_t(ei)].second;
            if (!to_t[size_t(w)]) continue;
            path.push_back({g[size_t(ei)].u, g[size_t(ei)].v});
            folded.push_back(D::combine(folded.back(), g[size_t(ei)].w));
            self(self, w);
            folded.pop_back();
            path.pop_back();
        }
    };
    dfs(dfs, si);

    std::sort(out.begin(), out.end(), [](const RankedPath<D>& a, const RankedPath<D>& b) {
        if (D::less(a.weight, b.weight)) return true;
        if (D::less(b.weight, a.weight)) return false;
        return a.edges < b.edges;
    });
    return out;
}

}  // namespace anyk
