#pragma once

// Shared hand-checked instances. The three-relation path database below is
// the reference workload used across suites; its eight answers have weights
// 111, 112, 121, 122, 231, 232, 341, 342.

#include <anyk/oracle.hpp>
#include <anyk/query.hpp>
#include <anyk/relation.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>

namespace fixtures {

inline anyk::ConjunctiveQuery path3_query() {
    return anyk::parse_query("Q(x0, x1, x2, x3) :- R1(x0, x1), R2(x1, x2), R3(x2, x3)");
}

inline anyk::Database path3_db() {
    anyk::Database db;
    anyk::Relation& r1 = db.add("R1", 2);
    r1.add({1, 1}, 1);
    r1.add({2, 1}, 2);
    r1.add({3, 2}, 3);
    r1.add({4, 2}, 4);
    anyk::Relation& r2 = db.add("R2", 2);
    r2.add({1, 4}, 100);
    r2.add({1, 5}, 200);
    r2.add({1, 6}, 300);
    r2.add({2, 7}, 400);
    anyk::Relation& r3 = db.add("R3", 2);
    r3.add({4, 1}, 10);
    r3.add({4, 2}, 20);
    r3.add({5, 3}, 30);
    r3.add({6, 3}, 40);
    return db;
}

// The same workload as an explicit layered graph: source 0, one node per
// tuple (1x, 2x, 3x by relation), sink 99. Tuple weights sit on the edge
// entering the tuple's node; edges into the sink are free.
inline std::vector<anyk::DagEdge<anyk::Tropical>> path3_dag() {
    return {
        {0, 11, 1},    {0, 12, 2},    {0, 13, 3},    {0, 14, 4},
        {11, 21, 100}, {11, 22, 200}, {11, 23, 300}, {12, 21, 100},
        {12, 22, 200}, {12, 23, 300}, {13, 24, 400}, {14, 24, 400},
        {21, 31, 10},  {21, 32, 20},  {22, 33, 30},  {23, 34, 40},
        {31, 99, 0},   {32, 99, 0},   {33, 99, 0},   {34, 99, 0},
    };
}

// Six-atom tree query (one ternary atom, five binary ones hanging off it).
inline anyk::ConjunctiveQuery tree6_query() {
    return anyk::parse_query(
        "Q(x, y, z, u, a, p, f, g) :- "
        "R1(x, y, z), R2(y, u), R3(u, a), R4(y, p), R5(p, f), R6(p, g)");
}

// Four-atom free-connex query: R3 and R4 carry existential variables.
inline anyk::ConjunctiveQuery fc4_query() {
    return anyk::parse_query(
        "Q(y1, y2, y3, y4) :- R1(y1, y2), R2(y2, y3), R3(x1, y1, y4), R4(x2, y3)");
}

inline anyk::Database fc4_db() {
    anyk::Database db;
    anyk::Relation& r1 = db.add("R1", 2);
    r1.add({1, 1}, 3);
    r1.add({2, 1}, 4);
    anyk::Relation& r2 = db.add("R2", 2);
    r2.add({1, 1}, 5);
    r2.add({1, 2}, 6);
    anyk::Relation& r3 = db.add("R3", 3);
    r3.add({1, 1, 1}, 7);
    r3.add({2, 2, 1}, 8);
    anyk::Relation& r4 = db.add("R4", 2);
    r4.add({1, 1}, 1);
    r4.add({2, 1}, 2);
    r4.add({1, 2}, 9);
    return db;
}

// Path of ell binary relations chained on consecutive variables.
inline anyk::ConjunctiveQuery path_query(int ell) {
    std::string s = "Q(x0";
    for (int i = 1; i <= ell; ++i) s += ", x" + std::to_string(i);
    s += ") :- ";
    for (int i = 1; i <= ell; ++i)
        s += (i > 1 ? ", R" : "R") + std::to_string(i) + "(x" + std::to_string(i - 1) +
             ", x" + std::to_string(i) + ")";
    return anyk::parse_query(s);
}

// Star: arms binary relations sharing the first variable.
inline anyk::ConjunctiveQuery star_query(int arms) {
    std::string s = "Q(c";
    for (int i = 1; i <= arms; ++i) s += ", x" + std::to_string(i);
    s += ") :- ";
    for (int i = 1; i <= arms; ++i)
        s += (i > 1 ? ", R" : "R") + std::to_string(i) + "(c, x" + std::to_string(i) + ")";
    return anyk::parse_query(s);
}

// Cartesian product of ell unary relations with n tuples each.
inline anyk::ConjunctiveQuery product_query(int ell) {
    std::string s = "Q(";
    for (int i = 1; i <= ell; ++i) s += (i > 1 ? ", x" : "x") + std::to_string(i);
    s += ") :- ";
    for (int i = 1; i <= ell; ++i)
        s += (i > 1 ? ", R" : "R") + std::to_string(i) + "(x" + std::to_string(i) + ")";
    return anyk::parse_query(s);
}

// Deterministic 64-bit stream; explicit modulo instead of std distributions
// keeps runs identical across standard library implementations.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    std::uint64_t next() { return eng(); }
    std::int64_t below(std::int64_t m) { return std::int64_t(next() % std::uint64_t(m)); }
};

inline anyk::Database product_db(int ell, int n, std::uint64_t seed) {
    anyk::Database db;
    Rng rng(seed);
    for (int i = 1; i <= ell; ++i) {
        anyk::Relation& r = db.add("R" + std::to_string(i), 1);
        for (int v = 0; v < n; ++v) r.add({v}, double(rng.below(1000)));
    }
    return db;
}

// Random acyclic query built join-tree-first: atom i shares a nonempty
// subset of a previous atom's variables and adds fresh ones, so the
// hypergraph is acyclic by construction. full_head makes every variable
// free; otherwise the head covers exactly the atoms of a connected subtree
// that includes atom 0, which keeps the query free-connex.
inline anyk::ConjunctiveQuery random_tree_cq(Rng& rng, int max_atoms, int max_arity,
                                             bool full_head) {
    int n = 2 + int(rng.below(max_atoms - 1));
    std::vector<std::vector<std::string>> vars(static_cast<size_t>(n));
    std::vector<int> parent(size_t(n), -1);
    int fresh = 0;
    auto new_var = [&] { return "v" + std::to_string(fresh++); };
    int arity0 = 1 + int(rng.below(max_arity));
    for (int j = 0; j < arity0; ++j) vars[0].push_back(new_var());
    for (int i = 1; i < n; ++i) {
        int p = int(rng.below(i));
        parent[size_t(i)] = p;
        int take = 1 + int(rng.below(int(vars[size_t(p)].size())));
        std::vector<std::string> pool = vars[size_t(p)];
        for (int j = 0; j < take; ++j) {
            size_t pick = size_t(rng.below(int(pool.size())));
            vars[size_t(i)].push_back(pool[pick]);
            pool.erase(pool.begin() + int(pick));
        }
        int add = int(rng.below(max_arity));
        for (int j = 0; j < add; ++j) vars[size_t(i)].push_back(new_var());
    }

    std::vector<char> in_head(size_t(n), 1);
    if (!full_head)
        for (int i = 1; i < n; ++i)
            in_head[size_t(i)] = in_head[size_t(parent[size_t(i)])] && rng.below(2) == 0;

    anyk::ConjunctiveQuery q;
    q.head_name = "Q";
    std::vector<std::string> seen;
    for (int i = 0; i < n; ++i) {
        anyk::Atom a;
        a.rel = "R" + std::to_string(i);
        a.vars = vars[size_t(i)];
        q.atoms.push_back(std::move(a));
        if (in_head[size_t(i)])
            for (const std::string& v : vars[size_t(i)])
                if (std::find(seen.begin(), seen.end(), v) == seen.end()) {
                    seen.push_back(v);
                    q.free_vars.push_back(v);
                }
    }
    return q;
}

inline anyk::Database random_db_for(const anyk::ConjunctiveQuery& q, Rng& rng, int rows,
                                    std::int64_t domain) {
    anyk::Database db;
    for (const anyk::Atom& a : q.atoms) {
        if (!a.source_rel.empty() || a.introduced) continue;
        anyk::Relation& r = db.add(a.rel, int(a.vars.size()));
        for (int i = 0; i < rows; ++i) {
            std::vector<anyk::Value> row(a.vars.size());
            for (anyk::Value& v : row) v = rng.below(domain);
            r.add_row(row.data(), double(rng.below(1000)));
        }
    }
    return db;
}

}  // namespace fixtures
