#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <anyk/dpgraph.hpp>
#include <anyk/oracle.hpp>

#include <sstream>

#include "fixtures.hpp"

using namespace anyk;

namespace {

template <class D>
size_t total_edges(const Tdp<D>& T) {
    size_t n = 0;
    for (const auto& st : T.stages)
        for (const auto& e : st.out) n += e.to.size();
    return n;
}

// Walks the finished instance bottom-up and checks, per surviving state:
// at least one edge into every child stage, no edge into a pruned state,
// pi1 equal to the recomputed fold, and the preferred edge attaining the
// per-child optimum. Returns the number of source-terminal solutions.
template <class D>
long long check_invariants(const Tdp<D>& T) {
    std::vector<int> order{0};
    for (size_t i = 0; i < order.size(); ++i)
        for (int c : T.stages[size_t(order[i])].children) order.push_back(c);

    std::vector<std::vector<long long>> cnt(T.stages.size());
    for (size_t s = 0; s < T.stages.size(); ++s) cnt[s].assign(T.stages[s].n_states, 0);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& st = T.stages[size_t(*it)];
        for (size_t v = 0; v < st.n_states; ++v) {
            if (st.kind == StageKind::Terminal) {
                cnt[size_t(*it)][v] = 1;
                CHECK(D::eq(st.pi1[v], D::one()));
                continue;
            }
            if (st.pruned[v]) {
                for (size_t c = 0; c < st.children.size(); ++c) CHECK(T.deg(*it, int(c), int(v)) == 0);
                continue;
            }
            long long ways = 1;
            auto acc = D::one();
            for (size_t c = 0; c < st.children.size(); ++c) {
                const auto& dst = T.stages[size_t(st.children[c])];
                const auto& e = st.out[c];
                REQUIRE(e.off[v + 1] > e.off[v]);
                long long sum = 0;
                bool found = false;
                typename D::W bestw{};
                for (size_t k = e.off[v]; k < e.off[v + 1]; ++k) {
                    CHECK(!dst.pruned[size_t(e.to[k])]);
                    sum += cnt[size_t(st.children[c])][size_t(e.to[k])];
                    auto cand = D::combine(e.wt[k], dst.pi1[size_t(e.to[k])]);
                    if (!found || D::less(cand, bestw)) bestw = cand;
                    found = true;
                }
                int b = st.best[c][v];
                REQUIRE(b >= 0);
                REQUIRE(size_t(b) >= e.off[v]);
                REQUIRE(size_t(b) < e.off[v + 1]);
                CHECK(D::eq(D::combine(e.wt[size_t(b)], dst.pi1[size_t(e.to[size_t(b)])]), bestw));
                ways *= sum;
                acc = D::combine(acc, bestw);
            }
            cnt[size_t(*it)][v] = ways;
            CHECK(D::eq(st.pi1[v], acc));
        }
    }
    if (T.no_answers) return 0;
    return cnt[0][0];
}

template <class D>
Tdp<D> make(const ConjunctiveQuery& q, const Database& db) {
    auto t = gyo_join_tree(q);
    auto T = build_tdp<D>(q, t, db);
    bottom_up(T);
    return T;
}

}  // namespace

TEST_CASE("three-relation path: stage layout") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();
    auto t = gyo_join_tree(q);
    auto T = build_tdp<Tropical>(q, t, db);

    REQUIRE(T.stages.size() == 8);
    CHECK(T.stages[0].kind == StageKind::Source);
    for (int s : {1, 2, 3}) CHECK(T.stages[size_t(s)].kind == StageKind::Relation);
    for (int s : {4, 5, 6}) CHECK(T.stages[size_t(s)].kind == StageKind::Intermediate);
    CHECK(T.stages[7].kind == StageKind::Terminal);

    CHECK(T.atom_stage == std::vector<int>{1, 2, 3});
    CHECK(T.stages[0].children == std::vector<int>{4});
    CHECK(T.stages[4].children == std::vector<int>{1});
    CHECK(T.stages[1].children == std::vector<int>{5});
    CHECK(T.stages[5].children == std::vector<int>{2});
    CHECK(T.stages[2].children == std::vector<int>{6});
    CHECK(T.stages[6].children == std::vector<int>{3});
    CHECK(T.stages[3].children == std::vector<int>{7});
    CHECK(T.stages[1].parent == 4);
    CHECK(T.stages[5].parent == 1);

    // one intermediate state per distinct join value on the child side
    CHECK(T.stages[4].n_states == 1);
    CHECK(T.stages[5].n_states == 2);
    CHECK(T.stages[6].n_states == 3);
    for (int s : {1, 2, 3}) CHECK(T.stages[size_t(s)].n_states == 4);
}

TEST_CASE("three-relation path: pruning, suffix weights, top answer") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();
    auto T = make<Tropical>(q, db);

    CHECK(!T.no_answers);
    // join value 2 between the first two relations has no continuation
    CHECK(T.stages[1].pruned == std::vector<char>{0, 0, 1, 1});
    CHECK(T.stages[5].pruned == std::vector<char>{0, 1});
    CHECK(T.stages[2].pruned == std::vector<char>{0, 0, 0, 1});
    CHECK(T.stages[3].pruned == std::vector<char>{0, 0, 0, 0});
    CHECK(T.live_states == 16);

    // five tuple edges sharing join value 1 meet at a single state: two in,
    // three out
    CHECK(T.stages[1].out[0].to.size() == 2);
    CHECK(T.deg(5, 0, 0) == 3);

    CHECK(T.stages[1].pi1[0] == 110.0);
    CHECK(T.stages[1].pi1[1] == 110.0);
    CHECK(T.stages[0].pi1[0] == 111.0);
    CHECK(T.stages[7].pi1[0] == 0.0);

    auto top = top1_solution(T);
    CHECK(top.weight == 111.0);
    CHECK(top.head == std::vector<Value>{1, 1, 4, 1});
    REQUIRE(top.witness.size() == 3);
    CHECK(top.witness[0] == std::vector<Value>{1, 1});
    CHECK(top.witness[1] == std::vector<Value>{1, 4});
    CHECK(top.witness[2] == std::vector<Value>{4, 1});

    CHECK(check_invariants(T) == 8);
}

TEST_CASE("empty relations and empty joins give no answers") {
    auto q = fixtures::path3_query();

    SUBCASE("middle relation empty") {
        Database db;
        auto& r1 = db.add("R1", 2);
        r1.add({1, 1}, 1.0);
        db.add("R2", 2);
        auto& r3 = db.add("R3", 2);
        r3.add({4, 1}, 10.0);
        auto T = make<Tropical>(q, db);
        CHECK(T.no_answers);
        CHECK(T.live_states == 0);
        CHECK_THROWS_AS(top1_solution(T), EmptyResult);
    }
    SUBCASE("root relation empty") {
        Database db;
        db.add("R1", 2);
        auto& r2 = db.add("R2", 2);
        r2.add({1, 4}, 100.0);
        auto& r3 = db.add("R3", 2);
        r3.add({4, 1}, 10.0);
        auto T = make<Tropical>(q, db);
        CHECK(T.no_answers);
        CHECK_THROWS_AS(top1_solution(T), EmptyResult);
    }
    SUBCASE("nonempty relations, no join match") {
        Database db;
        auto& r1 = db.add("R1", 2);
        r1.add({1, 9}, 1.0);
        auto& r2 = db.add("R2", 2);
        r2.add({1, 4}, 100.0);
        auto& r3 = db.add("R3", 2);
        r3.add({4, 1}, 10.0);
        auto T = make<Tropical>(q, db);
        CHECK(T.no_answers);
        CHECK(check_invariants(T) == 0);
    }
}

TEST_CASE("single atom: four stages on the source-terminal walk") {
    auto q = parse_query("Q(x, y) :- R(x, y)");
    Database db;
    auto& r = db.add("R", 2);
    r.add({7, 8}, 5.0);
    r.add({3, 4}, 2.0);
    auto T = make<Tropical>(q, db);

    REQUIRE(T.stages.size() == 4);
    std::vector<StageKind> walk_kinds;
    for (int s = 0; s != -1;) {
        walk_kinds.push_back(T.stages[size_t(s)].kind);
        s = T.stages[size_t(s)].children.empty() ? -1 : T.stages[size_t(s)].children[0];
    }
    CHECK(walk_kinds == std::vector<StageKind>{StageKind::Source, StageKind::Intermediate,
                                               StageKind::Relation, StageKind::Terminal});

    CHECK(T.stages[0].pi1[0] == 2.0);
    auto top = top1_solution(T);
    CHECK(top.head == std::vector<Value>{3, 4});
    CHECK(check_invariants(T) == 2);
}

TEST_CASE("cartesian product: top answer concatenates per-relation minima") {
    auto q = fixtures::product_query(3);
    Database db;
    auto& r1 = db.add("R1", 1);
    r1.add({0}, 5.0);
    r1.add({1}, 2.0);
    auto& r2 = db.add("R2", 1);
    r2.add({0}, 7.0);
    r2.add({1}, 1.0);
    auto& r3 = db.add("R3", 1);
    r3.add({0}, 3.0);
    r3.add({1}, 3.0);  // tie, input order wins
    auto T = make<Tropical>(q, db);

    auto top = top1_solution(T);
    CHECK(top.weight == 6.0);
    CHECK(top.head == std::vector<Value>{1, 1, 0});
    CHECK(top.witness[2] == std::vector<Value>{0});
    CHECK(check_invariants(T) == 8);
}

TEST_CASE("selections apply before states are built") {
    auto q = parse_query("Q(x) :- R(x, x), S(x, 3)");
    Database db;
    auto& r = db.add("R", 2);
    r.add({1, 1}, 5.0);
    r.add({1, 2}, 7.0);
    r.add({2, 2}, 1.0);
    auto& s = db.add("S", 2);
    s.add({1, 3}, 2.0);
    s.add({2, 4}, 9.0);
    auto T = make<Tropical>(q, db);

    int rs = T.atom_stage[0];
    CHECK(T.stages[size_t(rs)].n_states == 2);  // diagonal rows only
    auto top = top1_solution(T);
    CHECK(top.weight == 7.0);
    CHECK(top.head == std::vector<Value>{1});
    CHECK(top.witness[1] == std::vector<Value>{1, 3});
    CHECK(check_invariants(T) == 1);
}

TEST_CASE("random instances: solution counts and optima match the join oracle") {
    fixtures::Rng rng(20260817);
    std::vector<std::pair<ConjunctiveQuery, int>> shapes;  // query, max rows
    for (int ell : {2, 3, 4}) shapes.push_back({fixtures::path_query(ell), 30});
    shapes.push_back({fixtures::star_query(3), 16});
    shapes.push_back({fixtures::tree6_query(), 8});

    for (const auto& [q, cap] : shapes)
        for (int rep = 0; rep < 10; ++rep) {
            int rows = 4 + int(rng.below(uint64_t(cap - 3)));
            int domain = 3 + int(rng.below(5));
            auto db = fixtures::random_db_for(q, rng, rows, domain);
            auto ans = oracle_join_sort<Tropical>(q, db);
            auto T = make<Tropical>(q, db);

            CHECK(T.no_answers == ans.empty());
            CHECK(check_invariants(T) == (long long)ans.size());
            if (!ans.empty()) {
                auto top = top1_solution(T);
                CHECK(top.weight == ans[0].weight);
            }
        }
}

TEST_CASE("path instances: edge count bounded by twice the input size") {
    fixtures::Rng rng(99);
    for (int ell : {2, 3, 4})
        for (int rep = 0; rep < 6; ++rep) {
            auto q = fixtures::path_query(ell);
            auto db = fixtures::random_db_for(q, rng, 20 + int(rng.below(11)), 4);
            size_t input = 0;
            for (const auto& r : db.rels) input += r.size();
            auto t = gyo_join_tree(q);
            auto raw = build_tdp<Tropical>(q, t, db);
            size_t before = total_edges(raw);
            CHECK(before <= 2 * input + 1);
            bottom_up(raw);
            CHECK(total_edges(raw) <= before);
        }
}

TEST_CASE("dump lists every surviving edge, source line first") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();
    auto T = make<Tropical>(q, db);

    std::ostringstream os;
    dump_tdp(T, os);
    std::istringstream is(os.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    CHECK(lines.size() == total_edges(T));
    CHECK(lines[0] == "0 0 0 0");
}

TEST_CASE("other ranking structures instantiate the same graph") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();

    SUBCASE("min-max") {
        auto T = make<MinMax>(q, db);
        auto top = top1_solution(T);
        CHECK(top.weight == 100.0);
        CHECK(check_invariants(T) == 8);
    }
    SUBCASE("lexicographic") {
        auto T = make<Lex>(q, db);
        auto top = top1_solution(T);
        CHECK(Lex::text(top.weight) == "[1,100,10]");
        CHECK(top.head == std::vector<Value>{1, 1, 4, 1});
        CHECK(check_invariants(T) == 8);
    }
    SUBCASE("product over probabilities") {
        auto q2 = fixtures::path_query(2);
        Database pdb;
        auto& r1 = pdb.add("R1", 2);
        r1.add({1, 1}, 0.5);
        r1.add({2, 1}, 0.3);
        auto& r2 = pdb.add("R2", 2);
        r2.add({1, 5}, 0.4);
        r2.add({1, 6}, 0.2);
        auto T = make<Product>(q2, pdb);
        auto top = top1_solution(T);
        CHECK(top.weight == doctest::Approx(0.06));
        CHECK(top.head == std::vector<Value>{2, 1, 6});
        CHECK(check_invariants(T) == 4);
    }
}
