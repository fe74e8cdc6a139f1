#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <anyk/oracle.hpp>

#include "fixtures.hpp"

using namespace anyk;

TEST_CASE("three-relation path: all answers, ascending") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();
    auto ans = oracle_join_sort<Tropical>(q, db);

    REQUIRE(ans.size() == 8);
    std::vector<double> want{111, 112, 121, 122, 231, 232, 341, 342};
    for (size_t i = 0; i < 8; ++i) CHECK(ans[i].weight == want[i]);

    CHECK(ans[0].head == std::vector<Value>{1, 1, 4, 1});
    REQUIRE(ans[0].witness.size() == 3);
    CHECK(ans[0].witness[0] == std::vector<Value>{1, 1});
    CHECK(ans[0].witness[1] == std::vector<Value>{1, 4});
    CHECK(ans[0].witness[2] == std::vector<Value>{4, 1});
}

TEST_CASE("empty relation anywhere gives no answers") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();
    db.rels[1].vals.clear();
    db.rels[1].weights.clear();
    CHECK(oracle_join_sort<Tropical>(q, db).empty());
}

TEST_CASE("cartesian product 4x4x4") {
    auto q = fixtures::product_query(3);
    auto db = fixtures::product_db(3, 4, 7);
    auto ans = oracle_join_sort<Tropical>(q, db);
    REQUIRE(ans.size() == 64);

    // all triple sums, independently of the join machinery
    std::vector<double> sums;
    for (double a : db.rels[0].weights)
        for (double b : db.rels[1].weights)
            for (double c : db.rels[2].weights) sums.push_back(a + b + c);
    std::sort(sums.begin(), sums.end());
    for (size_t i = 0; i < 64; ++i) CHECK(ans[i].weight == sums[i]);
}

TEST_CASE("minweight keeps one row per head") {
    auto q = parse_query("Q(x) :- R(x, y)");
    Database db;
    Relation& r = db.add("R", 2);
    r.add({1, 1}, 5);
    r.add({1, 2}, 3);
    r.add({2, 1}, 7);
    auto ans = oracle_join_sort<Tropical>(q, db, Semantics::MinWeight);
    REQUIRE(ans.size() == 2);
    CHECK(ans[0].head == std::vector<Value>{1});
    CHECK(ans[0].weight == 3);
    CHECK(ans[0].witness[0] == std::vector<Value>{1, 2});
    CHECK(ans[1].head == std::vector<Value>{2});
    CHECK(ans[1].weight == 7);
}

TEST_CASE("repeated variables and constants filter rows") {
    auto q = parse_query("Q(x) :- R(x, x), S(x, 3)");
    Database db;
    Relation& r = db.add("R", 2);
    r.add({1, 1}, 1);
    r.add({1, 2}, 1);
    r.add({2, 2}, 1);
    Relation& s = db.add("S", 2);
    s.add({1, 3}, 2);
    s.add({2, 4}, 2);
    auto ans = oracle_join_sort<Tropical>(q, db);
    REQUIRE(ans.size() == 1);
    CHECK(ans[0].head == std::vector<Value>{1});
    CHECK(ans[0].weight == 3);
}

TEST_CASE("self-join copies read the same relation") {
    auto q = parse_query("Q(x, y, z) :- E(x, y), E(y, z)");
    Database db;
    Relation& e = db.add("E", 2);
    e.add({1, 2}, 1);
    e.add({2, 3}, 2);
    auto ans = oracle_join_sort<Tropical>(q, db);
    REQUIRE(ans.size() == 1);
    CHECK(ans[0].head == std::vector<Value>{1, 2, 3});
    CHECK(ans[0].weight == 3);
}

TEST_CASE("cap aborts instead of truncating") {
    auto q = fixtures::product_query(3);
    auto db = fixtures::product_db(3, 10, 11);
    CHECK_THROWS_AS(oracle_join_sort<Tropical>(q, db, Semantics::AllWeights, 100),
                    OracleCapExceeded);
}

TEST_CASE("max and lexicographic rankings on the path workload") {
    auto q = fixtures::path3_query();
    auto db = fixtures::path3_db();

    auto mm = oracle_join_sort<MinMax>(q, db);
    REQUIRE(mm.size() == 8);
    std::vector<double> want{100, 100, 100, 100, 200, 200, 300, 300};
    for (size_t i = 0; i < 8; ++i) CHECK(mm[i].weight == want[i]);

    auto lx = oracle_join_sort<Lex>(q, db);
    REQUIRE(lx.size() == 8);
    CHECK(Lex::text(lx[0].weight) == "[1,100,10]");
    CHECK(Lex::text(lx[7].weight) == "[2,300,40]");
    for (size_t i = 1; i < 8; ++i) CHECK(!Lex::less(lx[i].weight, lx[i - 1].weight));
}

TEST_CASE("dag paths: single edge") {
    std::vector<DagEdge<Tropical>> g{{0, 1, 5}};
    auto paths = oracle_dag_paths<Tropical>(g, 0, 1);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].weight == 5);
    CHECK(paths[0].edges == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("dag paths: diamond") {
    std::vector<DagEdge<Tropical>> g{{0, 1, 1}, {0, 2, 2}, {1, 3, 0}, {2, 3, 0}};
    auto paths = oracle_dag_paths<Tropical>(g, 0, 3);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].weight == 1);
    CHECK(paths[0].edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 3}});
    CHECK(paths[1].weight == 2);
    CHECK(paths[1].edges == std::vector<std::pair<int, int>>{{0, 2}, {2, 3}});
}

TEST_CASE("dag paths: layered path workload matches the join") {
    auto paths = oracle_dag_paths<Tropical>(fixtures::path3_dag(), 0, 99);
    REQUIRE(paths.size() == 8);
    CHECK(paths[0].weight == 111);

    auto ans = oracle_join_sort<Tropical>(fixtures::path3_query(), fixtures::path3_db());
    REQUIRE(ans.size() == paths.size());
    for (size_t i = 0; i < ans.size(); ++i) CHECK(ans[i].weight == paths[i].weight);
}

TEST_CASE("dag paths: cycle detected") {
    std::vector<DagEdge<Tropical>> g{{0, 1, 1}, {1, 2, 1}, {2, 0, 1}, {1, 3, 1}};
    CHECK_THROWS_AS(oracle_dag_paths<Tropical>(g, 0, 3), CycleDetected);
}

TEST_CASE("dag paths: cap aborts") {
    // twenty layers of parallel edges, 2^20 distinct paths
    std::vector<DagEdge<Tropical>> g;
    for (int i = 0; i < 20; ++i) {
        g.push_back({i, i + 1, 1});
        g.push_back({i, i + 1, 2});
    }
    CHECK_THROWS_AS(oracle_dag_paths<Tropical>(g, 0, 20, 1000), OracleCapExceeded);
}
