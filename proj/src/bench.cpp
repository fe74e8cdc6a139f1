#include <anyk/bench.hpp>

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace anyk {

ConjunctiveQuery path_cq(int ell) {
    std::string s = "Q(x0";
    for (int i = 1; i <= ell; ++i) s += ", x" + std::to_string(i);
    s += ") :- ";
    for (int i = 1; i <= ell; ++i)
        s += (i > 1 ? ", R" : "R") + std::to_string(i) + "(x" + std::to_string(i - 1) + ", x" +
             std::to_string(i) + ")";
    return parse_query(s);
}

Database gen_synthetic(long long n, int ell, int domain_divisor, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("tuple count must be at least 1");
    if (ell < 1) throw std::invalid_argument("chain length must be at least 1");
    if (domain_divisor < 1) throw std::invalid_argument("domain divisor must be at least 1");

    std::mt19937_64 eng(seed);
    long long domain = n / domain_divisor;
    if (domain < 1) domain = 1;

    Database db;
    for (int i = 1; i <= ell; ++i) {
        Relation& r = db.add("R" + std::to_string(i), 2);
        for (long long t = 0; t < n; ++t) {
            Value a = 1 + Value(eng() % std::uint64_t(domain));
            Value b = 1 + Value(eng() % std::uint64_t(domain));
            // 53-bit mantissa scaled into [0, 10000); identical on every
            // platform, unlike the standard distributions
            double w = double(eng() >> 11) * (10000.0 / 9007199254740992.0);
            r.add({a, b}, w);
        }
    }
    return db;
}

namespace {

// damping 0.85, 50 power iterations, dangling mass spread uniformly
std::vector<double> pagerank(const Relation& e) {
    Value max_id = 0;
    for (size_t i = 0; i < e.vals.size(); ++i) max_id = std::max(max_id, e.vals[i]);
    size_t n = size_t(max_id) + 1;
    const double d = 0.85;

    std::vector<double> deg(n, 0.0), pr(n, 1.0 / double(n)), nxt(n);
    for (size_t r = 0; r < e.size(); ++r) deg[size_t(e.row(r)[0])] += 1.0;
    for (int iter = 0; iter < 50; ++iter) {
        double dangling = 0.0;
        for (size_t v = 0; v < n; ++v)
            if (deg[v] == 0.0) dangling += pr[v];
        double base = (1.0 - d) / double(n) + d * dangling / double(n);
        nxt.assign(n, base);
        for (size_t r = 0; r < e.size(); ++r) {
            const Value* row = e.row(r);
            nxt[size_t(row[1])] += d * pr[size_t(row[0])] / deg[size_t(row[0])];
        }
        pr.swap(nxt);
    }
    return pr;
}

}  // namespace

GraphWorkload gen_graph_query(const std::string& edge_csv, int ell, GraphWeights mode) {
    if (ell < 1) throw std::invalid_argument("chain length must be at least 1");

    // edge files come with or without a weight column; peek to decide
    size_t cols = 0;
    {
        std::ifstream in(edge_csv);
        if (!in) throw IngestError("cannot open " + edge_csv);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            cols = 1 + size_t(std::count(line.begin(), line.end(), ','));
            break;
        }
        if (cols != 2 && cols != 3)
            throw IngestError(edge_csv + ": expected u,v or u,v,weight lines");
    }

    GraphWorkload out;
    Relation& e = ingest_csv(out.db, "E", edge_csv, 2,
                             cols == 3 ? WeightMode::LastColumn : WeightMode::Unit);
    if (mode == GraphWeights::PageRank) {
        auto pr = pagerank(e);
        for (size_t r = 0; r < e.size(); ++r)
            e.weights[r] = pr[size_t(e.row(r)[0])] + pr[size_t(e.row(r)[1])];
    }

    std::string s = "Q(x0";
    for (int i = 1; i <= ell; ++i) s += ", x" + std::to_string(i);
    s += ") :- ";
    for (int i = 1; i <= ell; ++i)
        s += std::string(i > 1 ? ", " : "") + "E(x" + std::to_string(i - 1) + ", x" +
             std::to_string(i) + ")";
    out.q = parse_query(s);
    return out;
}

std::string ttk_csv(const std::vector<TtkRow>& rows) {
    std::ostringstream os;
    os << "algo,workload,k,elapsed_ns,pq_pops,pq_pushes,succ_calls,max_pq_size\n";
    for (const TtkRow& r : rows)
        os << r.algo << ',' << r.workload << ',' << r.k << ',' << r.elapsed_ns << ','
           << r.pq_pops << ',' << r.pq_pushes << ',' << r.succ_calls << ',' << r.max_pq_size
           << '\n';
    return os.str();
}

}  // namespace anyk
