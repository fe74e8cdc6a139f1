#include <anyk/relation.hpp>

#include <cstdlib>
#include <fstream>
#include <utility>

namespace anyk {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? comma : comma - start);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t'))
            cell.pop_back();
        size_t lead = cell.find_first_not_of(" \t");
        cells.push_back(lead == std::string::npos ? std::string() : cell.substr(lead));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_weight(const std::string& cell, const std::string& path, size_t lineno) {
    const char* s = cell.c_str();
    char* end = nullptr;
    double w = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw IngestError(path + ":" + std::to_string(lineno) + ": unparseable weight '" + cell +
                          "'");
    return w;
}

}  // namespace

Relation& ingest_csv(Database& db, const std::string& rel_name, const std::string& path,
                     int arity, WeightMode mode, bool header, const std::string& attr_path,
                     double unit_weight) {
    // position and value jointly identify an attribute weight
    std::unordered_map<std::string, double> attr;
    if (mode == WeightMode::AttributeFile) {
        std::ifstream af(attr_path);
        if (!af) throw IngestError("cannot open attribute file " + attr_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(af, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            auto cells = split_line(line);
            if (cells.size() != 3)
                throw IngestError(attr_path + ":" + std::to_string(lineno) +
                                  ": expected position,value,weight");
            char* end = nullptr;
            long pos = std::strtol(cells[0].c_str(), &end, 10);
            if (end == cells[0].c_str() || *end != '\0' || pos < 0 || pos >= arity)
                throw IngestError(attr_path + ":" + std::to_string(lineno) +
                                  ": bad position '" + cells[0] + "'");
            attr[std::to_string(pos) + "\x1f" + cells[1]] =
                parse_weight(cells[2], attr_path, lineno);
        }
    }

    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);
    db.interned = true;

    std::vector<Value> rows;
    std::vector<double> weights;
    size_t expect = size_t(arity) + (mode == WeightMode::LastColumn ? 1 : 0);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (header && lineno == 1) continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_line(line);
        if (cells.size() != expect)
            throw IngestError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(expect) + " columns, got " +
                              std::to_string(cells.size()));
        double w = unit_weight;
        if (mode == WeightMode::LastColumn) w = parse_weight(cells.back(), path, lineno);
        if (mode == WeightMode::AttributeFile) {
            w = 0.0;
            for (int p = 0; p < arity; ++p) {
                auto it = attr.find(std::to_string(p) + "\x1f" + cells[size_t(p)]);
                if (it != attr.end()) w += it->second;
            }
        }
        for (int p = 0; p < arity; ++p) rows.push_back(db.pool.intern(cells[size_t(p)]));
        weights.push_back(w);
    }

    Relation& r = db.add(rel_name, arity);
    r.vals = std::move(rows);
    r.weights = std::move(weights);
    return r;
}

}  // namespace anyk
