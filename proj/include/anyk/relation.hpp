#pragma once

// Input vocabulary: weighted relations and databases. Values are int64; CSV
// ingestion interns every cell into the database's pool, synthetic generators
// store raw integers (interned == false).

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace anyk {

using Value = std::int64_t;

struct StringPool {
    std::vector<std::string> tok;
    std::unordered_map<std::string, Value> id;

    Value intern(std::string_view s) {
        auto it = id.find(std::string(s));
        if (it != id.end()) return it->second;
        Value v = Value(tok.size());
        tok.emplace_back(s);
        id.emplace(tok.back(), v);
        return v;
    }
    const std::string& str(Value v) const { return tok[size_t(v)]; }
};

struct Relation {
    std::string name;
    int arity = 0;
    std::vector<Value> vals;  // row-major, arity values per tuple
    std::vector<double> weights;

    size_t size() const { return weights.size(); }
    const Value* row(size_t r) const { return vals.data() + size_t(arity) * r; }
    void add(std::initializer_list<Value> rv, double w) {
        vals.insert(vals.end(), rv);
        weights.push_back(w);
    }
    void add_row(const Value* rv, double w) {
        vals.insert(vals.end(), rv, rv + arity);
        weights.push_back(w);
    }
};

struct Database {
    std::vector<Relation> rels;
    std::unordered_map<std::string, int> by_name;
    bool interned = false;
    StringPool pool;

    Relation& add(const std::string& name, int arity) {
        by_name.emplace(name, int(rels.size()));
        rels.push_back(Relation{name, arity, {}, {}});
        return rels.back();
    }
    const Relation* find(const std::string& name) const {
        auto it = by_name.find(name);
        return it == by_name.end() ? nullptr : &rels[size_t(it->second)];
    }
    // Renders a value the way it entered: pool token or plain integer.
    std::string value_text(Value v) const {
        return interned ? pool.str(v) : std::to_string(v);
    }
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class WeightMode { LastColumn, Unit, AttributeFile };

// Reads a CSV file into a fresh relation. Value cells are interned; the
// weight comes from the trailing column, from unit_weight, or from an
// attribute file of `position,value,weight` lines whose matching entries
// add up per tuple. Ragged rows and unparseable numbers are errors.
Relation& ingest_csv(Database& db, const std::string& rel_name, const std::string& path,
                     int arity, WeightMode mode, bool header = false,
                     const std::string& attr_path = "", double unit_weight = 0.0);

}  // namespace anyk
