#pragma once

// Conjunctive queries: parsing, hypergraph acyclicity (GYO), rooted join
// trees, the free-connex test, and serial decompositions of join trees.

#include <anyk/relation.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace anyk {

struct Atom {
    std::string rel;                 // unique per atom after preprocessing
    std::vector<std::string> vars;   // pairwise distinct after rewriting
    std::string source_rel;          // physical relation for self-join copies, else empty
    bool introduced = false;         // projection helper atom, every tuple weighs one()
    int proj_of = -1;                // atom index this projection was derived from
};

// Equality constraint on one atom, produced by rewriting repeated variables
// and constants; applied wherever the relation's rows are consumed.
struct SelectionNote {
    int atom = 0;
    int pos = 0;
    int other_pos = -1;      // >= 0: vals[pos] == vals[other_pos]
    std::string const_tok;   // other_pos < 0: vals[pos] == this constant
};

struct ConjunctiveQuery {
    std::string head_name;
    std::vector<std::string> free_vars;
    std::vector<Atom> atoms;
    std::vector<SelectionNote> selections;
    std::unordered_map<std::string, std::string> self_join_copies;

    const std::string& physical_rel(int atom) const {
        const Atom& a = atoms[size_t(atom)];
        return a.source_rel.empty() ? a.rel : a.source_rel;
    }
};

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(col_) + ")"),
          line(line_),
          col(col_) {}
};

// Grammar: `Q(v1,...,vm) :- R1(args), R2(args), ...` over identifier tokens;
// integer arguments become constants, `#` starts a comment line.
ConjunctiveQuery parse_query(const std::string& text);

struct JoinTree {
    std::vector<int> parent;  // per atom index, -1 at the root
    int root = -1;
    int depth() const;
    std::vector<std::vector<int>> children() const;
};

struct CyclicError : std::runtime_error {
    std::vector<std::string> residue;  // atoms GYO could not eliminate
    explicit CyclicError(std::vector<std::string> residue_);
};

// GYO reduction; root picked to maximize tree depth, ties toward the lowest
// atom index. Throws CyclicError with the irreducible residue.
JoinTree gyo_join_tree(const ConjunctiveQuery& q);

// Same tree re-rooted at the given atom.
JoinTree reroot(const JoinTree& t, int root);

struct FreeConnex {
    bool ok = false;
    ConjunctiveQuery extended;   // original atoms plus introduced projections
    JoinTree tree;               // rooted inside the connex subset
    std::vector<char> in_u;      // per extended atom: covers only free vars
    std::vector<std::string> residue;  // failures: the stuck part of the reduction
};

// Adds a virtual atom over the head variables and reruns GYO. On success the
// returned tree has a connected subset U whose atoms cover exactly free(Q).
FreeConnex is_free_connex(const ConjunctiveQuery& q);

struct SerialDecomposition {
    std::vector<std::vector<int>> vertices;  // atom indices grouped level-by-level
    int width = 0;                           // size of the largest vertex
};

// Level-by-level: vertex i holds the atoms at tree depth i.
SerialDecomposition serial_decomposition(const JoinTree& t);

// Row filter for one atom under the query's selection notes (constants use
// the database pool when interned).
bool row_passes(const ConjunctiveQuery& q, const Database& db, int atom, const Value* row);

}  // namespace anyk
