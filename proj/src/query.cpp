#include <anyk/query.hpp>

#include <algorithm>
#include <cctype>
#include <deque>

namespace anyk {

// ---------------------------------------------------------------- parsing

namespace {

enum class Tok { Ident, Int, LParen, RParen, Comma, Arrow, End };

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

struct Lexer {
    const std::string& s;
    size_t i = 0;
    int line = 1, col = 1;

    explicit Lexer(const std::string& text) : s(text) {}

    void bump() {
        if (s[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++i;
    }
    Token next() {
        while (i < s.size()) {
            char c = s[i];
            if (c == '#') {
                while (i < s.size() && s[i] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
        if (i >= s.size()) return {Tok::End, "", line, col};
        int l = line, c = col;
        char ch = s[i];
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::string t;
            while (i < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
                t += s[i];
                bump();
            }
            return {Tok::Ident, t, l, c};
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::string t;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                t += s[i];
                bump();
            }
            return {Tok::Int, t, l, c};
        }
        if (ch == '(') { bump(); return {Tok::LParen, "(", l, c}; }
        if (ch == ')') { bump(); return {Tok::RParen, ")", l, c}; }
        if (ch == ',') { bump(); return {Tok::Comma, ",", l, c}; }
        if (ch == ':') {
            bump();
            if (i < s.size() && s[i] == '-') {
                bump();
                return {Tok::Arrow, ":-", l, c};
            }
            throw ParseError("expected ':-'", l, c);
        }
        throw ParseError(std::string("unexpected character '") + ch + "'", l, c);
    }
};

}  // namespace

ConjunctiveQuery parse_query(const std::string& text) {
    Lexer lx(text);
    Token t = lx.next();
    auto expect = [&](Tok k, const char* what) {
        if (t.kind != k) throw ParseError(std::string("expected ") + what, t.line, t.col);
        Token got = t;
        t = lx.next();
        return got;
    };

    ConjunctiveQuery q;
    q.head_name = expect(Tok::Ident, "query name").text;
    expect(Tok::LParen, "'('");
    std::vector<Token> head_toks;
    if (t.kind != Tok::RParen) {
        for (;;) {
            head_toks.push_back(expect(Tok::Ident, "head variable"));
            if (t.kind != Tok::Comma) break;
            t = lx.next();
        }
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Arrow, "':-'");

    struct RawAtom {
        Token rel;
        std::vector<Token> args;
    };
    std::vector<RawAtom> raw;
    for (;;) {
        RawAtom a;
        a.rel = expect(Tok::Ident, "relation name");
        expect(Tok::LParen, "'('");
        for (;;) {
            if (t.kind != Tok::Ident && t.kind != Tok::Int)
                throw ParseError("expected variable or constant", t.line, t.col);
            a.args.push_back(t);
            t = lx.next();
            if (t.kind != Tok::Comma) break;
            t = lx.next();
        }
        expect(Tok::RParen, "')'");
        raw.push_back(std::move(a));
        if (t.kind != Tok::Comma) break;
        t = lx.next();
    }
    if (t.kind != Tok::End) throw ParseError("trailing input after query body", t.line, t.col);

    std::unordered_set<std::string> body_vars;
    for (auto& a : raw)
        for (auto& arg : a.args)
            if (arg.kind == Tok::Ident) body_vars.insert(arg.text);
    std::unordered_set<std::string> seen_head;
    for (auto& hv : head_toks) {
        if (!body_vars.count(hv.text))
            throw ParseError("head variable absent from body: " + hv.text, hv.line, hv.col);
        if (seen_head.insert(hv.text).second) q.free_vars.push_back(hv.text);
    }

    std::unordered_map<std::string, int> rel_count;
    for (size_t ai = 0; ai < raw.size(); ++ai) {
        Atom atom;
        int occ = ++rel_count[raw[ai].rel.text];
        if (occ == 1) {
            atom.rel = raw[ai].rel.text;
        } else {
            atom.rel = raw[ai].rel.text + "__copy" + std::to_string(occ);
            atom.source_rel = raw[ai].rel.text;
            q.self_join_copies.emplace(atom.rel, raw[ai].rel.text);
        }
        std::unordered_map<std::string, int> first_pos;
        for (size_t p = 0; p < raw[ai].args.size(); ++p) {
            const Token& arg = raw[ai].args[p];
            if (arg.kind == Tok::Int) {
                atom.vars.push_back("__c" + std::to_string(ai) + "_" + std::to_string(p));
                q.selections.push_back({int(ai), int(p), -1, arg.text});
                continue;
            }
            auto [it, fresh] = first_pos.emplace(arg.text, int(p));
            if (fresh) {
                atom.vars.push_back(arg.text);
            } else {
                atom.vars.push_back(arg.text + "__dup" + std::to_string(p));
                q.selections.push_back({int(ai), int(p), it->second, ""});
            }
        }
        q.atoms.push_back(std::move(atom));
    }
    return q;
}

bool row_passes(const ConjunctiveQuery& q, const Database& db, int atom, const Value* row) {
    for (const SelectionNote& n : q.selections) {
        if (n.atom != atom) continue;
        if (n.other_pos >= 0) {
            if (row[n.pos] != row[n.other_pos]) return false;
        } else if (db.interned) {
            auto it = db.pool.id.find(n.const_tok);
            if (it == db.pool.id.end() || row[n.pos] != it->second) return false;
        } else {
            if (row[n.pos] != Value(std::stoll(n.const_tok))) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- join trees

int JoinTree::depth() const {
    // counted in nodes: a single atom has depth 1
    std::vector<int> d(parent.size(), 0);
    int best = 0;
    for (size_t i = 0; i < parent.size(); ++i) {
        int v = int(i), steps = 0;
        while (v >= 0) {
            ++steps;
            v = parent[size_t(v)];
        }
        d[i] = steps;
        best = std::max(best, steps);
    }
    return best;
}

std::vector<std::vector<int>> JoinTree::children() const {
    std::vector<std::vector<int>> ch(parent.size());
    for (size_t i = 0; i < parent.size(); ++i)
        if (parent[i] >= 0) ch[size_t(parent[i])].push_back(int(i));
    return ch;
}

CyclicError::CyclicError(std::vector<std::string> residue_)
    : std::runtime_error([&] {
          std::string m = "query is cyclic; irreducible atoms:";
          for (auto& r : residue_) m += " " + r;
          return m;
      }()),
      residue(std::move(residue_)) {}

namespace {

using VarSet = std::vector<std::string>;  // sorted unique

VarSet to_set(const std::vector<std::string>& v) {
    VarSet s = v;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

bool subset(const VarSet& a, const VarSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// One GYO pass over the hyperedges in `vars`. Each round eliminates the
// lowest-index ear of the lowest eligible ear class, choosing the
// lowest-index witness of the lowest witness class that covers the ear's
// shared variables. Class 2 entries are never picked as ears.
// Result of a GYO pass: (ear, witness) pairs, or the irreducible rest.
struct GyoResult {
    std::vector<std::pair<int, int>> edges;
    std::vector<int> residue;  // empty on success
};

GyoResult gyo_reduce(const std::vector<VarSet>& vars,
                     const std::vector<int>& ear_class,   // lower class first
                     const std::vector<int>& witness_class) {
    size_t n = vars.size();
    std::vector<char> alive(n, 1);
    size_t remaining = n;
    GyoResult out;
    while (remaining > 1) {
        int ear = -1, wit = -1;
        for (int cls = 0; cls < 2 && ear < 0; ++cls) {
            for (size_t e = 0; e < n && ear < 0; ++e) {
                if (!alive[e] || ear_class[e] != cls) continue;
                // variables of e shared with any other alive edge
                VarSet shared;
                for (const std::string& v : vars[e]) {
                    for (size_t o = 0; o < n; ++o)
                        if (o != e && alive[o] &&
                            std::binary_search(vars[o].begin(), vars[o].end(), v)) {
                            shared.push_back(v);
                            break;
                        }
                }
                for (int wcls = 0; wcls < 2 && ear < 0; ++wcls)
                    for (size_t w = 0; w < n; ++w)
                        if (w != e && alive[w] && witness_class[w] == wcls &&
                            subset(shared, vars[w])) {
                            ear = int(e);
                            wit = int(w);
                            break;
                        }
            }
        }
        if (ear < 0) {
            for (size_t e = 0; e < n; ++e)
                if (alive[e]) out.residue.push_back(int(e));
            return out;
        }
        alive[size_t(ear)] = 0;
        --remaining;
        out.edges.push_back({ear, wit});
    }
    return out;
}

// Roots the undirected tree at the max-depth candidate (lowest index on
// ties), restricted to `candidates`; children are visited in ascending index
// so BFS stage numbering is reproducible.
JoinTree root_tree(size_t n, const std::vector<std::pair<int, int>>& edges,
                   const std::vector<int>& candidates) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) {
        adj[size_t(a)].push_back(b);
        adj[size_t(b)].push_back(a);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    auto node_depth = [&](int r) {
        std::vector<int> d(n, -1);
        std::deque<int> bfs{r};
        d[size_t(r)] = 1;
        int best = 1;
        while (!bfs.empty()) {
            int v = bfs.front();
            bfs.pop_front();
            best = std::max(best, d[size_t(v)]);
            for (int w : adj[size_t(v)])
                if (d[size_t(w)] < 0) {
                    d[size_t(w)] = d[size_t(v)] + 1;
                    bfs.push_back(w);
                }
        }
        return best;
    };

    int root = candidates.front(), depth = -1;
    for (int c : candidates) {
        int d = node_depth(c);
        if (d > depth) {
            root = c;
            depth = d;
        }
    }

    JoinTree t;
    t.root = root;
    t.parent.assign(n, -1);
    std::vector<char> seen(n, 0);
    std::deque<int> bfs{root};
    seen[size_t(root)] = 1;
    while (!bfs.empty()) {
        int v = bfs.front();
        bfs.pop_front();
        for (int w : adj[size_t(v)])
            if (!seen[size_t(w)]) {
                seen[size_t(w)] = 1;
                t.parent[size_t(w)] = v;
                bfs.push_back(w);
            }
    }
    return t;
}

}  // namespace

JoinTree gyo_join_tree(const ConjunctiveQuery& q) {
    size_t n = q.atoms.size();
    std::vector<VarSet> vars(n);
    for (size_t i = 0; i < n; ++i) vars[i] = to_set(q.atoms[i].vars);
    std::vector<int> zeros(n, 0);
    GyoResult g = gyo_reduce(vars, zeros, zeros);
    if (!g.residue.empty()) {
        std::vector<std::string> names;
        for (int r : g.residue) names.push_back(q.atoms[size_t(r)].rel);
        throw CyclicError(std::move(names));
    }
    std::vector<int> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = int(i);
    return root_tree(n, g.edges, all);
}

JoinTree reroot(const JoinTree& t, int root) {
    return root_tree(t.parent.size(),
                     [&] {
                         std::vector<std::pair<int, int>> e;
                         for (size_t i = 0; i < t.parent.size(); ++i)
                             if (t.parent[i] >= 0) e.push_back({int(i), t.parent[i]});
                         return e;
                     }(),
                     {root});
}

FreeConnex is_free_connex(const ConjunctiveQuery& q) {
    FreeConnex out;
    size_t n = q.atoms.size();
    VarSet head = to_set(q.free_vars);

    std::vector<VarSet> vars(n);
    for (size_t i = 0; i < n; ++i) vars[i] = to_set(q.atoms[i].vars);

    // the query itself must be acyclic
    {
        std::vector<int> zeros(n, 0);
        GyoResult g0 = gyo_reduce(vars, zeros, zeros);
        if (!g0.residue.empty()) {
            for (int r : g0.residue) out.residue.push_back(q.atoms[size_t(r)].rel);
            return out;
        }
    }

    // GYO over the hypergraph extended with a virtual head atom, kept alive
    // until the end. Atoms with existential variables are eliminated first so
    // they attach to real witnesses while those are still present.
    std::vector<VarSet> ext = vars;
    ext.push_back(head);
    int virt = int(n);
    std::vector<int> ear_class(n + 1), wit_class(n + 1, 0);
    for (size_t i = 0; i < n; ++i) ear_class[i] = subset(vars[i], head) ? 1 : 0;
    ear_class[size_t(virt)] = 2;  // never an ear
    wit_class[size_t(virt)] = 1;  // witness of last resort
    GyoResult g = gyo_reduce(ext, ear_class, wit_class);
    if (!g.residue.empty()) {
        for (int r : g.residue)
            out.residue.push_back(r == virt ? q.head_name : q.atoms[size_t(r)].rel);
        return out;
    }

    // Assemble the output tree: originals keep their indices, a projection
    // atom is appended for every atom mixing free and existential variables.
    out.extended = q;
    std::vector<int> parent_of(n, -1);  // from the extended GYO run
    for (auto [e, w] : g.edges) parent_of[size_t(e)] = w;

    std::vector<std::pair<int, int>> edges;
    std::vector<int> prime_of(n, -1);
    std::unordered_map<std::string, int> proj_count;
    for (size_t i = 0; i < n; ++i) {
        VarSet fv;
        for (const std::string& v : vars[i])
            if (std::binary_search(head.begin(), head.end(), v)) fv.push_back(v);
        bool mixed = !fv.empty() && !subset(vars[i], head);
        if (!mixed) continue;
        Atom prime;
        int k = proj_count[q.atoms[i].rel]++;
        prime.rel = q.atoms[i].rel + "__proj" + std::to_string(k);
        prime.source_rel = q.physical_rel(int(i));
        prime.introduced = true;
        prime.proj_of = int(i);
        for (const std::string& v : q.atoms[i].vars)
            if (std::binary_search(head.begin(), head.end(), v)) prime.vars.push_back(v);
        prime_of[i] = int(out.extended.atoms.size());
        out.extended.atoms.push_back(std::move(prime));
    }

    std::vector<char> pure_free(n, 0);
    for (size_t i = 0; i < n; ++i)
        pure_free[i] = subset(vars[i], head) && !vars[i].empty();

    // Attachment rules. An atom keeps its witness as parent except that
    // free-only material must stay inside the free-only subtree: a projection
    // atom (and any free-only atom whose witness mixes in existential
    // variables) hangs under the witness's own projection atom instead. The
    // ear's shared free variables are always covered there.
    std::vector<int> crown;  // extended-atom indices of the virtual atom's children
    std::vector<VarSet> crown_vars;
    for (size_t i = 0; i < n; ++i) {
        int p = parent_of[i];
        if (p == virt) {
            if (pure_free[i]) {
                crown.push_back(int(i));
                crown_vars.push_back(vars[i]);
            } else if (prime_of[i] >= 0) {
                crown.push_back(prime_of[i]);
                crown_vars.push_back(to_set(out.extended.atoms[size_t(prime_of[i])].vars));
                edges.push_back({prime_of[i], int(i)});  // original below its projection
            }
            // atoms without free variables attach to the crown root afterwards
        } else if (p >= 0) {
            int p_in_u = pure_free[size_t(p)] ? p : prime_of[size_t(p)];
            edges.push_back({pure_free[i] && p_in_u >= 0 ? p_in_u : p, int(i)});
            if (prime_of[i] >= 0) edges.push_back({prime_of[i], p_in_u >= 0 ? p_in_u : p});
        }
    }
    size_t total = out.extended.atoms.size();
    if (crown.empty()) return out;  // no free variables anywhere: unsupported shape
    if (crown.size() > 1) {
        std::vector<int> zeros(crown.size(), 0);
        GyoResult cg = gyo_reduce(crown_vars, zeros, zeros);
        if (!cg.residue.empty()) {
            for (int r : cg.residue)
                out.residue.push_back(out.extended.atoms[size_t(crown[size_t(r)])].rel);
            return out;
        }
        for (auto [e, w] : cg.edges)
            edges.push_back({crown[size_t(e)], crown[size_t(w)]});
    }

    out.in_u.assign(total, 0);
    for (size_t i = 0; i < n; ++i)
        if (pure_free[i]) out.in_u[i] = 1;
    for (int p : prime_of)
        if (p >= 0) out.in_u[size_t(p)] = 1;

    // atoms carrying no free variable that floated to the virtual root
    int anchor = crown.front();
    for (size_t i = 0; i < n; ++i)
        if (parent_of[i] == virt && !out.in_u[i] && prime_of[i] < 0)
            edges.push_back({int(i), anchor});

    std::vector<int> candidates;
    for (size_t i = 0; i < total; ++i)
        if (out.in_u[i]) candidates.push_back(int(i));
    out.tree = root_tree(total, edges, candidates);
    out.ok = true;
    return out;
}

SerialDecomposition serial_decomposition(const JoinTree& t) {
    SerialDecomposition sd;
    size_t n = t.parent.size();
    std::vector<int> depth(n, -1);
    depth[size_t(t.root)] = 0;
    bool changed = true;
    int maxd = 0;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < n; ++i)
            if (depth[i] < 0 && t.parent[i] >= 0 && depth[size_t(t.parent[i])] >= 0) {
                depth[i] = depth[size_t(t.parent[i])] + 1;
                maxd = std::max(maxd, depth[i]);
                changed = true;
            }
    }
    sd.vertices.assign(size_t(maxd) + 1, {});
    for (size_t i = 0; i < n; ++i) sd.vertices[size_t(depth[i])].push_back(int(i));
    for (auto& v : sd.vertices) sd.width = std::max(sd.width, int(v.size()));
    return sd;
}

}  // namespace anyk
