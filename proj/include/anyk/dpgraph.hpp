#pragma once

// Staged dynamic-programming graph over a join tree: source, one relation
// stage per atom (BFS order), one intermediate stage above every relation
// stage keyed on the variables shared with the parent, and a terminal below
// every leaf. Tuple weights sit on the edge entering the tuple's state, so a
// source-terminal path spells out one join answer and folds its weight.

#include <anyk/answer.hpp>
#include <anyk/query.hpp>
#include <anyk/weight.hpp>

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace anyk {

struct EmptyResult : std::runtime_error {
    EmptyResult() : std::runtime_error("no query answers") {}
};

enum class StageKind { Source, Relation, Intermediate, Terminal };

template <class D>
struct Tdp {
    using W = typename D::W;

    struct Csr {
        std::vector<size_t> off;  // n_states + 1
        std::vector<int> to;
        std::vector<W> wt;
    };

    struct Stage {
        StageKind kind = StageKind::Relation;
        int parent = -1;
        std::vector<int> children;      // stage indices
        int atom = -1;                  // relation stages only
        const Relation* rel = nullptr;  // relation stages only
        size_t n_states = 0;
        std::vector<int> ref;     // relation: row index per state
        std::vector<char> pruned;
        std::vector<W> pi1;
        std::vector<Csr> out;                 // one per child stage
        std::vector<std::vector<int>> best;   // per child: preferred edge per state
    };

    std::vector<Stage> stages;
    std::vector<std::pair<int, int>> head_slots;  // (atom, position) per free var
    std::vector<int> atom_stage;                  // atom index -> stage index
    int ell = 0;
    bool no_answers = false;
    size_t live_states = 0;  // states surviving both pruning passes

    size_t deg(int s, int c, int v) const {
        const Csr& e = stages[size_t(s)].out[size_t(c)];
        return e.off[size_t(v) + 1] - e.off[size_t(v)];
    }
};

namespace detail {

struct KeyHash {
    size_t operator()(const std::vector<Value>& k) const {
        size_t h = 1469598103934665603ull;
        for (Value v : k) {
            h ^= size_t(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace detail

// States and edges only; run bottom_up before consuming the instance. The
// database must outlive the result (stages keep relation pointers); aux, if
// given, supplies relations materialized outside it and is searched second.
// lift_slot reassigns each atom's component position for rankings that keep
// per-atom components, so a trimmed instance can stay in the coordinate
// space of the instance it was cut from.
template <class D>
Tdp<D> build_tdp(const ConjunctiveQuery& q, const JoinTree& t, const Database& db,
                 const Database* aux = nullptr, const std::vector<int>* lift_slot = nullptr,
                 int lift_dims = 0) {
    Tdp<D> T;
    int ell = int(q.atoms.size());
    T.ell = ell;

    for (const std::string& v : q.free_vars)
        for (int a = 0; a < ell; ++a) {
            const auto& vs = q.atoms[size_t(a)].vars;
            auto it = std::find(vs.begin(), vs.end(), v);
            if (it != vs.end()) {
                T.head_slots.push_back({a, int(it - vs.begin())});
                break;
            }
        }

    // stage layout: source 0, relations 1..ell (BFS), intermediates ell+1..2ell
    // (above relation stage i sits stage ell+i), terminals last
    std::vector<int> bfs{t.root};
    auto kids = t.children();
    for (size_t i = 0; i < bfs.size(); ++i)
        for (int c : kids[size_t(bfs[i])]) bfs.push_back(c);

    T.atom_stage.assign(size_t(ell), -1);
    T.stages.resize(size_t(2 * ell + 1));
    T.stages[0].kind = StageKind::Source;
    T.stages[0].n_states = 1;
    T.stages[0].ref = {0};
    for (int i = 0; i < ell; ++i) {
        int atom = bfs[size_t(i)];
        int rs = 1 + i, is = 1 + ell + i;
        T.atom_stage[size_t(atom)] = rs;
        T.stages[size_t(rs)].kind = StageKind::Relation;
        T.stages[size_t(rs)].atom = atom;
        T.stages[size_t(rs)].parent = is;
        T.stages[size_t(is)].kind = StageKind::Intermediate;
        T.stages[size_t(is)].children = {rs};
    }
    for (int i = 0; i < ell; ++i) {
        int atom = bfs[size_t(i)];
        int is = 1 + ell + i;
        int up = t.parent[size_t(atom)] < 0 ? 0 : T.atom_stage[size_t(t.parent[size_t(atom)])];
        T.stages[size_t(is)].parent = up;
        T.stages[size_t(up)].children.push_back(is);
    }
    for (int i = 0; i < ell; ++i) {
        int rs = 1 + i;
        if (!T.stages[size_t(rs)].children.empty()) continue;
        int ts = int(T.stages.size());
        T.stages.push_back({});
        T.stages.back().kind = StageKind::Terminal;
        T.stages.back().parent = rs;
        T.stages.back().n_states = 1;
        T.stages.back().ref = {0};
        T.stages[size_t(rs)].children = {ts};
    }

    // relation states: rows passing the query's selection notes, input order
    for (int i = 0; i < ell; ++i) {
        auto& st = T.stages[size_t(1 + i)];
        const std::string& name = q.physical_rel(st.atom);
        const Relation* rel = db.find(name);
        if (!rel && aux) rel = aux->find(name);
        if (!rel) throw std::runtime_error("unknown relation: " + name);
        if (rel->arity != int(q.atoms[size_t(st.atom)].vars.size()))
            throw std::runtime_error("arity mismatch for relation " + name);
        st.rel = rel;
        for (size_t r = 0; r < rel->size(); ++r)
            if (row_passes(q, db, st.atom, rel->row(r))) st.ref.push_back(int(r));
        st.n_states = st.ref.size();
    }

    // intermediate states and the edges around them, one relation stage at a
    // time: distinct join keys in child input order, parent side looked up
    for (int i = 0; i < ell; ++i) {
        int rs = 1 + i, is = 1 + ell + i;
        auto& rst = T.stages[size_t(rs)];
        auto& ist = T.stages[size_t(is)];
        const Atom& atom = q.atoms[size_t(rst.atom)];
        int up_atom = t.parent[size_t(rst.atom)];

        std::vector<int> kpos_child, kpos_parent;
        if (up_atom >= 0) {
            const Atom& pa = q.atoms[size_t(up_atom)];
            for (size_t p = 0; p < atom.vars.size(); ++p) {
                auto it = std::find(pa.vars.begin(), pa.vars.end(), atom.vars[p]);
                if (it != pa.vars.end()) {
                    kpos_child.push_back(int(p));
                    kpos_parent.push_back(int(it - pa.vars.begin()));
                }
            }
        }

        std::unordered_map<std::vector<Value>, int, detail::KeyHash> key_id;
        std::vector<Value> key(kpos_child.size());
        std::vector<std::vector<int>> bucket;  // key ordinal -> child states
        for (size_t v = 0; v < rst.n_states; ++v) {
            const Value* row = rst.rel->row(size_t(rst.ref[v]));
            for (size_t j = 0; j < kpos_child.size(); ++j) key[j] = row[size_t(kpos_child[j])];
            auto [it, fresh] = key_id.emplace(key, int(bucket.size()));
            if (fresh) bucket.push_back({});
            bucket[size_t(it->second)].push_back(int(v));
        }
        ist.n_states = bucket.size();
        ist.ref.resize(bucket.size());
        for (size_t k = 0; k < bucket.size(); ++k) ist.ref[k] = int(k);

        // intermediate -> tuple, carrying the tuple's weight
        typename Tdp<D>::Csr down;
        down.off.assign(ist.n_states + 1, 0);
        for (size_t k = 0; k < bucket.size(); ++k) {
            for (int v : bucket[k]) {
                down.to.push_back(v);
                double raw = rst.rel->weights[size_t(rst.ref[size_t(v)])];
                int slot = lift_slot ? (*lift_slot)[size_t(rst.atom)] : rst.atom;
                down.wt.push_back(atom.introduced
                                      ? D::one()
                                      : lift_weight<D>(raw, slot, lift_slot ? lift_dims : ell));
            }
            down.off[k + 1] = down.to.size();
        }
        ist.out.push_back(std::move(down));

        // parent state -> intermediate, weight one; parent keys missing on
        // the child side stay unconnected and die in the pruning passes
        auto& up = T.stages[size_t(ist.parent)];
        typename Tdp<D>::Csr link;
        link.off.assign(up.n_states + 1, 0);
        for (size_t v = 0; v < up.n_states; ++v) {
            if (up.kind == StageKind::Source) {
                if (ist.n_states > 0) {
                    link.to.push_back(0);  // root key is empty
                    link.wt.push_back(D::one());
                }
            } else {
                const Value* row = up.rel->row(size_t(up.ref[v]));
                std::vector<Value> pk(kpos_parent.size());
                for (size_t j = 0; j < kpos_parent.size(); ++j)
                    pk[j] = row[size_t(kpos_parent[j])];
                auto it = key_id.find(pk);
                if (it != key_id.end()) {
                    link.to.push_back(it->second);
                    link.wt.push_back(D::one());
                }
            }
            link.off[v + 1] = link.to.size();
        }
        // child ordinal of this intermediate under its parent stage
        size_t ord = 0;
        while (up.children[ord] != is) ++ord;
        if (up.out.size() <= ord) up.out.resize(up.children.size());
        up.out[ord] = std::move(link);
    }

    // leaf -> terminal edges, weight one
    for (auto& st : T.stages) {
        if (st.kind != StageKind::Relation || T.stages[size_t(st.children[0])].kind != StageKind::Terminal)
            continue;
        typename Tdp<D>::Csr fin;
        fin.off.assign(st.n_states + 1, 0);
        for (size_t v = 0; v < st.n_states; ++v) {
            fin.to.push_back(0);
            fin.wt.push_back(D::one());
            fin.off[v + 1] = v + 1;
        }
        st.out.push_back(std::move(fin));
    }

    for (auto& st : T.stages) {
        st.pruned.assign(st.n_states, 0);
        st.pi1.assign(st.n_states, D::zero());
        if (st.out.size() < st.children.size()) st.out.resize(st.children.size());
    }
    return T;
}

// Optimal suffix weights, dead-end and unreachable pruning, edge compaction,
// and preferred-child pointers. After this every surviving state has at least
// one edge into every child stage and those edges lead to surviving states.
template <class D>
void bottom_up(Tdp<D>& T) {
    using W = typename D::W;

    std::vector<int> order{0};
    for (size_t i = 0; i < order.size(); ++i)
        for (int c : T.stages[size_t(order[i])].children) order.push_back(c);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto& st = T.stages[size_t(*it)];
        if (st.kind == StageKind::Terminal) {
            st.pi1.assign(st.n_states, D::one());
            continue;
        }
        for (size_t v = 0; v < st.n_states; ++v) {
            W acc = D::one();
            bool dead = st.children.empty();
            for (size_t c = 0; c < st.children.size() && !dead; ++c) {
                const auto& dst = T.stages[size_t(st.children[c])];
                const auto& e = st.out[c];
                bool found = false;
                W bestw{};
                for (size_t k = e.off[v]; k < e.off[v + 1]; ++k) {
                    if (dst.pruned[size_t(e.to[k])]) continue;
                    W cand = D::combine(e.wt[k], dst.pi1[size_t(e.to[k])]);
                    if (!found || D::less(cand, bestw)) bestw = cand;
                    found = true;
                }
                if (!found)
                    dead = true;
                else
                    acc = D::combine(acc, bestw);
            }
            st.pruned[v] = dead;
            if (!dead) st.pi1[v] = acc;
        }
    }
    T.no_answers = T.stages[0].pruned.empty() || T.stages[0].pruned[0];

    // forward reachability over surviving edges
    std::vector<std::vector<char>> reach(T.stages.size());
    for (size_t s = 0; s < T.stages.size(); ++s)
        reach[s].assign(T.stages[s].n_states, 0);
    if (!T.no_answers) reach[0][0] = 1;
    for (int s : order) {
        auto& st = T.stages[size_t(s)];
        for (size_t v = 0; v < st.n_states; ++v) {
            if (!reach[size_t(s)][v] || st.pruned[v]) continue;
            for (size_t c = 0; c < st.children.size(); ++c) {
                const auto& dst = T.stages[size_t(st.children[c])];
                const auto& e = st.out[c];
                for (size_t k = e.off[v]; k < e.off[v + 1]; ++k)
                    if (!dst.pruned[size_t(e.to[k])])
                        reach[size_t(st.children[c])][size_t(e.to[k])] = 1;
            }
        }
    }
    T.live_states = 0;
    for (size_t s = 0; s < T.stages.size(); ++s) {
        auto& st = T.stages[s];
        for (size_t v = 0; v < st.n_states; ++v) st.pruned[v] |= !reach[s][v];
        for (size_t v = 0; v < st.n_states; ++v) T.live_states += !st.pruned[v];
    }

    // drop edges touching pruned states, then fix the preferred edge per
    // surviving (state, child stage)
    for (auto& st : T.stages) {
        st.best.assign(st.children.size(), {});
        for (size_t c = 0; c < st.children.size(); ++c) {
            const auto& dst = T.stages[size_t(st.children[c])];
            auto& e = st.out[c];
            typename Tdp<D>::Csr packed;
            packed.off.assign(st.n_states + 1, 0);
            st.best[c].assign(st.n_states, -1);
            for (size_t v = 0; v < st.n_states; ++v) {
                if (!st.pruned[v])
                    for (size_t k = e.off[v]; k < e.off[v + 1]; ++k) {
                        if (dst.pruned[size_t(e.to[k])]) continue;
                        W cand = D::combine(e.wt[k], dst.pi1[size_t(e.to[k])]);
                        int idx = int(packed.to.size());
                        if (st.best[c][v] < 0 ||
                            D::less(cand, D::combine(packed.wt[size_t(st.best[c][v])],
                                                     dst.pi1[size_t(packed.to[size_t(
                                                         st.best[c][v])])])))
                            st.best[c][v] = idx;
                        packed.to.push_back(e.to[k]);
                        packed.wt.push_back(e.wt[k]);
                    }
                packed.off[v + 1] = packed.to.size();
            }
            st.out[c] = std::move(packed);
        }
    }
}

// Chosen relation-stage states -> answer. rel_state is indexed by stage and
// read only at relation stages.
template <class D>
RankedAnswer<D> assemble_answer(const Tdp<D>& T, const std::vector<int>& rel_state,
                                typename D::W weight) {
    RankedAnswer<D> a;
    a.weight = weight;
    a.witness.resize(size_t(T.ell));
    for (size_t s = 0; s < T.stages.size(); ++s) {
        const auto& st = T.stages[s];
        if (st.kind != StageKind::Relation) continue;
        const Value* row = st.rel->row(size_t(st.ref[size_t(rel_state[s])]));
        a.witness[size_t(st.atom)].assign(row, row + st.rel->arity);
    }
    for (auto [atom, pos] : T.head_slots) a.head.push_back(a.witness[size_t(atom)][size_t(pos)]);
    return a;
}

// Follows preferred edges through every branch from the source.
template <class D>
RankedAnswer<D> top1_solution(const Tdp<D>& T) {
    if (T.no_answers) throw EmptyResult();
    std::vector<int> rel_state(T.stages.size(), -1);
    std::vector<std::pair<int, int>> walk{{0, 0}};  // (stage, state)
    while (!walk.empty()) {
        auto [s, v] = walk.back();
        walk.pop_back();
        const auto& st = T.stages[size_t(s)];
        if (st.kind == StageKind::Relation) rel_state[size_t(s)] = v;
        for (size_t c = 0; c < st.children.size(); ++c) {
            if (T.stages[size_t(st.children[c])].kind == StageKind::Terminal) continue;
            walk.push_back({st.children[c], st.out[c].to[size_t(st.best[c][size_t(v)])]});
        }
    }
    return assemble_answer(T, rel_state, T.stages[0].pi1[0]);
}

// Text edge list of the surviving graph: stage parent_state child_state weight.
template <class D>
void dump_tdp(const Tdp<D>& T, std::ostream& os) {
    for (size_t s = 0; s < T.stages.size(); ++s) {
        const auto& st = T.stages[s];
        for (size_t c = 0; c < st.children.size(); ++c)
            for (size_t v = 0; v < st.n_states; ++v)
                for (size_t k = st.out[c].off[v]; k < st.out[c].off[v + 1]; ++k)
                    os << s << ' ' << v << ' ' << st.out[c].to[k] << ' '
                       << D::text(st.out[c].wt[k]) << '\n';
    }
}

}  // namespace anyk
