#pragma once

// Projection semantics for queries whose head drops variables. All-weight
// projection runs the full enumeration and applies the head per witness, so
// one head value can appear several times. The min-weight rewrite instead
// returns each distinct head assignment once: stages over head-only atoms
// survive, and every branch that only existential variables reach collapses
// into a terminal whose edge weights carry that branch's best completion.

#include <anyk/dpgraph.hpp>
#include <anyk/enumerate.hpp>
#include <anyk/query.hpp>

#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace anyk {

struct NotFreeConnexError : std::runtime_error {
    std::vector<std::string> residue;  // stuck part of the head-extended reduction
    explicit NotFreeConnexError(std::vector<std::string> residue_);
};

// A query lowered onto its enumeration-ready stage graph, together with
// everything the stages point into. Movable, not copyable: stages hold
// pointers into aux (and into the database the caller built from).
template <class D>
struct PreparedInstance {
    ConjunctiveQuery query;  // what the stages were built from
    JoinTree tree;
    SerialDecomposition sd;
    Database aux;  // materialized helper relations, often empty
    Tdp<D> tdp;    // bottom_up already applied

    PreparedInstance() = default;
    PreparedInstance(PreparedInstance&&) = default;
    PreparedInstance& operator=(PreparedInstance&&) = default;
};

// Iterator that keeps the instance it reads alive.
template <class D>
class InstanceStream : public AnykIterator<D> {
  public:
    InstanceStream(PreparedInstance<D> inst, const AlgoChoice& algo)
        : inst_(std::move(inst)), inner_(make_anyk<D>(inst_.tdp, algo, &inst_.sd)) {}

    bool next(RankedAnswer<D>& out) override {
        bool more = inner_->next(out);
        this->stats_ = inner_->stats();
        return more;
    }

    const PreparedInstance<D>& instance() const { return inst_; }

  private:
    PreparedInstance<D> inst_;
    std::unique_ptr<AnykIterator<D>> inner_;
};

// Plain full-witness instance of an acyclic query. The head applies per
// answer, so a head value reached through several witnesses is emitted once
// per witness, in weight order.
template <class D>
PreparedInstance<D> prepare_all_weight(const ConjunctiveQuery& q, const Database& db) {
    PreparedInstance<D> out;
    out.query = q;
    out.tree = gyo_join_tree(q);
    out.sd = serial_decomposition(out.tree);
    out.tdp = build_tdp<D>(q, out.tree, db);
    bottom_up(out.tdp);
    return out;
}

template <class D>
std::unique_ptr<AnykIterator<D>> enumerate_all_weight(const ConjunctiveQuery& q,
                                                      const Database& db,
                                                      const AlgoChoice& algo = {}) {
    return std::make_unique<InstanceStream<D>>(prepare_all_weight<D>(q, db), algo);
}

// Rewrites a free-connex query into a full one whose ranked enumeration
// carries min-weight semantics. The full instance over the extended join
// tree is built and swept bottom-up once; the stages over head-only atoms
// are then rebuilt as their own instance, and each dropped branch becomes a
// fresh terminal whose edge weight is the branch's aggregate, read off the
// full sweep. Every distinct head assignment comes out exactly once, with
// the preferred weight over all witnesses agreeing with it.
template <class D>
PreparedInstance<D> rewrite_min_weight(const ConjunctiveQuery& q, const Database& db) {
    FreeConnex fc = is_free_connex(q);
    if (!fc.ok) {
        gyo_join_tree(q);  // cyclic queries fail here with their own error
        throw NotFreeConnexError(std::move(fc.residue));
    }

    PreparedInstance<D> out;
    int ell_full = int(fc.extended.atoms.size());

    // relations under retained atoms behave as sets here: a duplicate row
    // would surface its head assignment once per copy, so fold copies down
    // to the preferred one before anything is built
    for (size_t i = 0; i < fc.extended.atoms.size(); ++i) {
        Atom& a = fc.extended.atoms[i];
        if (!fc.in_u[i] || a.introduced) continue;
        const std::string& pname = fc.extended.physical_rel(int(i));
        const Relation* src = db.find(pname);
        if (!src) throw std::runtime_error("unknown relation: " + pname);
        std::unordered_map<std::vector<Value>, size_t, detail::KeyHash> at;
        std::vector<size_t> rows;
        std::vector<Value> key(size_t(src->arity));
        bool folded = false;
        for (size_t r = 0; r < src->size(); ++r) {
            const Value* row = src->row(r);
            if (!row_passes(fc.extended, db, int(i), row)) continue;
            key.assign(row, row + src->arity);
            auto [it, fresh] = at.emplace(key, rows.size());
            if (fresh) {
                rows.push_back(r);
            } else {
                folded = true;
                size_t& held = rows[it->second];
                if (D::less(lift_weight<D>(src->weights[r], int(i), ell_full),
                            lift_weight<D>(src->weights[held], int(i), ell_full)))
                    held = r;
            }
        }
        if (!folded) continue;
        Relation& dd = out.aux.add(a.rel + "__set" + std::to_string(i), src->arity);
        for (size_t r : rows) dd.add_row(src->row(r), src->weights[r]);
        a.source_rel = dd.name;
    }

    // materialize each introduced atom: the distinct projected keys of its
    // source rows, weight a placeholder (edges into them carry one())
    for (Atom& a : fc.extended.atoms) {
        if (!a.introduced) continue;
        const Relation* src = db.find(a.source_rel);
        if (!src) throw std::runtime_error("unknown relation: " + a.source_rel);
        const Atom& orig = fc.extended.atoms[size_t(a.proj_of)];
        std::vector<int> pos;
        for (const std::string& v : a.vars) {
            auto it = std::find(orig.vars.begin(), orig.vars.end(), v);
            pos.push_back(int(it - orig.vars.begin()));
        }
        Relation& r = out.aux.add(a.rel, int(a.vars.size()));
        std::unordered_set<std::vector<Value>, detail::KeyHash> seen;
        std::vector<Value> key(pos.size());
        for (size_t row_i = 0; row_i < src->size(); ++row_i) {
            const Value* row = src->row(row_i);
            if (!row_passes(q, db, a.proj_of, row)) continue;
            for (size_t j = 0; j < pos.size(); ++j) key[j] = row[size_t(pos[j])];
            if (seen.insert(key).second) r.add_row(key.data(), 0.0);
        }
        a.source_rel.clear();  // rows now come from the materialized table
    }

    // full instance over the extended tree; after the sweep, pi1 of an
    // intermediate state is the best completion of the branch below it
    Tdp<D> full = build_tdp<D>(fc.extended, fc.tree, db, &out.aux);
    bottom_up(full);

    // the retained query: head-only atoms in the stage order of the full
    // instance, so per-relation state numbering carries over unchanged
    std::vector<int> keep;
    std::vector<int> new_idx(fc.extended.atoms.size(), -1);
    for (int i = 0; i < full.ell; ++i) {
        int atom = full.stages[size_t(1 + i)].atom;
        if (fc.in_u[size_t(atom)]) {
            new_idx[size_t(atom)] = int(keep.size());
            keep.push_back(atom);
        }
    }
    out.query.head_name = q.head_name;
    out.query.free_vars = q.free_vars;
    out.query.self_join_copies = q.self_join_copies;
    for (int a : keep) out.query.atoms.push_back(fc.extended.atoms[size_t(a)]);
    for (const SelectionNote& sn : q.selections)
        if (new_idx[size_t(sn.atom)] >= 0) {
            SelectionNote c = sn;
            c.atom = new_idx[size_t(sn.atom)];
            out.query.selections.push_back(c);
        }

    // the connex subset is a subtree around the root, so parents stay inside
    out.tree.parent.assign(keep.size(), -1);
    for (size_t j = 0; j < keep.size(); ++j) {
        int p = fc.tree.parent[size_t(keep[j])];
        out.tree.parent[j] = p < 0 ? -1 : new_idx[size_t(p)];
    }
    out.tree.root = new_idx[size_t(fc.tree.root)];

    // the trimmed instance keeps the full instance's component space, so
    // transplanted branch aggregates land in matching coordinates
    out.tdp = build_tdp<D>(out.query, out.tree, db, &out.aux, &keep, ell_full);

    // one fresh terminal per dropped branch; a parent state's edge into it
    // weighs the branch's best completion, taken from the full sweep's
    // intermediate state (absent edges mean the state was already dead)
    auto ext_kids = fc.tree.children();
    for (size_t j = 0; j < keep.size(); ++j) {
        int a = keep[j];
        int rs_full = full.atom_stage[size_t(a)];
        int rs = out.tdp.atom_stage[j];
        for (int c : ext_kids[size_t(a)]) {
            if (fc.in_u[size_t(c)]) continue;
            int is_c = full.atom_stage[size_t(c)] + full.ell;
            const auto& pst = full.stages[size_t(rs_full)];
            size_t ord = 0;
            while (pst.children[ord] != is_c) ++ord;
            const auto& link = pst.out[ord];
            const auto& ist = full.stages[size_t(is_c)];

            size_t n_states = out.tdp.stages[size_t(rs)].n_states;
            typename Tdp<D>::Csr cut;
            cut.off.assign(n_states + 1, 0);
            for (size_t v = 0; v < n_states; ++v) {
                for (size_t k = link.off[v]; k < link.off[v + 1]; ++k) {
                    cut.to.push_back(0);
                    cut.wt.push_back(D::combine(link.wt[k], ist.pi1[size_t(link.to[k])]));
                }
                cut.off[v + 1] = cut.to.size();
            }

            int ts = int(out.tdp.stages.size());
            typename Tdp<D>::Stage term;
            term.kind = StageKind::Terminal;
            term.parent = rs;
            term.n_states = 1;
            term.ref = {0};
            term.pruned = {0};
            term.pi1 = {D::zero()};
            out.tdp.stages.push_back(std::move(term));
            auto& st = out.tdp.stages[size_t(rs)];
            st.children.push_back(ts);
            st.out.push_back(std::move(cut));
        }
    }
    bottom_up(out.tdp);
    out.sd = serial_decomposition(out.tree);
    return out;
}

template <class D>
std::unique_ptr<AnykIterator<D>> enumerate_min_weight(const ConjunctiveQuery& q,
                                                      const Database& db,
                                                      const AlgoChoice& algo = {}) {
    return std::make_unique<InstanceStream<D>>(rewrite_min_weight<D>(q, db), algo);
}

}  // namespace anyk
