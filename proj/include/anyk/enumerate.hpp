#pragma once

// Ranked enumeration over a finished dynamic-programming instance. Three
// iterator families share one collapsed view of the stage tree: positions
// 0..ell are the source and the relation stages in build order; the
// intermediate hop between a parent state and its child choices carries no
// decision of its own (one edge per surviving parent state), so candidates
// and suffixes only record relation states.
//
//  - anyk_part: best-first search over solution prefixes. Popping a
//    candidate expands it optimally, yields the solution, and pushes one
//    deviation per later position plus the next sibling at its own
//    position. Variants differ only in how a state's choice list is
//    ordered incrementally (presorted, heap-backed, incremental quicksort).
//  - anyk_rec: per-intermediate-state suffix streams materialized on
//    demand. A stream's k-th element is the k-th best suffix through that
//    state; streams are shared by every parent that reaches the state.
//    Branch states rank the product of their child streams.
//  - anyk_part_plus: anyk_part with suffix reuse across a serial
//    decomposition. The first solution to present a level key owns that
//    key's suffix store; later prefixes follow the store instead of
//    deviating past it. Requires a ranking whose order survives shared
//    factors.

#include <anyk/answer.hpp>
#include <anyk/dpgraph.hpp>
#include <anyk/query.hpp>
#include <anyk/weight.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace anyk {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct OutputBudgetExceeded : std::runtime_error {
    explicit OutputBudgetExceeded(size_t cap)
        : std::runtime_error("solution count exceeds output budget of " + std::to_string(cap)) {}
};

enum class SuccVariant { Eager, Lazy, Quick };

// Runtime algorithm selector shared by the projection wrappers and the
// command line. Batch materializes everything up front and replays it.
struct AlgoChoice {
    enum Kind { Part, Rec, PartPlus, Batch };
    Kind kind = Part;
    SuccVariant variant = SuccVariant::Eager;
    size_t batch_cap = SIZE_MAX;  // Batch only: abort past this many answers
};

struct IterStats {
    uint64_t pq_pops = 0;
    uint64_t pq_pushes = 0;
    uint64_t succ_calls = 0;
    uint64_t max_pq_size = 0;      // peak live entries across all queues
    uint64_t heap_cmps = 0;        // comparator invocations in queue and choice ordering
    uint64_t init_pushes = 0;      // subset of pq_pushes that seed a queue
    uint64_t store_appends = 0;    // suffix-reuse mode only
    uint64_t subscriber_releases = 0;
    uint64_t leading_violations = 0;  // diagnostics, stays 0
    uint64_t order_violations = 0;    // diagnostics, stays 0
};

template <class D>
class AnykIterator {
  public:
    virtual ~AnykIterator() = default;
    // Fills `out` with the next answer in non-decreasing weight order.
    // Returns false at end of stream; further calls keep returning false.
    virtual bool next(RankedAnswer<D>& out) = 0;
    const IterStats& stats() const { return stats_; }

  protected:
    IterStats stats_;
};

namespace detail {

struct NoTrack {
    template <class T>
    void operator()(const T&, size_t) const {}
};

// Binary heap with an external comparison counter, so queue behaviour is
// identical and countable across platforms. The tracker hears about every
// element move, which lets an owner keep handles for decrease().
template <class T, class Less, class Track = NoTrack>
class CountedHeap {
  public:
    CountedHeap(Less less, uint64_t* cmps, Track track = {})
        : less_(less), cmps_(cmps), track_(track) {}

    bool empty() const { return a_.empty(); }
    size_t size() const { return a_.size(); }
    const T& at(size_t i) const { return a_[i]; }

    void push(T x) {
        a_.push_back(std::move(x));
        sift_up(a_.size() - 1);
    }

    T pop() {
        T r = std::move(a_.front());
        a_.front() = std::move(a_.back());
        a_.pop_back();
        size_t i = 0, n = a_.size();
        if (n > 0) track_(a_[0], 0);
        while (true) {
            size_t l = 2 * i + 1, m = i;
            if (l < n) {
                ++*cmps_;
                if (less_(a_[l], a_[m])) m = l;
            }
            if (l + 1 < n) {
                ++*cmps_;
                if (less_(a_[l + 1], a_[m])) m = l + 1;
            }
            if (m == i) break;
            std::swap(a_[i], a_[m]);
            track_(a_[i], i);
            track_(a_[m], m);
            i = m;
        }
        return r;
    }

    // Replaces the element at i with one that sorts no later, restoring the
    // heap by sifting up.
    void decrease(size_t i, T x) {
        a_[i] = std::move(x);
        sift_up(i);
    }

  private:
    void sift_up(size_t i) {
        track_(a_[i], i);
        while (i > 0) {
            size_t p = (i - 1) / 2;
            ++*cmps_;
            if (!less_(a_[i], a_[p])) break;
            std::swap(a_[i], a_[p]);
            track_(a_[i], i);
            track_(a_[p], p);
            i = p;
        }
    }

    std::vector<T> a_;
    Less less_;
    uint64_t* cmps_;
    Track track_;
};

struct ValuesHash {
    size_t operator()(const std::vector<Value>& k) const {
        size_t h = 1469598103934665603ull;
        for (Value v : k) {
            h ^= size_t(uint64_t(v));
            h *= 1099511628211ull;
        }
        return h;
    }
};

struct I32Hash {
    size_t operator()(const std::vector<int32_t>& k) const {
        size_t h = 1469598103934665603ull;
        for (int32_t v : k) {
            h ^= size_t(uint32_t(v));
            h *= 1099511628211ull;
        }
        return h;
    }
};

// Fold of the terminal-edge weights under every relation-stage state. Plain
// builds keep terminal edges at one(); the min-weight rewrite parks each
// dropped branch's aggregate there, and enumeration folds it back into a
// solution exactly once, when the owning state is chosen.
template <class D>
std::vector<std::vector<typename D::W>> terminal_tails(const Tdp<D>& T) {
    std::vector<std::vector<typename D::W>> tails(T.stages.size());
    for (size_t s = 0; s < T.stages.size(); ++s) {
        const auto& st = T.stages[s];
        if (st.kind != StageKind::Relation) continue;
        tails[s].assign(st.n_states, D::one());
        for (size_t c = 0; c < st.children.size(); ++c) {
            if (T.stages[size_t(st.children[c])].kind != StageKind::Terminal) continue;
            const auto& e = st.out[c];
            for (size_t v = 0; v < st.n_states; ++v)
                for (size_t k = e.off[v]; k < e.off[v + 1]; ++k)
                    tails[s][v] = D::combine(tails[s][v], e.wt[k]);
        }
    }
    return tails;
}

// Collapsed serial view: position p in 1..ell is relation stage p; its
// choices live on the single intermediate state reached from the state at
// position spr[p].
template <class D>
struct SerialView {
    const Tdp<D>* T = nullptr;
    int ell = 0;
    std::vector<int> spr;     // serial parent position (0 = source)
    std::vector<int> istage;  // intermediate stage feeding position p
    std::vector<int> pord;    // child ordinal of istage[p] under spr[p]
    std::vector<std::vector<typename D::W>> tails;  // per position and state

    void init(const Tdp<D>& t) {
        T = &t;
        ell = t.ell;
        tails = terminal_tails<D>(t);
        spr.assign(size_t(ell) + 1, 0);
        istage.assign(size_t(ell) + 1, -1);
        pord.assign(size_t(ell) + 1, -1);
        for (int p = 1; p <= ell; ++p) {
            int is = t.stages[size_t(p)].parent;
            istage[size_t(p)] = is;
            int up = t.stages[size_t(is)].parent;
            spr[size_t(p)] = up;
            const auto& ch = t.stages[size_t(up)].children;
            for (size_t c = 0; c < ch.size(); ++c)
                if (ch[c] == is) pord[size_t(p)] = int(c);
        }
    }

    // The unique intermediate state below parent state pv on the way to
    // position p. Surviving states have exactly one such edge.
    int32_t hop(int p, int32_t pv) const {
        const auto& e = T->stages[size_t(spr[size_t(p)])].out[size_t(pord[size_t(p)])];
        return int32_t(e.to[e.off[size_t(pv)]]);
    }

    const typename Tdp<D>::Csr& choices(int p) const {
        return T->stages[size_t(istage[size_t(p)])].out[0];
    }

    int32_t best_edge(int p, int32_t u) const {
        return T->stages[size_t(istage[size_t(p)])].best[0][size_t(u)];
    }

    typename D::W pi1_at(int p, int32_t v) const { return T->stages[size_t(p)].pi1[size_t(v)]; }

    const typename D::W& tail(int p, int32_t v) const { return tails[size_t(p)][size_t(v)]; }
};

}  // namespace detail

// Incremental choice-list orderings. Each variant delivers the edge indices
// of one intermediate state in ascending (weight combined with completion,
// then edge id) order, addressed by rank; rank 0 always matches the
// precomputed preferred edge.
template <class D>
class SuccSource {
    using W = typename D::W;

  public:
    void init(const Tdp<D>& T, SuccVariant v, uint64_t* cmps) {
        T_ = &T;
        variant_ = v;
        cmps_ = cmps;
        slot_.resize(T.stages.size());
        for (size_t s = 0; s < T.stages.size(); ++s)
            if (T.stages[s].kind == StageKind::Intermediate)
                slot_[s].assign(T.stages[s].n_states, -1);
        if (variant_ == SuccVariant::Eager)
            for (size_t s = 0; s < T.stages.size(); ++s)
                if (T.stages[s].kind == StageKind::Intermediate)
                    for (size_t u = 0; u < T.stages[s].n_states; ++u)
                        if (!T.stages[s].pruned[u]) touch(int(s), int32_t(u));
    }

    // Edge index at `rank` in the state's choice order, or -1 past the end.
    int32_t edge_at(int istage, int32_t u, int rank) {
        Slot& sl = slots_[size_t(touch(istage, u))];
        switch (variant_) {
            case SuccVariant::Eager:
                break;
            case SuccVariant::Lazy:
                while (int(sl.ordered.size()) <= rank && !sl.heap.empty())
                    sl.ordered.push_back(heap_pop(sl));
                break;
            case SuccVariant::Quick:
                while (int(sl.sorted_upto) <= rank && iqs_step(sl)) {
                }
                if (rank >= int(sl.sorted_upto)) return -1;
                break;
        }
        if (rank >= int(sl.ordered.size())) return -1;
        return sl.ordered[size_t(rank)];
    }

  private:
    struct Slot {
        int istage = -1;
        std::vector<int32_t> ordered;  // Eager: all; Lazy: sorted prefix; Quick: whole array
        std::vector<int32_t> heap;     // Lazy
        std::vector<size_t> bounds;    // Quick: pending segment ends, descending
        size_t sorted_upto = 0;        // Quick
    };

    W key(const Slot& sl, int32_t k) const {
        const auto& e = T_->stages[size_t(sl.istage)].out[0];
        const auto& dst = T_->stages[size_t(T_->stages[size_t(sl.istage)].children[0])];
        return D::combine(e.wt[size_t(k)], dst.pi1[size_t(e.to[size_t(k)])]);
    }

    bool edge_less(const Slot& sl, int32_t a, int32_t b) const {
        ++*cmps_;
        W wa = key(sl, a), wb = key(sl, b);
        if (D::less(wa, wb)) return true;
        if (D::less(wb, wa)) return false;
        return a < b;
    }

    int touch(int istage, int32_t u) {
        int& id = slot_[size_t(istage)][size_t(u)];
        if (id >= 0) return id;
        id = int(slots_.size());
        slots_.emplace_back();
        Slot& sl = slots_.back();
        sl.istage = istage;
        const auto& e = T_->stages[size_t(istage)].out[0];
        std::vector<int32_t> edges;
        edges.reserve(e.off[size_t(u) + 1] - e.off[size_t(u)]);
        for (size_t k = e.off[size_t(u)]; k < e.off[size_t(u) + 1]; ++k)
            edges.push_back(int32_t(k));
        switch (variant_) {
            case SuccVariant::Eager:
                sl.ordered = std::move(edges);
                std::sort(sl.ordered.begin(), sl.ordered.end(),
                          [this, &sl](int32_t a, int32_t b) { return edge_less(sl, a, b); });
                break;
            case SuccVariant::Lazy:
                sl.heap = std::move(edges);
                for (size_t i = 1; i < sl.heap.size(); ++i) heap_up(sl, i);
                // surface the known minimum now so the runner-up sits on top
                sl.ordered.push_back(heap_pop(sl));
                break;
            case SuccVariant::Quick:
                sl.ordered = std::move(edges);
                sl.bounds.assign(1, sl.ordered.size());
                sl.sorted_upto = 0;
                break;
        }
        return id;
    }

    void heap_up(Slot& sl, size_t i) {
        while (i > 0) {
            size_t p = (i - 1) / 2;
            if (!edge_less(sl, sl.heap[i], sl.heap[p])) break;
            std::swap(sl.heap[i], sl.heap[p]);
            i = p;
        }
    }

    int32_t heap_pop(Slot& sl) {
        int32_t r = sl.heap.front();
        sl.heap.front() = sl.heap.back();
        sl.heap.pop_back();
        size_t i = 0, n = sl.heap.size();
        while (true) {
            size_t l = 2 * i + 1, m = i;
            if (l < n && edge_less(sl, sl.heap[l], sl.heap[m])) m = l;
            if (l + 1 < n && edge_less(sl, sl.heap[l + 1], sl.heap[m])) m = l + 1;
            if (m == i) break;
            std::swap(sl.heap[i], sl.heap[m]);
            i = m;
        }
        return r;
    }

    // Incremental quicksort step: partition until the front of the unsorted
    // region is a pivot fixed point, then hand it over. Keys are unique
    // because ties fall back to the edge id.
    bool iqs_step(Slot& sl) {
        if (sl.sorted_upto >= sl.ordered.size()) return false;
        while (sl.bounds.back() != sl.sorted_upto) {
            size_t lo = sl.sorted_upto, hi = sl.bounds.back();
            size_t mid = lo + (hi - lo) / 2;
            int32_t a = sl.ordered[lo], b = sl.ordered[mid], c = sl.ordered[hi - 1];
            int32_t piv;
            if (edge_less(sl, a, b))
                piv = edge_less(sl, b, c) ? b : (edge_less(sl, a, c) ? c : a);
            else
                piv = edge_less(sl, a, c) ? a : (edge_less(sl, b, c) ? c : b);
            size_t pp = lo;
            for (size_t i = lo; i < hi; ++i)
                if (sl.ordered[i] == piv) pp = i;
            std::swap(sl.ordered[lo], sl.ordered[pp]);
            size_t store = lo + 1;
            for (size_t i = lo + 1; i < hi; ++i)
                if (edge_less(sl, sl.ordered[i], sl.ordered[lo]))
                    std::swap(sl.ordered[i], sl.ordered[store++]);
            std::swap(sl.ordered[lo], sl.ordered[store - 1]);
            sl.bounds.push_back(store - 1);
        }
        sl.bounds.pop_back();
        ++sl.sorted_upto;
        return true;
    }

    const Tdp<D>* T_ = nullptr;
    SuccVariant variant_ = SuccVariant::Eager;
    uint64_t* cmps_ = nullptr;
    std::vector<std::vector<int>> slot_;  // intermediate (stage, state) -> slots_ index
    std::deque<Slot> slots_;
};

// Best-first enumeration over prefix candidates; also hosts the suffix-reuse
// mode enabled by a serial decomposition.
template <class D>
class PartIterator : public AnykIterator<D> {
    using W = typename D::W;

  public:
    PartIterator(const Tdp<D>& T, SuccVariant variant)
        : heap_(CandLess{}, &this->stats_.heap_cmps, RepTrack{this}) {
        init_common(T, variant);
    }

    PartIterator(const Tdp<D>& T, SuccVariant variant, const SerialDecomposition& sd)
        : heap_(CandLess{}, &this->stats_.heap_cmps, RepTrack{this}) {
        if (D::mono != Monotonicity::StrongSubsetMonotone)
            throw ConfigError(std::string("ranking '") + D::name +
                              "' is not strongly subset-monotone, so suffix order may "
                              "change under shared prefixes; suffix reuse is unavailable");
        init_common(T, variant);
        plus_ = true;
        levels_ = int(sd.vertices.size());
        level_end_.assign(size_t(levels_) + 1, 0);
        level_of_.assign(size_t(sv_.ell) + 1, 0);
        int expect = 1;
        for (int t = 1; t <= levels_; ++t) {
            int lo = sv_.ell + 1, hi = 0;
            for (int a : sd.vertices[size_t(t - 1)]) {
                int p = T.atom_stage[size_t(a)];
                lo = std::min(lo, p);
                hi = std::max(hi, p);
                level_of_[size_t(p)] = t;
            }
            if (lo != expect || hi - lo + 1 != int(sd.vertices[size_t(t - 1)].size()))
                throw ConfigError("serial decomposition does not fit the instance layout");
            level_end_[size_t(t)] = hi;
            expect = hi + 1;
        }
        if (expect != sv_.ell + 1)
            throw ConfigError("serial decomposition does not cover the instance");
        level_keys_.resize(size_t(levels_) + 1);
    }

    bool next(RankedAnswer<D>& out) override {
        if (!seeded_) seed();
        if (heap_.empty()) return false;
        PrefixCandidate c = pop_cand();
        if (c.follower) {
            yield_follower(c, out);
            return true;
        }
        expand(c);
        int cut = plus_ ? scan_stores() : sv_.ell;
        deviate(c, cut);
        emit(out, prefw_[size_t(sv_.ell)]);
        return true;
    }

    // States of the last yielded solution, indexed by position; [0] is the
    // source. Valid until the following next() call.
    const std::vector<int32_t>& last_states() const { return states_; }
    // Pop rank (0-based) of the solution that queued the last yielded one,
    // and the position where the two part; the top solution reports {-1, 0}.
    std::pair<int64_t, int> last_link() const { return {last_gen_, last_pos_}; }

  private:
    struct Node {
        W prefw;
        W edge_w;
        int32_t state;
        int32_t parent;
    };

    struct PrefixCandidate {
        W priority;
        W prefw;    // through `pos`
        W edge_w;   // weight of the edge taken at `pos`
        int32_t state = -1;
        int32_t rank = 0;  // choice rank at `pos`
        int32_t parent_node = -1;
        int32_t pos = 0;
        uint32_t store = 0;  // followers: store id / suffix rank
        uint32_t srank = 0;
        int64_t gen = -1;  // pop rank of the producer
        uint64_t seq = 0;
        bool follower = false;
    };

    struct CandLess {
        bool operator()(const PrefixCandidate& a, const PrefixCandidate& b) const {
            if (D::less(a.priority, b.priority)) return true;
            if (D::less(b.priority, a.priority)) return false;
            return a.seq < b.seq;
        }
    };

    // Keeps rep_pos_ pointing at each store's single queue entry.
    struct RepTrack {
        PartIterator* owner;
        void operator()(const PrefixCandidate& c, size_t i) const {
            if (c.follower) owner->rep_pos_[c.store] = int64_t(i);
        }
    };

    // One follower waiting on a store, next suffix rank already discovered.
    struct FollowEntry {
        W priority;
        int32_t prefix_node;
        uint32_t srank;
        int64_t gen;
        uint64_t seq;
    };

    struct SortedSuffixStore {
        std::vector<int32_t> leading;  // states 0..level_end of the owner
        std::vector<int32_t> flat;     // suffix states, suffix_len per rank
        std::vector<W> w;              // full suffix weights, rank order
        std::vector<std::pair<uint32_t, int32_t>> subs;  // awaited rank, prefix node
        std::vector<FollowEntry> waiting;                // min-heap, see wait_push
        bool in_cand = false;  // true while the waiting minimum sits in heap_
        int level = 0;
        int suffix_len = 0;
    };

    void init_common(const Tdp<D>& T, SuccVariant variant) {
        T_ = &T;
        sv_.init(T);
        succ_.init(T, variant, &this->stats_.heap_cmps);
        states_.assign(size_t(sv_.ell) + 1, -1);
        edgew_.assign(size_t(sv_.ell) + 1, D::one());
        prefw_.assign(size_t(sv_.ell) + 1, D::one());
        nodeat_.assign(size_t(sv_.ell) + 1, -1);
        uat_.assign(size_t(sv_.ell) + 1, -1);
        g_.assign(size_t(sv_.ell) + 1, D::one());
    }

    void seed() {
        seeded_ = true;
        if (T_->no_answers) return;
        PrefixCandidate c;
        c.priority = T_->stages[0].pi1[0];
        c.prefw = D::one();
        c.edge_w = D::one();
        c.state = 0;
        push_cand(std::move(c), true);
    }

    void push_cand(PrefixCandidate c, bool init = false, bool keep_seq = false) {
        if (!keep_seq) c.seq = seq_++;
        heap_.push(std::move(c));
        ++this->stats_.pq_pushes;
        if (init) ++this->stats_.init_pushes;
        this->stats_.max_pq_size = std::max(this->stats_.max_pq_size, uint64_t(heap_.size()));
    }

    PrefixCandidate pop_cand() {
        ++this->stats_.pq_pops;
        return heap_.pop();
    }

    int32_t new_node(int32_t parent, int32_t state, W prefw, W edge_w) {
        nodes_.push_back({std::move(prefw), std::move(edge_w), state, parent});
        return int32_t(nodes_.size()) - 1;
    }

    // Materializes the popped candidate: prefix from the node chain, the
    // rest by preferred edges.
    void expand(const PrefixCandidate& c) {
        int32_t q = new_node(c.parent_node, c.state, c.prefw, c.edge_w);
        for (int p = c.pos; p >= 0; --p) {
            const Node& n = nodes_[size_t(q)];
            states_[size_t(p)] = n.state;
            edgew_[size_t(p)] = n.edge_w;
            prefw_[size_t(p)] = n.prefw;
            nodeat_[size_t(p)] = q;
            q = n.parent;
        }
        for (int p = c.pos + 1; p <= sv_.ell; ++p) {
            int32_t pv = states_[size_t(sv_.spr[size_t(p)])];
            int32_t u = sv_.hop(p, pv);
            uat_[size_t(p)] = u;
            const auto& e = sv_.choices(p);
            int32_t b = sv_.best_edge(p, u);
            states_[size_t(p)] = int32_t(e.to[size_t(b)]);
            edgew_[size_t(p)] = e.wt[size_t(b)];
            prefw_[size_t(p)] = D::combine(D::combine(prefw_[size_t(p) - 1], edgew_[size_t(p)]),
                                           sv_.tail(p, states_[size_t(p)]));
            nodeat_[size_t(p)] = new_node(nodeat_[size_t(p) - 1], states_[size_t(p)],
                                          prefw_[size_t(p)], edgew_[size_t(p)]);
        }
        for (int p = 1; p <= c.pos; ++p)
            uat_[size_t(p)] = sv_.hop(p, states_[size_t(sv_.spr[size_t(p)])]);
        last_gen_ = c.gen;
        last_pos_ = c.pos;
        cur_pop_ = int64_t(this->stats_.pq_pops) - 1;
    }

    // Preferred completions a deviation at position j keeps untouched: one
    // factor per subtree rooted after j but hanging from before j. Such
    // positions sit past the popped candidate's own position, so the
    // current solution holds their optimal edge and table value already.
    W pending_after(int j) const {
        W acc = D::one();
        for (int p = j + 1; p <= sv_.ell; ++p)
            if (sv_.spr[size_t(p)] < j) acc = D::combine(acc, g_[size_t(p)]);
        return acc;
    }

    void deviate(const PrefixCandidate& c, int cut) {
        for (int p = 1; p <= sv_.ell; ++p)
            g_[size_t(p)] = D::combine(edgew_[size_t(p)], sv_.pi1_at(p, states_[size_t(p)]));
        if (c.pos >= 1) {
            int32_t e2 = succ(c.pos, uat_[size_t(c.pos)], c.rank + 1);
            if (e2 >= 0) queue_dev(c.pos, e2, c.rank + 1);
        }
        for (int p = c.pos + 1; p <= cut; ++p) {
            int32_t e2 = succ(p, uat_[size_t(p)], 1);
            if (e2 >= 0) queue_dev(p, e2, 1);
        }
    }

    int32_t succ(int p, int32_t u, int rank) {
        ++this->stats_.succ_calls;
        return succ_.edge_at(sv_.istage[size_t(p)], u, rank);
    }

    void queue_dev(int p, int32_t edge, int rank) {
        const auto& e = sv_.choices(p);
        W leg = D::combine(e.wt[size_t(edge)], sv_.pi1_at(p, int32_t(e.to[size_t(edge)])));
        const Node& up = nodes_[size_t(nodeat_[size_t(p) - 1])];
        PrefixCandidate c;
        c.priority = D::combine(D::combine(up.prefw, leg), pending_after(p));
        c.prefw = D::combine(D::combine(up.prefw, e.wt[size_t(edge)]),
                             sv_.tail(p, int32_t(e.to[size_t(edge)])));
        c.edge_w = e.wt[size_t(edge)];
        c.state = int32_t(e.to[size_t(edge)]);
        c.rank = rank;
        c.parent_node = nodeat_[size_t(p) - 1];
        c.pos = p;
        c.gen = cur_pop_;
        push_cand(std::move(c));
    }

    void emit(RankedAnswer<D>& out, W weight) {
        rel_scratch_.assign(T_->stages.size(), 0);
        for (int p = 1; p <= sv_.ell; ++p) rel_scratch_[size_t(p)] = int(states_[size_t(p)]);
        out = assemble_answer(*T_, rel_scratch_, weight);
        out.rank = ++emitted_;
    }

    // ---- suffix reuse ----

    // Walks decomposition levels downward, appending this solution's suffix
    // to every store whose leading prefix it extends. The first level whose
    // store belongs to another prefix caps deviations: that store replays
    // the rest of the key's suffixes, so a single follower stands in for
    // every deviation past the level. The last level is never keyed, its
    // suffix is empty.
    int scan_stores() {
        suffw_scratch_.assign(size_t(levels_) + 1, D::one());
        for (int t = levels_ - 1; t >= 1; --t) {
            W acc = suffw_scratch_[size_t(t) + 1];
            for (int p = level_end_[size_t(t)] + 1; p <= level_end_[size_t(t) + 1]; ++p)
                acc = D::combine(D::combine(acc, edgew_[size_t(p)]),
                                 sv_.tail(p, states_[size_t(p)]));
            suffw_scratch_[size_t(t)] = acc;
        }
        for (int t = 1; t < levels_; ++t) {
            key_scratch_.assign(states_.begin() + level_end_[size_t(t - 1)] + 1,
                                states_.begin() + level_end_[size_t(t)] + 1);
            auto [it, fresh] =
                level_keys_[size_t(t)].try_emplace(key_scratch_, uint32_t(stores_.size()));
            if (fresh) {
                stores_.emplace_back();
                rep_pos_.push_back(-1);
                SortedSuffixStore& s = stores_.back();
                s.level = t;
                s.suffix_len = sv_.ell - level_end_[size_t(t)];
                s.leading.assign(states_.begin(), states_.begin() + level_end_[size_t(t)] + 1);
                append_suffix(it->second, t);
                continue;
            }
            SortedSuffixStore& s = stores_[it->second];
            if (std::equal(s.leading.begin(), s.leading.end(), states_.begin())) {
                append_suffix(it->second, t);
                continue;
            }
            // foreign leading prefix: this solution's suffix is the store's
            // rank 0, everything later is delegated to one follower
            if (level_of_[size_t(last_pos_)] > t) ++this->stats_.leading_violations;
            if (!std::equal(s.flat.begin(), s.flat.begin() + s.suffix_len,
                            states_.begin() + level_end_[size_t(t)] + 1))
                ++this->stats_.leading_violations;
            spawn_follower(it->second, 1);
            return level_end_[size_t(t)];
        }
        return sv_.ell;
    }

    void append_suffix(uint32_t sid, int t) {
        SortedSuffixStore& s = stores_[sid];
        s.flat.insert(s.flat.end(), states_.begin() + level_end_[size_t(t)] + 1, states_.end());
        if (!s.w.empty() && D::less(suffw_scratch_[size_t(t)], s.w.back()))
            ++this->stats_.order_violations;
        s.w.push_back(suffw_scratch_[size_t(t)]);
        ++this->stats_.store_appends;
        uint32_t newest = uint32_t(s.w.size()) - 1;
        for (size_t i = 0; i < s.subs.size();) {
            if (s.subs[i].first == newest) {
                int32_t pn = s.subs[i].second;
                s.subs[i] = s.subs.back();
                s.subs.pop_back();
                enqueue_follow(sid, pn, newest);
                ++this->stats_.subscriber_releases;
            } else {
                ++i;
            }
        }
    }

    void spawn_follower(uint32_t sid, uint32_t srank) {
        SortedSuffixStore& s = stores_[sid];
        int32_t pn = nodeat_[size_t(level_end_[size_t(s.level)])];
        if (srank < s.w.size())
            enqueue_follow(sid, pn, srank);
        else
            s.subs.push_back({srank, pn});
    }

    // Followers wait inside their store; only the cheapest one per store is
    // mirrored into the candidate queue. This caps the queue at one entry
    // per vertex key regardless of how many prefixes follow the same key.
    void enqueue_follow(uint32_t sid, int32_t prefix_node, uint32_t srank) {
        SortedSuffixStore& s = stores_[sid];
        FollowEntry fe;
        fe.priority = D::combine(nodes_[size_t(prefix_node)].prefw, s.w[srank]);
        fe.prefix_node = prefix_node;
        fe.srank = srank;
        fe.gen = cur_pop_;
        fe.seq = seq_++;
        wait_push(s, std::move(fe));
        sync_rep(sid);
    }

    static bool follow_less(const FollowEntry& a, const FollowEntry& b) {
        if (D::less(a.priority, b.priority)) return true;
        if (D::less(b.priority, a.priority)) return false;
        return a.seq < b.seq;
    }

    void wait_push(SortedSuffixStore& s, FollowEntry fe) {
        auto& a = s.waiting;
        a.push_back(std::move(fe));
        size_t i = a.size() - 1;
        while (i > 0) {
            size_t p = (i - 1) / 2;
            ++this->stats_.heap_cmps;
            if (!follow_less(a[i], a[p])) break;
            std::swap(a[i], a[p]);
            i = p;
        }
    }

    FollowEntry wait_pop(SortedSuffixStore& s) {
        auto& a = s.waiting;
        FollowEntry r = std::move(a.front());
        a.front() = std::move(a.back());
        a.pop_back();
        size_t i = 0, n = a.size();
        while (true) {
            size_t l = 2 * i + 1, m = i;
            if (l < n) {
                ++this->stats_.heap_cmps;
                if (follow_less(a[l], a[m])) m = l;
            }
            if (l + 1 < n) {
                ++this->stats_.heap_cmps;
                if (follow_less(a[l + 1], a[m])) m = l + 1;
            }
            if (m == i) break;
            std::swap(a[i], a[m]);
            i = m;
        }
        return r;
    }

    // Mirrors the store's cheapest waiting follower into the queue: pushes
    // it when the store has no entry there, lowers the entry in place when
    // a cheaper follower arrived while one was queued.
    void sync_rep(uint32_t sid) {
        SortedSuffixStore& s = stores_[sid];
        if (s.waiting.empty()) return;
        const FollowEntry& m = s.waiting.front();
        PrefixCandidate c;
        c.prefw = D::one();
        c.edge_w = D::one();
        c.priority = m.priority;
        c.store = sid;
        c.seq = m.seq;
        c.follower = true;
        if (!s.in_cand) {
            s.in_cand = true;
            push_cand(std::move(c), false, true);
        } else if (D::less(m.priority, heap_.at(size_t(rep_pos_[sid])).priority)) {
            heap_.decrease(size_t(rep_pos_[sid]), std::move(c));
        }
    }

    void yield_follower(const PrefixCandidate& c, RankedAnswer<D>& out) {
        SortedSuffixStore& s = stores_[c.store];
        s.in_cand = false;
        rep_pos_[c.store] = -1;
        FollowEntry fe = wait_pop(s);
        if (D::less(fe.priority, c.priority) || D::less(c.priority, fe.priority))
            ++this->stats_.order_violations;
        int endp = level_end_[size_t(s.level)];
        int32_t q = fe.prefix_node;
        for (int p = endp; p >= 0; --p) {
            const Node& n = nodes_[size_t(q)];
            states_[size_t(p)] = n.state;
            edgew_[size_t(p)] = n.edge_w;
            nodeat_[size_t(p)] = q;
            q = n.parent;
        }
        const int32_t* suf = s.flat.data() + size_t(fe.srank) * size_t(s.suffix_len);
        for (int p = endp + 1; p <= sv_.ell; ++p) states_[size_t(p)] = suf[p - endp - 1];
        last_gen_ = fe.gen;
        last_pos_ = endp;
        cur_pop_ = int64_t(this->stats_.pq_pops) - 1;
        follower_appends(c.store, fe.srank);
        // the rest of the store, one rank at a time
        if (fe.srank + 1 < s.w.size())
            enqueue_follow(c.store, fe.prefix_node, fe.srank + 1);
        else
            s.subs.push_back({fe.srank + 1, fe.prefix_node});
        sync_rep(c.store);
        emit(out, fe.priority);
    }

    // A followed solution still extends the leading prefixes above its own
    // store's level; those stores receive its suffix like any other pop's.
    void follower_appends(uint32_t sid, uint32_t srank) {
        int blevel = stores_[sid].level;
        suffw_scratch_.assign(size_t(levels_) + 1, D::one());
        for (int t = blevel - 1; t >= 1; --t) {
            W acc = (t + 1 == blevel) ? stores_[sid].w[srank] : suffw_scratch_[size_t(t) + 1];
            for (int p = level_end_[size_t(t)] + 1; p <= level_end_[size_t(t) + 1]; ++p)
                acc = D::combine(D::combine(acc, edgew_[size_t(p)]),
                                 sv_.tail(p, states_[size_t(p)]));
            suffw_scratch_[size_t(t)] = acc;
        }
        for (int t = 1; t < blevel; ++t) {
            key_scratch_.assign(states_.begin() + level_end_[size_t(t - 1)] + 1,
                                states_.begin() + level_end_[size_t(t)] + 1);
            auto it = level_keys_[size_t(t)].find(key_scratch_);
            if (it == level_keys_[size_t(t)].end() ||
                !std::equal(stores_[it->second].leading.begin(),
                            stores_[it->second].leading.end(), states_.begin())) {
                ++this->stats_.leading_violations;
                return;
            }
            append_suffix(it->second, t);
        }
    }

    const Tdp<D>* T_ = nullptr;
    detail::SerialView<D> sv_;
    SuccSource<D> succ_;
    detail::CountedHeap<PrefixCandidate, CandLess, RepTrack> heap_;
    std::deque<Node> nodes_;
    std::vector<int32_t> states_, nodeat_, uat_;
    std::vector<W> edgew_, prefw_, g_;
    std::vector<int> rel_scratch_;
    uint64_t seq_ = 0;
    long long emitted_ = 0;
    int64_t cur_pop_ = -1, last_gen_ = -1;
    int last_pos_ = 0;
    bool seeded_ = false;

    bool plus_ = false;
    int levels_ = 0;
    std::vector<int> level_end_, level_of_;
    std::vector<std::unordered_map<std::vector<int32_t>, uint32_t, detail::I32Hash>> level_keys_;
    std::deque<SortedSuffixStore> stores_;
    std::vector<int64_t> rep_pos_;  // store id -> heap index of its entry
    std::vector<int32_t> key_scratch_;
    std::vector<W> suffw_scratch_;
};

// Suffix-stream enumeration: one shared stream per intermediate state,
// product ranking where a state has several child subtrees. The stream of
// the intermediate under the source is the answer stream.
template <class D>
class RecIterator : public AnykIterator<D> {
    using W = typename D::W;

  public:
    explicit RecIterator(const Tdp<D>& T) {
        T_ = &T;
        tails_ = detail::terminal_tails<D>(T);
        slots_.resize(T.stages.size());
        prod_slot_.resize(T.stages.size());
        stage_slots_.resize(T.stages.size());
        for (size_t s = 0; s < T.stages.size(); ++s) {
            const auto& st = T.stages[s];
            if (st.kind == StageKind::Intermediate) slots_[s].assign(st.n_states, -1);
            if (st.kind != StageKind::Relation && st.kind != StageKind::Source) continue;
            for (size_t c = 0; c < st.children.size(); ++c)
                if (T.stages[size_t(st.children[c])].kind == StageKind::Intermediate)
                    stage_slots_[s].push_back({int(c), st.children[c]});
            if (st.kind == StageKind::Relation && stage_slots_[s].size() > 1)
                prod_slot_[s].assign(st.n_states, -1);
        }
        states_.assign(T.stages.size(), 0);
    }

    bool next(RankedAnswer<D>& out) override {
        if (T_->no_answers) return false;
        int i_root = T_->stages[0].children[0];
        W w;
        if (!stream_get(i_root, 0, size_t(emitted_), w)) return false;
        const StreamElem& e = streams_[size_t(slots_[size_t(i_root)][0])].memo[size_t(emitted_)];
        decode_stream_elem(i_root, e);
        rel_scratch_.assign(T_->stages.size(), 0);
        for (size_t s = 0; s < T_->stages.size(); ++s) rel_scratch_[s] = int(states_[s]);
        out = assemble_answer(*T_, rel_scratch_, w);
        out.rank = ++emitted_;
        return true;
    }

  private:
    struct StreamElem {
        W w;
        int32_t edge;
        int32_t crank;
    };
    struct HeapElem {
        W w;
        int32_t edge;
        int32_t crank;
        uint64_t seq;
    };
    // Ranked completions through one intermediate state: memo holds the
    // settled prefix of the order, the heap the frontier. Each (edge,
    // crank) pair enters the heap at most once.
    struct Stream {
        std::vector<StreamElem> memo;
        std::vector<HeapElem> heap;
        int istage = -1;
        int32_t state = -1;
    };
    struct ProdElem {
        W w;
        std::vector<int32_t> ranks;
    };
    struct ProdCand {
        W w;
        std::vector<int32_t> ranks;
        int32_t tag;
        uint64_t seq;
    };
    // Ranked combinations of several child streams under one relation
    // state. A candidate may only advance slots up to its tag, which keeps
    // every rank vector reachable exactly one way.
    struct Product {
        std::vector<ProdElem> memo;
        std::vector<ProdCand> heap;
        int stage = -1;
        int32_t state = -1;
    };

    bool elem_less(const W& wa, uint64_t sa, const W& wb, uint64_t sb) {
        ++this->stats_.heap_cmps;
        if (D::less(wa, wb)) return true;
        if (D::less(wb, wa)) return false;
        return sa < sb;
    }

    template <class V>
    void hpush(std::vector<V>& h, V x, bool init) {
        h.push_back(std::move(x));
        size_t i = h.size() - 1;
        while (i > 0) {
            size_t p = (i - 1) / 2;
            if (!elem_less(h[i].w, h[i].seq, h[p].w, h[p].seq)) break;
            std::swap(h[i], h[p]);
            i = p;
        }
        ++this->stats_.pq_pushes;
        if (init) ++this->stats_.init_pushes;
        ++live_entries_;
        this->stats_.max_pq_size = std::max(this->stats_.max_pq_size, live_entries_);
    }

    template <class V>
    V hpop(std::vector<V>& h) {
        V r = std::move(h.front());
        h.front() = std::move(h.back());
        h.pop_back();
        size_t i = 0, n = h.size();
        while (true) {
            size_t l = 2 * i + 1, m = i;
            if (l < n && elem_less(h[l].w, h[l].seq, h[m].w, h[m].seq)) m = l;
            if (l + 1 < n && elem_less(h[l + 1].w, h[l + 1].seq, h[m].w, h[m].seq)) m = l + 1;
            if (m == i) break;
            std::swap(h[i], h[m]);
            i = m;
        }
        ++this->stats_.pq_pops;
        --live_entries_;
        return r;
    }

    int slot_count(int stage) const { return int(stage_slots_[size_t(stage)].size()); }

    int32_t hop_state(int stage, int slot, int32_t v) const {
        int ord = stage_slots_[size_t(stage)][size_t(slot)].first;
        const auto& e = T_->stages[size_t(stage)].out[size_t(ord)];
        return int32_t(e.to[e.off[size_t(v)]]);
    }

    // Weight of the r-th best completion below relation state (stage, v),
    // terminal tail included so rank 0 always equals the state's pi1; false
    // when the state has fewer than r+1 completions.
    bool suffix_w(int stage, int32_t v, size_t r, W& out_w) {
        int d = slot_count(stage);
        if (d == 0) {
            if (r > 0) return false;
            out_w = tails_[size_t(stage)][size_t(v)];
            return true;
        }
        bool found = d == 1 ? stream_get(stage_slots_[size_t(stage)][0].second,
                                         hop_state(stage, 0, v), r, out_w)
                            : product_get(stage, v, r, out_w);
        if (found) out_w = D::combine(out_w, tails_[size_t(stage)][size_t(v)]);
        return found;
    }

    bool stream_get(int istage, int32_t u, size_t r, W& out_w) {
        int& id = slots_[size_t(istage)][size_t(u)];
        if (id < 0) {
            id = int(streams_.size());
            streams_.emplace_back();
            Stream& st = streams_.back();
            st.istage = istage;
            st.state = u;
            const auto& e = T_->stages[size_t(istage)].out[0];
            int child = T_->stages[size_t(istage)].children[0];
            for (size_t k = e.off[size_t(u)]; k < e.off[size_t(u) + 1]; ++k) {
                W w0 = D::combine(e.wt[k], T_->stages[size_t(child)].pi1[size_t(e.to[k])]);
                hpush(st.heap, HeapElem{std::move(w0), int32_t(k), 0, seq_++}, true);
            }
        }
        Stream& st = streams_[size_t(id)];
        while (st.memo.size() <= r) {
            if (st.heap.empty()) return false;
            HeapElem he = hpop(st.heap);
            st.memo.push_back({he.w, he.edge, he.crank});
            const auto& e = T_->stages[size_t(istage)].out[0];
            int child = T_->stages[size_t(istage)].children[0];
            W cw;
            if (suffix_w(child, int32_t(e.to[size_t(he.edge)]), size_t(he.crank) + 1, cw))
                hpush(st.heap,
                      HeapElem{D::combine(e.wt[size_t(he.edge)], cw), he.edge, he.crank + 1,
                               seq_++},
                      false);
        }
        out_w = st.memo[r].w;
        return true;
    }

    W memo_w(int istage, int32_t u, size_t r) const {
        return streams_[size_t(slots_[size_t(istage)][size_t(u)])].memo[r].w;
    }

    bool product_get(int stage, int32_t v, size_t r, W& out_w) {
        int& id = prod_slot_[size_t(stage)][size_t(v)];
        int d = slot_count(stage);
        if (id < 0) {
            id = int(products_.size());
            products_.emplace_back();
            Product& pr = products_.back();
            pr.stage = stage;
            pr.state = v;
            W w0 = D::one();
            for (int s = 0; s < d; ++s) {
                W ws;
                stream_get(stage_slots_[size_t(stage)][size_t(s)].second, hop_state(stage, s, v),
                           0, ws);
                w0 = D::combine(w0, ws);
            }
            hpush(products_[size_t(id)].heap,
                  ProdCand{std::move(w0), std::vector<int32_t>(size_t(d), 0), int32_t(d) - 1,
                           seq_++},
                  true);
        }
        Product& pr = products_[size_t(id)];
        while (pr.memo.size() <= r) {
            if (pr.heap.empty()) return false;
            ProdCand pc = hpop(pr.heap);
            pr.memo.push_back({pc.w, pc.ranks});
            for (int32_t s = 0; s <= pc.tag; ++s) {
                W ws;
                if (!stream_get(stage_slots_[size_t(stage)][size_t(s)].second,
                                hop_state(stage, int(s), v), size_t(pc.ranks[size_t(s)]) + 1,
                                ws))
                    continue;
                W w2 = D::one();
                for (int32_t j = 0; j < int32_t(d); ++j)
                    w2 = D::combine(w2, j == s ? ws
                                               : memo_w(stage_slots_[size_t(stage)][size_t(j)].second,
                                                        hop_state(stage, int(j), v),
                                                        size_t(pc.ranks[size_t(j)])));
                auto r2 = pc.ranks;
                r2[size_t(s)] += 1;
                hpush(pr.heap, ProdCand{std::move(w2), std::move(r2), s, seq_++}, false);
            }
        }
        out_w = pr.memo[r].w;
        return true;
    }

    void decode_stream_elem(int istage, const StreamElem& e) {
        const auto& out_e = T_->stages[size_t(istage)].out[0];
        int child = T_->stages[size_t(istage)].children[0];
        int32_t x = int32_t(out_e.to[size_t(e.edge)]);
        states_[size_t(child)] = x;
        decode_suffix(child, x, size_t(e.crank));
    }

    void decode_suffix(int stage, int32_t v, size_t r) {
        int d = slot_count(stage);
        if (d == 0) return;
        if (d == 1) {
            int is = stage_slots_[size_t(stage)][0].second;
            int32_t u = hop_state(stage, 0, v);
            const Stream& st = streams_[size_t(slots_[size_t(is)][size_t(u)])];
            decode_stream_elem(is, st.memo[r]);
            return;
        }
        const Product& pr = products_[size_t(prod_slot_[size_t(stage)][size_t(v)])];
        const ProdElem& pe = pr.memo[r];
        for (int s = 0; s < d; ++s) {
            int is = stage_slots_[size_t(stage)][size_t(s)].second;
            int32_t u = hop_state(stage, s, v);
            const Stream& st = streams_[size_t(slots_[size_t(is)][size_t(u)])];
            decode_stream_elem(is, st.memo[size_t(pe.ranks[size_t(s)])]);
        }
    }

    const Tdp<D>* T_ = nullptr;
    std::vector<std::vector<W>> tails_;        // relation (stage, state) -> terminal fold
    std::vector<std::vector<int>> slots_;      // intermediate (stage, state) -> stream
    std::vector<std::vector<int>> prod_slot_;  // relation (stage, state) -> product
    std::vector<std::vector<std::pair<int, int>>> stage_slots_;  // child ordinal, istage
    std::deque<Stream> streams_;
    std::deque<Product> products_;
    std::vector<int32_t> states_;
    std::vector<int> rel_scratch_;
    uint64_t seq_ = 0, live_entries_ = 0;
    long long emitted_ = 0;
};

// Sorted merge of already-sorted streams with answer-level deduplication.
template <class D>
class UnionIterator : public AnykIterator<D> {
    using W = typename D::W;

  public:
    explicit UnionIterator(std::vector<std::unique_ptr<AnykIterator<D>>> inner)
        : inner_(std::move(inner)), heap_(EntryLess{}, &this->stats_.heap_cmps) {}

    bool next(RankedAnswer<D>& out) override {
        if (!primed_) {
            primed_ = true;
            for (size_t i = 0; i < inner_.size(); ++i) pull(i);
        }
        while (!heap_.empty()) {
            Entry e = heap_.pop();
            ++this->stats_.pq_pops;
            pull(e.src);
            if (seen_.insert(e.a.head).second) {
                out = std::move(e.a);
                out.rank = ++emitted_;
                return true;
            }
        }
        return false;
    }

  private:
    struct Entry {
        RankedAnswer<D> a;
        size_t src;
        uint64_t seq;
    };
    struct EntryLess {
        bool operator()(const Entry& x, const Entry& y) const {
            if (D::less(x.a.weight, y.a.weight)) return true;
            if (D::less(y.a.weight, x.a.weight)) return false;
            if (x.src != y.src) return x.src < y.src;
            return x.seq < y.seq;
        }
    };

    void pull(size_t i) {
        RankedAnswer<D> a;
        if (inner_[i]->next(a)) {
            heap_.push({std::move(a), i, seq_++});
            ++this->stats_.pq_pushes;
            this->stats_.max_pq_size =
                std::max(this->stats_.max_pq_size, uint64_t(heap_.size()));
        }
    }

    std::vector<std::unique_ptr<AnykIterator<D>>> inner_;
    detail::CountedHeap<Entry, EntryLess> heap_;
    std::unordered_set<std::vector<Value>, detail::ValuesHash> seen_;
    uint64_t seq_ = 0;
    long long emitted_ = 0;
    bool primed_ = false;
};

template <class D>
std::unique_ptr<PartIterator<D>> anyk_part(const Tdp<D>& T,
                                           SuccVariant variant = SuccVariant::Eager) {
    return std::make_unique<PartIterator<D>>(T, variant);
}

template <class D>
std::unique_ptr<RecIterator<D>> anyk_rec(const Tdp<D>& T) {
    return std::make_unique<RecIterator<D>>(T);
}

template <class D>
std::unique_ptr<PartIterator<D>> anyk_part_plus(const Tdp<D>& T, const SerialDecomposition& sd,
                                                SuccVariant variant = SuccVariant::Eager) {
    return std::make_unique<PartIterator<D>>(T, variant, sd);
}

template <class D>
std::unique_ptr<UnionIterator<D>> anyk_union(
    std::vector<std::unique_ptr<AnykIterator<D>>> inner) {
    return std::make_unique<UnionIterator<D>>(std::move(inner));
}

// Full materialization: exhaustive walk of the pruned instance, then one
// sort. Column layout keeps ten-million-solution runs in flat memory;
// answers are assembled on access.
template <class D>
struct BatchResult {
    std::vector<typename D::W> weight;
    std::vector<int32_t> state;  // stride entries per solution, position order
    int stride = 0;

    size_t size() const { return weight.size(); }

    RankedAnswer<D> answer(size_t i, const Tdp<D>& T) const {
        std::vector<int> rel(T.stages.size(), 0);
        for (int p = 1; p < stride; ++p)
            rel[size_t(p)] = int(state[i * size_t(stride) + size_t(p)]);
        auto a = assemble_answer(T, rel, weight[i]);
        a.rank = (long long)i + 1;
        return a;
    }
};

template <class D>
BatchResult<D> batch_yannakakis_sort(const Tdp<D>& T, size_t cap = SIZE_MAX) {
    using W = typename D::W;
    BatchResult<D> r;
    r.stride = T.ell + 1;
    if (T.no_answers) return r;

    detail::SerialView<D> sv;
    sv.init(T);
    std::vector<int32_t> st(size_t(T.ell) + 1, 0);
    std::vector<W> pw(size_t(T.ell) + 1, D::one());
    std::vector<size_t> cursor(size_t(T.ell) + 1, 0);

    int p = 1;
    while (p >= 1) {
        if (p > T.ell) {
            if (r.weight.size() >= cap) throw OutputBudgetExceeded(cap);
            r.weight.push_back(pw[size_t(T.ell)]);
            r.state.insert(r.state.end(), st.begin(), st.end());
            --p;
            continue;
        }
        int32_t pv = st[size_t(sv.spr[size_t(p)])];
        int32_t u = sv.hop(p, pv);
        const auto& e = sv.choices(p);
        size_t k = e.off[size_t(u)] + cursor[size_t(p)];
        if (k >= e.off[size_t(u) + 1]) {
            cursor[size_t(p)] = 0;
            --p;
            continue;
        }
        ++cursor[size_t(p)];
        st[size_t(p)] = int32_t(e.to[k]);
        pw[size_t(p)] = D::combine(D::combine(pw[size_t(p) - 1], e.wt[k]),
                                   sv.tail(p, st[size_t(p)]));
        ++p;
    }

    std::vector<uint32_t> idx(r.weight.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = uint32_t(i);
    const int stride = r.stride;
    std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
        if (D::less(r.weight[a], r.weight[b])) return true;
        if (D::less(r.weight[b], r.weight[a])) return false;
        const int32_t* sa = r.state.data() + size_t(a) * size_t(stride);
        const int32_t* sb = r.state.data() + size_t(b) * size_t(stride);
        for (int j = 0; j < stride; ++j)
            if (sa[j] != sb[j]) return sa[j] < sb[j];
        return false;
    });
    std::vector<W> w2(r.weight.size());
    std::vector<int32_t> s2(r.state.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        w2[i] = r.weight[idx[i]];
        std::copy_n(r.state.data() + size_t(idx[i]) * size_t(stride), stride,
                    s2.data() + i * size_t(stride));
    }
    r.weight = std::move(w2);
    r.state = std::move(s2);
    return r;
}

// Replays a finished materialization through the streaming interface.
template <class D>
class BatchIterator : public AnykIterator<D> {
  public:
    BatchIterator(const Tdp<D>& T, size_t cap) : T_(&T), r_(batch_yannakakis_sort(T, cap)) {}

    bool next(RankedAnswer<D>& out) override {
        if (i_ >= r_.size()) return false;
        out = r_.answer(i_++, *T_);
        return true;
    }

  private:
    const Tdp<D>* T_;
    BatchResult<D> r_;
    size_t i_ = 0;
};

// One constructor over the four families; suffix reuse additionally needs
// the serial decomposition of the tree the instance was built from.
template <class D>
std::unique_ptr<AnykIterator<D>> make_anyk(const Tdp<D>& T, const AlgoChoice& algo,
                                           const SerialDecomposition* sd = nullptr) {
    switch (algo.kind) {
        case AlgoChoice::Rec:
            return anyk_rec(T);
        case AlgoChoice::PartPlus:
            if (!sd) throw ConfigError("suffix reuse needs a serial decomposition");
            return anyk_part_plus(T, *sd, algo.variant);
        case AlgoChoice::Batch:
            return std::make_unique<BatchIterator<D>>(T, algo.batch_cap);
        case AlgoChoice::Part:
            break;
    }
    return anyk_part(T, algo.variant);
}

}  // namespace anyk
