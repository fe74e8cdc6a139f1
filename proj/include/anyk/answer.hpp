#pragma once

#include <anyk/relation.hpp>

#include <vector>

namespace anyk {

enum class Semantics { AllWeights, MinWeight };

// One ranked query answer: projected head values plus the witness tuples
// (one per atom, in query order) whose weights fold into `weight`. Under
// MinWeight semantics the witness is the preferred one for its group.
template <class D>
struct RankedAnswer {
    typename D::W weight{};
    std::vector<Value> head;
    std::vector<std::vector<Value>> witness;
    long long rank = 0;  // 1-based position in the ranked stream
};

}  // namespace anyk
