#pragma once

#include "streamdiar/types.hpp"

#include <string>
#include <vector>

namespace streamdiar {

// Bijection on speaker rows, stored 0-based: map[s] is the source row that
// lands in row s when applied.
struct Permutation {
    std::vector<int> map;

    static Permutation identity(int n);

    int size() const { return static_cast<int>(map.size()); }
    bool is_valid() const;
    bool is_identity() const;
    Permutation inverse() const;

    // 1-based, e.g. "(2,1)".
    std::string to_string() const;

    bool operator==(const Permutation &) const = default;
    auto operator<=>(const Permutation &) const = default;
};

// (a ∘ b)(s) = a(b(s)).
Permutation compose(const Permutation &a, const Permutation &b);

// Row s of the result is row p.map[s] of y. Throws ShapeError if p does not
// fit y or is not a bijection.
Matrix apply_permutation(const Matrix &y, const Permutation &p);

// All permutations of n elements in lexicographic order, identity first.
std::vector<Permutation> all_permutations(int n);

} // namespace streamdiar
