#include "streamdiar/permutation.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <numeric>

namespace streamdiar {

Permutation Permutation::identity(int n) {
    Permutation p;
    p.map.resize(static_cast<std::size_t>(n));
    std::iota(p.map.begin(), p.map.end(), 0);
    return p;
}

bool Permutation::is_valid() const {
    std::vector<bool> seen(map.size(), false);
    for (int v : map) {
        if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = true;
    }
    return true;
}

bool Permutation::is_identity() const {
    for (int s = 0; s < size(); ++s) {
        if (map[static_cast<std::size_t>(s)] != s) return false;
    }
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.map.resize(map.size());
    for (int s = 0; s < size(); ++s) inv.map[static_cast<std::size_t>(map[static_cast<std::size_t>(s)])] = s;
    return inv;
}

std::string Permutation::to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(map[i] + 1);
    }
    return out + ")";
}

Permutation compose(const Permutation &a, const Permutation &b) {
    if (a.size() != b.size()) throw ShapeError("cannot compose permutations of different sizes");
    Permutation c;
    c.map.resize(b.map.size());
    for (std::size_t s = 0; s < b.map.size(); ++s) c.map[s] = a.map[static_cast<std::size_t>(b.map[s])];
    return c;
}

Matrix apply_permutation(const Matrix &y, const Permutation &p) {
    if (p.size() != y.rows() || !p.is_valid()) {
        throw ShapeError("permutation " + p.to_string() + " does not fit " + std::to_string(y.rows()) +
                         " rows");
    }
    Matrix out(y.rows(), y.cols());
    for (int s = 0; s < p.size(); ++s) out.row(s) = y.row(p.map[static_cast<std::size_t>(s)]);
    return out;
}

std::vector<Permutation> all_permutations(int n) {
    std::vector<Permutation> out;
    Permutation p = Permutation::identity(n);
    do {
        out.push_back(p);
    } while (std::next_permutation(p.map.begin(), p.map.end()));
    return out;
}

} // namespace streamdiar
