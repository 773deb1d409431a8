#include "streamdiar/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace streamdiar {

double assignment_gain(const Matrix &gain, const std::vector<int> &assignment) {
    double total = 0.0;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] >= 0) total += gain(static_cast<Eigen::Index>(r), assignment[r]);
    }
    return total;
}

std::vector<int> exhaustive_assignment(const Matrix &gain) {
    const auto rows = static_cast<int>(gain.rows());
    const auto cols = static_cast<int>(gain.cols());
    const int n = std::max(rows, cols);

    // Permute padded columns; padded entries (r >= rows or c >= cols) gain 0.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best(static_cast<std::size_t>(rows), -1);
    double best_gain = -std::numeric_limits<double>::infinity();
    do {
        double g = 0.0;
        for (int r = 0; r < rows; ++r) {
            if (perm[static_cast<std::size_t>(r)] < cols) g += gain(r, perm[static_cast<std::size_t>(r)]);
        }
        if (g > best_gain) {
            best_gain = g;
            for (int r = 0; r < rows; ++r) {
                const int c = perm[static_cast<std::size_t>(r)];
                best[static_cast<std::size_t>(r)] = c < cols ? c : -1;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<int> hungarian_assignment(const Matrix &gain) {
    const auto rows = static_cast<std::size_t>(gain.rows());
    const auto cols = static_cast<std::size_t>(gain.cols());
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return {};

    // Minimize cost = max_gain - gain on the padded n×n problem; potentials
    // and matches are 1-based with index 0 as the virtual source column.
    const double top = gain.size() ? gain.maxCoeff() : 0.0;
    auto cost = [&](std::size_t r, std::size_t c) {
        const double g = (r < rows && c < cols) ? gain(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) : 0.0;
        return top - g;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> result(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t r = match[j] - 1;
        if (r < rows && j - 1 < cols) result[r] = static_cast<int>(j - 1);
    }
    return result;
}

std::vector<int> optimal_assignment(const Matrix &gain) {
    if (gain.rows() <= 4 && gain.cols() <= 4) return exhaustive_assignment(gain);
    return hungarian_assignment(gain);
}

} // namespace streamdiar
