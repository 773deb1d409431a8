#pragma once

#include "streamdiar/types.hpp"

#include <vector>

namespace streamdiar {

// Maximum-weight one-to-one assignment between the rows and columns of a
// non-negative gain matrix. result[r] is the column given to row r, or -1 when
// row r stays unmatched (only possible when rows > cols).

// Tries every injection; intended for at most ~6 rows/cols.
std::vector<int> exhaustive_assignment(const Matrix &gain);

// Hungarian algorithm (shortest augmenting path, O(n^3)) on the square
// zero-padded problem.
std::vector<int> hungarian_assignment(const Matrix &gain);

// Exhaustive when both dimensions are <= 4, Hungarian otherwise.
std::vector<int> optimal_assignment(const Matrix &gain);

double assignment_gain(const Matrix &gain, const std::vector<int> &assignment);

} // namespace streamdiar
