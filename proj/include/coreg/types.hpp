#pragma once

#include <Eigen/Core>

#include <vector>

namespace coreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sorted, duplicate-free list of basis indices.
using IndexSet = std::vector<Index>;

// Sorts and deduplicates; throws if any index lies outside [0, n).
IndexSet normalize_index_set(IndexSet omega, Index n);

// {0..n-1} \ omega for a normalized omega.
IndexSet complement(const IndexSet& omega, Index n);

}  // namespace coreg
