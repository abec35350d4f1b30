#pragma once

#include <cstddef>
#include <vector>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::perception {

using numcore::Tensor;

// Greedy farthest point sampling over an (N, 3) cloud. First pick is
// start_index; each later pick maximizes the minimum Euclidean distance to
// everything already selected, lowest index winning exact ties. Returns the
// m chosen indices in selection order.
std::vector<std::size_t> fps(const Tensor& cloud, std::size_t m, std::size_t start_index = 0);

// Index of the lexicographically smallest point (x, then y, then z), lowest
// index on exact equality. Starting fps here makes the selected coordinate
// set independent of the row order of the cloud.
std::size_t canonical_start(const Tensor& cloud);

// Materializes the selected rows as an (m, 3) cloud.
Tensor gather_rows(const Tensor& cloud, const std::vector<std::size_t>& indices);

}  // namespace flowbench::perception
