#pragma once

#include <vector>

#include "flowbench/error.hpp"

namespace flowbench::flowmatch {

// Hyperparameters of segmented velocity-consistency training: K segments
// over [0,1], per-segment weights, velocity-term weight, target time offset
// and a margin keeping sampled times away from the exact boundaries.
struct SegmentSchedule {
    int segments = 2;                  // K
    double delta_t = 1e-2;
    double alpha = 1.0;
    std::vector<double> lambda;        // per-segment weights; empty = all 1
    double epsilon = 1e-3;

    void validate() const;

    double segment_start(int i) const { return static_cast<double>(i) / segments; }
    double segment_end(int i) const { return static_cast<double>(i + 1) / segments; }

    // Sampling interval for t within segment i.
    double sample_lo(int i) const;
    double sample_hi(int i) const;

    // Segment containing t; throws ContractError when t + delta_t would
    // cross the segment end.
    int segment_of(double t) const;

    double weight(int i) const;
};

}  // namespace flowbench::flowmatch
