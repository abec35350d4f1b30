#include "flowbench/flowmatch/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowbench::flowmatch {

void SegmentSchedule::validate() const {
    if (segments < 1) throw RangeError("SegmentSchedule: segments must be >= 1");
    if (!(delta_t > 0.0) || !(delta_t < 1.0 / segments)) {
        throw RangeError("SegmentSchedule: require 0 < delta_t < 1/K");
    }
    if (!(alpha > 0.0)) throw RangeError("SegmentSchedule: alpha must be positive");
    if (!(epsilon >= 0.0) || !(epsilon < 0.5)) {
        throw RangeError("SegmentSchedule: epsilon must be in [0, 0.5)");
    }
    if (!lambda.empty()) {
        if (static_cast<int>(lambda.size()) != segments) {
            throw RangeError("SegmentSchedule: lambda size must equal segments");
        }
        for (double l : lambda) {
            if (!(l > 0.0)) throw RangeError("SegmentSchedule: lambda weights must be positive");
        }
    }
    for (int i = 0; i < segments; ++i) {
        if (!(sample_lo(i) < sample_hi(i))) {
            throw RangeError("SegmentSchedule: empty sampling interval in segment " +
                             std::to_string(i));
        }
    }
}

double SegmentSchedule::sample_lo(int i) const {
    return std::max(segment_start(i), epsilon);
}

double SegmentSchedule::sample_hi(int i) const {
    return std::min(segment_end(i) - delta_t, 1.0 - epsilon);
}

int SegmentSchedule::segment_of(double t) const {
    if (t < 0.0 || t > 1.0) throw RangeError("segment_of: t outside [0,1]");
    int i = std::min(segments - 1, static_cast<int>(std::floor(t * segments)));
    if (t + delta_t > segment_end(i) + 1e-12) {
        throw ContractError("segment_of: t + delta_t crosses the segment boundary");
    }
    return i;
}

double SegmentSchedule::weight(int i) const {
    if (i < 0 || i >= segments) throw RangeError("SegmentSchedule::weight: bad segment");
    return lambda.empty() ? 1.0 : lambda[static_cast<std::size_t>(i)];
}

}  // namespace flowbench::flowmatch
