#include "flowbench/flowmatch/ema.hpp"

#include "flowbench/error.hpp"

namespace flowbench::flowmatch {

EmaState make_ema(const std::vector<const Tensor*>& params, double decay) {
    if (decay < 0.0 || decay >= 1.0) throw RangeError("ema: decay must be in [0, 1)");
    EmaState ema;
    ema.decay = decay;
    ema.shadow.reserve(params.size());
    for (const Tensor* p : params) ema.shadow.push_back(*p);
    return ema;
}

void ema_update(EmaState& ema, const std::vector<const Tensor*>& params) {
    if (params.size() != ema.shadow.size()) throw DimensionError("ema: param count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& s = ema.shadow[i];
        const Tensor& p = *params[i];
        if (!p.same_shape(s)) throw DimensionError("ema: param shape mismatch");
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = ema.decay * s[k] + (1.0 - ema.decay) * p[k];
    }
}

}  // namespace flowbench::flowmatch
