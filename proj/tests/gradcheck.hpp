#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "recongan/core/rng.hpp"
#include "recongan/core/tensor.hpp"

namespace recongan::testutil {

struct GradCheckResult {
    double norm_rel = 0.0;    // ||fd - an|| / max(||fd||, ||an||) over the sample
    double median_rel = 0.0;  // per-coordinate, informational
    double max_rel = 0.0;
    int coords = 0;
};

/// Central finite differences of `loss` against `analytic` on `coords`
/// randomly sampled coordinates of `x`. `loss` must be a pure function of x.
inline GradCheckResult gradcheck(const std::function<double(const Tensor&)>& loss, const Tensor& x,
                                 const Tensor& analytic, int coords, double h, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> fd_v, an_v, rels;
    fd_v.reserve(coords);
    for (int t = 0; t < coords; ++t) {
        const int64_t j = static_cast<int64_t>(rng.bounded(static_cast<uint64_t>(x.size())));
        Tensor xp = x;
        xp[j] += static_cast<float>(h);
        const double lp = loss(xp);
        Tensor xm = x;
        xm[j] -= static_cast<float>(h);
        const double lm = loss(xm);
        const double fd = (lp - lm) / (2.0 * h);
        const double an = analytic[j];
        fd_v.push_back(fd);
        an_v.push_back(an);
        rels.push_back(std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-8}));
    }

    GradCheckResult r;
    r.coords = coords;
    double diff2 = 0.0, fd2 = 0.0, an2 = 0.0;
    for (size_t i = 0; i < fd_v.size(); ++i) {
        diff2 += (fd_v[i] - an_v[i]) * (fd_v[i] - an_v[i]);
        fd2 += fd_v[i] * fd_v[i];
        an2 += an_v[i] * an_v[i];
    }
    r.norm_rel = std::sqrt(diff2) / std::max({std::sqrt(fd2), std::sqrt(an2), 1e-12});
    std::sort(rels.begin(), rels.end());
    r.median_rel = rels[rels.size() / 2];
    r.max_rel = rels.back();
    return r;
}

}  // namespace recongan::testutil
