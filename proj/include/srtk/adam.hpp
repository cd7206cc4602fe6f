#pragma once

#include <vector>

#include "srtk/nn.hpp"
#include "srtk/tensor.hpp"

namespace srtk::nn {

// Adam with bias correction. Moment slots are keyed by parameter order, which
// is deterministic for every model in this project.
class Adam {
public:
    Adam() = default;
    Adam(double beta1, double beta2, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void attach(const std::vector<Param>& params);
    void step(double lr, const std::vector<Param>& params);
    void reset();

    int64_t step_count() const { return t_; }
    // State round-trips through named tensors for checkpointing.
    std::vector<std::pair<std::string, Tensor>> export_state(const std::vector<Param>& params) const;
    void import_state(const std::vector<std::pair<std::string, Tensor>>& state,
                      const std::vector<Param>& params, int64_t step_count);

private:
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace srtk::nn
