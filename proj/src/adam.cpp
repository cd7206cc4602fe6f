#include "srtk/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace srtk::nn {

void Adam::attach(const std::vector<Param>& params) {
    m_.clear();
    v_.clear();
    t_ = 0;
    for (const auto& p : params) {
        m_.emplace_back(p.trainable ? p.value->shape() : std::vector<int>{0});
        v_.emplace_back(p.trainable ? p.value->shape() : std::vector<int>{0});
    }
}

void Adam::step(double lr, const std::vector<Param>& params) {
    if (m_.size() != params.size()) throw std::logic_error("adam: attach() before step()");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        const Param& p = params[i];
        if (!p.trainable) continue;
        auto& val = p.value->vec();
        const auto& g = p.grad->vec();
        auto& m = m_[i].vec();
        auto& v = v_[i].vec();
        for (size_t j = 0; j < val.size(); ++j) {
            m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
            v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * static_cast<double>(g[j]) * g[j]);
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            val[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

void Adam::reset() {
    for (auto& t : m_) std::fill(t.vec().begin(), t.vec().end(), 0.0f);
    for (auto& t : v_) std::fill(t.vec().begin(), t.vec().end(), 0.0f);
    t_ = 0;
}

std::vector<std::pair<std::string, Tensor>> Adam::export_state(
    const std::vector<Param>& params) const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        out.emplace_back("m." + params[i].name, m_[i]);
        out.emplace_back("v." + params[i].name, v_[i]);
    }
    return out;
}

void Adam::import_state(const std::vector<std::pair<std::string, Tensor>>& state,
                        const std::vector<Param>& params, int64_t step_count) {
    attach(params);
    t_ = step_count;
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        bool got_m = false, got_v = false;
        for (const auto& [name, tensor] : state) {
            if (name == "m." + params[i].name) { m_[i] = tensor; got_m = true; }
            if (name == "v." + params[i].name) { v_[i] = tensor; got_v = true; }
        }
        if (!got_m || !got_v)
            throw std::invalid_argument("adam: missing optimizer state for " + params[i].name);
        if (!m_[i].same_shape(*params[i].value) || !v_[i].same_shape(*params[i].value))
            throw std::invalid_argument("adam: optimizer state shape mismatch for " + params[i].name);
    }
}

}  // namespace srtk::nn
