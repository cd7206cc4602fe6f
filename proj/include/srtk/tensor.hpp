#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace srtk {

// Dense row-major float tensor. Images and feature maps use NCHW order;
// conv weights use [out_ch, in_ch, kh, kw]; vectors use a single axis.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(numel_of(shape_)), 0.0f);
    }
    Tensor(std::vector<int> shape, float fill) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(numel_of(shape_)), fill);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v) { return Tensor(std::move(shape), v); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessors.
    int64_t index4(int n, int c, int h, int w) const {
        return ((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }
    float& at4(int n, int c, int h, int w) { return data_[static_cast<size_t>(index4(n, c, h, w))]; }
    float at4(int n, int c, int h, int w) const { return data_[static_cast<size_t>(index4(n, c, h, w))]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static int64_t numel_of(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw std::invalid_argument("tensor dimension must be nonnegative");
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
    std::string shape_str() const { return shape_str(shape_); }

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

inline void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
    if (t.shape() != shape) {
        throw std::invalid_argument(std::string(what) + ": expected shape " + Tensor::shape_str(shape) +
                                    ", got " + t.shape_str());
    }
}

}  // namespace srtk
