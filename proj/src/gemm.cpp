// Eigen is confined to this translation unit; the rest of the project sees
// only the three plain GEMM entry points.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include "srtk/nn.hpp"

namespace srtk::nn {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void sgemm(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    ConstMatMap A(a, m, k), B(b, k, n);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

void sgemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    ConstMatMap A(a, k, m), B(b, k, n);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

void sgemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    ConstMatMap A(a, m, k), B(b, n, k);
    MatMap C(c, m, n);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

}  // namespace srtk::nn
