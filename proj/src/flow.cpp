#include "rawpipe/flow.hpp"

#include <cmath>

namespace rawpipe::flow {

void invert_matrix(const std::vector<double>& m, int D, std::vector<double>& inv_out,
                   double& det_abs_out) {
    std::vector<double> a = m; // working copy, augmented logically with I
    inv_out.assign(static_cast<std::size_t>(D) * D, 0.0);
    for (int i = 0; i < D; ++i) inv_out[static_cast<std::size_t>(i) * D + i] = 1.0;

    double det = 1.0;
    for (int col = 0; col < D; ++col) {
        int pivot = col;
        double best = std::fabs(a[static_cast<std::size_t>(col) * D + col]);
        for (int r = col + 1; r < D; ++r) {
            const double v = std::fabs(a[static_cast<std::size_t>(r) * D + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best <= 1e-300) throw SingularityError("mix matrix is singular");
        if (pivot != col) {
            for (int c = 0; c < D; ++c) {
                std::swap(a[static_cast<std::size_t>(pivot) * D + c],
                          a[static_cast<std::size_t>(col) * D + c]);
                std::swap(inv_out[static_cast<std::size_t>(pivot) * D + c],
                          inv_out[static_cast<std::size_t>(col) * D + c]);
            }
            det = -det;
        }
        const double pv = a[static_cast<std::size_t>(col) * D + col];
        det *= pv;
        const double inv_pv = 1.0 / pv;
        for (int c = 0; c < D; ++c) {
            a[static_cast<std::size_t>(col) * D + c] *= inv_pv;
            inv_out[static_cast<std::size_t>(col) * D + c] *= inv_pv;
        }
        for (int r = 0; r < D; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<std::size_t>(r) * D + col];
            if (f == 0.0) continue;
            for (int c = 0; c < D; ++c) {
                a[static_cast<std::size_t>(r) * D + c] -=
                    f * a[static_cast<std::size_t>(col) * D + c];
                inv_out[static_cast<std::size_t>(r) * D + c] -=
                    f * inv_out[static_cast<std::size_t>(col) * D + c];
            }
        }
    }
    det_abs_out = std::fabs(det);
    if (det_abs_out <= 1e-12) throw SingularityError("|det W| <= 1e-12");
}

} // namespace rawpipe::flow
