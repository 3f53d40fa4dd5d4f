#include <cmath>

#include "adahi/linalg.hpp"

namespace adahi {

Vec solve(Mat m, Vec b) {
    if (m.rows != m.cols || b.size() != m.rows) {
        throw ContractError("solve: need square system");
    }
    const std::size_t n = m.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
        }
        if (std::abs(m(pivot, col)) < 1e-12) {
            throw ContractError("solve: singular system");
        }
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(pivot, j));
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = m(r, col) / m(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= m(i, j) * x[j];
        x[i] = acc / m(i, i);
    }
    return x;
}

}  // namespace adahi
