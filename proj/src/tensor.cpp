#include "cgarom/tensor.hpp"

#include <cmath>
#include <string>

#include "cgarom/errors.hpp"

namespace cgarom {

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1)
        throw DimensionError("item() requires a 1x1 tensor, got " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

void Tensor::require_finite(const char* what) const {
    if (!all_finite()) throw NumericalError(std::string("non-finite values in ") + what);
}

} // namespace cgarom
