#pragma once

#include "mnmimo/types.hpp"

namespace mnmimo::fft {

/// X_k = sum_n x_n exp(-i 2 pi k n / N). Unnormalized, any N.
CVector forward(const CVector& x);

/// x_n = sum_k X_k exp(+i 2 pi k n / N). Unnormalized, any N.
CVector inverse(const CVector& X);

} // namespace mnmimo::fft
