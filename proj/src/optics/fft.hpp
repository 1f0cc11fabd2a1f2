#pragma once

#include "common/grid.hpp"

namespace lcnf::optics {

// Convention used throughout the project:
//   forward transform is unnormalized, inverse carries 1/(rows*cols);
//   spectra are stored DC-centered (DC at index (rows/2, cols/2)).
// The fftshift bookkeeping lives entirely in these wrappers.

/// Centered spectrum of a real-space field.
ComplexGrid spectrum(const ComplexGrid& field);
ComplexGrid spectrum(const RealGrid& field);

/// Inverse of `spectrum`.
ComplexGrid inverse_spectrum(const ComplexGrid& centered);

/// Plain (uncentered) DFT pair, FFT-ordered.
ComplexGrid fft2(const ComplexGrid& x);
ComplexGrid ifft2(const ComplexGrid& x);

ComplexGrid fftshift(const ComplexGrid& x);
ComplexGrid ifftshift(const ComplexGrid& x);

/// Orthogonal-free DCT-II / DCT-III pair (FFTW REDFT10 / REDFT01).
/// dct3(dct2(x)) = 4*rows*cols * x.
RealGrid dct2(const RealGrid& x);
RealGrid dct3(const RealGrid& x);

}  // namespace lcnf::optics
