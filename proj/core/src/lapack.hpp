#pragma once

// LAPACKE with std::complex<double> as its complex type. Private to the core
// library.

#include <complex>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif

#include <lapacke.h>
