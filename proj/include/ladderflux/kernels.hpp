#pragma once

#include <complex>
#include <cstdint>

#include "ladderflux/operators.hpp"

// Hot loops, each in an OpenMP flavour and a serial reference flavour. The
// parallel versions split work so that every output element is produced by a
// single thread with a fixed in-row/in-column accumulation order, which makes
// results bitwise identical for any thread count.
namespace ladderflux::kernels {

void spmv_serial(const SparseOperator& a, const cplx* x, cplx* y);
void spmv(const SparseOperator& a, const cplx* x, cplx* y);

// Lindblad right-hand side with pure-dephasing jump operators:
//   out = -i (H rho - rho H) - decay .* rho
// where decay[a + dim*b] = (1/T2) * sum_j (n_j(a) - n_j(b))^2 is precomputed
// and rho/out are column-major dim x dim. decay may be null (unitary case).
void lindblad_rhs_serial(const SparseOperator& h, const double* decay, const cplx* rho,
                         cplx* out);
void lindblad_rhs(const SparseOperator& h, const double* decay, const cplx* rho, cplx* out);

}  // namespace ladderflux::kernels
