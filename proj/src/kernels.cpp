#include "ladderflux/kernels.hpp"

namespace ladderflux::kernels {

void spmv_serial(const SparseOperator& a, const cplx* x, cplx* y) {
  for (std::int64_t r = 0; r < a.dim; ++r) {
    cplx acc{0, 0};
    for (std::int64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      acc += a.val[k] * x[a.col[k]];
    }
    y[r] = acc;
  }
}

void spmv(const SparseOperator& a, const cplx* x, cplx* y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < a.dim; ++r) {
    cplx acc{0, 0};
    for (std::int64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      acc += a.val[k] * x[a.col[k]];
    }
    y[r] = acc;
  }
}

namespace {

// One output column b of -i (H rho - rho H) - decay .* rho.
// (H rho)[:,b] is a matvec with column b of rho; (rho H)[:,b] folds in the
// nonzeros of H's row b using hermiticity, H[c][b] = conj(H[b][c]).
inline void rhs_column(const SparseOperator& h, const double* decay, const cplx* rho,
                       cplx* out, std::int64_t b) {
  const std::int64_t d = h.dim;
  const cplx* rho_b = rho + b * d;
  cplx* out_b = out + b * d;
  for (std::int64_t r = 0; r < d; ++r) {
    cplx acc{0, 0};
    for (std::int64_t k = h.row_ptr[r]; k < h.row_ptr[r + 1]; ++k) {
      acc += h.val[k] * rho_b[h.col[k]];
    }
    out_b[r] = acc;
  }
  for (std::int64_t k = h.row_ptr[b]; k < h.row_ptr[b + 1]; ++k) {
    const cplx w = std::conj(h.val[k]);
    const cplx* rho_c = rho + static_cast<std::int64_t>(h.col[k]) * d;
    for (std::int64_t r = 0; r < d; ++r) out_b[r] -= w * rho_c[r];
  }
  const cplx minus_i{0, -1};
  if (decay != nullptr) {
    const double* dec_b = decay + b * d;
    for (std::int64_t r = 0; r < d; ++r) {
      out_b[r] = minus_i * out_b[r] - dec_b[r] * rho_b[r];
    }
  } else {
    for (std::int64_t r = 0; r < d; ++r) out_b[r] = minus_i * out_b[r];
  }
}

}  // namespace

void lindblad_rhs_serial(const SparseOperator& h, const double* decay, const cplx* rho,
                         cplx* out) {
  for (std::int64_t b = 0; b < h.dim; ++b) rhs_column(h, decay, rho, out, b);
}

void lindblad_rhs(const SparseOperator& h, const double* decay, const cplx* rho, cplx* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < h.dim; ++b) rhs_column(h, decay, rho, out, b);
}

}  // namespace ladderflux::kernels
