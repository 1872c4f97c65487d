#include "ciwave/admm.hpp"

namespace ciwave {

AdmmResult solve_qam_form(const RealMatrix& vtilde, const AdmmConfig& cfg,
                          const std::vector<bool>* nonneg_mask) {
  InverseSimplexQp op(vtilde);
  return admm_solve(op, cfg, nonneg_mask);
}

}  // namespace ciwave
