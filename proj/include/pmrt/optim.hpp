#ifndef PMRT_OPTIM_HPP
#define PMRT_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "pmrt/layers.hpp"

namespace pmrt {

// Adaptive-moment gradient descent over one parameter group. Updates run in
// registration order with no data-dependent branching, so identical
// gradient streams give bitwise-identical parameters.
class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr = 1e-3,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies the accumulated gradients and clears them. Throws Divergence if
  // any updated value is non-finite.
  void step();
  void zero_grad();

  const std::vector<Param*>& params() const { return params_; }
  int64_t step_count() const { return t_; }
  double learning_rate() const { return lr_; }

  // Moment tensors in parameter order, for checkpointing.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_step_count(int64_t t) { t_ = t; }

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace pmrt

#endif  // PMRT_OPTIM_HPP
