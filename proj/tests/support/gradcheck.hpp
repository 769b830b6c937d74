#pragma once

#include <functional>
#include <vector>

#include "lcw/autodiff.hpp"

namespace lcw::testing {

struct GradCheck {
  double max_rel_error = 0.0;  // worst input, |g_ad - g_fd| / max(|g_ad|, |g_fd|)
  bool finite = true;
};

/// Compares backward() against central differences with step h for every
/// entry of every input. `f` must rebuild the graph from the given leaves.
GradCheck check_gradients(const std::function<ad::Var(const std::vector<ad::Var>&)>& f,
                          const std::vector<Tensor>& inputs, double h = 1e-5);

/// Random N(0, scale^2) tensor of the given shape.
Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0);

}  // namespace lcw::testing
