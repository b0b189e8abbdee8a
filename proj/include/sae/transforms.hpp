#pragma once

namespace sae {

// Root transform of the positive response: t = y^(1/r), r in {2, 4}.
// The bias-corrected inverse maps a mean m and residual variance v on the
// transformed scale back to an (approximately) unbiased mean on the
// original scale, using the exact normal moments E[T^r] with T ~ N(m, v).
struct Transform {
  int root = 2;  // 2 or 4

  double forward(double y) const;
  double naive_inverse(double t) const;
  double bias_corrected_inverse(double m, double v) const;
};

Transform make_transform(int root);

}  // namespace sae
