#include "sae/transforms.hpp"

#include <cmath>
#include <string>

#include "sae/errors.hpp"

namespace sae {

Transform make_transform(int root) {
  if (root != 2 && root != 4)
    throw ConfigError("transform root must be 2 or 4, got " + std::to_string(root));
  return Transform{root};
}

double Transform::forward(double y) const {
  if (!(y >= 0.0)) throw DataError("transform: response must be nonnegative");
  return root == 2 ? std::sqrt(y) : std::sqrt(std::sqrt(y));
}

double Transform::naive_inverse(double t) const {
  double t2 = t * t;
  return root == 2 ? t2 : t2 * t2;
}

double Transform::bias_corrected_inverse(double m, double v) const {
  if (!(v >= 0.0)) throw NumericError("transform: variance must be nonnegative");
  double m2 = m * m;
  if (root == 2) return m2 + v;
  return m2 * m2 + 6.0 * m2 * v + 3.0 * v * v;
}

}  // namespace sae
