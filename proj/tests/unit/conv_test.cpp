#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/kernels.hpp"
#include "helpers.hpp"

using namespace forge;
using testing_support::random_tensor;

namespace {

// Direct sliding-window convolution, output laid out channel-major (C,H,W).
std::vector<double> direct_conv(const std::vector<double>& x, const Tensor& k, const Tensor& b,
                                const kernels::ConvGeometry& g) {
  const std::size_t oh = (g.in_height + 2 * g.padding - g.kernel_size) / g.stride + 1;
  const std::size_t ow = (g.in_width + 2 * g.padding - g.kernel_size) / g.stride + 1;
  std::vector<double> out(g.out_channels * oh * ow, 0.0);
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double s = b[o];
        for (std::size_t c = 0; c < g.in_channels; ++c)
          for (std::size_t ky = 0; ky < g.kernel_size; ++ky)
            for (std::size_t kx = 0; kx < g.kernel_size; ++kx) {
              const long y = static_cast<long>(i * g.stride + ky) - static_cast<long>(g.padding);
              const long xx = static_cast<long>(j * g.stride + kx) - static_cast<long>(g.padding);
              if (y < 0 || xx < 0 || y >= static_cast<long>(g.in_height) || xx >= static_cast<long>(g.in_width))
                continue;
              s += k(o, (c * g.kernel_size + ky) * g.kernel_size + kx) *
                   x[(c * g.in_height + static_cast<std::size_t>(y)) * g.in_width + static_cast<std::size_t>(xx)];
            }
        out[(o * oh + i) * ow + j] = s;
      }
  return out;
}

}  // namespace

TEST(Conv, MatchesDirectConvolution) {
  std::mt19937_64 rng(11);
  const std::vector<kernels::ConvGeometry> geos{
      {1, 5, 5, 2, 3, 1, 0}, {2, 6, 5, 3, 3, 2, 1}, {3, 4, 4, 4, 2, 1, 1}, {1, 7, 3, 1, 3, 3, 2}};
  for (const auto& g : geos) {
    const Tensor x = random_tensor(rng, {2, g.in_features()});
    const Tensor k = random_tensor(rng, {g.out_channels, g.patch_size()});
    const Tensor b = random_tensor(rng, {g.out_channels});
    const Tensor y = kernels::conv2d(x, k, b, g);
    ASSERT_EQ(y.shape(), (Shape{2, g.out_features()}));
    for (std::size_t n = 0; n < 2; ++n) {
      const auto row = x.row(n);
      const auto ref = direct_conv({row.begin(), row.end()}, k, b, g);
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y(n, i), ref[i], 1e-12);
    }
  }
}

TEST(Conv, PaddingEntriesAreMarked) {
  kernels::ConvGeometry g{1, 2, 2, 1, 3, 1, 1};
  const auto idx = kernels::im2col_index(g);
  // First patch centred on (0,0): top row and left column fall in padding.
  EXPECT_EQ(idx[0], -1);
  EXPECT_EQ(idx[4], 0);  // centre tap reads pixel (0,0)
}

TEST(Conv, RejectsBadGeometry) {
  kernels::ConvGeometry g{1, 2, 2, 1, 5, 1, 0};
  EXPECT_THROW(g.validate(), Error);
  kernels::ConvGeometry z{1, 4, 4, 1, 3, 0, 0};
  EXPECT_THROW(z.validate(), Error);
}
