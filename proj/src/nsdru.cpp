#include "cfpn/nsdru.hpp"

#include <random>
#include <string>

#include "cfpn/init.hpp"

namespace cfpn {

NsdruParams zero_nsdru(std::size_t hidden_channels) {
  if (hidden_channels == 0) throw ConfigError("nsdru needs at least one hidden channel");
  NsdruParams p;
  p.conv1_kernels = Tensor({hidden_channels, 1, kNsdruKernel, kNsdruKernel});
  p.conv1_bias = Tensor({hidden_channels});
  p.conv2_kernels = Tensor({1, hidden_channels, kNsdruKernel, kNsdruKernel});
  p.conv2_bias = Tensor({1});
  return p;
}

NsdruParams init_nsdru(std::size_t hidden_channels, std::uint64_t seed) {
  NsdruParams p = zero_nsdru(hidden_channels);
  std::mt19937_64 rng(seed);
  constexpr std::size_t area = kNsdruKernel * kNsdruKernel;
  glorot_uniform(p.conv1_kernels, area, hidden_channels * area, rng);
  glorot_uniform(p.conv2_kernels, hidden_channels * area, area, rng);
  return p;
}

Tensor reshape_to_map(std::span<const double> row, std::size_t channels, std::size_t samples) {
  if (row.size() != channels * samples)
    throw ShapeError("reshape_to_map: " + std::to_string(row.size()) + " values cannot form a " +
                     std::to_string(channels) + "x" + std::to_string(samples) + " map");
  return Tensor({1, channels, samples}, std::vector<double>(row.begin(), row.end()));
}

NsdruTrace nsdru_forward(const Tensor& map, const NsdruParams& p) {
  if (map.rank() != 3 || map.dim(0) != 1)
    throw ShapeError("nsdru_forward expects a 1×ch×t map, got " + shape_string(map.shape()));
  if (map.dim(1) < 2 || map.dim(2) < 2)
    throw ShapeError("nsdru_forward needs ch >= 2 and t >= 2, got " + shape_string(map.shape()));

  NsdruTrace t;
  t.input = map;
  t.conv1 = relu(conv2d(map, p.conv1_kernels, p.conv1_bias));
  auto pool = maxpool2d(t.conv1);
  t.pooled = std::move(pool.output);
  t.argmax = std::move(pool.argmax);
  Tensor out = relu(conv2d(t.pooled, p.conv2_kernels, p.conv2_bias));
  t.output = out.reshaped({out.dim(1), out.dim(2)});
  return t;
}

NsdruGrads nsdru_backward(const NsdruTrace& t, const NsdruParams& p, const Tensor& upstream) {
  if (t.input.empty() || t.conv1.empty() || t.pooled.empty() || t.output.empty() ||
      t.argmax.size() != t.pooled.size())
    throw StateError("nsdru_backward: forward trace is incomplete");
  if (upstream.shape() != t.output.shape())
    throw ShapeError("nsdru_backward: upstream " + shape_string(upstream.shape()) +
                     " does not match output " + shape_string(t.output.shape()));

  NsdruGrads g;
  Tensor grad_out = upstream.reshaped({1, upstream.dim(0), upstream.dim(1)});
  for (std::size_t i = 0; i < grad_out.size(); ++i)
    if (!(t.output[i] > 0.0)) grad_out[i] = 0.0;
  auto c2 = conv2d_backward(t.pooled, p.conv2_kernels, grad_out);
  g.params.conv2_kernels = std::move(c2.kernels);
  g.params.conv2_bias = std::move(c2.bias);

  Tensor grad_conv1 = maxpool2d_backward(t.conv1.shape(), t.argmax, c2.input);
  for (std::size_t i = 0; i < grad_conv1.size(); ++i)
    if (!(t.conv1[i] > 0.0)) grad_conv1[i] = 0.0;
  auto c1 = conv2d_backward(t.input, p.conv1_kernels, grad_conv1);
  g.params.conv1_kernels = std::move(c1.kernels);
  g.params.conv1_bias = std::move(c1.bias);
  g.input = std::move(c1.input);
  return g;
}

}  // namespace cfpn
