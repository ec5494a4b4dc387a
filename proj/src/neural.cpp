#include "rhosel/neural.hpp"

#include <cmath>

#include "rhosel/errors.hpp"

namespace rhosel {

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

void validate_arch(const MlpArchitecture& a) {
  if (a.L < 1 || a.p < 1 || a.d < 1) throw domain_error("mlp: L, p, d must be >= 1");
}

}  // namespace

std::int64_t param_count(const MlpArchitecture& arch) {
  validate_arch(arch);
  const std::int64_t p = arch.p, L = arch.L, d = arch.d;
  return p * p * (L - 1) + p * (L + d + 1) + 1;
}

std::pair<int, int> layer_shape(const MlpArchitecture& arch, int layer) {
  validate_arch(arch);
  if (layer < 0 || layer > arch.L) throw domain_error("mlp: layer out of range");
  if (layer == 0) return {arch.p, arch.d};
  if (layer == arch.L) return {1, arch.p};
  return {arch.p, arch.p};
}

std::int64_t layer_size(const MlpArchitecture& arch, int layer) {
  const auto [rows, cols] = layer_shape(arch, layer);
  return static_cast<std::int64_t>(rows) * cols + rows;  // A then b
}

std::int64_t layer_offset(const MlpArchitecture& arch, int layer) {
  validate_arch(arch);
  if (layer < 0 || layer > arch.L) throw domain_error("mlp: layer out of range");
  std::int64_t off = 0;
  for (int l = 0; l < layer; ++l) off += layer_size(arch, l);
  return off;
}

std::int64_t SparsityMask::count_set() const {
  std::int64_t n = 0;
  for (auto b : bits) n += (b != 0);
  return n;
}

SparsityMask SparsityMask::dense(const MlpArchitecture& arch) {
  SparsityMask m;
  m.bits.assign(static_cast<std::size_t>(param_count(arch)), 1);
  return m;
}

LayerPattern mask_layout(const MlpArchitecture& arch, int layer,
                         const std::vector<std::uint8_t>& segment_bits) {
  const auto [rows, cols] = layer_shape(arch, layer);
  if (static_cast<std::int64_t>(segment_bits.size()) != layer_size(arch, layer))
    throw domain_error("mask_layout: segment length does not match the layer");
  LayerPattern pat;
  pat.A.resize(rows, cols);
  pat.b.resize(rows);
  std::size_t k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) pat.A(i, j) = segment_bits[k++];
  for (int i = 0; i < rows; ++i) pat.b(i) = segment_bits[k++];
  return pat;
}

ReluNetwork ReluNetwork::from_params(const MlpArchitecture& arch, const SparsityMask& mask,
                                     const Eigen::VectorXd& params) {
  validate_arch(arch);
  const std::int64_t total = param_count(arch);
  if (params.size() != total) throw domain_error("relu network: wrong parameter count");
  if (static_cast<std::int64_t>(mask.bits.size()) != total)
    throw domain_error("relu network: wrong mask length");

  ReluNetwork net;
  net.arch = arch;
  net.mask = mask;
  net.params = params;
  for (std::int64_t i = 0; i < total; ++i)
    if (!mask.bits[static_cast<std::size_t>(i)]) net.params(i) = 0.0;

  net.A.resize(arch.L + 1);
  net.b.resize(arch.L + 1);
  for (int l = 0; l <= arch.L; ++l) {
    const auto [rows, cols] = layer_shape(arch, l);
    std::int64_t k = layer_offset(arch, l);
    net.A[l].resize(rows, cols);
    net.b[l].resize(rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) net.A[l](i, j) = net.params(k++);
    for (int i = 0; i < rows; ++i) net.b[l](i) = net.params(k++);
  }
  return net;
}

ReluNetwork ReluNetwork::from_layers(const std::vector<Eigen::MatrixXd>& A,
                                     const std::vector<Eigen::VectorXd>& b) {
  if (A.size() < 2 || A.size() != b.size())
    throw domain_error("relu network: need L+1 >= 2 affine layers");
  MlpArchitecture arch;
  arch.L = static_cast<int>(A.size()) - 1;
  arch.d = static_cast<int>(A[0].cols());
  arch.p = static_cast<int>(A[0].rows());
  validate_arch(arch);
  for (int l = 0; l <= arch.L; ++l) {
    const auto want = layer_shape(arch, l);
    if (A[l].rows() != want.first || A[l].cols() != want.second || b[l].size() != want.first)
      throw domain_error("relu network: layer shapes are not a uniform-width MLP");
  }
  Eigen::VectorXd params(param_count(arch));
  std::int64_t k = 0;
  for (int l = 0; l <= arch.L; ++l) {
    for (int i = 0; i < A[l].rows(); ++i)
      for (int j = 0; j < A[l].cols(); ++j) params(k++) = A[l](i, j);
    for (int i = 0; i < b[l].size(); ++i) params(k++) = b[l](i);
  }
  return from_params(arch, SparsityMask::dense(arch), params);
}

double forward(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != net.arch.d) throw domain_error("forward: input dimension mismatch");
  Eigen::VectorXd x = w;
  for (int l = 0; l < net.arch.L; ++l)
    x = (net.A[l] * x + net.b[l]).unaryExpr([](double v) { return relu(v); });
  return (net.A[net.arch.L] * x + net.b[net.arch.L])(0);
}

double forward(const ReluNetwork& net, double w) {
  Eigen::VectorXd v(1);
  v << w;
  return forward(net, v);
}

double hat(double w) {
  if (w < 0.0 || w > 1.0) throw domain_error("hat: w outside [0,1]");
  return w <= 0.5 ? 2.0 * w : 2.0 * (1.0 - w);
}

ReluNetwork hat_network() {
  std::vector<Eigen::MatrixXd> A(2);
  std::vector<Eigen::VectorXd> b(2);
  A[0] = Eigen::MatrixXd(2, 1);
  A[0] << 1.0, 1.0;
  b[0] = Eigen::VectorXd(2);
  b[0] << 0.0, -0.5;
  A[1] = Eigen::MatrixXd(1, 2);
  A[1] << 2.0, -4.0;
  b[1] = Eigen::VectorXd::Zero(1);
  return ReluNetwork::from_layers(A, b);
}

ReluNetwork identity_network() {
  std::vector<Eigen::MatrixXd> A(2);
  std::vector<Eigen::VectorXd> b(2);
  A[0] = Eigen::MatrixXd::Ones(1, 1);
  b[0] = Eigen::VectorXd::Zero(1);
  A[1] = Eigen::MatrixXd::Ones(1, 1);
  b[1] = Eigen::VectorXd::Zero(1);
  return ReluNetwork::from_layers(A, b);
}

double takagi_partial(int m, double t, const ReluNetwork& g, const ReluNetwork& h, double w) {
  if (m < 1) throw domain_error("takagi_partial: m >= 1");
  if (!(t > -1.0 && t < 1.0)) throw domain_error("takagi_partial: t in (-1, 1)");
  double x = w, total = 0.0, tk = 1.0;
  for (int k = 1; k <= m; ++k) {
    x = forward(h, x);
    if (x < -1e-9 || x > 1.0 + 1e-9)
      throw domain_error("takagi_partial: h left the unit interval");
    x = std::min(std::max(x, 0.0), 1.0);
    tk *= t;
    total += tk * forward(g, x);
  }
  return total;
}

// ---- structural composition ---------------------------------------------------

namespace {

struct Layers {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> b;
};

Layers to_layers(const ReluNetwork& net) { return {net.A, net.b}; }

// second(first(.)): drop first's output affine into second's input affine.
Layers stitch(const Layers& second, const Layers& first) {
  if (second.A.front().cols() != first.A.back().rows())
    throw domain_error("compose: inner output dim does not match outer input dim");
  Layers out;
  for (std::size_t i = 0; i + 1 < first.A.size(); ++i) {
    out.A.push_back(first.A[i]);
    out.b.push_back(first.b[i]);
  }
  out.A.push_back(second.A.front() * first.A.back());
  out.b.push_back(second.A.front() * first.b.back() + second.b.front());
  for (std::size_t i = 1; i < second.A.size(); ++i) {
    out.A.push_back(second.A[i]);
    out.b.push_back(second.b[i]);
  }
  return out;
}

// Zero-pad every hidden layer to a common width so the result is a plain MLP.
// Padded neurons emit relu(0) = 0 and feed zero weights, so values are intact.
ReluNetwork pad_to_network(const Layers& ly) {
  const int Lh = static_cast<int>(ly.A.size()) - 1;
  int p = 1;
  for (int l = 0; l < Lh; ++l) p = std::max(p, static_cast<int>(ly.A[l].rows()));
  const int d = static_cast<int>(ly.A[0].cols());

  std::vector<Eigen::MatrixXd> A(Lh + 1);
  std::vector<Eigen::VectorXd> b(Lh + 1);
  for (int l = 0; l <= Lh; ++l) {
    const int rows = (l == Lh) ? 1 : p;
    const int cols = (l == 0) ? d : p;
    A[l] = Eigen::MatrixXd::Zero(rows, cols);
    A[l].topLeftCorner(ly.A[l].rows(), ly.A[l].cols()) = ly.A[l];
    b[l] = Eigen::VectorXd::Zero(rows);
    b[l].head(ly.b[l].size()) = ly.b[l];
  }
  return ReluNetwork::from_layers(A, b);
}

}  // namespace

ReluNetwork compose_networks(const ReluNetwork& outer, const ReluNetwork& inner, int k) {
  if (k < 2) throw domain_error("compose_networks: need k >= 2 networks");
  Layers chain = to_layers(inner);
  for (int i = 2; i < k; ++i) chain = stitch(to_layers(inner), chain);
  chain = stitch(to_layers(outer), chain);
  return pad_to_network(chain);
}

ReluNetwork takagi_network(int m, double t, const ReluNetwork& g, const ReluNetwork& h) {
  if (m < 1) throw domain_error("takagi_network: m >= 1");
  if (!(t > -1.0 && t < 1.0)) throw domain_error("takagi_network: t in (-1, 1)");
  if (g.arch.L != 1 || h.arch.L != 1 || g.arch.d != 1 || h.arch.d != 1)
    throw domain_error("takagi_network: g and h must be depth-1 scalar networks");

  const int ph = h.arch.p, pg = g.arch.p;
  const int P = ph + pg + 2;        // h block, g block, carry+(P-2), carry-(P-1)
  const int coff = ph + pg;

  // Readouts of the previous layer's blocks:
  //   x_{j-1} = A1_h . H + b1_h    (h block),
  //   g(x_{j-2}) = A1_g . G + b1_g (g block),
  //   running sum = C+ - C-.
  const Eigen::MatrixXd& A0h = h.A[0];
  const Eigen::MatrixXd& A1h = h.A[1];
  const Eigen::VectorXd& b0h = h.b[0];
  const double b1h = h.b[1](0);
  const Eigen::MatrixXd& A0g = g.A[0];
  const Eigen::MatrixXd& A1g = g.A[1];
  const Eigen::VectorXd& b0g = g.b[0];
  const double b1g = g.b[1](0);

  std::vector<Eigen::MatrixXd> A(m + 2);
  std::vector<Eigen::VectorXd> b(m + 2);

  // Layer 1: H_1 = relu(A0h w + b0h); g and carry blocks silent.
  A[0] = Eigen::MatrixXd::Zero(P, 1);
  A[0].topLeftCorner(ph, 1) = A0h;
  b[0] = Eigen::VectorXd::Zero(P);
  b[0].head(ph) = b0h;

  double tpow = 1.0;  // t^{j-2} while building layer j
  for (int j = 2; j <= m + 1; ++j) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(P, P);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
    // h block keeps iterating: input x_{j-1} from the previous h block.
    M.block(0, 0, ph, ph) = A0h * A1h;
    v.head(ph) = A0h * b1h + b0h;
    // g block consumes the same x_{j-1}.
    M.block(ph, 0, pg, ph) = A0g * A1h;
    v.segment(ph, pg) = A0g * b1h + b0g;
    if (j >= 3) {
      // Fold t^{j-2} g(x_{j-2}) into the signed running sum.
      Eigen::RowVectorXd upd = Eigen::RowVectorXd::Zero(P);
      upd.segment(ph, pg) = tpow * A1g.row(0);
      upd(coff) = 1.0;
      upd(coff + 1) = -1.0;
      M.row(coff) = upd;
      M.row(coff + 1) = -upd;
      v(coff) = tpow * b1g;
      v(coff + 1) = -tpow * b1g;
    }
    A[j - 1] = M;
    b[j - 1] = v;
    tpow *= t;
  }

  // Output: (C+ - C-) + t^m g(x_m); the loop leaves tpow = t^m.
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(1, P);
  out.block(0, ph, 1, pg) = tpow * A1g;
  out(0, coff) = 1.0;
  out(0, coff + 1) = -1.0;
  A[m + 1] = out;
  b[m + 1] = Eigen::VectorXd::Constant(1, tpow * b1g);

  return ReluNetwork::from_layers(A, b);
}

}  // namespace rhosel
