#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rhosel/errors.hpp"

namespace rhosel {

// ReLU MLP f = M_L o sigma o M_{L-1} o ... o sigma o M_0 with L hidden
// activation layers of width p: A_0 is p x d, A_l is p x p for 1 <= l < L,
// A_L is 1 x p; no activation after the last affine map.
struct MlpArchitecture {
  int L = 1;  // hidden-layer count
  int p = 1;  // width
  int d = 1;  // input dimension
};

// Flat parameter count: p^2 (L-1) + p (L+d+1) + 1.
std::int64_t param_count(const MlpArchitecture& arch);

// Per-layer flat segment: A_l row-major, then b_l.
std::int64_t layer_offset(const MlpArchitecture& arch, int layer);
std::int64_t layer_size(const MlpArchitecture& arch, int layer);
std::pair<int, int> layer_shape(const MlpArchitecture& arch, int layer);  // rows, cols of A_l

// Bit vector over the flat layout selecting which weights may be nonzero.
struct SparsityMask {
  std::vector<std::uint8_t> bits;
  std::int64_t count_set() const;
  static SparsityMask dense(const MlpArchitecture& arch);
};

// Decoded allowed-nonzero patterns of one layer's A_l and b_l.
struct LayerPattern {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> A;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> b;
};
LayerPattern mask_layout(const MlpArchitecture& arch, int layer,
                         const std::vector<std::uint8_t>& segment_bits);

struct ReluNetwork {
  MlpArchitecture arch;
  SparsityMask mask;
  Eigen::VectorXd params;  // flat, zero at masked-out positions

  std::vector<Eigen::MatrixXd> A;  // decoded layer weights
  std::vector<Eigen::VectorXd> b;

  static ReluNetwork from_params(const MlpArchitecture& arch, const SparsityMask& mask,
                                 const Eigen::VectorXd& params);
  static ReluNetwork from_layers(const std::vector<Eigen::MatrixXd>& A,
                                 const std::vector<Eigen::VectorXd>& b);
};

double forward(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& w);
double forward(const ReluNetwork& net, double w);  // d = 1 convenience

// The tent map on [0,1]: 2w on [0,1/2], 2(1-w) on (1/2,1].
double hat(double w);
// Its exact two-neuron form (2,-4) sigma((1,1)^T w + (0,-1/2)^T).
ReluNetwork hat_network();
// g(x) = sigma(x + 0): the identity on [0,1] as a width-1 network.
ReluNetwork identity_network();

// Partial sum sum_{k=1..m} t^k g(h^{ok}(w)) by repeated forward passes. h must
// keep [0,1] invariant (checked; violation is a contract error).
double takagi_partial(int m, double t, const ReluNetwork& g, const ReluNetwork& h, double w);

// Single network computing outer o inner^{o(k-1)} (k networks composed in total;
// k = 2 is plain outer o inner). Depths add; widths pad to the max.
ReluNetwork compose_networks(const ReluNetwork& outer, const ReluNetwork& inner, int k);

// The m-term partial sum stitched into one network of depth m+1 and width
// p_g + p_h + 2 (two channels carry the signed running sum). Requires depth-1
// g and h with scalar input/output.
ReluNetwork takagi_network(int m, double t, const ReluNetwork& g, const ReluNetwork& h);

}  // namespace rhosel
