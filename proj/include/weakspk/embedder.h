// weakspk/embedder.h

// Copyright 2026 The weakspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// The trainable model: frame-mean pooling, two affine layers with a relu in
// between, L2 normalization, and one unit-norm prototype row per known
// speaker.
//
//   x = mean over frames,  a = W1 x + b1,  h = relu(a),
//   z = W2 h + b2,         e = z / |z|,     c_j = <e, w_j>.

#ifndef WEAKSPK_EMBEDDER_H_
#define WEAKSPK_EMBEDDER_H_

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "weakspk/corpus.h"
#include "weakspk/io.h"

namespace weakspk {

struct EmbedderDims {
  int32_t feat_dim = 20;
  int32_t hidden = 64;
  int32_t emb_dim = 32;

  friend bool operator==(const EmbedderDims &, const EmbedderDims &) = default;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbedderParams {
  RowMatrix w1;        // hidden x feat_dim
  Eigen::VectorXd b1;  // hidden
  RowMatrix w2;        // emb_dim x hidden
  Eigen::VectorXd b2;  // emb_dim
};

struct PrototypeMatrix {
  RowMatrix w;  // |T| x emb_dim, unit rows

  int32_t n_speakers() const { return static_cast<int32_t>(w.rows()); }
};

/// Parameters and prototypes.  The same type holds gradients and optimizer
/// velocities.
struct Model {
  EmbedderParams params;
  PrototypeMatrix prototypes;

  static Model Zeros(const EmbedderDims &dims, int32_t n_speakers);
  EmbedderDims dims() const;
  int32_t n_speakers() const { return prototypes.n_speakers(); }

  // The five tensors in checkpoint order: W1, b1, W2, b2, prototypes.
  std::array<Eigen::Map<Eigen::VectorXd>, 5> Tensors();
  std::array<Eigen::Map<const Eigen::VectorXd>, 5> Tensors() const;

  void SetZero();
  Model &operator+=(const Model &other);
  Model &operator*=(double scale);
  bool AllFinite() const;
};

/// W1, W2 entries ~ N(0, 1/fan_in) (std 1/sqrt(fan_in)), zero biases,
/// random unit prototype rows.
Model InitModel(const EmbedderDims &dims, int32_t n_speakers, uint64_t seed);

void RenormalizePrototypes(PrototypeMatrix &prototypes);

Eigen::VectorXd FrameMean(const FeatureMatrix &features);

struct ForwardCache {
  Eigen::VectorXd input;  // frame mean
  Eigen::VectorXd pre;    // W1 x + b1
  Eigen::VectorXd hidden; // relu(pre)
  Eigen::VectorXd z;
  double z_norm = 0.0;
  Eigen::VectorXd e;
};

// Throws kDegenerateEmbedding when |z| < 1e-8.
ForwardCache Forward(const Eigen::VectorXd &frame_mean, const EmbedderParams &params);

// c_j = <e, w_j>.
Eigen::VectorXd CosineSimilarities(const Eigen::VectorXd &e, const PrototypeMatrix &prototypes);

/// Backpropagates dL/dc through c_j = <e, w_j>: adds dL/dc_j * e to row j
/// of prototype_grad and returns dL/de = W^T dL/dc.
Eigen::VectorXd SimilarityBackward(const Eigen::VectorXd &e, const PrototypeMatrix &prototypes,
                                   const Eigen::VectorXd &grad_c, PrototypeMatrix &prototype_grad);

/// Adds dL/dparams to grad given dL/de.  The normalization Jacobian
/// (I - e e^T)/|z| removes the radial component of grad_e.
void Backward(const ForwardCache &cache, const EmbedderParams &params, const Eigen::VectorXd &grad_e,
              EmbedderParams &grad);

// Checkpoint encoding: "WMLC", version u32, feat_dim, hidden, emb_dim,
// n_speakers (u32 each), then every tensor of Tensors() as little-endian
// f64, row-major.
void EncodeModel(const Model &model, ByteWriter &out);
Model DecodeModel(ByteReader &in);
void SaveModel(const Model &model, const std::filesystem::path &path);
Model LoadModel(const std::filesystem::path &path);

}  // namespace weakspk

#endif  // WEAKSPK_EMBEDDER_H_
