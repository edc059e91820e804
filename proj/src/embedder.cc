// src/embedder.cc

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

#include "weakspk/embedder.h"

#include <cmath>

#include "weakspk/rng.h"

namespace weakspk {

namespace {

constexpr char kModelMagic[4] = {'W', 'M', 'L', 'C'};
constexpr uint32_t kModelVersion = 1;

template <typename M>
Eigen::Map<Eigen::VectorXd> Flat(M &m) {
  return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
}

template <typename M>
Eigen::Map<const Eigen::VectorXd> Flat(const M &m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

Model Model::Zeros(const EmbedderDims &dims, int32_t n_speakers) {
  Model m;
  m.params.w1 = RowMatrix::Zero(dims.hidden, dims.feat_dim);
  m.params.b1 = Eigen::VectorXd::Zero(dims.hidden);
  m.params.w2 = RowMatrix::Zero(dims.emb_dim, dims.hidden);
  m.params.b2 = Eigen::VectorXd::Zero(dims.emb_dim);
  m.prototypes.w = RowMatrix::Zero(n_speakers, dims.emb_dim);
  return m;
}

EmbedderDims Model::dims() const {
  return {static_cast<int32_t>(params.w1.cols()), static_cast<int32_t>(params.w1.rows()),
          static_cast<int32_t>(params.w2.rows())};
}

std::array<Eigen::Map<Eigen::VectorXd>, 5> Model::Tensors() {
  return {Flat(params.w1), Flat(params.b1), Flat(params.w2), Flat(params.b2), Flat(prototypes.w)};
}

std::array<Eigen::Map<const Eigen::VectorXd>, 5> Model::Tensors() const {
  return {Flat(params.w1), Flat(params.b1), Flat(params.w2), Flat(params.b2), Flat(prototypes.w)};
}

void Model::SetZero() {
  for (auto t : Tensors()) t.setZero();
}

Model &Model::operator+=(const Model &other) {
  auto mine = Tensors();
  auto theirs = other.Tensors();
  for (size_t i = 0; i < mine.size(); ++i) mine[i] += theirs[i];
  return *this;
}

Model &Model::operator*=(double scale) {
  for (auto t : Tensors()) t *= scale;
  return *this;
}

bool Model::AllFinite() const {
  for (const auto &t : Tensors())
    if (!t.allFinite()) return false;
  return true;
}

Model InitModel(const EmbedderDims &dims, int32_t n_speakers, uint64_t seed) {
  Rng rng(seed);
  Model m = Model::Zeros(dims, n_speakers);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dims.feat_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  for (Eigen::Index i = 0; i < m.params.w1.size(); ++i) m.params.w1.data()[i] = s1 * rng.Gaussian();
  for (Eigen::Index i = 0; i < m.params.w2.size(); ++i) m.params.w2.data()[i] = s2 * rng.Gaussian();
  for (Eigen::Index i = 0; i < m.prototypes.w.size(); ++i) m.prototypes.w.data()[i] = rng.Gaussian();
  RenormalizePrototypes(m.prototypes);
  return m;
}

void RenormalizePrototypes(PrototypeMatrix &prototypes) {
  for (Eigen::Index j = 0; j < prototypes.w.rows(); ++j) {
    const double norm = prototypes.w.row(j).norm();
    if (norm > 0.0) prototypes.w.row(j) /= norm;
  }
}

Eigen::VectorXd FrameMean(const FeatureMatrix &features) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(features.cols());
  for (Eigen::Index t = 0; t < features.rows(); ++t)
    mean += features.row(t).transpose().cast<double>();
  return mean / static_cast<double>(features.rows());
}

ForwardCache Forward(const Eigen::VectorXd &frame_mean, const EmbedderParams &params) {
  ForwardCache c;
  c.input = frame_mean;
  c.pre = params.w1 * frame_mean + params.b1;
  c.hidden = c.pre.cwiseMax(0.0);
  c.z = params.w2 * c.hidden + params.b2;
  c.z_norm = c.z.norm();
  if (!(c.z_norm >= 1e-8))
    Fail(ErrorKind::kDegenerateEmbedding, "pre-normalization norm ", c.z_norm, " below 1e-8");
  c.e = c.z / c.z_norm;
  return c;
}

Eigen::VectorXd CosineSimilarities(const Eigen::VectorXd &e, const PrototypeMatrix &prototypes) {
  return prototypes.w * e;
}

Eigen::VectorXd SimilarityBackward(const Eigen::VectorXd &e, const PrototypeMatrix &prototypes,
                                   const Eigen::VectorXd &grad_c, PrototypeMatrix &prototype_grad) {
  prototype_grad.w.noalias() += grad_c * e.transpose();
  return prototypes.w.transpose() * grad_c;
}

void Backward(const ForwardCache &cache, const EmbedderParams &params, const Eigen::VectorXd &grad_e,
              EmbedderParams &grad) {
  const Eigen::VectorXd grad_z = (grad_e - cache.e * cache.e.dot(grad_e)) / cache.z_norm;
  grad.w2.noalias() += grad_z * cache.hidden.transpose();
  grad.b2 += grad_z;
  Eigen::VectorXd grad_pre = params.w2.transpose() * grad_z;
  for (Eigen::Index i = 0; i < grad_pre.size(); ++i)
    if (cache.pre[i] <= 0.0) grad_pre[i] = 0.0;
  grad.w1.noalias() += grad_pre * cache.input.transpose();
  grad.b1 += grad_pre;
}

void EncodeModel(const Model &model, ByteWriter &out) {
  const EmbedderDims d = model.dims();
  out.PutBytes(std::string_view(kModelMagic, 4));
  out.PutU32(kModelVersion);
  out.PutU32(static_cast<uint32_t>(d.feat_dim));
  out.PutU32(static_cast<uint32_t>(d.hidden));
  out.PutU32(static_cast<uint32_t>(d.emb_dim));
  out.PutU32(static_cast<uint32_t>(model.n_speakers()));
  for (const auto &t : model.Tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) out.PutF64(t[i]);
}

Model DecodeModel(ByteReader &in) {
  if (in.GetBytes(4) != std::string_view(kModelMagic, 4)) Fail(ErrorKind::kFormatError, "checkpoint: bad magic");
  const uint32_t version = in.GetU32();
  if (version != kModelVersion) Fail(ErrorKind::kFormatError, "checkpoint: unsupported version ", version);
  EmbedderDims d;
  d.feat_dim = static_cast<int32_t>(in.GetU32());
  d.hidden = static_cast<int32_t>(in.GetU32());
  d.emb_dim = static_cast<int32_t>(in.GetU32());
  const auto n_speakers = static_cast<int32_t>(in.GetU32());
  Model m = Model::Zeros(d, n_speakers);
  for (auto t : m.Tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = in.GetF64();
  return m;
}

void SaveModel(const Model &model, const std::filesystem::path &path) {
  ByteWriter w;
  EncodeModel(model, w);
  WriteFileAtomic(path, w.data());
}

Model LoadModel(const std::filesystem::path &path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes);
  return DecodeModel(r);
}

}  // namespace weakspk
