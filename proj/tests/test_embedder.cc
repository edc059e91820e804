// tests/test_embedder.cc

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

#include <cmath>

#include "doctest.h"
#include "test_util.h"
#include "weakspk/embedder.h"
#include "weakspk/rng.h"

using namespace weakspk;
using weakspk::testing::TempDir;

namespace {

constexpr EmbedderDims kDims{5, 7, 4};
// Enough hidden units that a random input never switches all of them off.
constexpr EmbedderDims kWide{5, 32, 4};

Eigen::VectorXd RandomVector(Eigen::Index n, Rng &rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.Gaussian();
  return v;
}

// f(model) = r . cosines(embed(x)); the analytic gradient comes from
// SimilarityBackward followed by Backward.
double Probe(const Model &m, const Eigen::VectorXd &x, const Eigen::VectorXd &r) {
  return r.dot(CosineSimilarities(Forward(x, m.params).e, m.prototypes));
}

Model ProbeGradient(const Model &m, const Eigen::VectorXd &x, const Eigen::VectorXd &r) {
  Model g = Model::Zeros(m.dims(), m.n_speakers());
  const ForwardCache cache = Forward(x, m.params);
  const Eigen::VectorXd grad_e = SimilarityBackward(cache.e, m.prototypes, r, g.prototypes);
  Backward(cache, m.params, grad_e, g.params);
  return g;
}

}  // namespace

TEST_CASE("embeddings are unit norm") {
  const Model m = InitModel(kWide, 3, 1);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const ForwardCache c = Forward(RandomVector(kDims.feat_dim, rng), m.params);
    CHECK(std::abs(c.e.norm() - 1.0) < 1e-12);
    const Eigen::VectorXd cos = CosineSimilarities(c.e, m.prototypes);
    CHECK(cos.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("frame mean") {
  FeatureMatrix f(3, 2);
  f << 1, 2, 3, 4, 5, 9;
  const Eigen::VectorXd m = FrameMean(f);
  CHECK(m[0] == 3.0);
  CHECK(m[1] == 5.0);
  FeatureMatrix constant = FeatureMatrix::Constant(10, kDims.feat_dim, 0.25f);
  const Model model = InitModel(kWide, 3, 4);
  FeatureMatrix one = FeatureMatrix::Constant(1, kDims.feat_dim, 0.25f);
  CHECK((Forward(FrameMean(constant), model.params).e - Forward(FrameMean(one), model.params).e).norm() == 0.0);
}

TEST_CASE("a vanishing embedding is reported") {
  Model m = Model::Zeros(kDims, 2);
  try {
    Forward(Eigen::VectorXd::Ones(kDims.feat_dim), m.params);
    FAIL("expected DegenerateEmbedding");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kDegenerateEmbedding);
  }
}

TEST_CASE("cosines against hand-built prototypes") {
  PrototypeMatrix p;
  p.w = RowMatrix(3, 2);
  p.w << 1, 0, 0, 1, -1, 0;
  Eigen::VectorXd e(2);
  e << std::sqrt(0.5), std::sqrt(0.5);
  const Eigen::VectorXd c = CosineSimilarities(e, p);
  CHECK(c[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(c[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK(c[2] == doctest::Approx(-std::sqrt(0.5)));
}

TEST_CASE("radial or zero upstream gradients vanish through the normalization") {
  const Model m = InitModel(kDims, 3, 5);
  Rng rng(6);
  const ForwardCache c = Forward(RandomVector(kDims.feat_dim, rng), m.params);
  for (const Eigen::VectorXd &g : {Eigen::VectorXd(Eigen::VectorXd::Zero(kDims.emb_dim)), Eigen::VectorXd(2.5 * c.e)}) {
    Model grad = Model::Zeros(kDims, 3);
    Backward(c, m.params, g, grad.params);
    for (const auto &t : grad.Tensors()) CHECK(t.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("backward matches central differences") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    Rng rng(100 + seed);
    const Model m = InitModel(kDims, 4, seed);
    Eigen::VectorXd x;
    do {
      x = RandomVector(kDims.feat_dim, rng);
    // Two active units at least: with one, W1 and b1 get no gradient.
    } while ((m.params.w1 * x + m.params.b1).cwiseAbs().minCoeff() < 1e-3 ||
             ((m.params.w1 * x + m.params.b1).array() > 0.1).count() < 2);
    const Eigen::VectorXd r = RandomVector(4, rng);
    const Model analytic = ProbeGradient(m, x, r);

    Model probe = m;
    auto pt = probe.Tensors();
    const auto at = analytic.Tensors();
    const double h = 1e-6;
    for (size_t k = 0; k < pt.size(); ++k) {
      Eigen::VectorXd numeric(pt[k].size());
      for (Eigen::Index i = 0; i < pt[k].size(); ++i) {
        const double saved = pt[k][i];
        pt[k][i] = saved + h;
        const double up = Probe(probe, x, r);
        pt[k][i] = saved - h;
        const double down = Probe(probe, x, r);
        pt[k][i] = saved;
        numeric[i] = (up - down) / (2 * h);
      }
      const double denom = numeric.norm() + at[k].norm();
      if (denom > 0) CHECK((numeric - at[k]).norm() / denom < 1e-6);
    }
  }
}

TEST_CASE("prototype renormalization keeps the argmax") {
  Rng rng(8);
  PrototypeMatrix p;
  p.w = RowMatrix(6, 4);
  for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w.data()[i] = rng.Gaussian();
  RenormalizePrototypes(p);
  for (Eigen::Index j = 0; j < p.w.rows(); ++j) CHECK(std::abs(p.w.row(j).norm() - 1.0) < 1e-12);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd e = RandomVector(4, rng).normalized();
    Eigen::Index before = 0, after = 0;
    CosineSimilarities(e, p).maxCoeff(&before);
    PrototypeMatrix q = p;
    q.w.row(2) *= 1.01;  // tiny drift as after an update
    RenormalizePrototypes(q);
    CosineSimilarities(e, q).maxCoeff(&after);
    CHECK(before == after);
  }
}

TEST_CASE("initialization") {
  const Model a = InitModel({20, 64, 32}, 40, 9);
  const Model b = InitModel({20, 64, 32}, 40, 9);
  CHECK(a.dims() == EmbedderDims{20, 64, 32});
  CHECK(a.n_speakers() == 40);
  for (size_t k = 0; k < 5; ++k) CHECK(a.Tensors()[k] == b.Tensors()[k]);
  CHECK(a.params.b1.isZero());
  CHECK(a.params.b2.isZero());
  for (Eigen::Index j = 0; j < 40; ++j) CHECK(std::abs(a.prototypes.w.row(j).norm() - 1.0) < 1e-12);
  // W1 entries ~ N(0, 1/20).
  const double var = a.params.w1.squaredNorm() / static_cast<double>(a.params.w1.size());
  CHECK(var == doctest::Approx(1.0 / 20).epsilon(0.15));
  CHECK_FALSE(InitModel({20, 64, 32}, 40, 10).params.w1 == a.params.w1);
}

TEST_CASE("model arithmetic") {
  Model a = InitModel(kDims, 3, 1);
  Model b = a;
  b += a;
  b *= 0.5;
  for (size_t k = 0; k < 5; ++k) CHECK(b.Tensors()[k] == a.Tensors()[k]);
  CHECK(a.AllFinite());
  b.params.b2[0] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(b.AllFinite());
  b.SetZero();
  for (const auto &t : b.Tensors()) CHECK(t.isZero());
}

TEST_CASE("model files") {
  TempDir dir("model");
  const Model m = InitModel(kDims, 3, 11);
  SaveModel(m, dir.path() / "m.bin");
  const Model back = LoadModel(dir.path() / "m.bin");
  CHECK(back.dims() == kDims);
  for (size_t k = 0; k < 5; ++k) CHECK(back.Tensors()[k] == m.Tensors()[k]);

  const std::string bytes = ReadFileBytes(dir.path() / "m.bin");
  CHECK(bytes.substr(0, 4) == "WMLC");
  const size_t n_values = 7 * 5 + 7 + 4 * 7 + 4 + 3 * 4;
  CHECK(bytes.size() == 4 + 5 * 4 + 8 * n_values);

  for (const std::string &broken : {"XXXX" + bytes.substr(4), bytes.substr(0, bytes.size() - 3)}) {
    WriteFileAtomic(dir.path() / "bad.bin", broken);
    try {
      LoadModel(dir.path() / "bad.bin");
      FAIL("expected FormatError");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kFormatError);
    }
  }
}
