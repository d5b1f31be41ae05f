// Copyright 2026 The qkscreen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qkscreen/kernelscreen.hpp"
#include "qkscreen/rng.hpp"

namespace qkscreen {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

KernelMatrix as_normalized(const Eigen::MatrixXd& v) {
    KernelMatrix K;
    K.values = v;
    K.normalized = true;
    return K;
}

TEST(Pca, ExactRankReconstruction) {
    Rng rng(1);
    const Eigen::MatrixXd basis = random_matrix(2, 5, rng);
    const Eigen::MatrixXd X = random_matrix(12, 2, rng) * basis;
    const DataMatrix pcs = pca_reduce(DataMatrix(X), 2);
    EXPECT_EQ(pcs.column_meaning, ColumnMeaning::PrincipalComponents);
    EXPECT_TRUE(pcs.zero_columns.empty());
    // Scores span the centered data exactly: least-squares reconstruction is lossless.
    const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd loadings = pcs.values.colPivHouseholderQr().solve(C);
    EXPECT_LT((pcs.values * loadings - C).norm(), 1e-9);
}

TEST(Pca, LineCarriesAllVariance) {
    Eigen::MatrixXd X(6, 3);
    for (int i = 0; i < 6; ++i) X.row(i) << i, 2.0 * i, -1.0 * i;
    const DataMatrix pcs = pca_reduce(DataMatrix(X), 1);
    const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
    EXPECT_NEAR(pcs.values.squaredNorm(), C.squaredNorm(), 1e-9);
}

TEST(Pca, MatchesCovarianceOracleUpToSign) {
    Rng rng(2);
    const Eigen::MatrixXd X = random_matrix(10, 6, rng);
    const DataMatrix pcs = pca_reduce(DataMatrix(X), 4);
    const Eigen::MatrixXd ref = oracle::pca_scores(X, 4);
    for (int k = 0; k < 4; ++k) {
        const double same = (pcs.values.col(k) - ref.col(k)).cwiseAbs().maxCoeff();
        const double flip = (pcs.values.col(k) + ref.col(k)).cwiseAbs().maxCoeff();
        EXPECT_LT(std::min(same, flip), 1e-8) << "component " << k;
    }
}

TEST(Pca, RankDeficientColumnsFlagged) {
    Eigen::MatrixXd X(5, 3);
    for (int i = 0; i < 5; ++i) X.row(i) << i, i, i;
    const DataMatrix pcs = pca_reduce(DataMatrix(X), 3);
    EXPECT_EQ(pcs.zero_columns, (std::vector<int>{1, 2}));
    EXPECT_EQ(pcs.values.col(2).norm(), 0.0);
    EXPECT_THROW(pca_reduce(DataMatrix(X), 4), std::invalid_argument);
}

TEST(DataMatrix, RejectsNonFinite) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 2);
    X(1, 1) = std::nan("");
    EXPECT_THROW(DataMatrix(X).validate(), std::invalid_argument);
}

TEST(ClassicalKernel, Examples) {
    const KernelMatrix I = classical_kernel(DataMatrix(Eigen::MatrixXd::Identity(2, 3)));
    EXPECT_EQ(I.values, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_FALSE(I.normalized);
    Rng rng(3);
    const Eigen::MatrixXd D = random_matrix(5, 3, rng);
    const KernelMatrix K = classical_kernel(DataMatrix(D));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double dot = 0;
            for (int k = 0; k < 3; ++k) dot += D(i, k) * D(j, k);
            EXPECT_NEAR(K.values(i, j), dot, 1e-12);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.values);
    EXPECT_LT(std::abs(es.eigenvalues()[1]), 1e-10);
}

TEST(QuantumKernel, UnitDiagonalAndExactSymmetry) {
    Rng rng(4);
    const DataMatrix D(random_matrix(9, 4, rng));
    for (EncodingKind kind : {EncodingKind::Angle, EncodingKind::IQP}) {
        const KernelMatrix K = quantum_kernel(D, EncodingSpec::make(kind, 4), KernelMode::exact());
        EXPECT_EQ(K.source, KernelSource::QuantumExact);
        for (int i = 0; i < 9; ++i) EXPECT_EQ(K.values(i, i), 1.0);
        EXPECT_EQ(K.values, K.values.transpose());
        EXPECT_GE(K.values.minCoeff(), 0.0);
        EXPECT_LE(K.values.maxCoeff(), 1.0 + 1e-12);
    }
}

TEST(QuantumKernel, SingleQubitClosedForm) {
    Eigen::MatrixXd x(20, 1);
    for (int i = 0; i < 20; ++i) x(i, 0) = std::numbers::pi * i / 19.0;
    const KernelMatrix K =
        quantum_kernel_from_angles(x, EncodingSpec::make(EncodingKind::Angle, 1), KernelMode::exact());
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            EXPECT_NEAR(K.values(i, j), std::pow(std::cos((x(i, 0) - x(j, 0)) / 2), 2), 1e-10);
}

TEST(QuantumKernel, OverlapRouteMatchesFidelityCircuits) {
    Rng rng(5);
    const DataMatrix D(random_matrix(7, 3, rng));
    for (EncodingKind kind : {EncodingKind::Angle, EncodingKind::IQP}) {
        const EncodingSpec spec = EncodingSpec::make(kind, 3);
        const KernelMatrix a = quantum_kernel(D, spec, KernelMode::exact(), KernelRoute::StateOverlap);
        const KernelMatrix b = quantum_kernel(D, spec, KernelMode::exact(), KernelRoute::FidelityCircuit);
        EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(QuantumKernel, SampledConvergesToExact) {
    Rng rng(6);
    const DataMatrix D(random_matrix(10, 3, rng));
    const EncodingSpec spec = EncodingSpec::make(EncodingKind::IQP, 3);
    const KernelMatrix exact = quantum_kernel(D, spec, KernelMode::exact());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const KernelMatrix s = quantum_kernel(D, spec, KernelMode::sampling(10000, seed));
        EXPECT_EQ(s.source, KernelSource::QuantumSampled);
        EXPECT_EQ(s.values, s.values.transpose());
        EXPECT_LE((s.values - exact.values).norm(), 0.05 * 10);
        EXPECT_LT((s.values - exact.values).cwiseAbs().maxCoeff(), 0.05);
    }
    EXPECT_EQ(quantum_kernel(D, spec, KernelMode::sampling(500, 3)).values,
              quantum_kernel(D, spec, KernelMode::sampling(500, 3)).values);
    EXPECT_THROW(quantum_kernel(D, spec, KernelMode::sampling(0, 3)), std::invalid_argument);
}

TEST(QuantumKernel, WidthLimits) {
    Rng rng(7);
    const DataMatrix D(random_matrix(3, 21, rng));
    EXPECT_THROW(quantum_kernel(D, EncodingSpec::make(EncodingKind::Angle, 21), KernelMode::exact()),
                 std::invalid_argument);
    EXPECT_THROW(quantum_kernel(D, EncodingSpec::make(EncodingKind::Angle, 4), KernelMode::exact()),
                 std::invalid_argument);
}

TEST(NormalizeKernel, Examples) {
    KernelMatrix I;
    I.values = Eigen::MatrixXd::Identity(4, 4);
    EXPECT_EQ(normalize_kernel(I).values, I.values);
    EXPECT_TRUE(normalize_kernel(I).normalized);
    KernelMatrix twice;
    twice.values = 2 * Eigen::MatrixXd::Identity(4, 4);
    EXPECT_EQ(normalize_kernel(twice).values, I.values);
    Rng rng(8);
    KernelMatrix R;
    R.values = oracle::random_normalized_psd(6, rng) * 3.7;
    EXPECT_NEAR(normalize_kernel(R).values.trace(), 6.0, 1e-9);
    KernelMatrix Z;
    Z.values = Eigen::MatrixXd::Zero(3, 3);
    EXPECT_THROW(normalize_kernel(Z), std::invalid_argument);
}

TEST(GeometricDifference, HandExamples) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_NEAR(geometric_difference(I, I, 0.0), 1.0, 1e-14);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(2, 2);
    Q(0, 0) = 2;
    EXPECT_NEAR(geometric_difference(Eigen::MatrixXd::Identity(2, 2), Q, 0.0), std::sqrt(2.0), 1e-14);
    EXPECT_THROW(geometric_difference(KernelMatrix{.values = I}, KernelMatrix{.values = I}, 0.0),
                 std::invalid_argument);
}

TEST(GeometricDifference, MatchesGeneralEigenOracle) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index N = 2 + static_cast<Eigen::Index>(rng.below(7));
        const Eigen::MatrixXd KC = oracle::random_normalized_psd(N, rng);
        const Eigen::MatrixXd KQ = oracle::random_normalized_psd(N, rng, trial % 2 == 0);
        const double lambda = trial % 3 == 0 ? 0.0 : 1e-3;
        const double g = geometric_difference(as_normalized(KC), as_normalized(KQ), lambda);
        EXPECT_NEAR(g, oracle::geometric_difference(KC, KQ, lambda), 1e-8 * std::max(1.0, g));
        EXPECT_NEAR(geometric_difference(KC, KC, 0.0), 1.0, 1e-8);
    }
}

TEST(GeometricDifference, NonIncreasingInLambda) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd KC = oracle::random_normalized_psd(6, rng, false);
        const Eigen::MatrixXd KQ = oracle::random_normalized_psd(6, rng);
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : {1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0}) {
            const double g = geometric_difference(KC, KQ, lambda);
            EXPECT_LE(g, prev * (1 + 1e-12));
            prev = g;
        }
    }
}

TEST(GeometricDifference, SingularClassicalKernelRejected) {
    Eigen::MatrixXd KC = Eigen::MatrixXd::Zero(3, 3);
    KC(0, 0) = 3;
    EXPECT_THROW(geometric_difference(KC, Eigen::MatrixXd::Identity(3, 3), 0.0), NumericalError);
    EXPECT_NO_THROW(geometric_difference(KC, Eigen::MatrixXd::Identity(3, 3), 1e-3));
}

TEST(AdversarialLabels, HandExample) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(2, 2);
    Q(0, 0) = 2;
    const AdversarialLabels a = adversarial_labels(Eigen::MatrixXd::Identity(2, 2), Q, 0.0);
    EXPECT_EQ(a.labels, Eigen::Vector2d(1, 1));
    EXPECT_NEAR(a.g, std::sqrt(2.0), 1e-14);
    EXPECT_FALSE(a.degenerate);
    EXPECT_TRUE(adversarial_labels(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3), 0.0).degenerate);
}

TEST(AdversarialLabels, SymmetricCaseGivesEqualComplexities) {
    Rng rng(11);
    const Eigen::MatrixXd K = oracle::random_normalized_psd(8, rng);
    const AdversarialLabels a = adversarial_labels(as_normalized(K), as_normalized(K), 0.0);
    ASSERT_EQ(a.labels.size(), 8);
    for (int i = 0; i < 8; ++i) EXPECT_TRUE(a.labels[i] == 1.0 || a.labels[i] == -1.0);
    if (a.labels.minCoeff() < 0 && a.labels.maxCoeff() > 0) {
        KernelMatrix KQ = as_normalized(K);
        KQ.source = KernelSource::QuantumExact;
        EXPECT_NEAR(model_complexity(train_svm(as_normalized(K), a.labels)), model_complexity(train_svm(KQ, a.labels)),
                    1e-9);
    }
    // K_Q = K_C: the operator is (nearly) the identity on range(K), so the labels
    // are the sign pattern of one of K's eigenvectors.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    bool matched = false;
    for (int k = 0; k < 8 && !matched; ++k) {
        const Eigen::VectorXd v = es.eigenvectors().col(k);
        const Eigen::VectorXd sp = v.unaryExpr([](double x) { return x < 0 ? -1.0 : 1.0; });
        matched = sp == a.labels || sp == -a.labels;
    }
    EXPECT_TRUE(matched || a.degenerate);
}

TEST(Svm, TwoSeparatedPoints) {
    Eigen::MatrixXd X(2, 1);
    X << -2, 2;
    const Eigen::MatrixXd K = X * X.transpose();
    const SvmModel m = train_svm(K, Eigen::Vector2d(-1, 1));
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(m.support_indices.size(), 2u);
    const Eigen::VectorXd f = m.decision_values(K);
    EXPECT_LT(f[0], 0);
    EXPECT_GT(f[1], 0);
}

TEST(Svm, EightPointToyMatchesQpOracle) {
    Eigen::MatrixXd X(8, 2);
    X << 0, 0, 1, 0, 0, 1, 0.5, 0.4, 3, 3, 4, 3, 3, 4, 2.6, 2.5;
    Eigen::VectorXd y(8);
    y << -1, -1, -1, -1, 1, 1, 1, 1;
    const Eigen::MatrixXd K = X * X.transpose();
    const SvmModel m = train_svm(K, y);
    const Eigen::VectorXd alpha = m.dual_coefficients.cwiseProduct(y);
    EXPECT_NEAR(dual_objective(K, y, alpha), oracle::svm_dual_optimum(K, y, 1.0), 1e-4);
    const Eigen::VectorXd f = m.decision_values(K);
    for (int i = 0; i < 8; ++i) EXPECT_GT(f[i] * y[i], 0.0);
}

TEST(Svm, ConflictingDuplicatesAtBound) {
    Eigen::MatrixXd X(4, 1);
    X << 1, 1, -3, 3;
    Eigen::VectorXd y(4);
    y << 1, -1, -1, 1;
    const double C = 0.5;
    const SvmModel m = train_svm(X * X.transpose(), y, {.C = C});
    EXPECT_NEAR(std::abs(m.dual_coefficients[0]), C, 1e-6);
    EXPECT_NEAR(std::abs(m.dual_coefficients[1]), C, 1e-6);
}

TEST(Svm, RandomInstancesMatchQpOracle) {
    Rng rng(12);
    for (int seed = 0; seed < 50; ++seed) {
        const Eigen::Index N = 3 + static_cast<Eigen::Index>(rng.below(8));
        const Eigen::MatrixXd X = random_matrix(N, 3, rng);
        const Eigen::MatrixXd K = X * X.transpose();
        Eigen::VectorXd y(N);
        for (Eigen::Index i = 0; i < N; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        y[0] = 1;
        y[1] = -1;
        const double C = seed % 2 == 0 ? 1.0 : 4.0;
        const SvmModel m = train_svm(K, y, {.C = C});
        const Eigen::VectorXd alpha = m.dual_coefficients.cwiseProduct(y);
        EXPECT_LE(alpha.maxCoeff(), C + 1e-12);
        EXPECT_GE(alpha.minCoeff(), -1e-12);
        EXPECT_NEAR(m.dual_coefficients.sum(), 0.0, 1e-6);
        EXPECT_NEAR(dual_objective(K, y, alpha), oracle::svm_dual_optimum(K, y, C), 1e-4) << "seed " << seed;
    }
}

TEST(Svm, InputValidation) {
    const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(train_svm(K, Eigen::Vector3d(1, 1, 1)), std::invalid_argument);
    EXPECT_THROW(train_svm(K, Eigen::Vector3d(1, 0, -1)), std::invalid_argument);
    Eigen::MatrixXd bad = K;
    bad(0, 1) = bad(1, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(train_svm(bad, Eigen::Vector3d(1, -1, 1)), std::invalid_argument);
}

TEST(ModelComplexity, Examples) {
    SvmModel m;
    m.dual_coefficients = Eigen::Vector2d(0.6, -0.8);
    EXPECT_EQ(model_complexity(m), 1.0);
    m.dual_coefficients = Eigen::VectorXd::Zero(4);
    EXPECT_EQ(model_complexity(m), 0.0);
    Rng rng(13);
    m.dual_coefficients = random_matrix(7, 1, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.dual_coefficients.transpose());
    EXPECT_NEAR(model_complexity(m), svd.singularValues()[0], 1e-14);
}

TEST(Verdict, Rules) {
    const double r = std::sqrt(74.0);
    EXPECT_EQ(decide_verdict(8.3, 9.0, 2.0, r, 0.05), Verdict::PotentialAdvantage);
    EXPECT_EQ(decide_verdict(8.0, 9.0, 2.0, r, 0.05), Verdict::ClassicalSufficient);
    EXPECT_EQ(decide_verdict(9.0, 8.0, 2.0, r, 0.05), Verdict::ClassicalSufficient);
    EXPECT_EQ(decide_verdict(9.0, 9.0, 9.5, r, 0.05), Verdict::ClassicalSufficient);
    EXPECT_EQ(decide_verdict(std::nan(""), 9.0, 2.0, r, 0.05), Verdict::Inconclusive);
}

TEST(Screen, ReportShapeAndThreshold) {
    Rng rng(14);
    const Eigen::MatrixXd X = random_matrix(74, 6, rng);
    Eigen::VectorXd y(74);
    for (int i = 0; i < 74; ++i) y[i] = X(i, 0) + 0.3 * X(i, 1) > 0 ? 1.0 : -1.0;
    ScreenOptions opt;
    opt.Ms = {4, 2};
    opt.adversarial = true;
    const ScreenReport r = screen(DataMatrix(X), y, opt);
    EXPECT_EQ(r.N, 74);
    EXPECT_NEAR(r.sqrt_N, 8.602, 1e-3);
    EXPECT_EQ(r.sqrt_N, std::sqrt(74.0));
    ASSERT_EQ(r.rows.size(), 8u);
    EXPECT_EQ(r.rows[0].M, 2);
    EXPECT_EQ(r.rows[0].encoding.kind, EncodingKind::Angle);
    EXPECT_EQ(r.rows[0].labels, "target");
    EXPECT_EQ(r.rows[1].labels, "adversarial");
    EXPECT_EQ(r.rows[2].encoding.kind, EncodingKind::IQP);
    EXPECT_EQ(r.rows[7].M, 4);
    for (const auto& row : r.rows) {
        EXPECT_TRUE(std::isfinite(row.g));
        if (row.labels == "target" || row.verdict != Verdict::Inconclusive)
            EXPECT_EQ(row.verdict, decide_verdict(row.g, row.s_C, row.s_Q, r.sqrt_N, 0.05)) << row.note;
        else
            EXPECT_NE(row.note.find("adversarial labels"), std::string::npos) << row.note;
    }
    const nlohmann::json j = r;
    for (const char* key : {"M", "encoding", "g", "s_C", "s_Q", "mode", "shots", "verdict"})
        EXPECT_TRUE(j["rows"][0].contains(key)) << key;
}

TEST(Screen, FailingRowIsInconclusive) {
    Rng rng(15);
    const Eigen::MatrixXd X = random_matrix(10, 3, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
    y.head(5).setConstant(-1);
    ScreenOptions opt;
    opt.Ms = {2, 8};
    opt.encodings = {EncodingKind::Angle};
    const ScreenReport r = screen(DataMatrix(X), y, opt);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_NE(r.rows[0].verdict, Verdict::Inconclusive);
    EXPECT_EQ(r.rows[1].verdict, Verdict::Inconclusive);
    EXPECT_FALSE(r.rows[1].note.empty());
}

TEST(KernelCsv, FullPrecisionWithSidecar) {
    KernelMatrix K;
    K.values = Eigen::Matrix2d{{1.0, 1.0 / 3.0}, {1.0 / 3.0, 1.0}};
    const auto dir = std::filesystem::temp_directory_path() / "qk_kernel_csv";
    std::filesystem::create_directories(dir);
    write_kernel_csv(K, dir / "k.csv");
    std::ifstream in(dir / "k.csv");
    std::string line;
    std::getline(in, line);
    const auto comma = line.find(',');
    ASSERT_NE(comma, std::string::npos);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), 1.0 / 3.0);
    EXPECT_TRUE(std::filesystem::exists(dir / "k.csv.json"));
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace qkscreen
