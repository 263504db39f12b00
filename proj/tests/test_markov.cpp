// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/markov.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "raha/util.hpp"
#include "test_support.hpp"

using namespace raha;

namespace {

Eigen::MatrixXd random_square(int n, std::uint64_t& state, double scale = 1.0) {
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            m(r, c) = scale * symmetric_double(splitmix64(state));
        }
    }
    return m;
}

// Characteristic polynomial coefficients by the Faddeev-LeVerrier
// recurrence: p(x) = x^n + c[n-1] x^(n-1) + ... + c[0]. Independent of any
// eigensolver.
std::vector<double> char_poly(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        if (k > 1) {
            m = a * m + c[static_cast<std::size_t>(n - k + 1)] *
                            Eigen::MatrixXd::Identity(n, n);
        }
        c[static_cast<std::size_t>(n - k)] = -(a * m).trace() / k;
    }
    return c;
}

// All roots of a monic polynomial by Durand-Kerner iteration.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
    const int n = static_cast<int>(coeffs.size()) - 1;
    auto eval = [&](std::complex<double> x) {
        std::complex<double> acc = 0.0;
        for (int k = n; k >= 0; --k) {
            acc = acc * x + coeffs[static_cast<std::size_t>(k)];
        }
        return acc;
    };
    std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
    const std::complex<double> base(0.4, 0.9);
    std::complex<double> power = 1.0;
    for (int i = 0; i < n; ++i) {
        power *= base;
        roots[static_cast<std::size_t>(i)] = power;
    }
    for (int iter = 0; iter < 500; ++iter) {
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
            std::complex<double> denom = 1.0;
            for (int j = 0; j < n; ++j) {
                if (j != i) {
                    denom *= roots[static_cast<std::size_t>(i)] -
                             roots[static_cast<std::size_t>(j)];
                }
            }
            const std::complex<double> step =
                eval(roots[static_cast<std::size_t>(i)]) / denom;
            roots[static_cast<std::size_t>(i)] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-13) break;
    }
    return roots;
}

double oracle_spectral_radius(const Eigen::MatrixXd& a) {
    double best = 0.0;
    for (const auto& root : poly_roots(char_poly(a))) {
        best = std::max(best, std::abs(root));
    }
    return best;
}

// Fixed point by truncated Neumann series: y = P sum_k F^k.
Eigen::RowVectorXd oracle_fixed_point(const Eigen::RowVectorXd& p_contrib,
                                      const Eigen::MatrixXd& f_yy) {
    Eigen::RowVectorXd total = p_contrib;
    Eigen::RowVectorXd term = p_contrib;
    for (int k = 0; k < 20000; ++k) {
        term = term * f_yy;
        total += term;
        if (term.lpNorm<Eigen::Infinity>() < 1e-16) break;
    }
    return total;
}

ChainSpec scalar_chain(double f_p, double f_yy, double p = 1.0, double y0 = 0.0) {
    Eigen::RowVectorXd P(1);
    P << p;
    Eigen::MatrixXd Fp(1, 1);
    Fp << f_p;
    Eigen::MatrixXd Fyy(1, 1);
    Fyy << f_yy;
    Eigen::RowVectorXd start(1);
    start << y0;
    return ChainSpec::from_blocks(P, Fp, Fyy, start);
}

}  // namespace

TEST_CASE("boxplus matches the frozen two-by-two example") {
    Eigen::MatrixXd a(2, 2), b(2, 2), m(1, 1);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    m << 2;
    const Eigen::MatrixXd out = boxplus(a, b, m);
    Eigen::MatrixXd expected(2, 2);
    expected << 12, 16, 20, 24;
    CHECK(out == expected);
}

TEST_CASE("boxplus with identity mixing is blockwise addition") {
    std::uint64_t state = 5;
    const int rows = 3;
    Eigen::MatrixXd a(rows, 6), b(rows, 6);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < 6; ++c) {
            a(r, c) = symmetric_double(splitmix64(state));
            b(r, c) = symmetric_double(splitmix64(state));
        }
    }
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd out = boxplus(a, b, id);
    CHECK(out.isApprox(a + b, 1e-15));
}

TEST_CASE("boxplus with identity mixing commutes and associates") {
    std::uint64_t state = 9;
    Eigen::MatrixXd a = random_square(4, state);
    Eigen::MatrixXd b = random_square(4, state);
    Eigen::MatrixXd c = random_square(4, state);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    CHECK(boxplus(a, b, id).isApprox(boxplus(b, a, id), 1e-15));
    CHECK(boxplus(boxplus(a, b, id), c, id).isApprox(boxplus(a, boxplus(b, c, id), id),
                                                     1e-15));
    CHECK(boxplus(boxplus(a, b, id), c, id).isApprox(a + b + c, 1e-14));
}

TEST_CASE("boxplus applies a non-trivial mixing matrix per block") {
    Eigen::MatrixXd a(1, 4), b(1, 4), m(2, 2);
    a << 1, 0, 0, 1;
    b << 0, 1, 1, 0;
    m << 1, 2, 3, 4;
    // Both block sums are [1, 1]; [1, 1] * M = [4, 6].
    const Eigen::MatrixXd out = boxplus(a, b, m);
    Eigen::MatrixXd expected(1, 4);
    expected << 4, 6, 4, 6;
    CHECK(out.isApprox(expected, 1e-15));
}

TEST_CASE("boxplus validates shapes") {
    Eigen::MatrixXd even(2, 4), odd(2, 3), other(3, 4);
    even.setZero();
    odd.setZero();
    other.setZero();
    const Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(boxplus(even, other, id2), ValidationError);
    const Eigen::MatrixXd id15 = Eigen::MatrixXd::Identity(15, 15);
    CHECK_THROWS_AS(boxplus(odd, odd, id15), ValidationError);
    const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(boxplus(even, even, id3), ValidationError);
}

TEST_CASE("spectral radius matches simple closed forms") {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = 0.5;
    diag(1, 1) = -0.25;
    CHECK(spectral_radius(diag) == doctest::Approx(0.5).epsilon(1e-12));

    Eigen::MatrixXd nilpotent(2, 2);
    nilpotent << 0, 1, 0, 0;
    CHECK(spectral_radius(nilpotent) == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::MatrixXd rotation(2, 2);
    rotation << 0, -1, 1, 0;
    CHECK(spectral_radius(rotation) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(spectral_radius(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));

    Eigen::MatrixXd empty;
    CHECK_THROWS_AS(spectral_radius(empty), ValidationError);
    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(spectral_radius(rect), ValidationError);
}

TEST_CASE("spectral radius agrees with a characteristic-polynomial oracle") {
    std::uint64_t state = 31;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(splitmix64(state) % 5);
        const Eigen::MatrixXd a = random_square(n, state);
        const double expected = oracle_spectral_radius(a);
        const double got = spectral_radius(a);
        REQUIRE(got == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("a scalar contraction converges to its closed-form limit") {
    ChainSpec spec = scalar_chain(1.0, 0.5);
    const IterationResult run = iterate_chain(spec);
    CHECK(run.status == ChainStatus::kConverged);
    CHECK(run.contractive);
    CHECK(run.rho_yy == doctest::Approx(0.5));
    CHECK(run.y[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(run.trajectory.size() == static_cast<std::size_t>(run.iterations) + 1);
    CHECK(run.deltas.size() == static_cast<std::size_t>(run.iterations));
    // Geometric decay: each step shrinks by the contraction factor.
    for (std::size_t k = 0; k + 1 < run.deltas.size(); ++k) {
        if (run.deltas[k] < 1e-6) break;  // below this, rounding dominates the ratio
        CHECK(run.deltas[k + 1] / run.deltas[k] == doctest::Approx(0.5).epsilon(1e-8));
    }
}

TEST_CASE("a diagonal contraction converges componentwise") {
    Eigen::RowVectorXd P(1);
    P << 1.0;
    Eigen::MatrixXd Fp(1, 2);
    Fp << 1.0, 0.0;
    const Eigen::MatrixXd Fyy = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::RowVectorXd y0 = Eigen::RowVectorXd::Zero(2);
    const ChainSpec spec = ChainSpec::from_blocks(P, Fp, Fyy, y0);

    const IterationResult run = iterate_chain(spec);
    CHECK(run.status == ChainStatus::kConverged);
    CHECK(run.y[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(run.y[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("an expanding chain is flagged as divergent") {
    ChainSpec spec = scalar_chain(1.0, 1.1);
    spec.max_iterations = 200;
    const IterationResult run = iterate_chain(spec);
    CHECK(run.status == ChainStatus::kDiverged);
    CHECK_FALSE(run.contractive);
    CHECK(run.iterations <= 200);

    // Random expanding chains are flagged too.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ChainSpec random = random_chain_spec(4, 2, 1.1, seed);
        random.max_iterations = 200;
        const IterationResult r = iterate_chain(random);
        CHECK(r.status == ChainStatus::kDiverged);
    }
}

TEST_CASE("a slow contraction runs into the iteration cap") {
    ChainSpec spec = scalar_chain(1.0, 0.999);
    spec.max_iterations = 10;
    const IterationResult run = iterate_chain(spec);
    CHECK(run.status == ChainStatus::kMaxIterations);
    CHECK(run.iterations == 10);
}

TEST_CASE("a spectral radius of one is never reported contractive") {
    ChainSpec spec = scalar_chain(1.0, 1.0);
    spec.max_iterations = 50;
    const IterationResult run = iterate_chain(spec);
    CHECK_FALSE(run.contractive);
    CHECK(run.status != ChainStatus::kConverged);
}

TEST_CASE("fixed point solves the stationary equation") {
    // With no feedback the fixed point is the prompt contribution itself.
    Eigen::RowVectorXd p_contrib(3);
    p_contrib << 1.0, -2.0, 0.5;
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
    CHECK(fixed_point(p_contrib, zero).isApprox(p_contrib, 1e-14));

    Eigen::RowVectorXd p2(2);
    p2 << 1.0, 0.0;
    const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::RowVectorXd y = fixed_point(p2, half);
    CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-12));

    // The limit satisfies y = p + y F exactly.
    const Eigen::RowVectorXd residual = p2 + y * half - y;
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("fixed point matches a truncated series expansion") {
    std::uint64_t state = 77;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(splitmix64(state) % 4);
        Eigen::MatrixXd f = random_square(n, state);
        const double rho = spectral_radius(f);
        f *= 0.8 / std::max(rho, 1e-9);  // make it a contraction
        Eigen::RowVectorXd p(n);
        for (int i = 0; i < n; ++i) p[i] = symmetric_double(splitmix64(state));

        const Eigen::RowVectorXd direct = fixed_point(p, f);
        const Eigen::RowVectorXd series = oracle_fixed_point(p, f);
        REQUIRE((direct - series).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("fixed point rejects singular systems") {
    Eigen::RowVectorXd p(2);
    p << 1.0, 1.0;
    CHECK_THROWS_AS(fixed_point(p, Eigen::MatrixXd::Identity(2, 2)), ValidationError);
    Eigen::RowVectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(fixed_point(wrong, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
}

TEST_CASE("converged chains land on the fixed point") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        ChainSpec spec = random_chain_spec(6, 3, 0.9, seed);
        const IterationResult run = iterate_chain(spec);
        REQUIRE(run.status == ChainStatus::kConverged);
        const Eigen::RowVectorXd limit = fixed_point(spec);
        REQUIRE((run.y - limit).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("random chain specs hit the requested spectral radius exactly") {
    const ChainSpec a = random_chain_spec(8, 4, 0.9, 123);
    CHECK(a.p() == 4);
    CHECK(a.n() == 8);
    CHECK(spectral_radius(a.f_yy()) == doctest::Approx(0.9).epsilon(1e-9));

    const ChainSpec b = random_chain_spec(8, 4, 0.9, 123);
    CHECK(a.F_star == b.F_star);
    CHECK(a.P == b.P);
    CHECK(a.y0 == b.y0);

    const ChainSpec c = random_chain_spec(8, 4, 0.9, 124);
    CHECK(a.F_star != c.F_star);

    const ChainSpec zero = random_chain_spec(3, 2, 0.0, 9);
    CHECK(zero.f_yy().isZero(0.0));
}

TEST_CASE("decay slope fitting recovers exact geometric rates") {
    std::vector<double> errors;
    for (int k = 0; k < 40; ++k) {
        errors.push_back(3.0 * std::pow(0.9, k));
    }
    CHECK(fit_log_slope(errors) == doctest::Approx(std::log(0.9)).epsilon(1e-10));

    // Values at or below the floor are ignored.
    std::vector<double> floored = errors;
    for (int i = 0; i < 5; ++i) floored.push_back(0.0);
    CHECK(fit_log_slope(floored) == doctest::Approx(std::log(0.9)).epsilon(1e-10));

    // Too few usable points is not fittable.
    const std::vector<double> few = {1.0, 0.5, 0.25};
    CHECK(std::isnan(fit_log_slope(few)));
}

TEST_CASE("the verification suite passes on contractive ensembles") {
    VerificationConfig config;
    config.chains = 20;
    config.n = 4;
    config.p = 2;
    config.rho = 0.9;
    config.seed = 5;
    const VerificationReport report = run_verification(config);
    CHECK(report.converged == 20);
    CHECK(report.diverged == 0);
    CHECK(report.maxed == 0);
    CHECK(report.max_gap < 1e-8);
    CHECK(report.slope_total == 20);
    CHECK(report.slope_ok == 20);
    CHECK(report.outcomes.size() == 20);
}

TEST_CASE("the verification suite flags expanding ensembles") {
    VerificationConfig config;
    config.chains = 20;
    config.n = 4;
    config.p = 2;
    config.rho = 1.1;
    config.seed = 5;
    config.max_iterations = 200;
    const VerificationReport report = run_verification(config);
    CHECK(report.diverged == 20);
    CHECK(report.converged == 0);
    for (const ChainOutcome& outcome : report.outcomes) {
        CHECK(outcome.iterations <= 200);
        CHECK(outcome.rho == doctest::Approx(1.1).epsilon(1e-9));
    }
}

TEST_CASE("trajectory CSV has one row per iterate and a delta column") {
    test::TempDir tmp("markov-csv");
    ChainSpec spec = scalar_chain(1.0, 0.5);
    const IterationResult run = iterate_chain(spec);
    const auto path = tmp / "trajectory.csv";
    save_trajectory_csv(path, run);

    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "k,y0,delta");

    int rows = 0;
    std::string line;
    std::string first_data;
    while (std::getline(in, line)) {
        if (rows == 0) first_data = line;
        ++rows;
    }
    CHECK(rows == static_cast<int>(run.trajectory.size()));
    // The starting row has no step delta.
    CHECK(first_data.substr(0, 4) == "0,0,");
    CHECK(first_data.back() == ',');
}

TEST_CASE("chain specs load from JSON in both layouts") {
    test::TempDir tmp("markov-json");

    const auto stacked = tmp / "stacked.json";
    write_file_atomic(stacked, R"({
      "P": [1.0],
      "F_star": [[1.0], [0.5]],
      "y0": [0.0],
      "max_iterations": 50,
      "tolerance": 1e-9
    })");
    const ChainSpec a = chain_spec_from_json(stacked);
    CHECK(a.p() == 1);
    CHECK(a.n() == 1);
    CHECK(a.max_iterations == 50);
    CHECK(a.tolerance == 1e-9);
    CHECK(iterate_chain(a).y[0] == doctest::Approx(2.0).epsilon(1e-6));

    const auto blocks = tmp / "blocks.json";
    write_file_atomic(blocks, R"({
      "P": [1.0, 2.0],
      "F_p": [[0.5, 0.0], [0.25, 0.0]],
      "F_yy": [[0.1, 0.0], [0.0, 0.2]]
    })");
    const ChainSpec b = chain_spec_from_json(blocks);
    CHECK(b.p() == 2);
    CHECK(b.n() == 2);
    CHECK(b.y0.isZero(0.0));  // defaults to the origin

    const auto bad = tmp / "bad.json";
    write_file_atomic(bad, R"({"P": [1.0], "F_star": [[1.0]]})");
    CHECK_THROWS_AS(chain_spec_from_json(bad), ValidationError);

    write_file_atomic(bad, "nonsense");
    CHECK_THROWS_AS(chain_spec_from_json(bad), IoError);
}

TEST_CASE("chain spec validation rejects inconsistent blocks") {
    ChainSpec spec = scalar_chain(1.0, 0.5);
    CHECK_NOTHROW(spec.validate());
    spec.tolerance = 0.0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = scalar_chain(1.0, 0.5);
    spec.max_iterations = 0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = scalar_chain(1.0, 0.5);
    spec.y0.resize(2);
    spec.y0.setZero();
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    // Two prompt rows but a single prompt weight.
    Eigen::RowVectorXd P(1);
    P << 1.0;
    Eigen::MatrixXd F(2, 2);
    F.setZero();
    CHECK_THROWS_AS(ChainSpec::from_blocks(P, F, Eigen::MatrixXd::Zero(2, 2),
                                           Eigen::RowVectorXd::Zero(2)),
                    ValidationError);
}
