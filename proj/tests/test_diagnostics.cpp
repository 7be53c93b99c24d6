#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "eignn/diagnostics.hpp"
#include "eignn/mlp.hpp"
#include "eignn/rng.hpp"
#include "test_util.hpp"

using namespace eignn;

namespace {

// Gradient of L(theta) = ||theta||^2, i.e. 2 theta.
LossTerm quadratic_term() {
    return {"quadratic", [](const DenseVector& theta) {
                DenseVector g(theta.size());
                for (std::size_t i = 0; i < theta.size(); ++i) g[i] = 2.0 * theta[i];
                return g;
            }};
}

}  // namespace

TEST_CASE("gradient_projection: 1-d quadratic has projection 2|theta_k|", "[diagnostics]") {
    // L = theta^2, grad = 2 theta. At theta_k = 2, theta* = 0:
    // d* = 2, p = (4 * 2) / 2 = 4.
    const std::vector<std::pair<std::size_t, DenseVector>> snaps{{0, {2.0}}, {7, {-3.0}}};
    const auto trace = gradient_projection(snaps, {0.0}, {quadratic_term()});
    REQUIRE(trace.size() == 2);
    REQUIRE(trace[0].epoch == 0);
    REQUIRE(trace[0].term == "quadratic");
    REQUIRE(trace[0].value == 4.0);
    REQUIRE_FALSE(trace[0].degenerate);
    // grad = -6, d* = -3, p = 18 / 3 = 6: moving against the gradient
    // approaches theta* from either side.
    REQUIRE(trace[1].value == 6.0);
}

TEST_CASE("gradient_projection: orthogonal gradient projects to zero", "[diagnostics]") {
    const LossTerm swap_axis{"orthogonal", [](const DenseVector& theta) {
                                 return DenseVector{-theta[1], theta[0]};
                             }};
    const std::vector<std::pair<std::size_t, DenseVector>> snaps{{3, {1.0, 0.0}}};
    const auto trace = gradient_projection(snaps, {0.0, 0.0}, {swap_axis});
    REQUIRE(trace[0].value == 0.0);
}

TEST_CASE("gradient_projection: coincident snapshot is flagged degenerate", "[diagnostics]") {
    const DenseVector theta{0.5, -0.25, 1.0};
    const std::vector<std::pair<std::size_t, DenseVector>> snaps{{4, theta}};
    const auto trace = gradient_projection(snaps, theta, {quadratic_term()});
    REQUIRE(trace[0].degenerate);
    REQUIRE(trace[0].value == 0.0);
}

TEST_CASE("gradient_projection: linear in the gradient, scale-free in the offset",
          "[diagnostics]") {
    Rng rng(51);
    DenseVector theta_star(6), theta_k(6);
    for (double& v : theta_star) v = rng.normal();
    for (double& v : theta_k) v = rng.normal();

    const LossTerm base = quadratic_term();
    const LossTerm tripled{"tripled", [&](const DenseVector& t) {
                               DenseVector g = base.gradient(t);
                               for (double& v : g) v *= 3.0;
                               return g;
                           }};
    const std::vector<std::pair<std::size_t, DenseVector>> snaps{{0, theta_k}};
    const double p1 = gradient_projection(snaps, theta_star, {base})[0].value;
    const double p3 = gradient_projection(snaps, theta_star, {tripled})[0].value;
    REQUIRE(p3 == Catch::Approx(3.0 * p1).margin(1e-12));

    // Doubling the distance along the same ray leaves the direction d*/||d*||
    // unchanged, so only the gradient location moves the projection.
    DenseVector further(6);
    for (std::size_t i = 0; i < 6; ++i)
        further[i] = theta_star[i] + 2.0 * (theta_k[i] - theta_star[i]);
    const LossTerm constant{"constant",
                            [&](const DenseVector&) { return base.gradient(theta_k); }};
    const double near = gradient_projection(snaps, theta_star, {constant})[0].value;
    const double far =
        gradient_projection({{0, further}}, theta_star, {constant})[0].value;
    REQUIRE(far == Catch::Approx(near).margin(1e-12));
}

TEST_CASE("gradient_projection: size mismatches throw", "[diagnostics]") {
    REQUIRE_THROWS_AS(gradient_projection({{0, {1.0, 2.0}}}, {0.0}, {quadratic_term()}),
                      std::invalid_argument);
    const LossTerm bad{"bad", [](const DenseVector&) { return DenseVector{1.0}; }};
    REQUIRE_THROWS_AS(gradient_projection({{0, {1.0, 2.0}}}, {0.0, 0.0}, {bad}),
                      std::invalid_argument);
}

TEST_CASE("landscape_slice_dirs: center cell is the unperturbed loss, bit-exact",
          "[diagnostics]") {
    const DenseVector center{0.3, -1.2, 0.7};
    const DenseVector delta{1.0, 0.0, 0.0};
    const DenseVector eta{0.0, 1.0, 0.0};
    const auto loss = [](const DenseVector& t) {
        double s = 0.123456789;
        for (double v : t) s += std::sin(v) * std::exp(v / 3.0);
        return s;
    };
    const LandscapeGrid grid = landscape_slice_dirs(center, loss, delta, eta, 0.5, 5);
    REQUIRE(grid.grid_size == 5);
    REQUIRE(grid.coords == std::vector<double>{-0.5, -0.25, 0.0, 0.25, 0.5});
    REQUIRE(grid.center_value == loss(center));
    REQUIRE(grid.values[2 * 5 + 2] == loss(center));
    REQUIRE(grid.values.size() == 25);
}

TEST_CASE("landscape_slice_dirs: quadratic bowl reproduces exact offsets", "[diagnostics]") {
    const DenseVector center{1.0, 2.0};
    const DenseVector delta{1.0, 0.0};
    const DenseVector eta{0.0, 1.0};
    const auto loss = [](const DenseVector& t) { return t[0] * t[0] + t[1] * t[1]; };
    const LandscapeGrid grid = landscape_slice_dirs(center, loss, delta, eta, 1.0, 3);
    // Grid coords {-1, 0, 1}: value(a, b) = (1+a)^2 + (2+b)^2.
    for (std::size_t ia = 0; ia < 3; ++ia)
        for (std::size_t ib = 0; ib < 3; ++ib) {
            const double a = grid.coords[ia], b = grid.coords[ib];
            REQUIRE(grid.values[ia * 3 + ib] ==
                    Catch::Approx((1.0 + a) * (1.0 + a) + (2.0 + b) * (2.0 + b))
                        .margin(1e-12));
        }
    REQUIRE(grid.center_value == 5.0);
}

TEST_CASE("landscape_slice_dirs: zero directions give a constant grid", "[diagnostics]") {
    const DenseVector center{0.4, -0.9};
    const DenseVector zero(2, 0.0);
    const auto loss = [](const DenseVector& t) { return t[0] - t[1]; };
    const LandscapeGrid grid = landscape_slice_dirs(center, loss, zero, zero, 2.0, 3);
    for (double v : grid.values) REQUIRE(v == loss(center));
}

TEST_CASE("landscape_slice_dirs: grid sizing rules", "[diagnostics]") {
    const DenseVector center{1.0};
    const DenseVector dir{1.0};
    const auto loss = [](const DenseVector& t) { return t[0]; };

    const LandscapeGrid single = landscape_slice_dirs(center, loss, dir, dir, 1.0, 1);
    REQUIRE(single.values.size() == 1);
    REQUIRE(single.center_value == 1.0);

    const LandscapeGrid big = landscape_slice_dirs(center, loss, dir, dir, 1.0, 51);
    REQUIRE(big.values.size() == 51 * 51);
    REQUIRE(big.coords.front() == -1.0);
    REQUIRE(big.coords.back() == 1.0);

    REQUIRE_THROWS_AS(landscape_slice_dirs(center, loss, dir, dir, 1.0, 4),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(landscape_slice_dirs(center, loss, dir, dir, 1.0, 0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(landscape_slice_dirs(center, loss, {1.0, 2.0}, dir, 1.0, 3),
                      std::invalid_argument);
}

TEST_CASE("landscape_slice_dirs: per-point failures are recorded, not fatal", "[diagnostics]") {
    const DenseVector center{0.0};
    const DenseVector dir{1.0};
    const auto loss = [](const DenseVector& t) {
        if (t[0] > 0.5) throw std::runtime_error("region of no return");
        return t[0];
    };
    const LandscapeGrid grid = landscape_slice_dirs(center, loss, dir, dir, 1.0, 3);
    // Points with a + b > 0.5 failed: (0,1), (1,0), (1,1) in coord space {-1,0,1}.
    std::size_t missing = 0;
    for (std::size_t i = 0; i < grid.missing.size(); ++i)
        if (grid.missing[i]) {
            ++missing;
            REQUIRE(std::isnan(grid.values[i]));
        }
    REQUIRE(missing == 3);
    REQUIRE(grid.center_value == 0.0);
}

TEST_CASE("filter_normalize: rows and biases match the reference norms", "[diagnostics]") {
    const std::vector<std::size_t> dims{3, 2};
    const MlpModel ref_model = MlpModel::glorot_init(dims, 5);
    DenseVector reference = flatten_params(ref_model);
    // Give the biases a nonzero reference norm too.
    reference[6] = 0.5;
    reference[7] = -0.5;

    Rng rng(52);
    DenseVector raw(reference.size());
    for (double& v : raw) v = rng.normal();

    const DenseVector out = filter_normalize(raw, reference, dims);
    auto norm_of = [](const DenseVector& v, std::size_t off, std::size_t len) {
        double s = 0.0;
        for (std::size_t i = off; i < off + len; ++i) s += v[i] * v[i];
        return std::sqrt(s);
    };
    for (std::size_t r = 0; r < 2; ++r)
        REQUIRE(norm_of(out, r * 3, 3) ==
                Catch::Approx(norm_of(reference, r * 3, 3)).margin(1e-12));
    REQUIRE(norm_of(out, 6, 2) == Catch::Approx(norm_of(reference, 6, 2)).margin(1e-12));

    // Direction is preserved within each row: out = factor * raw per block.
    const double f0 = out[0] / raw[0];
    REQUIRE(out[1] == Catch::Approx(f0 * raw[1]).margin(1e-12));
    REQUIRE(out[2] == Catch::Approx(f0 * raw[2]).margin(1e-12));

    // Zero reference block zeroes the direction there.
    DenseVector zero_bias = reference;
    zero_bias[6] = 0.0;
    zero_bias[7] = 0.0;
    const DenseVector pinned = filter_normalize(raw, zero_bias, dims);
    REQUIRE(pinned[6] == 0.0);
    REQUIRE(pinned[7] == 0.0);

    REQUIRE_THROWS_AS(filter_normalize(DenseVector(3, 1.0), reference, dims),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(filter_normalize(raw, reference, {3, 3}), std::invalid_argument);
}

TEST_CASE("landscape_slice: seeded directions are deterministic", "[diagnostics]") {
    const std::vector<std::size_t> dims{3, 2};
    const DenseVector center = flatten_params(MlpModel::glorot_init(dims, 6));
    const auto loss = [](const DenseVector& t) {
        double s = 0.0;
        for (double v : t) s += v * v;
        return s;
    };
    const LandscapeGrid g1 = landscape_slice(center, loss, 0.5, 5, 77, dims);
    const LandscapeGrid g2 = landscape_slice(center, loss, 0.5, 5, 77, dims);
    REQUIRE(g1.values == g2.values);
    REQUIRE(g1.center_value == loss(center));

    const LandscapeGrid g3 = landscape_slice(center, loss, 0.5, 5, 78, dims);
    REQUIRE(g1.values != g3.values);
}

TEST_CASE("diagnostics: csv emission", "[diagnostics]") {
    const auto trace = gradient_projection({{0, {2.0}}, {5, {1.0}}}, {0.0}, {quadratic_term()});
    const std::string pp = scratch_file("projections.csv");
    write_projection_csv(trace, pp);
    std::ifstream is(pp);
    std::string line;
    std::getline(is, line);
    REQUIRE(line == "epoch,term,value");
    std::getline(is, line);
    REQUIRE(line == "0,quadratic,4");
    std::getline(is, line);
    REQUIRE(line == "5,quadratic,2");

    const DenseVector center{1.0};
    const DenseVector dir{1.0};
    const LandscapeGrid grid = landscape_slice_dirs(
        center, [](const DenseVector& t) { return t[0]; }, dir, dir, 1.0, 3);
    const std::string lp = scratch_file("landscape.csv");
    write_landscape_csv(grid, lp);
    std::ifstream ls(lp);
    std::getline(ls, line);
    REQUIRE(line == "a,b,value");
    std::size_t rows = 0;
    while (std::getline(ls, line)) ++rows;
    REQUIRE(rows == 9);
}
