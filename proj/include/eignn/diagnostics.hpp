#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eignn/io.hpp"
#include "eignn/linalg.hpp"
#include "eignn/rng.hpp"

namespace eignn {

// A named loss with a gradient over flattened parameters; data is baked into
// the closure so diagnostics stay agnostic of how the loss is built.
struct LossTerm {
    std::string name;
    std::function<DenseVector(const DenseVector&)> gradient;
};

struct ProjectionPoint {
    std::size_t epoch = 0;
    std::string term;
    double value = 0.0;
    bool degenerate = false;  // snapshot coincides with theta_star
};

// p = <grad L(theta_k), d*> / ||d*|| with d* = theta_k - theta_star. Under
// this sign convention p > 0 means the descent step -grad L has a positive
// component toward theta_star.
inline std::vector<ProjectionPoint> gradient_projection(
    const std::vector<std::pair<std::size_t, DenseVector>>& snapshots,
    const DenseVector& theta_star, const std::vector<LossTerm>& terms) {
    std::vector<ProjectionPoint> trace;
    DenseVector d_star(theta_star.size());
    for (const auto& [epoch, theta_k] : snapshots) {
        if (theta_k.size() != theta_star.size())
            throw std::invalid_argument("gradient_projection: parameter size mismatch");
        for (std::size_t i = 0; i < d_star.size(); ++i) d_star[i] = theta_k[i] - theta_star[i];
        const double norm = norm2(d_star);
        for (const LossTerm& term : terms) {
            ProjectionPoint p;
            p.epoch = epoch;
            p.term = term.name;
            if (norm < 1e-12) {
                p.value = 0.0;
                p.degenerate = true;
            } else {
                const DenseVector g = term.gradient(theta_k);
                if (g.size() != theta_star.size())
                    throw std::invalid_argument("gradient_projection: gradient size mismatch");
                p.value = dot(g, d_star) / norm;
            }
            trace.push_back(std::move(p));
        }
    }
    return trace;
}

struct LandscapeGrid {
    double grid_range = 0;
    std::size_t grid_size = 0;
    std::vector<double> coords;         // shared axis, (i - mid) * step
    DenseVector values;                 // row-major, a index major; NaN where missing
    std::vector<std::uint8_t> missing;  // 1 where evaluation failed
    double center_value = 0;
};

// Rescales a raw direction so each weight-matrix row matches the norm of the
// corresponding row of the reference parameters, and each bias vector matches
// the reference bias norm. Rows with zero reference norm are zeroed, so e.g.
// zero-initialized biases stay fixed in the slice.
inline DenseVector filter_normalize(const DenseVector& raw, const DenseVector& reference,
                                    const std::vector<std::size_t>& dims) {
    if (raw.size() != reference.size())
        throw std::invalid_argument("filter_normalize: size mismatch");
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        expected += dims[l] * dims[l + 1] + dims[l + 1];
    if (expected != raw.size())
        throw std::invalid_argument("filter_normalize: dims do not match parameter count");
    DenseVector out = raw;
    auto rescale = [&](std::size_t off, std::size_t len) {
        double ref = 0.0, cur = 0.0;
        for (std::size_t i = off; i < off + len; ++i) {
            ref += reference[i] * reference[i];
            cur += out[i] * out[i];
        }
        ref = std::sqrt(ref);
        cur = std::sqrt(cur);
        const double factor = cur > 0.0 ? ref / cur : 0.0;
        for (std::size_t i = off; i < off + len; ++i) out[i] *= factor;
    };
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t rows = dims[l + 1], cols = dims[l];
        for (std::size_t r = 0; r < rows; ++r) rescale(off + r * cols, cols);
        off += rows * cols;
        rescale(off, rows);
        off += rows;
    }
    return out;
}

// Loss surface over center + a*delta + b*eta for explicit directions. The
// center grid point evaluates the unperturbed parameters, so its value equals
// loss_fn(center) bit-exactly; per-point failures are recorded, not fatal.
inline LandscapeGrid landscape_slice_dirs(const DenseVector& center,
                                          const std::function<double(const DenseVector&)>& loss_fn,
                                          const DenseVector& delta, const DenseVector& eta,
                                          double grid_range, std::size_t grid_size) {
    if (grid_size < 1 || grid_size % 2 == 0)
        throw std::invalid_argument("landscape_slice: grid_size must be odd and >= 1");
    if (delta.size() != center.size() || eta.size() != center.size())
        throw std::invalid_argument("landscape_slice: direction size mismatch");
    if (!(grid_range >= 0)) throw std::invalid_argument("landscape_slice: bad grid range");

    LandscapeGrid grid;
    grid.grid_range = grid_range;
    grid.grid_size = grid_size;
    const std::size_t mid = (grid_size - 1) / 2;
    const double step =
        grid_size == 1 ? 0.0 : 2.0 * grid_range / static_cast<double>(grid_size - 1);
    grid.coords.resize(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
        grid.coords[i] = (static_cast<double>(i) - static_cast<double>(mid)) * step;

    grid.values.assign(grid_size * grid_size, std::numeric_limits<double>::quiet_NaN());
    grid.missing.assign(grid_size * grid_size, 0);
    DenseVector theta(center.size());
    for (std::size_t ia = 0; ia < grid_size; ++ia) {
        const double a = grid.coords[ia];
        for (std::size_t ib = 0; ib < grid_size; ++ib) {
            const double b = grid.coords[ib];
            for (std::size_t i = 0; i < theta.size(); ++i)
                theta[i] = center[i] + a * delta[i] + b * eta[i];
            const std::size_t cell = ia * grid_size + ib;
            try {
                grid.values[cell] = loss_fn(theta);
            } catch (const std::exception&) {
                grid.missing[cell] = 1;
            }
        }
    }
    grid.center_value = grid.values[mid * grid_size + mid];
    return grid;
}

// Random filter-normalized directions derived from the seed.
inline LandscapeGrid landscape_slice(const DenseVector& center,
                                     const std::function<double(const DenseVector&)>& loss_fn,
                                     double grid_range, std::size_t grid_size, std::uint64_t seed,
                                     const std::vector<std::size_t>& dims) {
    DenseVector delta(center.size()), eta(center.size());
    Rng r0 = Rng::substream(seed, stream::landscape, 0);
    Rng r1 = Rng::substream(seed, stream::landscape, 1);
    for (double& v : delta) v = r0.normal();
    for (double& v : eta) v = r1.normal();
    delta = filter_normalize(delta, center, dims);
    eta = filter_normalize(eta, center, dims);
    return landscape_slice_dirs(center, loss_fn, delta, eta, grid_range, grid_size);
}

inline void write_projection_csv(const std::vector<ProjectionPoint>& trace,
                                 const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_projection_csv: cannot open " + path);
    os << "epoch,term,value\n";
    for (const ProjectionPoint& p : trace)
        os << p.epoch << "," << p.term << "," << fmt_double(p.value) << "\n";
    if (!os) throw std::runtime_error("write_projection_csv: write failure on " + path);
}

inline void write_landscape_csv(const LandscapeGrid& grid, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_landscape_csv: cannot open " + path);
    os << "a,b,value\n";
    for (std::size_t ia = 0; ia < grid.grid_size; ++ia)
        for (std::size_t ib = 0; ib < grid.grid_size; ++ib)
            os << fmt_double(grid.coords[ia]) << "," << fmt_double(grid.coords[ib]) << ","
               << fmt_double(grid.values[ia * grid.grid_size + ib]) << "\n";
    if (!os) throw std::runtime_error("write_landscape_csv: write failure on " + path);
}

}  // namespace eignn
