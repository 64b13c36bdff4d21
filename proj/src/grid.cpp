#include "gfgap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gf {

// ===========================================================================
// Grid construction
// ===========================================================================

std::size_t Grid::cell_of(double x) const {
    if (x < x_min || x > x_max)
        throw std::domain_error("point outside the grid window");
    if (x >= edges[edges.size() - 2]) return nodes.size() - 1;  // last, closed
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

Grid make_grid(double x_min, double x_max, const GridSpec& spec) {
    if (!(x_min > 0.0) || !(x_max > x_min))
        throw std::invalid_argument("grid needs 0 < x_min < x_max");
    Grid g;
    g.x_min = x_min;
    g.scheme = spec.kind;
    if (spec.kind == GridScheme::LogUniform) {
        const int n = spec.n_cells;
        if (n < 1) throw std::invalid_argument("log-uniform grid needs n >= 1");
        g.x_max = x_max;
        g.edges.resize(n + 1);
        const double l0 = std::log(x_min), l1 = std::log(x_max);
        for (int i = 0; i <= n; ++i)
            g.edges[i] = std::exp(l0 + (l1 - l0) * i / n);
        g.edges.front() = x_min;
        g.edges.back() = x_max;
    } else {
        const int q = spec.cells_per_octave;
        if (q < 1) throw std::invalid_argument("dyadic grid needs q >= 1");
        // Rounds the top UP to x_min * 2^levels so that edges q apart are
        // exact doublings in floating point: halving a node lands exactly
        // on the node q cells below.
        int levels = static_cast<int>(
            std::ceil(std::log2(x_max / x_min) - 1e-12));
        levels = std::max(levels, 1);
        g.cells_per_octave = q;
        g.levels = levels;
        g.edges.resize(static_cast<std::size_t>(levels) * q + 1);
        for (int i = 0; i <= q; ++i)
            g.edges[i] = x_min * std::exp2(static_cast<double>(i) / q);
        g.edges[q] = x_min * 2.0;  // exp2(1) is exact, make it explicit
        for (std::size_t i = q + 1; i < g.edges.size(); ++i)
            g.edges[i] = 2.0 * g.edges[i - q];
        g.x_max = g.edges.back();
    }
    g.nodes.resize(g.edges.size() - 1);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        g.nodes[i] = 0.5 * (g.edges[i] + g.edges[i + 1]);
    return g;
}

GridPtr make_grid_ptr(double x_min, double x_max, const GridSpec& spec) {
    return std::make_shared<const Grid>(make_grid(x_min, x_max, spec));
}

// ===========================================================================
// Measures
// ===========================================================================

double GridMeasure::total() const {
    return std::accumulate(mass.begin(), mass.end(), 0.0);
}

GridMeasure dirac(GridPtr grid, double x0) {
    GridMeasure mu(std::move(grid));
    mu.mass[mu.grid->cell_of(x0)] = 1.0;
    return mu;
}

// ===========================================================================
// Weights and norms
// ===========================================================================

WeightSpec WeightSpec::one_plus_xK(double K) {
    if (!(K > 0.0))
        throw std::invalid_argument("weight 1 + x^K needs K > 0");
    return {Kind::OnePlusXK, 0.0, K};
}
WeightSpec WeightSpec::xk_plus_xK(double k, double K) {
    // k <= -1 is not integrable against measures charging a neighbourhood
    // of zero; k >= K degenerates the two-exponent design.
    if (!(k > -1.0) || !(K > k))
        throw std::invalid_argument("weight x^k + x^K needs -1 < k < K");
    return {Kind::XkPlusXK, k, K};
}
WeightSpec WeightSpec::selfsim_quadratic() {
    return {Kind::SelfSimilarQuadratic, 0.0, 2.0};
}

double WeightSpec::operator()(double x) const {
    switch (kind) {
        case Kind::OnePlusXK: return 1.0 + std::pow(x, K_w);
        case Kind::XkPlusXK: return std::pow(x, k_w) + std::pow(x, K_w);
        case Kind::SelfSimilarQuadratic: return 1.0 + x * x;
    }
    return 0.0;
}

double weighted_tv_norm(const GridMeasure& mu, const WeightSpec& V) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.mass.size(); ++i)
        s += V(mu.grid->nodes[i]) * std::abs(mu.mass[i]);
    return s;
}

double weighted_tv_norm(const GridMeasure& mu,
                        const std::function<double(double)>& V) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.mass.size(); ++i)
        s += V(mu.grid->nodes[i]) * std::abs(mu.mass[i]);
    return s;
}

double weighted_tv_distance(const GridMeasure& mu1, const GridMeasure& mu2,
                            const WeightSpec& V) {
    if (mu1.mass.size() != mu2.mass.size() ||
        mu1.grid->x_min != mu2.grid->x_min ||
        mu1.grid->x_max != mu2.grid->x_max)
        throw std::invalid_argument("distance requires a shared grid");
    double s = 0.0;
    for (std::size_t i = 0; i < mu1.mass.size(); ++i)
        s += V(mu1.grid->nodes[i]) * std::abs(mu1.mass[i] - mu2.mass[i]);
    return s;
}

// ===========================================================================
// Push-forward
// ===========================================================================

void push_forward_edges(const Grid& grid, const std::vector<double>& image_edges,
                        const std::vector<double>& mass_in,
                        std::vector<double>& mass_out, double& escaped) {
    const std::size_t n = grid.size();
    if (image_edges.size() != n + 1 || mass_in.size() != n)
        throw std::invalid_argument("push-forward size mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (!(image_edges[i + 1] > image_edges[i]))
            throw std::invalid_argument("image edges must be increasing");

    // Image mass as a piecewise-linear CDF (uniform density per image
    // interval), swept once across the target edges: O(n).
    mass_out.assign(n, 0.0);
    std::size_t k = 0;      // current image interval
    double below = 0.0;     // mass of image intervals fully below the sweep
    double prev_cdf = 0.0;  // CDF at the previous target edge
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += mass_in[i];

    for (std::size_t j = 0; j <= n; ++j) {
        const double t = grid.edges[j];
        while (k < n && image_edges[k + 1] <= t) {
            below += mass_in[k];
            ++k;
        }
        double cdf = below;
        if (k < n && image_edges[k] < t)
            cdf += mass_in[k] * (t - image_edges[k]) /
                   (image_edges[k + 1] - image_edges[k]);
        if (j > 0) mass_out[j - 1] = cdf - prev_cdf;
        prev_cdf = cdf;
    }
    // prev_cdf now holds the CDF at the top edge; everything outside the
    // window (below the bottom edge or above the top) escapes.
    double swept = 0.0;
    for (std::size_t j = 0; j < n; ++j) swept += mass_out[j];
    escaped += total - swept;
}

GridMeasure push_forward(const GridMeasure& mu,
                         const std::function<double(double)>& F) {
    const Grid& grid = *mu.grid;
    std::vector<double> image(grid.edges.size());
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = F(grid.edges[i]);
    GridMeasure out(mu.grid);
    out.escaped_mass = mu.escaped_mass;
    push_forward_edges(grid, image, mu.mass, out.mass, out.escaped_mass);
    return out;
}

}  // namespace gf
