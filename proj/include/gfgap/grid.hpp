#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace gf {

// ---------------------------------------------------------------------------
// Size grids.  Two schemes:
//   LogUniform(n)  n cells with log-equidistant edges on [x_min, x_max].
//   DyadicLog(q)   q cells per octave; x_max rounds UP to x_min * 2^levels
//                  and edges satisfy edges[i+q] = 2*edges[i] exactly in
//                  floating point (first octave built with exp2, the rest
//                  by doubling), so halving a node lands exactly on the
//                  node q cells below.
// Nodes are arithmetic midpoints (e_i + e_{i+1})/2.
// ---------------------------------------------------------------------------

enum class GridScheme { LogUniform, DyadicLog };

struct GridSpec {
    GridScheme kind = GridScheme::LogUniform;
    int n_cells = 0;           // LogUniform
    int cells_per_octave = 0;  // DyadicLog

    static GridSpec log_uniform(int n) { return {GridScheme::LogUniform, n, 0}; }
    static GridSpec dyadic_log(int q) { return {GridScheme::DyadicLog, 0, q}; }
};

struct Grid {
    double x_min = 0.0;
    double x_max = 0.0;  // possibly rounded up (DyadicLog)
    GridScheme scheme = GridScheme::LogUniform;
    int cells_per_octave = 0;  // DyadicLog only
    int levels = 0;            // DyadicLog only
    std::vector<double> edges;  // size n+1
    std::vector<double> nodes;  // arithmetic midpoints, size n

    std::size_t size() const { return nodes.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    // Containing cell of x in [x_min, x_max]; cells are [e_i, e_{i+1}),
    // the last cell closed.  Throws std::domain_error outside the window.
    std::size_t cell_of(double x) const;
};

Grid make_grid(double x_min, double x_max, const GridSpec& spec);
using GridPtr = std::shared_ptr<const Grid>;
GridPtr make_grid_ptr(double x_min, double x_max, const GridSpec& spec);

// ---------------------------------------------------------------------------
// Signed measures on a grid: one mass per cell plus the mass that has left
// the window through either end.
// ---------------------------------------------------------------------------

struct GridMeasure {
    GridPtr grid;
    std::vector<double> mass;
    double escaped_mass = 0.0;

    GridMeasure() = default;
    explicit GridMeasure(GridPtr g)
        : grid(std::move(g)), mass(grid->size(), 0.0) {}

    double total() const;           // in-window mass
    double total_with_escaped() const { return total() + escaped_mass; }
};

// Unit mass in the cell containing x0.
GridMeasure dirac(GridPtr grid, double x0);

// ---------------------------------------------------------------------------
// Weight functions V for weighted total-variation norms.
// ---------------------------------------------------------------------------

struct WeightSpec {
    enum class Kind { OnePlusXK, XkPlusXK, SelfSimilarQuadratic };
    Kind kind = Kind::SelfSimilarQuadratic;
    double k_w = 0.0;
    double K_w = 2.0;

    static WeightSpec one_plus_xK(double K);
    static WeightSpec xk_plus_xK(double k, double K);
    static WeightSpec selfsim_quadratic();  // 1 + x^2

    double operator()(double x) const;
};

// sum_i V(node_i) |mass_i| (escaped mass carries no position and is not
// weighted into the norm).
double weighted_tv_norm(const GridMeasure& mu, const WeightSpec& V);
double weighted_tv_norm(const GridMeasure& mu,
                        const std::function<double(double)>& V);
// Norm of mu1 - mu2 (same grid).
double weighted_tv_distance(const GridMeasure& mu1, const GridMeasure& mu2,
                            const WeightSpec& V);

// ---------------------------------------------------------------------------
// Push-forward through a strictly monotone map.  Each source cell's mass is
// spread uniformly over its image interval [F(e_i), F(e_{i+1})] and sliced
// against the target edges (accumulated as a piecewise-linear CDF swept once
// across the edges, O(n)); image mass outside the window lands in
// escaped_mass.  Conserves mass + escaped_mass to machine precision.
// ---------------------------------------------------------------------------

GridMeasure push_forward(const GridMeasure& mu,
                         const std::function<double(double)>& F);

// Fast path: image edges already evaluated (must be strictly increasing).
void push_forward_edges(const Grid& grid, const std::vector<double>& image_edges,
                        const std::vector<double>& mass_in,
                        std::vector<double>& mass_out, double& escaped);

}  // namespace gf
